//! Figure-level reproduction catalog.
//!
//! Every figure is a set of named run configurations plus a metric
//! extraction. Desk-scale variants shrink lattices and bond dimensions;
//! extended variants use the full geometries and are meant for long batch
//! runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{parse_config, Occupancy, RunConfig};
use super::run::{execute, fmt_value, write_atomic, write_run, Artifacts, RunData, RunResult, Status, Summary};
use crate::error::{Error, Result};
use crate::kinematics::{revival_time, scatter, WallParams};
use crate::mps::Species;

pub const FIGURES: [&str; 9] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Extended,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Extended => "extended",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Figure {
    pub id: &'static str,
    pub title: &'static str,
    pub scale: Scale,
    pub runs: Vec<(String, RunConfig)>,
}

/// Cluster segment shorthand used by the catalog: `h(k)` momentum hole,
/// `p(k)` momentum particle, `lh(j)`/`lp(j)` localized, `.` plain dimers,
/// `ha(k)`/`lhb(j)` species-tagged holes.
fn cluster_segment(token: &str, l: usize) -> String {
    let (body, arg) = match token.find('(') {
        Some(i) => (&token[..i], token[i + 1..token.len() - 1].to_string()),
        None => (token, String::new()),
    };
    let seg = |defect: &str| format!("seg(n = 2, l = {l}, defect = {defect})");
    match body {
        "." => format!("seg(n = 2, l = {l})"),
        "h" => seg(&format!("momentum({arg}, hole)")),
        "p" => seg(&format!("momentum({arg}, particle)")),
        "lh" => seg(&format!("localized({arg}, hole)")),
        "lp" => seg(&format!("localized({arg}, particle)")),
        "ha" => seg(&format!("momentum({arg}, hole)")),
        "lha" => seg(&format!("localized({arg}, hole)")),
        "lhb" => format!("seg(n = 2, l = {l}, defect = localized({arg}, hole), species = b)"),
        other => unreachable!("catalog token {other}"),
    }
}

struct ClusterRun<'a> {
    prefix: String,
    model: &'a str,
    flank: usize,
    seg_len: usize,
    cluster: &'a [&'a str],
    dt: f64,
    t_max: f64,
    chi: usize,
    budget: f64,
    sample_every: usize,
    observables: &'a [&'a str],
}

impl ClusterRun<'_> {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model = {}", self.model);
        let _ = writeln!(s, "state = [\n  seg(n = 0, l = {}),", self.flank);
        for tok in self.cluster {
            let _ = writeln!(s, "  {},", cluster_segment(tok, self.seg_len));
        }
        let _ = writeln!(s, "  seg(n = 0, l = {}),\n]", self.flank);
        let _ = writeln!(s, "engine = tebd");
        let _ = writeln!(
            s,
            "tebd = {{ dt = {}, t_max = {}, chi = {}, order = 4, error_budget = {}, sample_every = {}, cutoff = 1e-10 }}",
            self.dt, self.t_max, self.chi, self.budget, self.sample_every
        );
        let _ = writeln!(s, "observables = [{}]", self.observables.join(", "));
        let _ = writeln!(s, "output = {{ dir = \"out\", prefix = \"{}\" }}", self.prefix);
        s
    }

    fn config(&self) -> RunConfig {
        parse_config(&self.text()).unwrap_or_else(|e| panic!("catalog config {} is invalid: {e}", self.prefix))
    }
}

const MONOMER_OBS: &[&str] = &[
    "site_density_exact_n(monomer)",
    "site_density_exact_n(trimer)",
    "integrated_population(outside, monomer)",
];

const TWO_SPECIES_OBS: &[&str] = &[
    "site_density_exact_n(monomer)",
    "site_density_exact_n(monomer_b)",
    "integrated_population(outside, monomer)",
    "integrated_population(outside, monomer_b)",
];

/// Single-species geometry per scale: (flank, segment length, chi, t_max).
fn geometry(scale: Scale, four_defects: bool) -> (usize, usize, usize, f64) {
    match (scale, four_defects) {
        (Scale::Desk, false) => (24, 4, 96, 20.0),
        (Scale::Desk, true) => (24, 4, 96, 20.0),
        (Scale::Extended, false) => (32, 8, 200, 60.0),
        (Scale::Extended, true) => (64, 8, 300, 120.0),
    }
}

fn momenta(l: usize) -> (&'static str, &'static str) {
    // localized defects sit at the centre of their segment
    if l == 8 {
        ("4", "pi/2")
    } else {
        ("2", "pi/2")
    }
}

fn single_species(
    id: &str,
    scale: Scale,
    variants: &[(&str, Vec<String>)],
    four: bool,
    effective: bool,
) -> Vec<(String, RunConfig)> {
    let (flank, l, chi, t_max) = geometry(scale, four);
    let (model, dt, sample, budget) = match (effective, scale) {
        (true, Scale::Desk) => ("effective_defect { J = 1.0 }", 0.1, 5, 1e-2),
        (true, Scale::Extended) => ("effective_defect { J = 1.0 }", 0.1, 5, 1e-1),
        (false, _) => ("bose_hubbard { J = 1.0, U = 100.0, n_max = 3 }", 0.02, 25, 1e-2),
    };
    variants
        .iter()
        .map(|(name, toks)| {
            let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
            let run = ClusterRun {
                prefix: format!("{id}_{name}"),
                model,
                flank,
                seg_len: l,
                cluster: &toks,
                dt,
                t_max,
                chi,
                budget,
                sample_every: sample,
                observables: MONOMER_OBS,
            };
            (name.to_string(), run.config())
        })
        .collect()
}

fn toks(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Configurations of a figure.
pub fn figure(id: &str, scale: Scale) -> Result<Figure> {
    let (_, l, _, _) = geometry(scale, false);
    let (loc, half) = momenta(l);
    let lh = format!("lh({loc})");
    let lp = format!("lp({loc})");
    let ph = format!("p({half})");
    let desk = scale == Scale::Desk;
    let (title, runs): (&'static str, Vec<(String, RunConfig)>) = match id {
        "fig2" => {
            let points = if desk { 512 } else { 4096 };
            let text = format!(
                "model = wall {{ alpha = [0.25, 0.5, 1, 2, 4], points = {points} }}\nengine = analytic\n\
                 observables = [transmission]\noutput = {{ dir = \"out\", prefix = \"fig2_scan\" }}\n"
            );
            ("transmission through a hopping step", vec![("scan".into(), parse_config(&text)?)])
        }
        "fig3" => {
            let tc = revival_time(64, 13.0 * std::f64::consts::PI / 16.0, -9.0 * std::f64::consts::PI / 16.0, 2.0, 3.0)?;
            let (t_max, samples) = if desk { (tc, 33) } else { (4.0 * tc, 257) };
            let mk = |gamma: u8, name: &str| {
                parse_config(&format!(
                    "model = two_body {{ L = 64, J_a = 2.0, J_t = 3.0, gamma = {gamma} }}\n\
                     state = momentum_pair(k_a = 13*pi/16, k_t = -9*pi/16)\nengine = two-body-ed\n\
                     times = {{ t_max = {}, samples = {samples} }}\n\
                     observables = [momentum_distribution(monomer), momentum_distribution(trimer)]\n\
                     output = {{ dir = \"out\", prefix = \"fig3_{name}\" }}\n",
                    fmt_value(t_max)
                ))
            };
            ("two-defect momentum dynamics on a ring and an open chain", vec![
                ("ring".into(), mk(1, "ring")?),
                ("open".into(), mk(0, "open")?),
            ])
        }
        "fig4" => {
            let v = [
                ("center", toks(&["h(-pi/2)", ".", "h(pi/2)"])),
                ("edge", toks(&["h(pi)", ".", "h(0)"])),
                ("edge_trimer", vec!["h(pi)".into(), ph.clone(), "h(0)".into()]),
            ];
            ("monomer and trimer densities for momentum defects", single_species("fig4", scale, &v, false, desk))
        }
        "fig5" => {
            let v = [
                ("holes", vec![lh.clone(), ".".into(), lh.clone()]),
                ("holes_trimer", vec![lh.clone(), lp.clone(), lh.clone()]),
            ];
            ("localized defects", single_species("fig5", scale, &v, false, desk))
        }
        "fig6" => {
            let v = [
                ("a_center", toks(&["h(-pi/2)", ".", "h(pi/2)"])),
                ("a_center_loc_trimer", vec!["h(-pi/2)".into(), lp.clone(), "h(pi/2)".into()]),
                ("a_center_mom_trimer", vec!["h(-pi/2)".into(), ph.clone(), "h(pi/2)".into()]),
                ("a_edge", toks(&["h(pi)", ".", "h(0)"])),
                ("a_edge_loc_trimer", vec!["h(pi)".into(), lp.clone(), "h(0)".into()]),
                ("a_edge_mom_trimer", vec!["h(pi)".into(), ph.clone(), "h(0)".into()]),
                ("b_holes", vec![lh.clone(), ".".into(), lh.clone()]),
                ("b_loc_trimer", vec![lh.clone(), lp.clone(), lh.clone()]),
                ("b_mom_trimer", vec![lh.clone(), ph.clone(), lh.clone()]),
            ];
            ("escaped monomer population", single_species("fig6", scale, &v, false, desk))
        }
        "fig7" => {
            let v = [
                ("a_center", toks(&["h(-pi/2)", ".", "h(pi/2)", "h(-pi/2)"])),
                ("a_center_loc_trimer", vec!["h(-pi/2)".into(), lp.clone(), "h(pi/2)".into(), "h(-pi/2)".into()]),
                ("a_center_mom_trimer", vec!["h(-pi/2)".into(), ph.clone(), "h(pi/2)".into(), "h(-pi/2)".into()]),
                ("a_edge", toks(&["h(pi)", ".", "h(0)", "h(pi)"])),
                ("a_edge_loc_trimer", vec!["h(pi)".into(), lp.clone(), "h(0)".into(), "h(pi)".into()]),
                ("a_edge_mom_trimer", vec!["h(pi)".into(), ph.clone(), "h(0)".into(), "h(pi)".into()]),
                ("b_holes", vec![lh.clone(), ".".into(), lh.clone(), lh.clone()]),
                ("b_loc_trimer", vec![lh.clone(), lp.clone(), lh.clone(), lh.clone()]),
                ("b_mom_trimer", vec![lh.clone(), ph.clone(), lh.clone(), lh.clone()]),
                ("c_mixed", vec!["h(pi)".into(), ".".into(), "h(0)".into(), lh.clone()]),
                ("c_mixed_loc_trimer", vec!["h(pi)".into(), lp.clone(), "h(0)".into(), lh.clone()]),
                ("c_mixed_mom_trimer", vec!["h(pi)".into(), ph.clone(), lh.clone(), lh.clone()]),
            ];
            ("four-defect evaporation (effective model)", single_species("fig7", scale, &v, true, true))
        }
        "fig8" => {
            let (flank, cl, chi) = if desk { (8, 8, 64) } else { (16, 16, 128) };
            let state = format!(
                "state = [seg(n = 0, l = {flank}), seg(n = 2, l = {cl}, defect = localized(2, hole))]\n"
            );
            let obs = "observables = [site_density_exact_n(1), site_density_exact_n(2), integrated_population(outside, monomer)]\n";
            let full = parse_config(&format!(
                "model = bose_hubbard {{ J = 1.0, U = 100.0, n_max = 3 }}\n{state}engine = tebd\n\
                 tebd = {{ dt = 0.02, t_max = 5, chi = {chi}, sample_every = 5 }}\n{obs}\
                 output = {{ dir = \"out\", prefix = \"fig8_full\" }}\n"
            ))?;
            let eff_obs = "observables = [site_density_exact_n(1), integrated_population(outside, monomer)]\n";
            let eff = parse_config(&format!(
                "model = effective_defect {{ J = 1.0 }}\n{state}engine = tebd\n\
                 tebd = {{ dt = 0.02, t_max = 5, chi = {chi}, sample_every = 5 }}\n{eff_obs}\
                 output = {{ dir = \"out\", prefix = \"fig8_effective\" }}\n"
            ))?;
            ("full versus effective monomer dynamics", vec![("full".into(), full), ("effective".into(), eff)])
        }
        "fig9" | "fig10" => {
            let (flank, l, chi, t_max, caps) = if desk { (8, 4, 64, 10.0, 2) } else { (32, 8, 200, 30.0, 3) };
            let cluster: Vec<String> = if id == "fig9" {
                let right = if desk { "ha(pi/2)" } else { "ha(pi/4)" };
                vec!["ha(-pi/2)".into(), ".".into(), right.into()]
            } else {
                let j = l / 2;
                vec![format!("lha({j})"), ".".into(), format!("lhb({j})")]
            };
            let cluster: Vec<&str> = cluster.iter().map(String::as_str).collect();
            let ratios = [("equal", 1.0), ("ja_double", 2.0), ("ja_half", 0.5)];
            let runs = ratios
                .iter()
                .map(|(name, ja)| {
                    let model = format!(
                        "two_species {{ J_a = {ja:?}, J_b = 1.0, U_a = 60.0, U_b = 60.0, U_ab = 40.0, cap_a = {caps}, cap_b = {caps} }}"
                    );
                    let run = ClusterRun {
                        prefix: format!("{id}_{name}"),
                        model: &model,
                        flank,
                        seg_len: l,
                        cluster: &cluster,
                        dt: 0.02,
                        t_max,
                        chi,
                        budget: 1e-2,
                        sample_every: 25,
                        observables: TWO_SPECIES_OBS,
                    };
                    (name.to_string(), run.config())
                })
                .collect();
            let title = if id == "fig9" { "two-species momentum holes" } else { "two-species localized holes" };
            (title, runs)
        }
        other => {
            return Err(Error::Domain(format!("unknown figure '{other}'; expected one of {}", FIGURES.join(", "))))
        }
    };
    let id = FIGURES.iter().copied().find(|f| *f == id).unwrap_or("fig");
    Ok(Figure { id, title, scale, runs })
}

/// Results of one figure reproduction.
#[derive(Debug)]
pub struct Bundle {
    pub figure: Figure,
    pub results: Vec<(String, RunResult)>,
    pub metrics: Summary,
    pub artifacts: Vec<Artifacts>,
    pub summary_path: PathBuf,
    pub plot_path: PathBuf,
}

impl Bundle {
    /// Budget-terminated when any run stopped early.
    pub fn status(&self) -> Status {
        self.results
            .iter()
            .map(|(_, r)| r.status)
            .find(|s| matches!(s, Status::BudgetExhausted { .. }))
            .unwrap_or(Status::Completed)
    }
}

/// Run every configuration of a figure in parallel and write its artifacts to
/// `out_dir/<figure>/`.
pub fn reproduce(id: &str, scale: Scale, out_dir: &Path) -> Result<Bundle> {
    let figure = figure(id, scale)?;
    let dir = out_dir.join(figure.id);
    let results: Vec<(String, RunResult)> = figure
        .runs
        .par_iter()
        .map(|(name, cfg)| execute(cfg).map(|r| (name.clone(), r)))
        .collect::<Result<_>>()?;
    let mut artifacts = Vec::new();
    for ((_, cfg), (_, r)) in figure.runs.iter().zip(&results) {
        artifacts.push(write_run(cfg, r, Some(&dir))?);
    }
    let metrics = figure_metrics(&figure, &results);
    let mut summary = Summary::default();
    summary.push("figure", figure.id);
    summary.push("title", figure.title);
    summary.push("scale", scale.name());
    for (k, v) in metrics.entries() {
        summary.push(k.clone(), v);
    }
    for (name, r) in &results {
        summary.extend_prefixed(name, &r.summary);
    }
    let summary_path = dir.join(format!("{}.summary", figure.id));
    write_atomic(&summary_path, summary.to_string().as_bytes())?;
    let plot_path = dir.join(format!("{}_plot.py", figure.id));
    write_atomic(&plot_path, figure_plot_script(&figure).as_bytes())?;
    Ok(Bundle { figure, results, metrics, artifacts, summary_path, plot_path })
}

/// Headline numbers of a figure.
pub fn figure_metrics(fig: &Figure, results: &[(String, RunResult)]) -> Summary {
    let mut m = Summary::default();
    let get = |name: &str| results.iter().find(|(n, _)| n == name).map(|(_, r)| r);
    match fig.id {
        "fig2" => {
            if let Some(r) = get("scan") {
                if let Some(v) = r.summary.get("max_flux_defect") {
                    m.push("max_flux_defect", v);
                }
            }
            if let Ok(s) = WallParams::from_alpha(0.5).and_then(|w| scatter(std::f64::consts::FRAC_PI_2, w)) {
                m.push("transmission_half_pi_alpha_0.5", fmt_value(s.transmission));
            }
        }
        "fig3" => {
            for (name, r) in results {
                let RunData::TwoBody { times, distributions } = &r.data else { continue };
                if let Some(tc) = r.summary.get("revival_time") {
                    m.push("revival_time", tc);
                }
                let Some(first) = distributions.first() else { continue };
                let ia = argmax(&first.monomer);
                let it = argmax(&first.trimer);
                let tc = r.summary.get_f64("revival_time");
                let quarter = tc.and_then(|tc| {
                    (0..times.len()).min_by(|&i, &j| (times[i] - tc / 4.0).abs().total_cmp(&(times[j] - tc / 4.0).abs()))
                });
                if name == "ring" {
                    if let Some(d) = quarter.and_then(|q| distributions.get(q)) {
                        let (a, t) = d.top_two_weight();
                        m.push("ring.top_two_weight_quarter.monomer", fmt_value(a));
                        m.push("ring.top_two_weight_quarter.trimer", fmt_value(t));
                    }
                }
                if let Some(last) = distributions.last() {
                    let (fa, ft) = last.fidelity(first);
                    m.push(format!("{name}.fidelity_final.monomer"), fmt_value(fa));
                    m.push(format!("{name}.fidelity_final.trimer"), fmt_value(ft));
                    m.push(format!("{name}.initial_weight_final.monomer"), fmt_value(last.monomer[ia]));
                    m.push(format!("{name}.initial_weight_final.trimer"), fmt_value(last.trimer[it]));
                }
            }
        }
        "fig8" => {
            if let (Some(full), Some(eff)) = (get("full"), get("effective")) {
                if let Some(d) = max_channel_difference(full, eff, "site_density_exact_n(1)") {
                    m.push("max_monomer_density_difference", fmt_value(d));
                }
            }
        }
        _ => {
            let occs: &[Occupancy] = if fig.id == "fig9" || fig.id == "fig10" {
                &[Occupancy::Monomer(Species::A), Occupancy::Monomer(Species::B)]
            } else {
                &[Occupancy::Monomer(Species::A)]
            };
            for (name, r) in results {
                for occ in occs {
                    if let Some((_, f)) = r.escaped(*occ) {
                        if let Some(last) = f.last() {
                            m.push(format!("{name}.escaped_fraction.{occ}"), fmt_value(*last));
                        }
                    }
                }
            }
        }
    }
    m
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0)
}

/// Largest site-wise difference of a channel at samples both runs share.
pub fn max_channel_difference(a: &RunResult, b: &RunResult, channel: &str) -> Option<f64> {
    let (RunData::Tebd { series: sa, .. }, RunData::Tebd { series: sb, .. }) = (&a.data, &b.data) else {
        return None;
    };
    let ca = sa.channel(channel)?;
    let mut worst: f64 = 0.0;
    for (i, t) in sa.times.iter().enumerate() {
        let Some(vb) = sb.at(channel, *t) else { continue };
        let j = sb.times.iter().rposition(|&x| x <= t + 1e-9)?;
        if (sb.times[j] - t).abs() > 1e-9 {
            continue;
        }
        for (x, y) in ca[i].iter().zip(vb) {
            worst = worst.max((x - y).abs());
        }
    }
    Some(worst)
}

fn figure_plot_script(fig: &Figure) -> String {
    let files: Vec<String> = fig.runs.iter().map(|(_, c)| format!("'{}.csv'", c.output.prefix)).collect();
    let body = match fig.id {
        "fig2" => "rows = load(files[0])\n\
                   fig, ax = plt.subplots()\n\
                   for alpha in sorted(set(r['alpha'] for r in rows), key=float):\n\
                   \x20   sel = [r for r in rows if r['alpha'] == alpha]\n\
                   \x20   ax.plot([float(r['k']) for r in sel], [float(r['transmission']) for r in sel], label=f'alpha={alpha}')\n\
                   ax.set_xlabel('k')\nax.set_ylabel('T(k)')\nax.legend()\n"
            .to_string(),
        "fig3" => "fig, axes = plt.subplots(len(files), 2, figsize=(10, 4 * len(files)), squeeze=False)\n\
                   for row, path in zip(axes, files):\n\
                   \x20   rows = load(path)\n\
                   \x20   for ax, name in zip(row, ['momentum_distribution(monomer)', 'momentum_distribution(trimer)']):\n\
                   \x20       sel = [r for r in rows if r['observable'] == name]\n\
                   \x20       ts = sorted(set(float(r['t']) for r in sel))\n\
                   \x20       qs = sorted(set(int(r['site']) for r in sel))\n\
                   \x20       grid = {(float(r['t']), int(r['site'])): float(r['value']) for r in sel}\n\
                   \x20       ax.imshow([[grid[(t, q)] for q in qs] for t in ts], aspect='auto', origin='lower')\n\
                   \x20       ax.set_title(f'{path}: {name}')\n"
            .to_string(),
        _ => "fig, ax = plt.subplots()\n\
              for path in files:\n\
              \x20   rows = [r for r in load(path) if r['observable'].startswith('integrated_population(outside')]\n\
              \x20   for name in sorted(set(r['observable'] for r in rows)):\n\
              \x20       sel = [r for r in rows if r['observable'] == name]\n\
              \x20       ax.plot([float(r['t']) for r in sel], [float(r['value']) for r in sel], label=f'{path} {name}')\n\
              ax.set_xlabel('t J')\nax.set_ylabel('population outside the cluster')\nax.legend(fontsize=6)\n"
            .to_string(),
    };
    format!(
        "#!/usr/bin/env python3\n\
         import csv\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n\
         files = [{}]\n\n\
         def load(path):\n\
         \x20   with open(path) as f:\n\
         \x20       return list(csv.DictReader(f))\n\n\
         {body}\
         plt.tight_layout()\n\
         plt.savefig('{}.png', dpi=150)\n",
        files.join(", "),
        fig.id
    )
}

/// Canonical config files of every figure at a scale, as `(file name, text)`.
pub fn config_files(scale: Scale) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for id in FIGURES {
        let fig = figure(id, scale)?;
        for (_, cfg) in &fig.runs {
            let mut text = String::new();
            if scale == Scale::Extended {
                text.push_str("# extended-runtime: full-size geometry, expect hours of wall time\n");
            }
            text.push_str(&cfg.to_string());
            out.push((format!("{}.conf", cfg.output.prefix), text));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_builds_at_both_scales() {
        for scale in [Scale::Desk, Scale::Extended] {
            for id in FIGURES {
                let f = figure(id, scale).unwrap();
                assert!(!f.runs.is_empty(), "{id}");
            }
        }
        assert!(figure("fig11", Scale::Desk).is_err());
    }

    #[test]
    fn extended_fig4_matches_full_geometry() {
        let f = figure("fig4", Scale::Extended).unwrap();
        let (_, cfg) = &f.runs[0];
        assert_eq!(cfg.sites(), 88);
        assert_eq!(cfg.segments().len(), 5);
        assert_eq!(cfg.tebd.unwrap().chi_max, 200);
    }

    #[test]
    fn fig2_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let b = reproduce("fig2", Scale::Desk, dir.path()).unwrap();
        let t = b.metrics.get_f64("transmission_half_pi_alpha_0.5").unwrap();
        assert!((t - 8.0 / 9.0).abs() < 1e-12);
        assert!(b.summary_path.exists());
        assert!(b.plot_path.exists());
        assert!(b.artifacts[0].csv.exists());
    }
}
