//! Execution of a validated run configuration and writing of its artifacts.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Engine, InitialState, ModelSpec, ObservableSpec, Occupancy, Region, RunConfig};
use super::observables::{occupancy_weights, probe, weighted_density};
use crate::error::{Error, Result};
use crate::kinematics::{transmission_scan, TransmissionSample};
use crate::momentum_ed::{self, build_two_body_hamiltonian, momentum_eigenstate, MomentumDistribution};
use crate::mps::{build_encoded, SymmetricMps};
use crate::tebd::{self, Termination, TimeSeries};

/// Rows of a CSV file with a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// RFC 4180 text.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Shortest text that parses back to the same value.
pub fn fmt_value(v: f64) -> String {
    format!("{v:?}")
}

/// Ordered `key = value` record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: &Summary) {
        for (k, v) in &other.entries {
            self.entries.push((format!("{prefix}.{k}"), v.clone()));
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Status {
    Completed,
    BudgetExhausted { at: f64 },
}

/// Engine-specific raw data of a finished run.
#[derive(Clone, Debug)]
pub enum RunData {
    Scan(Vec<(f64, Vec<TransmissionSample>)>),
    TwoBody { times: Vec<f64>, distributions: Vec<MomentumDistribution> },
    Tebd {
        series: TimeSeries,
        /// Outside population divided by the initial total, per sample, for
        /// each `integrated_population(outside, ...)` observable.
        escaped: Vec<(Occupancy, Vec<f64>)>,
    },
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub table: Table,
    pub summary: Summary,
    pub status: Status,
    pub data: RunData,
}

impl RunResult {
    /// Escaped fraction trace for an occupancy, if it was measured.
    pub fn escaped(&self, occ: Occupancy) -> Option<(&[f64], &[f64])> {
        match &self.data {
            RunData::Tebd { series, escaped } => {
                escaped.iter().find(|(o, _)| *o == occ).map(|(_, v)| (series.times.as_slice(), v.as_slice()))
            }
            _ => None,
        }
    }
}

/// Run a validated configuration.
pub fn execute(cfg: &RunConfig) -> Result<RunResult> {
    let start = Instant::now();
    let mut result = match cfg.engine {
        Engine::Analytic => run_analytic(cfg),
        Engine::TwoBodyEd => run_two_body(cfg),
        Engine::Tebd => run_tebd(cfg),
    }?;
    result.summary.push("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    Ok(result)
}

fn run_analytic(cfg: &RunConfig) -> Result<RunResult> {
    let ModelSpec::Wall { alphas, points } = &cfg.model else {
        return Err(Error::InvalidState("analytic engine needs the wall model".into()));
    };
    let mut table = Table::new(&["alpha", "k", "transmission", "reflection"]);
    let mut summary = base_summary(cfg);
    let mut scans = Vec::new();
    let mut worst: f64 = 0.0;
    for &alpha in alphas {
        let scan = transmission_scan(alpha, (*points).max(2))?;
        let mut mean = 0.0;
        for s in &scan {
            worst = worst.max((s.transmission + s.reflection - 1.0).abs());
            mean += s.transmission / scan.len() as f64;
            table.push(vec![fmt_value(alpha), fmt_value(s.k), fmt_value(s.transmission), fmt_value(s.reflection)]);
        }
        summary.push(format!("mean_transmission.alpha_{alpha}"), fmt_value(mean));
        scans.push((alpha, scan));
    }
    summary.push("max_flux_defect", fmt_value(worst));
    Ok(RunResult { table, summary, status: Status::Completed, data: RunData::Scan(scans) })
}

fn run_two_body(cfg: &RunConfig) -> Result<RunResult> {
    let (ModelSpec::TwoBody(p), InitialState::MomentumPair { mode_a, mode_t }, Some(times)) =
        (&cfg.model, &cfg.state, &cfg.times)
    else {
        return Err(Error::InvalidState("two-body-ed needs the two_body model and a momentum pair".into()));
    };
    let l = p.l as f64;
    let k_a = 2.0 * std::f64::consts::PI * *mode_a as f64 / l;
    let k_t = 2.0 * std::f64::consts::PI * *mode_t as f64 / l;
    let h = build_two_body_hamiltonian(p)?;
    let psi0 = momentum_eigenstate(k_a, k_t, p.l)?;
    let ts = times.times();
    let states = momentum_ed::evolve(&psi0, &h, &ts)?;
    let distributions: Vec<_> = states.iter().map(momentum_ed::momentum_distribution).collect();
    let initial = momentum_ed::momentum_distribution(&psi0);

    let mut table = Table::new(&["t", "observable", "site", "value"]);
    for (t, d) in ts.iter().zip(&distributions) {
        for o in &cfg.observables {
            let name = o.to_string();
            let v = match o {
                ObservableSpec::MomentumDistribution(super::config::MomentumTarget::Trimer) => &d.trimer,
                _ => &d.monomer,
            };
            for (q, x) in v.iter().enumerate() {
                table.push(vec![fmt_value(*t), name.clone(), q.to_string(), fmt_value(*x)]);
            }
        }
    }
    let mut summary = base_summary(cfg);
    summary.push("k_a", fmt_value(k_a));
    summary.push("k_t", fmt_value(k_t));
    summary.push("U", fmt_value(p.u));
    summary.push("gamma", p.boundary.gamma());
    if let Ok(tc) = crate::kinematics::revival_time(p.l, k_a, k_t, p.j_a, p.j_t) {
        summary.push("revival_time", fmt_value(tc));
    }
    if let (Some(t), Some(last)) = (ts.last(), distributions.last()) {
        let (fa, ft) = last.fidelity(&initial);
        let (wa, wt) = last.top_two_weight();
        summary.push("t_final", fmt_value(*t));
        summary.push("fidelity_final.monomer", fmt_value(fa));
        summary.push("fidelity_final.trimer", fmt_value(ft));
        summary.push("top_two_weight_final.monomer", fmt_value(wa));
        summary.push("top_two_weight_final.trimer", fmt_value(wt));
    }
    Ok(RunResult {
        table,
        summary,
        status: Status::Completed,
        data: RunData::TwoBody { times: ts, distributions },
    })
}

/// Initial matrix product state of a segment run.
pub fn initial_state(cfg: &RunConfig) -> Result<SymmetricMps> {
    let model = cfg.hamiltonian().ok_or_else(|| Error::InvalidState("not a lattice model".into()))??;
    let enc = cfg.segments().iter().map(|s| model.encode(s)).collect::<Result<Vec<_>>>()?;
    build_encoded(&model.local_space(), &enc)
}

fn run_tebd(cfg: &RunConfig) -> Result<RunResult> {
    let model = cfg.hamiltonian().ok_or_else(|| Error::InvalidState("not a lattice model".into()))??;
    let tcfg = cfg.tebd.ok_or_else(|| Error::InvalidState("missing tebd block".into()))?;
    let segs = cfg.segments();
    let mut psi = initial_state(cfg)?;
    let probes: Vec<_> = cfg.observables.iter().map(|o| probe(o, &model, segs)).collect();

    // initial totals for escaped fractions
    let mut initial_totals = Vec::new();
    for o in &cfg.observables {
        if let ObservableSpec::IntegratedPopulation { region: Region::Outside, occupancy } = o {
            if let Some(w) = occupancy_weights(&model, *occupancy) {
                let total: f64 = weighted_density(&psi, &w).iter().sum();
                initial_totals.push((*occupancy, o.to_string(), total));
            }
        }
    }

    let series = tebd::run(&mut psi, &model, &tcfg, &probes)?;
    let mut table = Table::new(&["t", "observable", "site", "value"]);
    for (t, sample) in series.times.iter().zip(&series.values) {
        for (name, vals) in series.names.iter().zip(sample) {
            let scalar = vals.len() == 1;
            for (i, v) in vals.iter().enumerate() {
                let site = if scalar { String::new() } else { (i + 1).to_string() };
                table.push(vec![fmt_value(*t), name.clone(), site, fmt_value(*v)]);
            }
        }
    }

    let mut summary = base_summary(cfg);
    summary.push("sites", psi.len());
    summary.push("dt", fmt_value(tcfg.dt));
    summary.push("order", tcfg.order.as_int());
    summary.push("chi_max", tcfg.chi_max);
    summary.push("error_budget", fmt_value(tcfg.error_budget));
    summary.push("steps", series.ledger.per_step.len());
    summary.push("t_final", fmt_value(series.times.last().copied().unwrap_or(0.0)));
    let status = match series.termination {
        Some(Termination::BudgetExhausted { at }) => Status::BudgetExhausted { at },
        _ => Status::Completed,
    };
    summary.push(
        "termination",
        match status {
            Status::Completed => "completed".to_string(),
            Status::BudgetExhausted { .. } => "budget_exhausted".to_string(),
        },
    );
    summary.push("truncation_total", fmt_value(series.ledger.total));
    summary.push("max_chi", series.ledger.max_bond_dim());
    summary.push("max_norm_drift", fmt_value(series.ledger.max_norm_drift));
    let mut escaped = Vec::new();
    for (occ, name, total) in initial_totals {
        summary.push(format!("initial_population.{occ}"), fmt_value(total));
        let Some(ch) = series.channel(&name) else { continue };
        let trace: Vec<f64> = ch.iter().map(|v| if total > 0.0 { v[0] / total } else { 0.0 }).collect();
        if let Some(last) = trace.last() {
            summary.push(format!("escaped_fraction.{occ}"), fmt_value(*last));
        }
        escaped.push((occ, trace));
    }
    for (name, i) in series.names.iter().zip(0..) {
        if let Some(last) = series.values.last() {
            if last[i].len() == 1 {
                summary.push(format!("final.{name}"), fmt_value(last[i][0]));
            }
        }
    }
    Ok(RunResult { table, summary, status, data: RunData::Tebd { series, escaped } })
}

fn base_summary(cfg: &RunConfig) -> Summary {
    let mut s = Summary::default();
    s.push("model", cfg.model.name());
    s.push("engine", cfg.engine.name());
    s.push("seed", cfg.seed);
    s
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Paths written for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
    pub plot: PathBuf,
}

/// Write the CSV table, summary, canonical config and plot script of a run
/// into `dir` (the config's output directory when `None`).
pub fn write_run(cfg: &RunConfig, result: &RunResult, dir: Option<&Path>) -> Result<Artifacts> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let p = &cfg.output.prefix;
    let a = Artifacts {
        csv: dir.join(format!("{p}.csv")),
        summary: dir.join(format!("{p}.summary")),
        config: dir.join(format!("{p}.conf")),
        plot: dir.join(format!("{p}_plot.py")),
    };
    write_atomic(&a.csv, result.table.to_csv()?.as_bytes())?;
    write_atomic(&a.summary, result.summary.to_string().as_bytes())?;
    write_atomic(&a.config, cfg.to_string().as_bytes())?;
    write_atomic(&a.plot, plot_script(cfg, &format!("{p}.csv")).as_bytes())?;
    Ok(a)
}

/// Standalone matplotlib script reading the run's CSV.
pub fn plot_script(cfg: &RunConfig, csv_name: &str) -> String {
    let body = match cfg.engine {
        Engine::Analytic => {
            "fig, ax = plt.subplots()\n\
             for alpha in sorted(set(r['alpha'] for r in rows), key=float):\n\
             \x20   sel = [r for r in rows if r['alpha'] == alpha]\n\
             \x20   ax.plot([float(r['k']) for r in sel], [float(r['transmission']) for r in sel], label=f'alpha={alpha}')\n\
             ax.set_xlabel('k')\nax.set_ylabel('T(k)')\nax.legend()\n"
        }
        _ => {
            "names = sorted(set(r['observable'] for r in rows))\n\
             fig, axes = plt.subplots(len(names), 1, figsize=(6, 3 * len(names)), squeeze=False)\n\
             for ax, name in zip(axes[:, 0], names):\n\
             \x20   sel = [r for r in rows if r['observable'] == name]\n\
             \x20   if sel[0]['site'] == '':\n\
             \x20       ax.plot([float(r['t']) for r in sel], [float(r['value']) for r in sel])\n\
             \x20       ax.set_xlabel('t')\n\
             \x20   else:\n\
             \x20       ts = sorted(set(float(r['t']) for r in sel))\n\
             \x20       sites = sorted(set(int(r['site']) for r in sel))\n\
             \x20       grid = {(float(r['t']), int(r['site'])): float(r['value']) for r in sel}\n\
             \x20       z = [[grid.get((t, s), 0.0) for s in sites] for t in ts]\n\
             \x20       ax.imshow(z, aspect='auto', origin='lower', extent=(sites[0], sites[-1], ts[0], ts[-1]))\n\
             \x20       ax.set_xlabel('site')\n\
             \x20       ax.set_ylabel('t')\n\
             \x20   ax.set_title(name)\n\
             fig.tight_layout()\n"
        }
    };
    format!(
        "#!/usr/bin/env python3\n\
         import csv\nimport sys\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n\
         with open(sys.argv[1] if len(sys.argv) > 1 else '{csv_name}') as f:\n\
         \x20   rows = list(csv.DictReader(f))\n\n\
         {body}\
         plt.savefig('{stem}.png', dpi=150)\n",
        stem = csv_name.trim_end_matches(".csv"),
    )
}
