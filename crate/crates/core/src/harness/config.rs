//! Typed run configuration: parsing, validation and canonical printing.

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use super::syntax::{parse_statements, Arg, Field, Node, NodeKind};
use crate::error::{Error, Result, ValidationIssue};
use crate::momentum_ed::{Boundary, MomentumGrid, TwoBodyParams};
use crate::models::{BoseHubbardParams, EffectiveDefectConfig, HamiltonianSpec, TwoSpeciesParams};
use crate::mps::{fmt_momentum, DefectKind, DefectSign, SegmentSpec, Species};
use crate::tebd::{TebdConfig, TrotterOrder};

/// Physical model of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// Single particle crossing a hopping-rate step, for each `J_B/J_A`.
    Wall { alphas: Vec<f64>, points: usize },
    TwoBody(TwoBodyParams),
    BoseHubbard(BoseHubbardParams),
    EffectiveDimer { j: f64, u: f64 },
    /// Reference configuration is derived from the initial segments.
    EffectiveDefect { j: f64 },
    TwoSpecies(TwoSpeciesParams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Wall { .. } => "wall",
            ModelSpec::TwoBody(_) => "two_body",
            ModelSpec::BoseHubbard(_) => "bose_hubbard",
            ModelSpec::EffectiveDimer { .. } => "effective_dimer",
            ModelSpec::EffectiveDefect { .. } => "effective_defect",
            ModelSpec::TwoSpecies(_) => "two_species",
        }
    }

    /// Lattice Hamiltonian for a segment list, `None` for the non-lattice models.
    pub fn hamiltonian(&self, segments: &[SegmentSpec]) -> Option<Result<HamiltonianSpec>> {
        Some(Ok(match self {
            ModelSpec::Wall { .. } | ModelSpec::TwoBody(_) => return None,
            ModelSpec::BoseHubbard(p) => HamiltonianSpec::BoseHubbard(*p),
            ModelSpec::EffectiveDimer { j, u } => HamiltonianSpec::EffectiveDimer { j: *j, u: *u },
            ModelSpec::EffectiveDefect { j } => match EffectiveDefectConfig::from_segments(*j, segments) {
                Ok(cfg) => HamiltonianSpec::EffectiveDefect(cfg),
                Err(e) => return Some(Err(e)),
            },
            ModelSpec::TwoSpecies(p) => HamiltonianSpec::TwoSpecies(*p),
        }))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    None,
    /// Monomer and trimer in plane waves, as grid indices of the two-body
    /// momentum grid.
    MomentumPair { mode_a: i64, mode_t: i64 },
    Segments(Vec<SegmentSpec>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    TwoBodyEd,
    Tebd,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::TwoBodyEd => "two-body-ed",
            Engine::Tebd => "tebd",
        }
    }
}

/// Evenly spaced sample times `0..=t_max` for exact propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        if self.samples <= 1 {
            return vec![self.t_max];
        }
        (0..self.samples).map(|i| self.t_max * i as f64 / (self.samples - 1) as f64).collect()
    }
}

/// Which local states count toward a density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Occupancy {
    /// Exactly `n` particles on the site (all species together).
    Exactly(usize),
    /// An unpaired particle inside the dimer cluster or a single particle in
    /// vacuum; in two-species models a hole of the given species.
    Monomer(Species),
    Trimer,
}

impl fmt::Display for Occupancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Occupancy::Exactly(n) => write!(f, "{n}"),
            Occupancy::Monomer(Species::A) => write!(f, "monomer"),
            Occupancy::Monomer(Species::B) => write!(f, "monomer_b"),
            Occupancy::Trimer => write!(f, "trimer"),
        }
    }
}

/// Set of lattice sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// Vacuum flanks of the initial state without the site touching the cluster.
    Outside,
    /// Everything between the vacuum flanks.
    Cluster,
    All,
    /// Inclusive 1-based site ranges.
    Sites(Vec<(usize, usize)>),
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Outside => write!(f, "outside"),
            Region::Cluster => write!(f, "cluster"),
            Region::All => write!(f, "all"),
            Region::Sites(r) => {
                write!(f, "sites(")?;
                for (i, (a, b)) in r.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "range({a}, {b})")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentumTarget {
    Species(Species),
    Monomer,
    Trimer,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservableSpec {
    SiteDensity(Occupancy),
    IntegratedPopulation { region: Region, occupancy: Occupancy },
    MomentumDistribution(MomentumTarget),
    /// Entanglement entropy across bond `b` (between sites `b` and `b+1`),
    /// or across every bond.
    SchmidtEntropy(Option<usize>),
    Transmission,
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::SiteDensity(o) => write!(f, "site_density_exact_n({o})"),
            ObservableSpec::IntegratedPopulation { region, occupancy } => {
                write!(f, "integrated_population({region}, {occupancy})")
            }
            ObservableSpec::MomentumDistribution(t) => {
                let s = match t {
                    MomentumTarget::Species(Species::A) => "a",
                    MomentumTarget::Species(Species::B) => "b",
                    MomentumTarget::Monomer => "monomer",
                    MomentumTarget::Trimer => "trimer",
                };
                write!(f, "momentum_distribution({s})")
            }
            ObservableSpec::SchmidtEntropy(Some(b)) => write!(f, "schmidt_entropy({b})"),
            ObservableSpec::SchmidtEntropy(None) => write!(f, "schmidt_entropy(all)"),
            ObservableSpec::Transmission => write!(f, "transmission"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), prefix: "run".into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub state: InitialState,
    pub engine: Engine,
    pub tebd: Option<TebdConfig>,
    pub times: Option<TimeGrid>,
    pub observables: Vec<ObservableSpec>,
    pub output: OutputSpec,
    pub seed: u64,
}

impl RunConfig {
    pub fn segments(&self) -> &[SegmentSpec] {
        match &self.state {
            InitialState::Segments(s) => s,
            _ => &[],
        }
    }

    /// Number of lattice sites of the state or model, 0 for the wall model.
    pub fn sites(&self) -> usize {
        match (&self.model, &self.state) {
            (ModelSpec::TwoBody(p), _) => p.l,
            (_, InitialState::Segments(s)) => s.iter().map(|s| s.l).sum(),
            _ => 0,
        }
    }

    pub fn hamiltonian(&self) -> Option<Result<HamiltonianSpec>> {
        self.model.hamiltonian(self.segments())
    }
}

/// Parse and validate a configuration. All problems found are reported
/// together, each with the line it refers to.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let stmts = parse_statements(text).map_err(Error::Validation)?;
    let mut cx = Checker::default();
    let cfg = cx.run_config(&stmts);
    match cfg {
        Some(c) if cx.issues.is_empty() => Ok(c),
        _ => {
            cx.issues.sort_by_key(|i| i.line);
            Err(Error::Validation(cx.issues))
        }
    }
}

const OBSERVABLE_KINDS: &str = "site_density_exact_n(n), integrated_population(region, n), \
     momentum_distribution(species), schmidt_entropy(bond), transmission";

#[derive(Default)]
struct Checker {
    issues: Vec<ValidationIssue>,
}

/// Named fields of a block or call, with tracking of unused names.
struct Fields<'a> {
    line: usize,
    what: String,
    items: Vec<(&'a str, &'a Node, usize)>,
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn from_block(line: usize, what: &str, fields: &'a [Field]) -> Self {
        let items: Vec<_> = fields.iter().map(|f| (f.name.as_str(), &f.value, f.line)).collect();
        let used = vec![false; items.len()];
        Self { line, what: what.to_string(), items, used }
    }

    fn get(&mut self, name: &str) -> Option<&'a Node> {
        let i = self.items.iter().position(|(n, _, _)| *n == name)?;
        self.used[i] = true;
        Some(self.items[i].1)
    }

    fn finish(self, cx: &mut Checker) {
        let mut seen = std::collections::BTreeSet::new();
        for (i, (name, _, line)) in self.items.iter().enumerate() {
            if !seen.insert(*name) {
                cx.err(*line, format!("{}: duplicate field '{name}'", self.what));
            } else if !self.used[i] {
                cx.err(*line, format!("{}: unknown field '{name}'", self.what));
            }
        }
    }
}

impl Checker {
    fn err(&mut self, line: usize, msg: impl Into<String>) {
        self.issues.push(ValidationIssue { line, message: msg.into() });
    }

    fn num(&mut self, n: &Node, what: &str) -> Option<f64> {
        match n.kind {
            NodeKind::Num(v) if !v.is_nan() => Some(v),
            _ => {
                self.err(n.line, format!("{what}: expected a number, found {}", n.describe()));
                None
            }
        }
    }

    fn positive(&mut self, n: &Node, what: &str) -> Option<f64> {
        let v = self.num(n, what)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.err(n.line, format!("{what} must be positive, got {v}"));
            None
        }
    }

    fn finite_positive(&mut self, n: &Node, what: &str) -> Option<f64> {
        let v = self.positive(n, what)?;
        if v.is_finite() {
            Some(v)
        } else {
            self.err(n.line, format!("{what} must be finite"));
            None
        }
    }

    fn uint(&mut self, n: &Node, what: &str) -> Option<usize> {
        let v = self.num(n, what)?;
        if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
            Some(v as usize)
        } else {
            self.err(n.line, format!("{what}: expected a non-negative integer, got {v}"));
            None
        }
    }

    fn name<'a>(&mut self, n: &'a Node, what: &str) -> Option<&'a str> {
        match &n.kind {
            NodeKind::Ident(s) | NodeKind::Str(s) => Some(s),
            _ => {
                self.err(n.line, format!("{what}: expected a name, found {}", n.describe()));
                None
            }
        }
    }

    fn required<'a>(&mut self, f: &mut Fields<'a>, name: &str) -> Option<&'a Node> {
        let v = f.get(name);
        if v.is_none() {
            self.err(f.line, format!("{}: missing field '{name}'", f.what));
        }
        v
    }

    fn run_config(&mut self, stmts: &[Field]) -> Option<RunConfig> {
        let mut top = Fields::from_block(1, "configuration", stmts);
        let model_node = self.required(&mut top, "model");
        let state_node = top.get("state");
        let engine_node = self.required(&mut top, "engine");
        let tebd_node = top.get("tebd");
        let times_node = top.get("times");
        let obs_node = top.get("observables");
        let output_node = top.get("output");
        let seed_node = top.get("seed");
        top.finish(self);

        let model = model_node.and_then(|n| self.model(n));
        let engine = engine_node.and_then(|n| self.engine(n));
        let state = match state_node {
            Some(n) => self.state(n, model.as_ref()),
            None => Some(InitialState::None),
        };
        let tebd = match tebd_node {
            Some(n) => self.tebd(n, model.as_ref()).map(Some),
            None => Some(None),
        };
        let times = match times_node {
            Some(n) => self.times(n).map(Some),
            None => Some(None),
        };
        let observables = match obs_node {
            Some(n) => self.observables(n),
            None => {
                self.err(1, format!("missing observables block; expected one or more of: {OBSERVABLE_KINDS}"));
                None
            }
        };
        let output = match output_node {
            Some(n) => self.output(n),
            None => Some(OutputSpec::default()),
        };
        let seed = match seed_node {
            Some(n) => self.uint(n, "seed").map(|s| s as u64),
            None => Some(0),
        };
        let cfg = RunConfig {
            model: model?,
            state: state?,
            engine: engine?,
            tebd: tebd?,
            times: times?,
            observables: observables?,
            output: output?,
            seed: seed?,
        };
        let lines = Lines {
            model: model_node.map_or(1, |n| n.line),
            state: state_node.map_or(1, |n| n.line),
            engine: engine_node.map_or(1, |n| n.line),
            observables: obs_node.map_or(1, |n| n.line),
            segments: match state_node.map(|n| &n.kind) {
                Some(NodeKind::List(items)) => items.iter().map(|n| n.line).collect(),
                _ => Vec::new(),
            },
        };
        self.cross_check(&cfg, &lines);
        Some(cfg)
    }

    fn model(&mut self, n: &Node) -> Option<ModelSpec> {
        let NodeKind::Block(Some(name), fields) = &n.kind else {
            self.err(n.line, "model: expected 'name { ... }'");
            return None;
        };
        let what = format!("model {name}");
        let mut f = Fields::from_block(n.line, &what, fields);
        let out = match name.as_str() {
            "wall" => {
                let alphas = self.required(&mut f, "alpha").and_then(|a| match &a.kind {
                    NodeKind::List(items) => {
                        let v: Vec<_> = items.iter().map(|x| self.finite_positive(x, "alpha")).collect();
                        if v.is_empty() {
                            self.err(a.line, "alpha: list is empty");
                            return None;
                        }
                        v.into_iter().collect::<Option<Vec<_>>>()
                    }
                    _ => self.finite_positive(a, "alpha").map(|x| vec![x]),
                });
                let points = self.required(&mut f, "points").and_then(|p| {
                    let v = self.uint(p, "points")?;
                    if v == 0 {
                        self.err(p.line, "points must be at least 1");
                        return None;
                    }
                    Some(v)
                });
                Some(ModelSpec::Wall { alphas: alphas?, points: points? })
            }
            "two_body" => {
                let l = self.required(&mut f, "L").and_then(|x| self.uint(x, "L"));
                let j_a = self.required(&mut f, "J_a").and_then(|x| self.finite_positive(x, "J_a"));
                let j_t = self.required(&mut f, "J_t").and_then(|x| self.finite_positive(x, "J_t"));
                let u = match f.get("U") {
                    Some(x) => self.num(x, "U"),
                    None => match (j_a, j_t) {
                        (Some(a), Some(t)) => Some(TwoBodyParams::default_interaction(a, t)),
                        _ => None,
                    },
                };
                let boundary = self.required(&mut f, "gamma").and_then(|x| {
                    let g = self.uint(x, "gamma")?;
                    match Boundary::from_gamma(g.min(255) as u8) {
                        Ok(b) => Some(b),
                        Err(e) => {
                            self.err(x.line, e.to_string());
                            None
                        }
                    }
                });
                let l = l?;
                if !(2..=crate::momentum_ed::MAX_SITES).contains(&l) {
                    self.err(n.line, format!("L must lie in 2..={}, got {l}", crate::momentum_ed::MAX_SITES));
                    return None;
                }
                Some(ModelSpec::TwoBody(TwoBodyParams { l, j_a: j_a?, j_t: j_t?, u: u?, boundary: boundary? }))
            }
            "bose_hubbard" => {
                let j = self.required(&mut f, "J").and_then(|x| self.num(x, "J"));
                let u = self.required(&mut f, "U").and_then(|x| self.num(x, "U"));
                let n_max = match f.get("n_max") {
                    Some(x) => self.uint(x, "n_max").filter(|&v| {
                        let ok = (1..=8).contains(&v);
                        if !ok {
                            self.err(x.line, format!("n_max must lie in 1..=8, got {v}"));
                        }
                        ok
                    }),
                    None => Some(3),
                };
                Some(ModelSpec::BoseHubbard(BoseHubbardParams { j: j?, u: u?, n_max: n_max? }))
            }
            "effective_dimer" => {
                let j = self.required(&mut f, "J").and_then(|x| self.num(x, "J"));
                let u = self.required(&mut f, "U").and_then(|x| self.positive(x, "U"));
                Some(ModelSpec::EffectiveDimer { j: j?, u: u? })
            }
            "effective_defect" => {
                let j = self.required(&mut f, "J").and_then(|x| self.num(x, "J"));
                Some(ModelSpec::EffectiveDefect { j: j? })
            }
            "two_species" => {
                let mut get = |cx: &mut Self, k: &str| cx.required(&mut f, k).and_then(|x| cx.num(x, k));
                let j_a = get(self, "J_a");
                let j_b = get(self, "J_b");
                let u_a = get(self, "U_a");
                let u_b = get(self, "U_b");
                let u_ab = get(self, "U_ab");
                let mut cap = |cx: &mut Self, k: &str| match f.get(k) {
                    Some(x) => cx.uint(x, k).filter(|&v| {
                        let ok = (1..=6).contains(&v);
                        if !ok {
                            cx.err(x.line, format!("{k} must lie in 1..=6, got {v}"));
                        }
                        ok
                    }),
                    None => Some(3),
                };
                let cap_a = cap(self, "cap_a");
                let cap_b = cap(self, "cap_b");
                Some(ModelSpec::TwoSpecies(TwoSpeciesParams {
                    j_a: j_a?,
                    j_b: j_b?,
                    u_a: u_a?,
                    u_b: u_b?,
                    u_ab: u_ab?,
                    cap_a: cap_a?,
                    cap_b: cap_b?,
                }))
            }
            other => {
                self.err(
                    n.line,
                    format!(
                        "unknown model '{other}'; expected wall, two_body, bose_hubbard, effective_dimer, \
                         effective_defect or two_species"
                    ),
                );
                return None;
            }
        };
        f.finish(self);
        out
    }

    fn engine(&mut self, n: &Node) -> Option<Engine> {
        match self.name(n, "engine")? {
            "analytic" => Some(Engine::Analytic),
            "two-body-ed" => Some(Engine::TwoBodyEd),
            "tebd" => Some(Engine::Tebd),
            other => {
                self.err(n.line, format!("unknown engine '{other}'; expected analytic, two-body-ed or tebd"));
                None
            }
        }
    }

    fn state(&mut self, n: &Node, model: Option<&ModelSpec>) -> Option<InitialState> {
        match &n.kind {
            NodeKind::List(items) => {
                if items.is_empty() {
                    self.err(n.line, "state: segment list is empty");
                    return None;
                }
                let segs: Vec<_> = items.iter().map(|s| self.segment(s)).collect();
                segs.into_iter().collect::<Option<Vec<_>>>().map(InitialState::Segments)
            }
            NodeKind::Call(name, args) if name == "momentum_pair" => {
                let mut f = Fields::from_args(n.line, "momentum_pair", args, &["k_a", "k_t"]);
                let k_a = self.required(&mut f, "k_a").and_then(|x| self.num(x, "k_a").map(|v| (v, x.line)));
                let k_t = self.required(&mut f, "k_t").and_then(|x| self.num(x, "k_t").map(|v| (v, x.line)));
                f.finish(self);
                let (k_a, k_t) = (k_a?, k_t?);
                let Some(ModelSpec::TwoBody(p)) = model else {
                    self.err(n.line, "momentum_pair requires the two_body model");
                    return None;
                };
                let grid = MomentumGrid::new(p.l).ok()?;
                let mut mode = |(k, line): (f64, usize)| match grid.index_of(k) {
                    Ok(i) => Some(grid_mode(p.l, i)),
                    Err(e) => {
                        self.err(line, e.to_string());
                        None
                    }
                };
                let (a, t) = (mode(k_a), mode(k_t));
                Some(InitialState::MomentumPair { mode_a: a?, mode_t: t? })
            }
            _ => {
                self.err(n.line, "state: expected a segment list or momentum_pair(...)");
                None
            }
        }
    }

    fn segment(&mut self, n: &Node) -> Option<SegmentSpec> {
        let NodeKind::Call(name, args) = &n.kind else {
            self.err(n.line, format!("segment: expected seg(...), found {}", n.describe()));
            return None;
        };
        if name != "seg" {
            self.err(n.line, format!("segment: expected seg(...), found {name}(...)"));
            return None;
        }
        let mut f = Fields::from_args(n.line, "seg", args, &["n", "l"]);
        let filling = self.required(&mut f, "n").and_then(|x| self.uint(x, "n"));
        let l = self.required(&mut f, "l").and_then(|x| self.uint(x, "l"));
        let defect = f.get("defect");
        let species = f.get("species");
        f.finish(self);
        let (filling, l) = (filling?, l?);
        if l == 0 {
            self.err(n.line, "segment length must be positive");
            return None;
        }
        let mut seg = SegmentSpec::new(filling, l);
        if let Some(s) = species {
            match self.name(s, "species")? {
                "a" => {}
                "b" => seg = seg.with_species(Species::B),
                other => {
                    self.err(s.line, format!("unknown species '{other}'; expected a or b"));
                    return None;
                }
            }
        }
        if let Some(d) = defect {
            let NodeKind::Call(kind, dargs) = &d.kind else {
                self.err(d.line, "defect: expected localized(site, hole|particle) or momentum(k, hole|particle)");
                return None;
            };
            if dargs.len() != 2 || dargs.iter().any(|a| a.name.is_some()) {
                self.err(d.line, format!("{kind}: expected two positional arguments"));
                return None;
            }
            let sign = match self.name(&dargs[1].value, "defect sign")? {
                "hole" => DefectSign::Hole,
                "particle" => DefectSign::Particle,
                other => {
                    self.err(d.line, format!("unknown defect sign '{other}'; expected hole or particle"));
                    return None;
                }
            };
            let kind = match kind.as_str() {
                "localized" => DefectKind::Localized { site: self.uint(&dargs[0].value, "defect site")? },
                "momentum" => {
                    let k = self.num(&dargs[0].value, "defect momentum")?;
                    match SegmentSpec::mode_for(k, l) {
                        Ok(mode) => DefectKind::Momentum { mode: wrap_mode(mode, l) },
                        Err(_) => {
                            self.err(
                                d.line,
                                format!("momentum {k} is not a multiple of 2*pi/{l} for a segment of length {l}"),
                            );
                            return None;
                        }
                    }
                }
                other => {
                    self.err(d.line, format!("unknown defect kind '{other}'; expected localized or momentum"));
                    return None;
                }
            };
            seg = seg.with_defect(kind, sign);
        }
        if let Err(e) = seg.validate() {
            self.err(n.line, e.to_string());
            return None;
        }
        Some(seg)
    }

    fn tebd(&mut self, n: &Node, model: Option<&ModelSpec>) -> Option<TebdConfig> {
        let NodeKind::Block(None, fields) = &n.kind else {
            self.err(n.line, "tebd: expected '{ ... }'");
            return None;
        };
        let mut f = Fields::from_block(n.line, "tebd", fields);
        let default_dt = match model {
            Some(ModelSpec::EffectiveDefect { .. }) => 0.1,
            _ => 0.02,
        };
        let mut opt = |cx: &mut Self, k: &str, d: f64| match f.get(k) {
            Some(x) => cx.num(x, k).map(|v| (v, x.line)),
            None => Some((d, n.line)),
        };
        let dt = opt(self, "dt", default_dt);
        let chi = opt(self, "chi", 96.0);
        let order = opt(self, "order", 4.0);
        let budget = opt(self, "error_budget", 1e-2);
        let stride = opt(self, "sample_every", 1.0);
        let cutoff = opt(self, "cutoff", 1e-10);
        let t_max = self.required(&mut f, "t_max").and_then(|x| self.num(x, "t_max").map(|v| (v, x.line)));
        f.finish(self);
        let as_uint = |cx: &mut Self, (v, line): (f64, usize), k: &str| {
            if v >= 1.0 && v.fract() == 0.0 {
                Some(v as usize)
            } else {
                cx.err(line, format!("{k}: expected a positive integer, got {v}"));
                None
            }
        };
        let chi = chi.and_then(|c| as_uint(self, c, "chi"));
        let stride = stride.and_then(|c| as_uint(self, c, "sample_every"));
        let order = order.and_then(|(v, line)| match TrotterOrder::from_int(v as u32) {
            Ok(o) if v.fract() == 0.0 => Some(o),
            _ => {
                self.err(line, format!("order must be 2 or 4, got {v}"));
                None
            }
        });
        let cfg = TebdConfig {
            dt: dt?.0,
            t_max: t_max?.0,
            chi_max: chi?,
            order: order?,
            error_budget: budget?.0,
            sample_every: stride?,
            cutoff: cutoff?.0,
        };
        if let Err(e) = cfg.validate() {
            self.err(n.line, format!("tebd: {e}"));
            return None;
        }
        Some(cfg)
    }

    fn times(&mut self, n: &Node) -> Option<TimeGrid> {
        let NodeKind::Block(None, fields) = &n.kind else {
            self.err(n.line, "times: expected '{ ... }'");
            return None;
        };
        let mut f = Fields::from_block(n.line, "times", fields);
        let t_max = self.required(&mut f, "t_max").and_then(|x| self.num(x, "t_max"));
        let samples = self.required(&mut f, "samples").and_then(|x| self.uint(x, "samples"));
        f.finish(self);
        let (t_max, samples) = (t_max?, samples?);
        if !(t_max >= 0.0) || !t_max.is_finite() || samples == 0 {
            self.err(n.line, "times: need a finite t_max >= 0 and at least one sample");
            return None;
        }
        Some(TimeGrid { t_max, samples })
    }

    fn observables(&mut self, n: &Node) -> Option<Vec<ObservableSpec>> {
        let NodeKind::List(items) = &n.kind else {
            self.err(n.line, "observables: expected a list");
            return None;
        };
        if items.is_empty() {
            self.err(n.line, format!("observables block is empty; expected one or more of: {OBSERVABLE_KINDS}"));
            return None;
        }
        items.iter().map(|o| self.observable(o)).collect::<Vec<_>>().into_iter().collect()
    }

    fn occupancy(&mut self, n: &Node) -> Option<Occupancy> {
        match &n.kind {
            NodeKind::Ident(s) => match s.as_str() {
                "monomer" => Some(Occupancy::Monomer(Species::A)),
                "monomer_b" => Some(Occupancy::Monomer(Species::B)),
                "trimer" => Some(Occupancy::Trimer),
                other => {
                    self.err(n.line, format!("unknown occupancy '{other}'; expected n, monomer, monomer_b or trimer"));
                    None
                }
            },
            _ => self.uint(n, "occupation").map(Occupancy::Exactly),
        }
    }

    fn region(&mut self, n: &Node) -> Option<Region> {
        match &n.kind {
            NodeKind::Ident(s) => match s.as_str() {
                "outside" => Some(Region::Outside),
                "cluster" => Some(Region::Cluster),
                "all" => Some(Region::All),
                other => {
                    self.err(n.line, format!("unknown region '{other}'; expected outside, cluster, all or sites(...)"));
                    None
                }
            },
            NodeKind::Call(name, args) if name == "sites" && !args.is_empty() => {
                let mut out = Vec::new();
                for a in args {
                    match &a.value.kind {
                        NodeKind::Call(r, bounds) if r == "range" && bounds.len() == 2 => {
                            let lo = self.uint(&bounds[0].value, "range start")?;
                            let hi = self.uint(&bounds[1].value, "range end")?;
                            if lo < 1 || hi < lo {
                                self.err(a.value.line, format!("range({lo}, {hi}) is empty or starts below 1"));
                                return None;
                            }
                            out.push((lo, hi));
                        }
                        _ => {
                            self.err(a.value.line, "sites: expected range(first, last) arguments");
                            return None;
                        }
                    }
                }
                Some(Region::Sites(out))
            }
            _ => {
                self.err(n.line, "region: expected outside, cluster, all or sites(range(a, b), ...)");
                None
            }
        }
    }

    fn observable(&mut self, n: &Node) -> Option<ObservableSpec> {
        let (name, args): (&str, &[Arg]) = match &n.kind {
            NodeKind::Ident(s) => (s, &[]),
            NodeKind::Call(s, a) => (s, a),
            _ => {
                self.err(n.line, format!("observable: expected one of {OBSERVABLE_KINDS}"));
                return None;
            }
        };
        let arity = |cx: &mut Self, k: usize| {
            let ok = args.len() == k && args.iter().all(|a| a.name.is_none());
            if !ok {
                cx.err(n.line, format!("{name}: expected {k} positional argument(s)"));
            }
            ok
        };
        match name {
            "site_density_exact_n" => {
                arity(self, 1).then_some(())?;
                self.occupancy(&args[0].value).map(ObservableSpec::SiteDensity)
            }
            "integrated_population" => {
                arity(self, 2).then_some(())?;
                let region = self.region(&args[0].value);
                let occupancy = self.occupancy(&args[1].value);
                Some(ObservableSpec::IntegratedPopulation { region: region?, occupancy: occupancy? })
            }
            "momentum_distribution" => {
                arity(self, 1).then_some(())?;
                let t = match self.name(&args[0].value, "momentum_distribution")? {
                    "a" => MomentumTarget::Species(Species::A),
                    "b" => MomentumTarget::Species(Species::B),
                    "monomer" => MomentumTarget::Monomer,
                    "trimer" => MomentumTarget::Trimer,
                    other => {
                        self.err(n.line, format!("unknown momentum target '{other}'; expected a, b, monomer or trimer"));
                        return None;
                    }
                };
                Some(ObservableSpec::MomentumDistribution(t))
            }
            "schmidt_entropy" => {
                arity(self, 1).then_some(())?;
                match &args[0].value.kind {
                    NodeKind::Ident(s) if s == "all" => Some(ObservableSpec::SchmidtEntropy(None)),
                    _ => self.uint(&args[0].value, "bond").map(|b| ObservableSpec::SchmidtEntropy(Some(b))),
                }
            }
            "transmission" => {
                arity(self, 0).then_some(())?;
                Some(ObservableSpec::Transmission)
            }
            other => {
                self.err(n.line, format!("unknown observable '{other}'; expected one of {OBSERVABLE_KINDS}"));
                None
            }
        }
    }

    fn output(&mut self, n: &Node) -> Option<OutputSpec> {
        let NodeKind::Block(None, fields) = &n.kind else {
            self.err(n.line, "output: expected '{ ... }'");
            return None;
        };
        let mut f = Fields::from_block(n.line, "output", fields);
        let mut out = OutputSpec::default();
        if let Some(d) = f.get("dir") {
            match &d.kind {
                NodeKind::Str(s) if !s.is_empty() => out.dir = PathBuf::from(s),
                _ => self.err(d.line, "output dir: expected a non-empty quoted string"),
            }
        }
        if let Some(p) = f.get("prefix") {
            match &p.kind {
                NodeKind::Str(s) if valid_prefix(s) => out.prefix = s.clone(),
                _ => self.err(p.line, "output prefix: expected a quoted name of letters, digits, '-' or '_'"),
            }
        }
        f.finish(self);
        Some(out)
    }

    fn cross_check(&mut self, c: &RunConfig, lines: &Lines) {
        let needs = match c.engine {
            Engine::Analytic => matches!(c.model, ModelSpec::Wall { .. }),
            Engine::TwoBodyEd => matches!(c.model, ModelSpec::TwoBody(_)),
            Engine::Tebd => c.model.hamiltonian(&[]).is_some(),
        };
        if !needs {
            self.err(
                lines.engine,
                format!("engine {} cannot run the {} model", c.engine.name(), c.model.name()),
            );
            return;
        }
        match c.engine {
            Engine::Analytic => {
                if c.state != InitialState::None {
                    self.err(lines.state, "the analytic engine takes no initial state");
                }
            }
            Engine::TwoBodyEd => {
                if !matches!(c.state, InitialState::MomentumPair { .. }) {
                    self.err(lines.state, "two-body-ed needs state = momentum_pair(k_a = ..., k_t = ...)");
                }
                if c.times.is_none() {
                    self.err(lines.engine, "two-body-ed needs a times { t_max, samples } block");
                }
            }
            Engine::Tebd => {
                if c.tebd.is_none() {
                    self.err(lines.engine, "tebd needs a tebd { t_max, ... } block");
                }
                let InitialState::Segments(segs) = &c.state else {
                    self.err(lines.state, "tebd needs a segment list as initial state");
                    return;
                };
                let total: usize = segs.iter().map(|s| s.l).sum();
                if total < 2 {
                    self.err(lines.state, "the lattice needs at least two sites");
                    return;
                }
                match c.model.hamiltonian(segs) {
                    Some(Ok(h)) => {
                        for (i, s) in segs.iter().enumerate() {
                            if let Err(e) = h.encode(s) {
                                self.err(lines.segments.get(i).copied().unwrap_or(lines.state), e.to_string());
                            }
                        }
                        if s_species_b(segs) && !matches!(c.model, ModelSpec::TwoSpecies(_)) {
                            self.err(lines.state, "species = b needs the two_species model");
                        }
                    }
                    Some(Err(e)) => self.err(lines.model, e.to_string()),
                    None => {}
                }
            }
        }
        for o in &c.observables {
            if let Some(msg) = observable_problem(o, c) {
                self.err(lines.observables, msg);
            }
        }
    }
}

fn s_species_b(segs: &[SegmentSpec]) -> bool {
    segs.iter().any(|s| s.species == Species::B)
}

struct Lines {
    model: usize,
    state: usize,
    engine: usize,
    observables: usize,
    segments: Vec<usize>,
}

impl<'a> Fields<'a> {
    /// Arguments of a call; leading positional arguments take the names in
    /// `positional` in order.
    fn from_args(line: usize, what: &str, args: &'a [Arg], positional: &[&'a str]) -> Self {
        let mut items = Vec::new();
        for (i, a) in args.iter().enumerate() {
            let name = match &a.name {
                Some(n) => n.as_str(),
                None => positional.get(i).copied().unwrap_or("_"),
            };
            items.push((name, &a.value, a.value.line));
        }
        let used = vec![false; items.len()];
        Self { line, what: what.to_string(), items, used }
    }
}

fn observable_problem(o: &ObservableSpec, c: &RunConfig) -> Option<String> {
    let l = c.sites();
    let ok_engine = match (c.engine, o) {
        (Engine::Analytic, ObservableSpec::Transmission) => true,
        (Engine::TwoBodyEd, ObservableSpec::MomentumDistribution(MomentumTarget::Monomer | MomentumTarget::Trimer)) => {
            true
        }
        (Engine::Tebd, ObservableSpec::Transmission) => false,
        (Engine::Tebd, ObservableSpec::MomentumDistribution(MomentumTarget::Monomer | MomentumTarget::Trimer)) => false,
        (Engine::Tebd, _) => true,
        _ => false,
    };
    if !ok_engine {
        return Some(format!("observable {o} is not available with engine {}", c.engine.name()));
    }
    let model = match c.hamiltonian() {
        Some(Ok(h)) => h,
        _ => return None,
    };
    match o {
        ObservableSpec::SiteDensity(occ) | ObservableSpec::IntegratedPopulation { occupancy: occ, .. } => {
            if super::observables::occupancy_weights(&model, *occ).is_none() {
                return Some(format!("occupancy {occ} is not representable in the {} model", model.name()));
            }
            if let ObservableSpec::IntegratedPopulation { region: Region::Sites(r), .. } = o {
                if let Some((a, b)) = r.iter().find(|(_, b)| *b > l) {
                    return Some(format!("range({a}, {b}) exceeds the {l}-site lattice"));
                }
            }
            None
        }
        ObservableSpec::MomentumDistribution(MomentumTarget::Species(s)) => {
            let ok = matches!(
                (&model, s),
                (HamiltonianSpec::BoseHubbard(_), Species::A) | (HamiltonianSpec::TwoSpecies(_), _)
            );
            (!ok).then(|| format!("momentum distribution of species {s:?} needs a bosonic model"))
        }
        ObservableSpec::SchmidtEntropy(Some(b)) if *b < 1 || *b >= l => {
            Some(format!("bond {b} outside 1..={}", l.saturating_sub(1)))
        }
        _ => None,
    }
}

fn valid_prefix(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Signed mode `nu` of grid index `i` (`k = 2 pi nu / L`).
fn grid_mode(l: usize, i: usize) -> i64 {
    let lo = (-(l as f64) / 2.0 + 1.0).floor() as i64;
    lo + i as i64
}

/// Fold a mode into `(-l/2, l/2]`.
fn wrap_mode(mode: i64, l: usize) -> i64 {
    let l = l as i64;
    let mut m = mode.rem_euclid(l);
    if 2 * m > l {
        m -= l;
    }
    m
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for RunConfig {
    /// Canonical text form; parsing it yields an equal configuration.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = match &self.model {
            ModelSpec::Wall { alphas, points } => {
                let a: Vec<_> = alphas.iter().map(|x| fmt_num(*x)).collect();
                writeln!(s, "model = wall {{ alpha = [{}], points = {points} }}", a.join(", "))
            }
            ModelSpec::TwoBody(p) => writeln!(
                s,
                "model = two_body {{ L = {}, J_a = {}, J_t = {}, U = {}, gamma = {} }}",
                p.l,
                fmt_num(p.j_a),
                fmt_num(p.j_t),
                fmt_num(p.u),
                p.boundary.gamma() as u8
            ),
            ModelSpec::BoseHubbard(p) => writeln!(
                s,
                "model = bose_hubbard {{ J = {}, U = {}, n_max = {} }}",
                fmt_num(p.j),
                fmt_num(p.u),
                p.n_max
            ),
            ModelSpec::EffectiveDimer { j, u } => {
                writeln!(s, "model = effective_dimer {{ J = {}, U = {} }}", fmt_num(*j), fmt_num(*u))
            }
            ModelSpec::EffectiveDefect { j } => writeln!(s, "model = effective_defect {{ J = {} }}", fmt_num(*j)),
            ModelSpec::TwoSpecies(p) => writeln!(
                s,
                "model = two_species {{ J_a = {}, J_b = {}, U_a = {}, U_b = {}, U_ab = {}, cap_a = {}, cap_b = {} }}",
                fmt_num(p.j_a),
                fmt_num(p.j_b),
                fmt_num(p.u_a),
                fmt_num(p.u_b),
                fmt_num(p.u_ab),
                p.cap_a,
                p.cap_b
            ),
        };
        let _ = match &self.state {
            InitialState::None => Ok(()),
            InitialState::MomentumPair { mode_a, mode_t } => {
                let l = self.sites();
                writeln!(s, "state = momentum_pair(k_a = {}, k_t = {})", fmt_momentum(*mode_a, l), fmt_momentum(*mode_t, l))
            }
            InitialState::Segments(segs) => {
                let _ = writeln!(s, "state = [");
                for seg in segs {
                    let _ = writeln!(s, "  {seg},");
                }
                writeln!(s, "]")
            }
        };
        let _ = writeln!(s, "engine = {}", self.engine.name());
        if let Some(t) = &self.tebd {
            let _ = writeln!(
                s,
                "tebd = {{ dt = {}, t_max = {}, chi = {}, order = {}, error_budget = {}, sample_every = {}, cutoff = {} }}",
                fmt_num(t.dt),
                fmt_num(t.t_max),
                t.chi_max,
                t.order.as_int(),
                fmt_num(t.error_budget),
                t.sample_every,
                fmt_num(t.cutoff)
            );
        }
        if let Some(t) = &self.times {
            let _ = writeln!(s, "times = {{ t_max = {}, samples = {} }}", fmt_num(t.t_max), t.samples);
        }
        let _ = writeln!(s, "observables = [");
        for o in &self.observables {
            let _ = writeln!(s, "  {o},");
        }
        let _ = writeln!(s, "]");
        let _ = writeln!(
            s,
            "output = {{ dir = \"{}\", prefix = \"{}\" }}",
            self.output.dir.display(),
            self.output.prefix
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOCALIZED: &str = r#"
# two localized monomers in a 12-site cluster
model = effective_defect { J = 1.0 }
state = [
  seg(n = 0, l = 18),
  seg(n = 2, l = 4, defect = localized(2, hole)),
  seg(n = 2, l = 4),
  seg(n = 2, l = 4, defect = localized(2, hole)),
  seg(n = 0, l = 18),
]
engine = tebd
tebd = { dt = 0.1, t_max = 20, chi = 96, sample_every = 10 }
observables = [
  site_density_exact_n(1),
  integrated_population(outside, monomer),
]
output = { dir = "out/loc", prefix = "loc" }
"#;

    fn messages(text: &str) -> Vec<ValidationIssue> {
        match parse_config(text) {
            Err(Error::Validation(v)) => v,
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn parses_segment_run() {
        let c = parse_config(LOCALIZED).unwrap();
        assert_eq!(c.sites(), 48);
        assert_eq!(c.engine, Engine::Tebd);
        assert_eq!(c.segments().len(), 5);
        assert_eq!(c.tebd.unwrap().order, TrotterOrder::Fourth);
        assert_eq!(c.observables.len(), 2);
        assert_eq!(c.output.prefix, "loc");
    }

    #[test]
    fn round_trip() {
        let c = parse_config(LOCALIZED).unwrap();
        let again = parse_config(&c.to_string()).unwrap();
        assert_eq!(c, again);
        let pair = "model = two_body { L = 64, J_a = 2, J_t = 3, gamma = 0 }\n\
                    state = momentum_pair(k_a = 13*pi/16, k_t = -9*pi/16)\n\
                    engine = two-body-ed\ntimes = { t_max = 10, samples = 5 }\n\
                    observables = [momentum_distribution(monomer)]\n";
        let c = parse_config(pair).unwrap();
        assert_eq!(c.state, InitialState::MomentumPair { mode_a: 26, mode_t: -18 });
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn off_grid_momentum_rejected() {
        let text = LOCALIZED.replace("localized(2, hole)),\n  seg(n = 2, l = 4),", "momentum(0.7, hole)),\n  seg(n = 2, l = 4),");
        let v = messages(&text);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, 6);
        assert!(v[0].message.contains("multiple of 2*pi/4"));
    }

    #[test]
    fn empty_observables_rejected() {
        let text = LOCALIZED.replace("  site_density_exact_n(1),\n  integrated_population(outside, monomer),\n", "");
        let v = messages(&text);
        assert!(v[0].message.contains("site_density_exact_n"), "{v:?}");
        assert!(v[0].message.contains("schmidt_entropy"));
    }

    #[test]
    fn all_problems_reported() {
        let text = "model = bose_hubbard { J = 1, U = 100, n_max = 3, W = 2 }\n\
                    state = [seg(n = 4, l = 4)]\nengine = tebd\n\
                    tebd = { t_max = 1, order = 3 }\nobservables = [schmidt_entropy(9)]\n";
        let v = messages(text);
        assert!(v.iter().any(|i| i.line == 1 && i.message.contains("unknown field 'W'")));
        assert!(v.iter().any(|i| i.line == 4 && i.message.contains("order")));
    }

    #[test]
    fn semantic_cross_checks() {
        let text = "model = bose_hubbard { J = 1, U = 100, n_max = 3 }\n\
                    state = [seg(n = 4, l = 4)]\nengine = tebd\n\
                    tebd = { t_max = 1 }\nobservables = [schmidt_entropy(9), transmission]\n";
        let v = messages(text);
        assert!(v.iter().any(|i| i.line == 2), "{v:?}");
        assert!(v.iter().filter(|i| i.line == 5).count() >= 2, "{v:?}");
    }

    #[test]
    fn wall_and_engine_mismatch() {
        let ok = "model = wall { alpha = [0.25, 0.5, 1, 2, 4], points = 512 }\nengine = analytic\nobservables = [transmission]\n";
        let c = parse_config(ok).unwrap();
        assert!(matches!(&c.model, ModelSpec::Wall { alphas, .. } if alphas.len() == 5));
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
        let bad = ok.replace("analytic", "tebd");
        assert!(messages(&bad).iter().any(|i| i.line == 2));
    }

    #[test]
    fn mode_helpers() {
        assert_eq!(wrap_mode(3, 4), -1);
        assert_eq!(wrap_mode(2, 4), 2);
        assert_eq!(wrap_mode(-2, 4), 2);
        assert_eq!(grid_mode(4, 0), -1);
    }
}
