//! Real-time evolution of symmetric MPS by Trotterized two-site gates.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::{BondGenerator, HamiltonianSpec};
use crate::mps::{SymmetricMps, Truncation, TwoSiteReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrotterOrder {
    Second,
    Fourth,
}

impl TrotterOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(TrotterOrder::Second),
            4 => Ok(TrotterOrder::Fourth),
            o => Err(Error::Domain(format!("Trotter order must be 2 or 4, got {o}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            TrotterOrder::Second => 2,
            TrotterOrder::Fourth => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TebdConfig {
    pub dt: f64,
    pub t_max: f64,
    pub chi_max: usize,
    pub order: TrotterOrder,
    /// The run stops once the accumulated discarded weight reaches this.
    pub error_budget: f64,
    /// Record observables every `sample_every` steps.
    pub sample_every: usize,
    /// Schmidt values below this fraction of the norm are dropped.
    pub cutoff: f64,
}

impl TebdConfig {
    pub fn for_model(model: &HamiltonianSpec) -> Self {
        Self {
            dt: model.default_dt(),
            t_max: 1.0,
            chi_max: 96,
            order: TrotterOrder::Fourth,
            error_budget: 1e-2,
            sample_every: 1,
            cutoff: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::Domain(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        if self.chi_max < 1 {
            return Err(Error::Domain("chi_max must be at least 1".into()));
        }
        if !(self.error_budget > 0.0) {
            return Err(Error::Domain("error budget must be positive".into()));
        }
        if self.sample_every < 1 {
            return Err(Error::Domain("sample stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn truncation(&self) -> Truncation {
        Truncation { chi_max: self.chi_max, cutoff: self.cutoff }
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

/// `(parity, fraction of dt)` layers of one Trotter step, with consecutive
/// same-parity layers merged.
fn layer_sequence(order: TrotterOrder) -> Vec<(Parity, f64)> {
    let s2 = |c: f64| vec![(Parity::Even, c / 2.0), (Parity::Odd, c), (Parity::Even, c / 2.0)];
    let raw = match order {
        TrotterOrder::Second => s2(1.0),
        TrotterOrder::Fourth => {
            let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
            [p, p, 1.0 - 4.0 * p, p, p].iter().flat_map(|&c| s2(c)).collect()
        }
    };
    let mut merged: Vec<(Parity, f64)> = Vec::new();
    for (par, c) in raw {
        match merged.last_mut() {
            Some((lp, lc)) if *lp == par => *lc += c,
            _ => merged.push((par, c)),
        }
    }
    merged
}

struct BondGates {
    /// One gate per generator variant.
    gates: Vec<CMat>,
    generator: BondGenerator,
}

/// Precomputed gates for a fixed model, chain length and time step.
pub struct TrotterPlan {
    layers: Vec<(Parity, usize)>,
    /// `[coefficient][bond]`
    gates: Vec<Vec<BondGates>>,
    trunc: Truncation,
}

impl TrotterPlan {
    pub fn new(model: &HamiltonianSpec, l: usize, cfg: &TebdConfig) -> Result<Self> {
        cfg.validate()?;
        let generators = model.bond_generators(l)?;
        let mut coeffs: Vec<f64> = Vec::new();
        let mut layers = Vec::new();
        for (par, c) in layer_sequence(cfg.order) {
            let idx = match coeffs.iter().position(|x| (x - c).abs() < 1e-15) {
                Some(i) => i,
                None => {
                    coeffs.push(c);
                    coeffs.len() - 1
                }
            };
            layers.push((par, idx));
        }
        let mut gates = Vec::with_capacity(coeffs.len());
        for &c in &coeffs {
            let tau = c * cfg.dt;
            let per_bond = generators
                .iter()
                .map(|g| {
                    let gates = g
                        .matrices()
                        .iter()
                        .map(|h| linalg::unitary_propagator(h, tau))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(BondGates { gates, generator: g.clone() })
                })
                .collect::<Result<Vec<_>>>()?;
            gates.push(per_bond);
        }
        Ok(Self { layers, gates, trunc: cfg.truncation() })
    }

    /// Advance `psi` by one time step.
    pub fn step(&self, psi: &mut SymmetricMps) -> Result<StepReport> {
        let bonds = psi.len().saturating_sub(1);
        let mut report = StepReport::default();
        for &(par, ci) in &self.layers {
            let start = match par {
                Parity::Even => 0,
                Parity::Odd => 1,
            };
            for b in (start..bonds).step_by(2) {
                let bg = &self.gates[ci][b];
                let r = psi.apply_two_site(b, &bg.gates, &|q| bg.generator.select(q), self.trunc)?;
                report.absorb(r);
            }
        }
        Ok(report)
    }
}

/// Summary of the gates applied during one Trotter step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub discarded: f64,
    /// Largest `|norm^2 - 1|` seen before truncation.
    pub norm_drift: f64,
}

impl StepReport {
    fn absorb(&mut self, r: TwoSiteReport) {
        self.discarded += r.discarded;
        self.norm_drift = self.norm_drift.max((r.norm_sq - 1.0).abs());
    }
}

/// Apply one gate to the bond between sites `bond` and `bond + 1`.
pub fn apply_two_site_gate(psi: &mut SymmetricMps, bond: usize, gate: &CMat, chi_max: usize) -> Result<f64> {
    let trunc = Truncation { chi_max, cutoff: 1e-14 };
    Ok(psi.apply_two_site(bond, std::slice::from_ref(gate), &|_| 0, trunc)?.discarded)
}

/// One Trotter step; builds the gates on every call, so prefer
/// [`TrotterPlan`] inside loops.
pub fn trotter_step(psi: &mut SymmetricMps, model: &HamiltonianSpec, cfg: &TebdConfig) -> Result<StepReport> {
    TrotterPlan::new(model, psi.len(), cfg)?.step(psi)
}

/// Accumulated truncation error of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationLedger {
    pub per_step: Vec<f64>,
    pub total: f64,
    pub max_chi: Vec<usize>,
    pub max_norm_drift: f64,
}

impl TruncationLedger {
    pub fn new(bonds: usize) -> Self {
        Self { max_chi: vec![0; bonds], ..Default::default() }
    }

    pub fn record(&mut self, r: StepReport, psi: &SymmetricMps) {
        self.per_step.push(r.discarded);
        self.total += r.discarded;
        self.max_norm_drift = self.max_norm_drift.max(r.norm_drift);
        for (m, d) in self.max_chi.iter_mut().zip(psi.bond_dims()) {
            *m = (*m).max(d);
        }
    }

    pub fn max_bond_dim(&self) -> usize {
        self.max_chi.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// The accumulated discarded weight reached the budget at time `at`.
    BudgetExhausted { at: f64 },
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::BudgetExhausted { at } => write!(f, "budget_exhausted_at_{at}"),
        }
    }
}

/// A named observable evaluated on the state at every sample.
pub struct Probe<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&SymmetricMps) -> Vec<f64> + Send + Sync + 'a>,
}

impl<'a> Probe<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&SymmetricMps) -> Vec<f64> + Send + Sync + 'a) -> Self {
        Self { name: name.into(), eval: Box::new(eval) }
    }
}

/// Observable samples indexed by time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[sample][probe]`
    pub values: Vec<Vec<Vec<f64>>>,
    pub ledger: TruncationLedger,
    pub termination: Option<Termination>,
}

impl TimeSeries {
    pub fn probe_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Time trace of one probe.
    pub fn channel(&self, name: &str) -> Option<Vec<&[f64]>> {
        let i = self.probe_index(name)?;
        Some(self.values.iter().map(|v| v[i].as_slice()).collect())
    }

    /// Value of a probe at the last sample at or before `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<&[f64]> {
        let i = self.probe_index(name)?;
        let k = self.times.iter().rposition(|&x| x <= t + 1e-9)?;
        Some(&self.values[k][i])
    }

    fn sample(&mut self, t: f64, psi: &SymmetricMps, probes: &[Probe]) {
        self.times.push(t);
        self.values.push(probes.iter().map(|p| (p.eval)(psi)).collect());
    }
}

/// Evolve `psi` up to `cfg.t_max` or until the error budget is spent.
pub fn run(
    psi: &mut SymmetricMps,
    model: &HamiltonianSpec,
    cfg: &TebdConfig,
    probes: &[Probe],
) -> Result<TimeSeries> {
    let plan = TrotterPlan::new(model, psi.len(), cfg)?;
    let mut series = TimeSeries {
        names: probes.iter().map(|p| p.name.clone()).collect(),
        ledger: TruncationLedger::new(psi.len() + 1),
        ..Default::default()
    };
    series.ledger.record(StepReport::default(), psi);
    series.ledger.per_step.clear();
    series.sample(0.0, psi, probes);
    let steps = cfg.steps();
    let mut termination = Termination::Completed;
    for n in 1..=steps {
        let t = n as f64 * cfg.dt;
        let report = plan.step(psi).map_err(|e| Error::AtTime { time: t, source: Box::new(e) })?;
        series.ledger.record(report, psi);
        let exhausted = series.ledger.total >= cfg.error_budget;
        if n % cfg.sample_every == 0 || n == steps || exhausted {
            series.sample(t, psi, probes);
        }
        if exhausted {
            log::warn!("truncation budget {} exhausted at t = {t}", cfg.error_budget);
            termination = Termination::BudgetExhausted { at: t };
            break;
        }
    }
    series.termination = Some(termination);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BoseHubbardParams;
    use crate::mps::build_product_segment;

    #[test]
    fn fourth_order_layers_sum_to_one_per_parity() {
        let l = layer_sequence(TrotterOrder::Fourth);
        let even: f64 = l.iter().filter(|x| x.0 == Parity::Even).map(|x| x.1).sum();
        let odd: f64 = l.iter().filter(|x| x.0 == Parity::Odd).map(|x| x.1).sum();
        assert!((even - 1.0).abs() < 1e-14 && (odd - 1.0).abs() < 1e-14);
        assert!(l.windows(2).all(|w| w[0].0 != w[1].0));
        assert_eq!(l.len(), 11);
    }

    #[test]
    fn vacuum_stays_empty() {
        let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 10.0, n_max: 3 });
        let mut psi = build_product_segment(0, 6, 4).unwrap();
        let cfg = TebdConfig { t_max: 0.2, ..TebdConfig::for_model(&model) };
        let dens = |p: &SymmetricMps| p.densities(0);
        let ts = run(&mut psi, &model, &cfg, &[Probe::new("n", dens)]).unwrap();
        assert_eq!(ts.times.len(), cfg.steps() + 1);
        for v in &ts.values {
            assert!(v[0].iter().all(|x| x.abs() < 1e-14));
        }
        assert_eq!(ts.termination, Some(Termination::Completed));
    }

    #[test]
    fn invalid_config_rejected() {
        let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 10.0, n_max: 3 });
        let cfg = TebdConfig { dt: 0.0, ..TebdConfig::for_model(&model) };
        assert!(TrotterPlan::new(&model, 4, &cfg).is_err());
    }
}
