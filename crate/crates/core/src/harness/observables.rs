//! Observables evaluated on matrix product states during a run.

use std::f64::consts::PI;

use super::config::{MomentumTarget, ObservableSpec, Occupancy, Region};
use crate::linalg::{self, cis, CMat, C64};
use crate::models::{HamiltonianSpec, MONOMER, TRIMER};
use crate::mps::{Charge, LocalSpace, SegmentSpec, Species, SymmetricMps};
use crate::tebd::{Probe, TimeSeries};

/// Indicator of the local basis states counted by `occ`, or `None` when the
/// model has no such states.
pub fn occupancy_weights(model: &HamiltonianSpec, occ: Occupancy) -> Option<Vec<f64>> {
    let space = model.local_space();
    let d = space.dim();
    let pick = |f: &dyn Fn(usize, Charge) -> bool| -> Option<Vec<f64>> {
        let w: Vec<f64> = (0..d).map(|s| if f(s, space.charge(s)) { 1.0 } else { 0.0 }).collect();
        w.iter().any(|&x| x > 0.0).then_some(w)
    };
    match (model, occ) {
        (HamiltonianSpec::BoseHubbard(_), Occupancy::Exactly(n)) => pick(&|s, _| s == n),
        (HamiltonianSpec::BoseHubbard(_), Occupancy::Monomer(Species::A)) => pick(&|s, _| s == 1),
        (HamiltonianSpec::BoseHubbard(_), Occupancy::Trimer) => pick(&|s, _| s == 3),
        (HamiltonianSpec::EffectiveDimer { .. }, Occupancy::Exactly(n)) if n % 2 == 0 => pick(&|s, _| 2 * s == n),
        (HamiltonianSpec::EffectiveDefect(_), Occupancy::Exactly(1) | Occupancy::Monomer(Species::A)) => {
            pick(&|s, _| s == MONOMER)
        }
        (HamiltonianSpec::EffectiveDefect(_), Occupancy::Exactly(3) | Occupancy::Trimer) => pick(&|s, _| s == TRIMER),
        (HamiltonianSpec::TwoSpecies(_), Occupancy::Exactly(n)) => pick(&|_, c| c.total() == n as i32),
        (HamiltonianSpec::TwoSpecies(_), Occupancy::Monomer(Species::A)) => pick(&|_, c| c.0 == [0, 1]),
        (HamiltonianSpec::TwoSpecies(_), Occupancy::Monomer(Species::B)) => pick(&|_, c| c.0 == [1, 0]),
        (HamiltonianSpec::TwoSpecies(_), Occupancy::Trimer) => pick(&|_, c| c.total() == 3),
        _ => None,
    }
}

/// Site-resolved probability of the states selected by `weights`.
pub fn weighted_density(psi: &SymmetricMps, weights: &[f64]) -> Vec<f64> {
    (0..psi.len()).map(|i| psi.expect_diagonal(i, weights)).collect()
}

/// Vacuum flank lengths `(left, right)` of a segment list: defect-free empty
/// segments at either end.
pub fn vacuum_flanks(segments: &[SegmentSpec]) -> (usize, usize) {
    let empty = |s: &&SegmentSpec| s.n == 0 && s.defect.is_none();
    let left: usize = segments.iter().take_while(empty).map(|s| s.l).sum();
    let total: usize = segments.iter().map(|s| s.l).sum();
    if left == total {
        return (total, 0);
    }
    let right: usize = segments.iter().rev().take_while(empty).map(|s| s.l).sum();
    (left, right)
}

/// 0-based site indices of a region on a lattice built from `segments`.
/// `Outside` leaves out the vacuum site adjacent to the cluster on each side.
pub fn region_sites(region: &Region, segments: &[SegmentSpec]) -> Vec<usize> {
    let l: usize = segments.iter().map(|s| s.l).sum();
    let (fl, fr) = vacuum_flanks(segments);
    match region {
        Region::All => (0..l).collect(),
        Region::Cluster => (fl..l - fr).collect(),
        Region::Outside => {
            let mut v: Vec<usize> = (0..fl.saturating_sub(1)).collect();
            v.extend((l - fr + 1).min(l)..l);
            v
        }
        Region::Sites(ranges) => {
            let mut v: Vec<usize> = ranges.iter().flat_map(|&(a, b)| (a - 1)..b.min(l)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    }
}

/// Annihilation operator of one species in a bosonic local basis.
pub fn annihilator(space: &LocalSpace, species: usize) -> CMat {
    let d = space.dim();
    let mut m = linalg::zeros(d, d);
    for s in 0..d {
        let c = space.charge(s);
        let n = c.0[species];
        if n == 0 {
            continue;
        }
        let mut lower = c;
        lower.0[species] -= 1;
        if let Some(t) = space.index_of(lower) {
            m[(t, s)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    m
}

/// Quasi-momentum distribution `n(k) = (1/L) sum_ij e^{ik(i-j)} <a_i^dag a_j>`
/// on the grid `k = 2 pi nu / L`, `nu = floor(-L/2+1)..=floor(L/2)`.
pub fn momentum_distribution(psi: &SymmetricMps, species: usize) -> Vec<f64> {
    let l = psi.len();
    let a = annihilator(psi.space(), species);
    let ad = linalg::adjoint(&a);
    let mut corr = vec![vec![C64::new(0.0, 0.0); l]; l];
    for i in 0..l {
        for j in i..l {
            let c = psi.correlator(i, &ad, j, &a);
            corr[i][j] = c;
            corr[j][i] = c.conj();
        }
    }
    let lo = (-(l as f64) / 2.0 + 1.0).floor() as i64;
    (0..l)
        .map(|q| {
            let k = 2.0 * PI * (lo + q as i64) as f64 / l as f64;
            let mut acc = C64::new(0.0, 0.0);
            for (i, row) in corr.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    acc += cis(k * (i as f64 - j as f64)) * c;
                }
            }
            acc.re / l as f64
        })
        .collect()
}

/// Sum of a site-resolved channel over `sites`, per sample.
pub fn integrated_population(series: &TimeSeries, channel: &str, sites: &[usize]) -> Option<Vec<f64>> {
    let ch = series.channel(channel)?;
    Some(ch.iter().map(|v| sites.iter().filter_map(|&i| v.get(i)).sum()).collect())
}

/// Probe evaluating one observable. The caller guarantees the observable was
/// validated against the model.
pub fn probe<'a>(spec: &ObservableSpec, model: &HamiltonianSpec, segments: &[SegmentSpec]) -> Probe<'a> {
    let name = spec.to_string();
    match spec {
        ObservableSpec::SiteDensity(occ) => {
            let w = occupancy_weights(model, *occ).unwrap_or_default();
            Probe::new(name, move |p: &SymmetricMps| weighted_density(p, &w))
        }
        ObservableSpec::IntegratedPopulation { region, occupancy } => {
            let w = occupancy_weights(model, *occupancy).unwrap_or_default();
            let sites = region_sites(region, segments);
            Probe::new(name, move |p: &SymmetricMps| {
                vec![sites.iter().map(|&i| p.expect_diagonal(i, &w)).sum()]
            })
        }
        ObservableSpec::MomentumDistribution(target) => {
            let species = match target {
                MomentumTarget::Species(s) => s.index(),
                _ => 0,
            };
            Probe::new(name, move |p: &SymmetricMps| momentum_distribution(p, species))
        }
        ObservableSpec::SchmidtEntropy(bond) => {
            let bond = *bond;
            Probe::new(name, move |p: &SymmetricMps| match bond {
                Some(b) => vec![p.entropy(b)],
                None => (1..p.len()).map(|b| p.entropy(b)).collect(),
            })
        }
        ObservableSpec::Transmission => Probe::new(name, |_: &SymmetricMps| Vec::new()),
    }
}
