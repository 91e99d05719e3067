//! Two distinguishable particles (a monomer `a` and a trimer `t`) on a ring or
//! an open chain, written in the product quasi-momentum basis
//! `|k_a> ⊗ |k_t>` and propagated exactly.
//!
//! Conventions: sites `j = 1..=L`, `<j|k> = e^{ikj}/sqrt(L)`, and
//! `k = 2 pi nu / L` with `nu = floor(-L/2 + 1) ..= floor(L/2)`. Basis index
//! of `(k_a, k_t)` is `ia * L + it`.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, cis, CMat, C64, ZERO};

/// Largest lattice accepted by the dense builder (`L^2 = 9216`).
pub const MAX_SITES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

impl Boundary {
    /// `gamma = 1` for a ring, `0` for an open chain.
    pub fn gamma(self) -> f64 {
        match self {
            Boundary::Periodic => 1.0,
            Boundary::Open => 0.0,
        }
    }

    pub fn from_gamma(gamma: u8) -> Result<Self> {
        match gamma {
            1 => Ok(Boundary::Periodic),
            0 => Ok(Boundary::Open),
            g => Err(Error::Domain(format!("gamma must be 0 or 1, got {g}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyParams {
    pub l: usize,
    pub j_a: f64,
    pub j_t: f64,
    pub u: f64,
    pub boundary: Boundary,
}

impl TwoBodyParams {
    /// Interaction used when reproducing the ring/open revival dynamics: strong
    /// enough that the two defects reflect off each other almost perfectly.
    pub fn default_interaction(j_a: f64, j_t: f64) -> f64 {
        40.0 * j_a.max(j_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumGrid {
    l: usize,
}

impl MomentumGrid {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Domain(format!("lattice length {l} < 2")));
        }
        Ok(Self { l })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn nu_min(&self) -> i64 {
        (-(self.l as f64) / 2.0 + 1.0).floor() as i64
    }

    pub fn value(&self, index: usize) -> f64 {
        2.0 * PI * (self.nu_min() + index as i64) as f64 / self.l as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.l).map(|i| self.value(i)).collect()
    }

    /// Grid index of `k` (any representative modulo `2 pi`).
    pub fn index_of(&self, k: f64) -> Result<usize> {
        let nu = k * self.l as f64 / (2.0 * PI);
        let rounded = nu.round();
        if (nu - rounded).abs() > 1e-8 {
            return Err(Error::OffGrid { k, l: self.l });
        }
        let idx = (rounded as i64 - self.nu_min()).rem_euclid(self.l as i64);
        Ok(idx as usize)
    }
}

/// Normalized two-particle amplitude in the momentum product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyState {
    l: usize,
    amps: Vec<C64>,
}

impl TwoBodyState {
    pub fn from_amplitudes(l: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != l * l {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes, got {}",
                l * l,
                amps.len()
            )));
        }
        Ok(Self { l, amps })
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    /// Amplitudes `psi(j_a, j_t)` on the real lattice, index `(j_a-1) * L + (j_t-1)`.
    pub fn real_space(&self) -> Vec<C64> {
        let l = self.l;
        let grid = MomentumGrid { l };
        let ks = grid.values();
        // phase[j][i] = <j|k_i> sqrt(L)
        let phase: Vec<Vec<C64>> = (1..=l)
            .map(|j| ks.iter().map(|k| cis(k * j as f64)).collect())
            .collect();
        // first transform the t index, then a
        let mut half = vec![ZERO; l * l];
        for ia in 0..l {
            for jt in 0..l {
                let mut s = ZERO;
                for it in 0..l {
                    s += phase[jt][it] * self.amps[ia * l + it];
                }
                half[ia * l + jt] = s;
            }
        }
        let scale = 1.0 / l as f64;
        let mut out = vec![ZERO; l * l];
        for ja in 0..l {
            for jt in 0..l {
                let mut s = ZERO;
                for ia in 0..l {
                    s += phase[ja][ia] * half[ia * l + jt];
                }
                out[ja * l + jt] = s * scale;
            }
        }
        out
    }

    /// Probability that both particles occupy the same lattice site.
    pub fn same_site_probability(&self) -> f64 {
        let r = self.real_space();
        (0..self.l).map(|j| r[j * self.l + j].norm_sqr()).sum()
    }

    pub fn expectation(&self, h: &CMat) -> f64 {
        linalg::inner(&self.amps, &linalg::mat_vec(h, &self.amps)).re
    }
}

/// Dense Hamiltonian in the momentum product basis.
pub fn build_two_body_hamiltonian(p: &TwoBodyParams) -> Result<CMat> {
    let l = p.l;
    if l > MAX_SITES {
        return Err(Error::Budget {
            what: "two-body lattice length",
            size: l,
            limit: MAX_SITES,
        });
    }
    let grid = MomentumGrid::new(l)?;
    let ks = grid.values();
    let n = l * l;
    let inv_l = 1.0 / l as f64;
    let open = 1.0 - p.boundary.gamma();
    let mut h = Mat::<C64>::zeros(n, n);

    // kinetic energy, diagonal on the ring
    for ia in 0..l {
        for it in 0..l {
            let e = -2.0 * p.j_a * ks[ia].cos() - 2.0 * p.j_t * ks[it].cos();
            h[(ia * l + it, ia * l + it)] += C64::new(e, 0.0);
        }
    }

    // removing the bond (L, 1): + J (a_L^† a_1 + a_1^† a_L), whose matrix
    // element between <k| and |k'> is (e^{ik'} + e^{-ik}) / L
    if open != 0.0 {
        for x in 0..l {
            for y in 0..l {
                let m = (cis(ks[y]) + cis(-ks[x])) * (open * inv_l);
                for other in 0..l {
                    h[(x * l + other, y * l + other)] += m * p.j_a;
                    h[(other * l + x, other * l + y)] += m * p.j_t;
                }
            }
        }
    }

    // contact interaction: U/L between pairs with equal total momentum
    if p.u != 0.0 {
        let v = C64::new(p.u * inv_l, 0.0);
        for ia in 0..l {
            for it in 0..l {
                let total = (ia + it) % l;
                for ja in 0..l {
                    let jt = (total + l - ja) % l;
                    h[(ia * l + it, ja * l + jt)] += v;
                }
            }
        }
    }
    Ok(h)
}

/// Plane-wave product state `|k_a, k_t>`.
pub fn momentum_eigenstate(k_a: f64, k_t: f64, l: usize) -> Result<TwoBodyState> {
    let grid = MomentumGrid::new(l)?;
    let ia = grid.index_of(k_a)?;
    let it = grid.index_of(k_t)?;
    let mut amps = vec![ZERO; l * l];
    amps[ia * l + it] = C64::new(1.0, 0.0);
    Ok(TwoBodyState { l, amps })
}

/// Exact propagator built from one eigendecomposition per connected block of
/// the Hamiltonian.
pub struct Propagator {
    dim: usize,
    blocks: Vec<(Vec<usize>, Vec<f64>, CMat)>,
}

impl Propagator {
    pub fn new(h: &CMat) -> Result<Self> {
        let defect = linalg::hermiticity_defect(h);
        if defect > 1e-10 {
            return Err(Error::Numerical(format!(
                "Hamiltonian is not Hermitian (defect {defect:e})"
            )));
        }
        let comps = linalg::block_components(h, 0.0);
        let mut blocks = Vec::with_capacity(comps.len());
        for idx in comps {
            let sub = linalg::submatrix(h, &idx, &idx);
            let (vals, vecs) = linalg::hermitian_eigen(&sub)?;
            blocks.push((idx, vals, vecs));
        }
        Ok(Self { dim: h.nrows(), blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `exp(-i H t) psi`
    pub fn apply(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for (idx, vals, vecs) in &self.blocks {
            let n = idx.len();
            if idx.iter().all(|&i| psi[i] == ZERO) {
                continue;
            }
            let mut coeff = vec![ZERO; n];
            for (k, c) in coeff.iter_mut().enumerate() {
                let mut s = ZERO;
                for (r, &i) in idx.iter().enumerate() {
                    s += vecs[(r, k)].conj() * psi[i];
                }
                *c = s * cis(-vals[k] * t);
            }
            for (r, &i) in idx.iter().enumerate() {
                let mut s = ZERO;
                for (k, c) in coeff.iter().enumerate() {
                    s += vecs[(r, k)] * c;
                }
                out[i] = s;
            }
        }
        out
    }
}

/// States `exp(-i H t) |psi>` for every requested time.
pub fn evolve(state: &TwoBodyState, h: &CMat, times: &[f64]) -> Result<Vec<TwoBodyState>> {
    if h.nrows() != state.amps.len() {
        return Err(Error::InvalidState("state and Hamiltonian dimensions differ".into()));
    }
    let prop = Propagator::new(h)?;
    let norm0 = state.norm();
    times
        .iter()
        .map(|&t| {
            let amps = prop.apply(&state.amps, t);
            let out = TwoBodyState { l: state.l, amps };
            let drift = (out.norm() - norm0).abs();
            if drift > 1e-9 {
                return Err(Error::Numerical(format!(
                    "norm drift {drift:e} at t = {t} exceeds 1e-9"
                )));
            }
            Ok(out)
        })
        .collect()
}

/// Occupation of each grid momentum, per species.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution {
    pub k: Vec<f64>,
    pub monomer: Vec<f64>,
    pub trimer: Vec<f64>,
}

impl MomentumDistribution {
    /// Sum of the two largest occupations, per species.
    pub fn top_two_weight(&self) -> (f64, f64) {
        fn top2(v: &[f64]) -> f64 {
            let mut s = v.to_vec();
            s.sort_by(|a, b| b.total_cmp(a));
            s.iter().take(2).sum()
        }
        (top2(&self.monomer), top2(&self.trimer))
    }

    /// Classical fidelity `sum_k sqrt(p_k q_k)` per species.
    pub fn fidelity(&self, other: &MomentumDistribution) -> (f64, f64) {
        fn bc(p: &[f64], q: &[f64]) -> f64 {
            p.iter().zip(q).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum()
        }
        (bc(&self.monomer, &other.monomer), bc(&self.trimer, &other.trimer))
    }
}

pub fn momentum_distribution(state: &TwoBodyState) -> MomentumDistribution {
    let l = state.l;
    let mut monomer = vec![0.0; l];
    let mut trimer = vec![0.0; l];
    for ia in 0..l {
        for it in 0..l {
            let p = state.amps[ia * l + it].norm_sqr();
            monomer[ia] += p;
            trimer[it] += p;
        }
    }
    MomentumDistribution {
        k: MomentumGrid { l }.values(),
        monomer,
        trimer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: usize, u: f64, boundary: Boundary) -> TwoBodyParams {
        TwoBodyParams { l, j_a: 2.0, j_t: 3.0, u, boundary }
    }

    #[test]
    fn grid_matches_definition() {
        let g = MomentumGrid::new(4).unwrap();
        let v = g.values();
        assert_eq!(v.len(), 4);
        assert!((v[0] + PI / 2.0).abs() < 1e-15);
        let g5 = MomentumGrid::new(5).unwrap();
        // nu = floor(-1.5) = -2 ..= 2
        assert!((g5.value(0) + 4.0 * PI / 5.0).abs() < 1e-14);
        assert!((g5.value(4) - 4.0 * PI / 5.0).abs() < 1e-14);
        assert_eq!(g5.index_of(2.0 * PI / 5.0).unwrap(), 3);
        assert!(matches!(g5.index_of(0.3), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn free_ring_is_diagonal() {
        let h = build_two_body_hamiltonian(&params(6, 0.0, Boundary::Periodic)).unwrap();
        let ks = MomentumGrid::new(6).unwrap().values();
        for r in 0..36 {
            for c in 0..36 {
                if r == c {
                    let e = -4.0 * ks[r / 6].cos() - 6.0 * ks[r % 6].cos();
                    assert!((h[(r, c)].re - e).abs() < 1e-12);
                } else {
                    assert_eq!(h[(r, c)], ZERO);
                }
            }
        }
    }

    #[test]
    fn ring_interaction_conserves_momentum() {
        let l = 5;
        let h = build_two_body_hamiltonian(&params(l, 7.0, Boundary::Periodic)).unwrap();
        for r in 0..l * l {
            for c in 0..l * l {
                if r != c && h[(r, c)].norm() > 0.0 {
                    assert_eq!((r / l + r % l) % l, (c / l + c % l) % l);
                }
            }
        }
        assert!(linalg::hermiticity_defect(&h) < 1e-12);
    }

    #[test]
    fn oversized_lattice_rejected() {
        let p = params(MAX_SITES + 1, 1.0, Boundary::Open);
        assert!(matches!(build_two_body_hamiltonian(&p), Err(Error::Budget { .. })));
    }

    #[test]
    fn eigenstate_normalization_and_contact_probability() {
        let l = 8;
        let s = momentum_eigenstate(PI / 2.0, -PI / 4.0, l).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
        assert!((s.same_site_probability() - 1.0 / l as f64).abs() < 1e-12);
        let d = momentum_distribution(&s);
        let g = MomentumGrid::new(l).unwrap();
        assert_eq!(d.monomer[g.index_of(PI / 2.0).unwrap()], 1.0);
        assert_eq!(d.trimer[g.index_of(-PI / 4.0).unwrap()], 1.0);
        assert!(momentum_eigenstate(0.1, 0.0, l).is_err());
    }

    #[test]
    fn evolution_at_zero_time_is_identity() {
        let l = 6;
        let h = build_two_body_hamiltonian(&params(l, 4.0, Boundary::Open)).unwrap();
        let s = momentum_eigenstate(PI / 3.0, 0.0, l).unwrap();
        let out = evolve(&s, &h, &[0.0]).unwrap();
        for (a, b) in out[0].amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn free_ring_occupations_are_static() {
        let l = 8;
        let h = build_two_body_hamiltonian(&params(l, 0.0, Boundary::Periodic)).unwrap();
        let s = momentum_eigenstate(PI / 2.0, -PI / 4.0, l).unwrap();
        let d0 = momentum_distribution(&s);
        for st in evolve(&s, &h, &[0.7, 3.1, 10.0]).unwrap() {
            let d = momentum_distribution(&st);
            for (a, b) in d.monomer.iter().zip(&d0.monomer) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = build_two_body_hamiltonian(&params(4, 1.0, Boundary::Open)).unwrap();
        let s = momentum_eigenstate(0.0, 0.0, 5).unwrap();
        assert!(evolve(&s, &h, &[1.0]).is_err());
    }
}
