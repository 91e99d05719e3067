//! Hamiltonian catalog: bond generators for TEBD and Fock-space matrices for
//! exact checks.

mod basis;

pub use basis::{FockBasis, SparseOperator, MAX_BASIS_DIM};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::mps::{
    encode_single_species, Charge, DefectSign, LocalSpace, SegmentSpec, SiteEncoding, SpaceKind, Species,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoseHubbardParams {
    pub j: f64,
    pub u: f64,
    pub n_max: usize,
}

/// Couplings of the hard-core dimer model `-J~ sum (c^dag c + h.c.) + B~ sum n n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimerModelParams {
    pub j_tilde: f64,
    pub b_tilde: f64,
    pub delta: f64,
}

pub fn dimer_couplings(j: f64, u: f64) -> Result<DimerModelParams> {
    if u == 0.0 || !u.is_finite() || !j.is_finite() {
        return Err(Error::Domain(format!("dimer couplings need finite nonzero U, got {u}")));
    }
    let j_tilde = -2.0 * j * j / u;
    let b_tilde = -16.0 * j * j / u;
    Ok(DimerModelParams { j_tilde, b_tilde, delta: 4.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSpeciesParams {
    pub j_a: f64,
    pub j_b: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub u_ab: f64,
    pub cap_a: usize,
    pub cap_b: usize,
}

/// Pair-model couplings of the two-species mixture; `u_a` or `u_b` may be
/// infinite (fermionic limit).
pub fn two_species_couplings(p: &TwoSpeciesParams) -> Result<DimerModelParams> {
    if p.u_a == 0.0 || p.u_b == 0.0 || p.u_ab == 0.0 {
        return Err(Error::Domain("two-species couplings need nonzero interactions".into()));
    }
    if p.j_a == 0.0 || p.j_b == 0.0 {
        return Err(Error::Domain("two-species couplings need nonzero hopping".into()));
    }
    let j_tilde = -2.0 * p.j_a * p.j_b / p.u_ab;
    let b_tilde = -2.0 * (2.0 * p.j_a * p.j_a / p.u_a + 2.0 * p.j_b * p.j_b / p.u_b
        + (p.j_a * p.j_a + p.j_b * p.j_b) / p.u_ab);
    let delta = p.j_a / p.j_b * (0.5 + p.u_ab / p.u_a) + p.j_b / p.j_a * (0.5 + p.u_ab / p.u_b);
    Ok(DimerModelParams { j_tilde, b_tilde, delta })
}

/// Site of the reference configuration used by the effective defect model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceSite {
    Vacuum,
    Dimer,
    /// One of the defects parked at the left end.
    DefectSlot,
}

/// Effective model for monomers and trimers moving through a static
/// arrangement of dimers and vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveDefectConfig {
    pub j: f64,
    reference: Vec<ReferenceSite>,
    defects: usize,
}

impl EffectiveDefectConfig {
    /// Reference configuration: all defects first, followed by the background
    /// of every segment with its defect site removed.
    pub fn from_segments(j: f64, segments: &[SegmentSpec]) -> Result<Self> {
        let mut background = Vec::new();
        let mut defects = 0;
        for seg in segments {
            seg.validate()?;
            let site = match seg.n {
                0 => ReferenceSite::Vacuum,
                2 => ReferenceSite::Dimer,
                n => {
                    return Err(Error::InvalidState(format!(
                        "effective defect model needs fillings 0 or 2, got {n}"
                    )))
                }
            };
            let mut l = seg.l;
            if seg.defect.is_some() {
                defects += 1;
                l -= 1;
            }
            background.extend(std::iter::repeat(site).take(l));
        }
        let mut reference = vec![ReferenceSite::DefectSlot; defects];
        reference.extend(background);
        Ok(Self { j, reference, defects })
    }

    pub fn from_reference(j: f64, reference: Vec<ReferenceSite>) -> Self {
        let defects = reference.iter().filter(|s| **s == ReferenceSite::DefectSlot).count();
        Self { j, reference, defects }
    }

    pub fn sites(&self) -> usize {
        self.reference.len()
    }

    pub fn defects(&self) -> usize {
        self.defects
    }

    pub fn reference(&self) -> &[ReferenceSite] {
        &self.reference
    }

    /// `Theta(i)` for `i = 1..L-1`: 2 when reference site `i + 1` holds a
    /// dimer, 1 when it is empty, 0 for a parked defect.
    pub fn theta(&self, i: usize) -> Result<u8> {
        let max = self.reference.len().saturating_sub(1);
        if i < 1 || i > max {
            return Err(Error::ThetaIndex { index: i, max });
        }
        Ok(match self.reference[i] {
            ReferenceSite::Vacuum => 1,
            ReferenceSite::Dimer => 2,
            ReferenceSite::DefectSlot => 0,
        })
    }

    /// `(J_a, J_t)` for a given `Theta` value.
    pub fn rates(&self, theta: u8) -> (f64, f64) {
        match theta {
            1 => (self.j, 0.0),
            2 => (2.0 * self.j, 3.0 * self.j),
            _ => (0.0, 0.0),
        }
    }
}

/// Register basis of the effective model.
pub const EMPTY: usize = 0;
pub const MONOMER: usize = 1;
pub const TRIMER: usize = 2;

/// Two-site generator on the defect register for bond `j` (1-based, sites
/// `j` and `j+1`) when `n_r` defects sit on sites `j+2..L`.
pub fn effective_defect_gate_generator(cfg: &EffectiveDefectConfig, j: usize, n_r: usize) -> Result<CMat> {
    let theta = cfg.theta(j + n_r)?;
    let (ja, jt) = cfg.rates(theta);
    let mut h = linalg::zeros(9, 9);
    let idx = |a: usize, b: usize| a * 3 + b;
    for (sp, rate) in [(MONOMER, ja), (TRIMER, jt)] {
        if rate != 0.0 {
            h[(idx(sp, EMPTY), idx(EMPTY, sp))] = C64::new(-rate, 0.0);
            h[(idx(EMPTY, sp), idx(sp, EMPTY))] = C64::new(-rate, 0.0);
        }
    }
    Ok(h)
}

fn boson_ops(n_max: usize) -> (CMat, CMat) {
    let d = n_max + 1;
    let mut a = linalg::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let n = linalg::from_real(d, d, |i, j| if i == j { i as f64 } else { 0.0 });
    (a, n)
}

/// Site-share of the on-site energy carried by bond `b` (0-based) of an
/// `l`-site chain: edge sites go fully to their only bond.
fn shares(b: usize, l: usize) -> (f64, f64) {
    let left = if b == 0 { 1.0 } else { 0.5 };
    let right = if b + 2 == l { 1.0 } else { 0.5 };
    (left, right)
}

fn hopping_term(a: &CMat, rate: f64) -> CMat {
    let ad = linalg::adjoint(a);
    let t = linalg::kron(&ad, a) + linalg::kron(a, &ad);
    linalg::scaled(&t, C64::new(-rate, 0.0))
}

fn onsite_term(onsite: &CMat, b: usize, l: usize) -> CMat {
    let d = onsite.nrows();
    let id = linalg::identity(d);
    let (sl, sr) = shares(b, l);
    linalg::scaled(&linalg::kron(onsite, &id), C64::new(sl, 0.0))
        + linalg::scaled(&linalg::kron(&id, onsite), C64::new(sr, 0.0))
}

/// Bond generators of the Bose-Hubbard chain: hopping plus the on-site
/// interaction split over the adjacent bonds.
pub fn bose_hubbard_gate_generator(p: &BoseHubbardParams, l: usize) -> Result<Vec<CMat>> {
    if p.n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if l < 2 {
        return Err(Error::Domain("need at least two sites".into()));
    }
    let (a, n) = boson_ops(p.n_max);
    let d = p.n_max + 1;
    let id = linalg::identity(d);
    let onsite = linalg::scaled(&(&n * (&n - &id)), C64::new(p.u / 2.0, 0.0));
    Ok((0..l - 1).map(|b| hopping_term(&a, p.j) + onsite_term(&onsite, b, l)).collect())
}

fn two_species_ops(cap_a: usize, cap_b: usize) -> (CMat, CMat, CMat, CMat) {
    let (a, na) = boson_ops(cap_a);
    let (b, nb) = boson_ops(cap_b);
    let ia = linalg::identity(cap_a + 1);
    let ib = linalg::identity(cap_b + 1);
    (linalg::kron(&a, &ib), linalg::kron(&ia, &b), linalg::kron(&na, &ib), linalg::kron(&ia, &nb))
}

pub fn two_species_gate_generator(p: &TwoSpeciesParams, l: usize) -> Result<Vec<CMat>> {
    if l < 2 {
        return Err(Error::Domain("need at least two sites".into()));
    }
    let (a, b, na, nb) = two_species_ops(p.cap_a, p.cap_b);
    let id = linalg::identity(na.nrows());
    let half = |x: f64| C64::new(x / 2.0, 0.0);
    let onsite = linalg::scaled(&(&na * (&na - &id)), half(p.u_a))
        + linalg::scaled(&(&nb * (&nb - &id)), half(p.u_b))
        + linalg::scaled(&(&na * &nb), C64::new(p.u_ab, 0.0));
    Ok((0..l - 1)
        .map(|k| hopping_term(&a, p.j_a) + hopping_term(&b, p.j_b) + onsite_term(&onsite, k, l))
        .collect())
}

pub fn dimer_gate_generator(c: &DimerModelParams, l: usize) -> Result<Vec<CMat>> {
    if l < 2 {
        return Err(Error::Domain("need at least two sites".into()));
    }
    let cm = linalg::from_real(2, 2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
    let n = linalg::from_real(2, 2, |i, j| if i == 1 && j == 1 { 1.0 } else { 0.0 });
    let g = hopping_term(&cm, c.j_tilde) + linalg::scaled(&linalg::kron(&n, &n), C64::new(c.b_tilde, 0.0));
    Ok(vec![g; l - 1])
}

/// Generator attached to one bond.
#[derive(Clone, Debug, PartialEq)]
pub enum BondGenerator {
    Fixed(CMat),
    /// Indexed by the number of defects to the right of the bond's right
    /// site; `total` is the conserved defect count.
    PerRightCount { total: i32, by_count: Vec<CMat> },
}

impl BondGenerator {
    pub fn matrices(&self) -> &[CMat] {
        match self {
            BondGenerator::Fixed(m) => std::slice::from_ref(m),
            BondGenerator::PerRightCount { by_count, .. } => by_count,
        }
    }

    /// Index into `matrices()` for blocks whose charge right of the bond's
    /// second site is `q_r`.
    pub fn select(&self, q_r: Charge) -> usize {
        match self {
            BondGenerator::Fixed(_) => 0,
            BondGenerator::PerRightCount { total, by_count } => {
                let n_r = (total - q_r.total()).max(0) as usize;
                n_r.min(by_count.len() - 1)
            }
        }
    }
}

/// The closed set of models the toolkit can evolve.
#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianSpec {
    BoseHubbard(BoseHubbardParams),
    EffectiveDimer { j: f64, u: f64 },
    EffectiveDefect(EffectiveDefectConfig),
    TwoSpecies(TwoSpeciesParams),
}

impl HamiltonianSpec {
    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianSpec::BoseHubbard(_) => "bose_hubbard",
            HamiltonianSpec::EffectiveDimer { .. } => "effective_dimer",
            HamiltonianSpec::EffectiveDefect(_) => "effective_defect",
            HamiltonianSpec::TwoSpecies(_) => "two_species",
        }
    }

    pub fn local_space(&self) -> LocalSpace {
        match self {
            HamiltonianSpec::BoseHubbard(p) => LocalSpace::bosons(p.n_max),
            HamiltonianSpec::EffectiveDimer { .. } => LocalSpace::new(SpaceKind::HardCore),
            HamiltonianSpec::EffectiveDefect(_) => LocalSpace::new(SpaceKind::DefectRegister),
            HamiltonianSpec::TwoSpecies(p) => {
                LocalSpace::new(SpaceKind::TwoSpecies { cap_a: p.cap_a, cap_b: p.cap_b })
            }
        }
    }

    /// Default Trotter step in units of `1/J`.
    pub fn default_dt(&self) -> f64 {
        match self {
            HamiltonianSpec::EffectiveDefect(_) => 0.1,
            _ => 0.02,
        }
    }

    /// Encode a segment in this model's local basis.
    pub fn encode(&self, seg: &SegmentSpec) -> Result<SiteEncoding> {
        seg.validate()?;
        let space = self.local_space();
        match self {
            HamiltonianSpec::BoseHubbard(_) => encode_single_species(&space, seg),
            HamiltonianSpec::EffectiveDimer { .. } => {
                if seg.defect.is_some() {
                    return Err(Error::InvalidState("the dimer model has no defects".into()));
                }
                let s = match seg.n {
                    0 => 0,
                    2 => 1,
                    n => return Err(Error::InvalidState(format!("dimer model needs fillings 0 or 2, got {n}"))),
                };
                Ok(SiteEncoding::product(vec![s; seg.l]))
            }
            HamiltonianSpec::EffectiveDefect(_) => {
                let mut enc = SiteEncoding::product(vec![EMPTY; seg.l]);
                if let (Some(d), Some(amps)) = (seg.defect, seg.defect_amplitudes()) {
                    let alt = match (seg.n, d.sign) {
                        (2, DefectSign::Hole) | (0, DefectSign::Particle) => MONOMER,
                        (2, DefectSign::Particle) => TRIMER,
                        (n, _) => {
                            return Err(Error::InvalidState(format!(
                                "no effective defect for {:?} on filling {n}",
                                d.sign
                            )))
                        }
                    };
                    enc.excitation = Some((vec![alt; seg.l], amps));
                }
                if seg.n != 0 && seg.n != 2 {
                    return Err(Error::InvalidState(format!(
                        "effective defect model needs fillings 0 or 2, got {}",
                        seg.n
                    )));
                }
                Ok(enc)
            }
            HamiltonianSpec::TwoSpecies(_) => {
                let sp = seg.species.index();
                let mut base = match seg.n {
                    n if n % 2 == 0 => [n as i32 / 2, n as i32 / 2],
                    n => {
                        let mut c = [n as i32 / 2; 2];
                        c[sp] += 1;
                        c
                    }
                };
                let lookup = |c: [i32; 2]| {
                    space.index_of(Charge(c)).ok_or(Error::Cutoff {
                        occupation: c[0].max(c[1]).max(0) as usize,
                        dim: space.dim(),
                    })
                };
                let b = lookup(base)?;
                let mut enc = SiteEncoding::product(vec![b; seg.l]);
                if let Some(amps) = seg.defect_amplitudes() {
                    base[sp] += seg.defect_delta();
                    if base[sp] < 0 {
                        return Err(Error::InvalidState(format!(
                            "no particle of species {sp} to remove"
                        )));
                    }
                    enc.excitation = Some((vec![lookup(base)?; seg.l], amps));
                }
                Ok(enc)
            }
        }
    }

    /// Bond generators for an `l`-site chain.
    pub fn bond_generators(&self, l: usize) -> Result<Vec<BondGenerator>> {
        let fixed = |v: Vec<CMat>| v.into_iter().map(BondGenerator::Fixed).collect();
        match self {
            HamiltonianSpec::BoseHubbard(p) => Ok(fixed(bose_hubbard_gate_generator(p, l)?)),
            HamiltonianSpec::EffectiveDimer { j, u } => Ok(fixed(dimer_gate_generator(&dimer_couplings(*j, *u)?, l)?)),
            HamiltonianSpec::TwoSpecies(p) => Ok(fixed(two_species_gate_generator(p, l)?)),
            HamiltonianSpec::EffectiveDefect(cfg) => {
                if cfg.sites() != l {
                    return Err(Error::InvalidState(format!(
                        "reference configuration has {} sites, chain has {l}",
                        cfg.sites()
                    )));
                }
                if l < 2 {
                    return Err(Error::Domain("need at least two sites".into()));
                }
                let n = cfg.defects();
                (1..l)
                    .map(|j| {
                        // at most L - j - 1 defects fit to the right
                        let reachable = n.min(l - j - 1);
                        let mut by_count = Vec::with_capacity(n + 1);
                        for n_r in 0..=n {
                            by_count.push(if n_r <= reachable {
                                effective_defect_gate_generator(cfg, j, n_r)?
                            } else {
                                linalg::zeros(9, 9)
                            });
                        }
                        Ok(BondGenerator::PerRightCount { total: n as i32, by_count })
                    })
                    .collect()
            }
        }
    }

    /// Sparse Hamiltonian on a fixed-charge Fock basis.
    pub fn hamiltonian(&self, basis: &FockBasis) -> Result<SparseOperator> {
        let gens = self.bond_generators(basis.sites())?;
        let mut total = SparseOperator::new(basis.dim());
        for (b, g) in gens.iter().enumerate() {
            total.extend(&basis.bond_operator(b, g)?);
        }
        Ok(total)
    }

    /// Dense Hamiltonian for `l` sites restricted to total charge `sector`.
    pub fn dense_hamiltonian(&self, l: usize, sector: Charge) -> Result<(FockBasis, CMat)> {
        let basis = FockBasis::new(self.local_space(), l, Some(sector))?;
        let h = self.hamiltonian(&basis)?.to_dense()?;
        Ok((basis, h))
    }

    /// Which charge component counts particles of `species` for density
    /// observables; `None` when the model has no such species.
    pub fn species_component(&self, species: Species) -> Option<usize> {
        match (self, species) {
            (HamiltonianSpec::TwoSpecies(_), s) => Some(s.index()),
            (_, Species::A) => Some(0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{DefectKind, SegmentSpec};

    #[test]
    fn dimer_coefficients() {
        let c = dimer_couplings(1.0, 100.0).unwrap();
        assert!((c.j_tilde + 0.02).abs() < 1e-15);
        assert!((c.b_tilde + 0.16).abs() < 1e-15);
        assert_eq!(c.delta, 4.0);
        assert!((c.b_tilde / (2.0 * c.j_tilde) - 4.0).abs() < 1e-12);
    }

    fn ts(j_a: f64, j_b: f64, u_a: f64, u_b: f64, u_ab: f64) -> TwoSpeciesParams {
        TwoSpeciesParams { j_a, j_b, u_a, u_b, u_ab, cap_a: 2, cap_b: 2 }
    }

    #[test]
    fn two_species_delta() {
        let c = two_species_couplings(&ts(1.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((c.delta - 3.0).abs() < 1e-12);
        assert!((c.b_tilde / (2.0 * c.j_tilde) - c.delta).abs() < 1e-12);
        let inf = two_species_couplings(&ts(1.0, 1.0, f64::INFINITY, f64::INFINITY, 1.0)).unwrap();
        assert!((inf.delta - 1.0).abs() < 1e-15);
        let x = two_species_couplings(&ts(1.3, 0.7, 5.0, 9.0, 2.0)).unwrap();
        let y = two_species_couplings(&ts(0.7, 1.3, 9.0, 5.0, 2.0)).unwrap();
        assert!((x.delta - y.delta).abs() < 1e-12);
    }

    #[test]
    fn two_site_bose_hubbard_hopping() {
        let g = bose_hubbard_gate_generator(&BoseHubbardParams { j: 1.0, u: 3.0, n_max: 1 }, 2).unwrap();
        // basis |00>,|01>,|10>,|11>
        assert_eq!(g[0][(1, 2)], C64::new(-1.0, 0.0));
        assert_eq!(g[0][(2, 1)], C64::new(-1.0, 0.0));
        assert_eq!(g[0][(3, 3)], C64::new(0.0, 0.0));
    }

    #[test]
    fn theta_from_segments() {
        let segs = [
            SegmentSpec::new(0, 3),
            SegmentSpec::new(2, 3).with_defect(DefectKind::Localized { site: 2 }, DefectSign::Hole),
            SegmentSpec::new(0, 2),
        ];
        let cfg = EffectiveDefectConfig::from_segments(1.0, &segs).unwrap();
        use ReferenceSite::*;
        assert_eq!(cfg.reference(), &[DefectSlot, Vacuum, Vacuum, Vacuum, Dimer, Dimer, Vacuum, Vacuum]);
        assert_eq!(cfg.theta(3).unwrap(), 1);
        assert_eq!(cfg.theta(4).unwrap(), 2);
        assert_eq!(cfg.theta(1).unwrap(), 1);
        assert!(matches!(cfg.theta(8), Err(Error::ThetaIndex { .. })));
        assert!(matches!(cfg.theta(0), Err(Error::ThetaIndex { .. })));
    }

    #[test]
    fn effective_rates() {
        use ReferenceSite::*;
        let cfg = EffectiveDefectConfig::from_reference(1.0, vec![DefectSlot, Dimer, Dimer, Vacuum, Vacuum]);
        let inside = effective_defect_gate_generator(&cfg, 1, 0).unwrap();
        assert_eq!(inside[(MONOMER * 3, MONOMER)], C64::new(-2.0, 0.0));
        assert_eq!(inside[(TRIMER * 3, TRIMER)], C64::new(-3.0, 0.0));
        let outside = effective_defect_gate_generator(&cfg, 3, 0).unwrap();
        assert_eq!(outside[(MONOMER * 3, MONOMER)], C64::new(-1.0, 0.0));
        assert_eq!(outside[(TRIMER * 3, TRIMER)], C64::new(0.0, 0.0));
        // a monomer and a trimer on the same bond cannot pass each other
        assert_eq!(inside[(MONOMER * 3 + TRIMER, TRIMER * 3 + MONOMER)], C64::new(0.0, 0.0));
    }
}
