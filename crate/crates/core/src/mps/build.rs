//! Builders for segmented product states, single-defect superpositions and
//! the exact N-boson condensate MPS.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use faer::Mat;

use super::charge::{Charge, LocalSpace};
use super::state::{Bond, Sector, SiteTensor, SymmetricMps};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DefectSign {
    /// One particle removed (`-`).
    Hole,
    /// One particle added (`+`).
    Particle,
}

impl DefectSign {
    pub fn delta(self) -> i32 {
        match self {
            DefectSign::Hole => -1,
            DefectSign::Particle => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DefectKind {
    /// Defect on site `site` of the segment (1-based).
    Localized { site: usize },
    /// Plane wave with `k = 2 pi mode / l`.
    Momentum { mode: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Defect {
    pub kind: DefectKind,
    pub sign: DefectSign,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Species {
    #[default]
    A,
    B,
}

impl Species {
    pub fn index(self) -> usize {
        match self {
            Species::A => 0,
            Species::B => 1,
        }
    }
}

/// One Mott segment: `n` particles per site on `l` sites, optionally with a
/// single defect. `species` selects which particle species the defect
/// belongs to in two-species models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SegmentSpec {
    pub n: usize,
    pub l: usize,
    pub defect: Option<Defect>,
    pub species: Species,
}

impl SegmentSpec {
    pub fn new(n: usize, l: usize) -> Self {
        Self { n, l, defect: None, species: Species::A }
    }

    pub fn with_defect(mut self, kind: DefectKind, sign: DefectSign) -> Self {
        self.defect = Some(Defect { kind, sign });
        self
    }

    pub fn with_species(mut self, species: Species) -> Self {
        self.species = species;
        self
    }

    /// Momentum mode for `k`, rejecting momenta off the `2 pi / l` grid.
    pub fn mode_for(k: f64, l: usize) -> Result<i64> {
        let x = k * l as f64 / (2.0 * PI);
        let m = x.round();
        if l == 0 || (x - m).abs() > 1e-9 {
            return Err(Error::OffGrid { k, l });
        }
        Ok(m as i64)
    }

    pub fn momentum(&self) -> Option<f64> {
        match self.defect {
            Some(Defect { kind: DefectKind::Momentum { mode }, .. }) => {
                Some(2.0 * PI * mode as f64 / self.l as f64)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidState("segment length must be positive".into()));
        }
        if let Some(d) = self.defect {
            if let DefectKind::Localized { site } = d.kind {
                if site < 1 || site > self.l {
                    return Err(Error::InvalidState(format!(
                        "defect site {site} outside segment of length {}",
                        self.l
                    )));
                }
            }
            if d.sign == DefectSign::Hole && self.n == 0 {
                return Err(Error::InvalidState("hole defect requires n >= 1".into()));
            }
        }
        Ok(())
    }

    /// Single-particle amplitudes of the defect over the segment sites.
    pub fn defect_amplitudes(&self) -> Option<Vec<C64>> {
        let d = self.defect?;
        let l = self.l;
        Some(match d.kind {
            DefectKind::Localized { site } => {
                (1..=l).map(|j| if j == site { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect()
            }
            DefectKind::Momentum { mode } => {
                let k = 2.0 * PI * mode as f64 / l as f64;
                let a = 1.0 / (l as f64).sqrt();
                (1..=l).map(|j| cis(k * j as f64) * a).collect()
            }
        })
    }

    /// Particle-number change introduced by the defect.
    pub fn defect_delta(&self) -> i32 {
        self.defect.map_or(0, |d| d.sign.delta())
    }
}

/// `k = 2 pi mode / l` as a reduced multiple of pi, e.g. `-pi/2` or `3*pi/4`.
pub fn fmt_momentum(mode: i64, l: usize) -> String {
    let (mut num, mut den) = (2 * mode, l as i64);
    let (mut a, mut b) = (num.abs(), den);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    if a > 1 {
        num /= a;
        den /= a;
    }
    let head = match num {
        0 => return "0".to_string(),
        1 => "pi".to_string(),
        -1 => "-pi".to_string(),
        n => format!("{n}*pi"),
    };
    if den == 1 {
        head
    } else {
        format!("{head}/{den}")
    }
}

impl fmt::Display for SegmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seg(n = {}, l = {}", self.n, self.l)?;
        if let Some(d) = self.defect {
            let sign = match d.sign {
                DefectSign::Hole => "hole",
                DefectSign::Particle => "particle",
            };
            match d.kind {
                DefectKind::Localized { site } => write!(f, ", defect = localized({site}, {sign})")?,
                DefectKind::Momentum { mode } => {
                    write!(f, ", defect = momentum({}, {sign})", fmt_momentum(mode, self.l))?
                }
            }
        }
        if self.species == Species::B {
            write!(f, ", species = b")?;
        }
        write!(f, ")")
    }
}

/// Site-resolved description of a segment in a concrete local basis: a
/// product of `base` states, optionally replaced on one site by `alt` in a
/// coherent superposition with the given amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteEncoding {
    pub base: Vec<usize>,
    pub excitation: Option<(Vec<usize>, Vec<C64>)>,
}

impl SiteEncoding {
    pub fn product(base: Vec<usize>) -> Self {
        Self { base, excitation: None }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }
}

fn one(x: C64) -> CMat {
    Mat::from_fn(1, 1, |_, _| x)
}

/// MPS of the concatenation of encoded segments.
pub fn build_encoded(space: &LocalSpace, segments: &[SiteEncoding]) -> Result<SymmetricMps> {
    let mut sites = Vec::new();
    let mut q = Charge::ZERO;
    let cq = |s: usize| space.charge(s);
    for seg in segments {
        let l = seg.len();
        for &s in &seg.base {
            if s >= space.dim() {
                return Err(Error::Cutoff { occupation: s, dim: space.dim() });
            }
        }
        match &seg.excitation {
            None => {
                for &s in &seg.base {
                    let mut t = SiteTensor::default();
                    t.blocks.insert((q, s), one(C64::new(1.0, 0.0)));
                    q = q + cq(s);
                    sites.push(t);
                }
            }
            Some((alt, amps)) => {
                if alt.len() != l || amps.len() != l {
                    return Err(Error::InvalidState("excitation length differs from segment".into()));
                }
                // pending: excitation not yet placed; done: placed to the left
                let mut pending = q;
                let mut done: Option<Charge> = None;
                for j in 0..l {
                    let (b, a) = (seg.base[j], alt[j]);
                    if a >= space.dim() {
                        return Err(Error::Cutoff { occupation: a, dim: space.dim() });
                    }
                    let mut t = SiteTensor::default();
                    let last = j + 1 == l;
                    let next_pending = pending + cq(b);
                    let next_done = pending + cq(a);
                    if !last {
                        t.blocks.insert((pending, b), one(C64::new(1.0, 0.0)));
                    }
                    t.blocks.insert((pending, a), one(amps[j]));
                    if let Some(dq) = done {
                        if dq + cq(b) != next_done {
                            return Err(Error::InvalidState("inconsistent excitation charges".into()));
                        }
                        t.blocks.insert((dq, b), one(C64::new(1.0, 0.0)));
                    }
                    pending = next_pending;
                    done = Some(next_done);
                    sites.push(t);
                }
                q = done.expect("segment has at least one site");
            }
        }
    }
    SymmetricMps::from_raw(space.clone(), sites, Charge::ZERO)
}

/// `|.>_n^l`: every site holds `n` particles.
pub fn build_product_segment(n: usize, l: usize, d: usize) -> Result<SymmetricMps> {
    let space = LocalSpace::with_dim(d)?;
    let s = space.occupation_index(n)?;
    if l == 0 {
        return Err(Error::InvalidState("segment length must be positive".into()));
    }
    build_encoded(&space, &[SiteEncoding::product(vec![s; l])])
}

/// Single-species encoding of a segment spec.
pub fn encode_single_species(space: &LocalSpace, spec: &SegmentSpec) -> Result<SiteEncoding> {
    spec.validate()?;
    let base = space.occupation_index(spec.n)?;
    let mut enc = SiteEncoding::product(vec![base; spec.l]);
    if let Some(amps) = spec.defect_amplitudes() {
        let alt_n = spec.n as i64 + spec.defect_delta() as i64;
        let alt = space.occupation_index(alt_n as usize)?;
        enc.excitation = Some((vec![alt; spec.l], amps));
    }
    Ok(enc)
}

/// A Mott segment with (optionally) one localized or plane-wave defect.
pub fn build_defect_segment(spec: &SegmentSpec, d: usize) -> Result<SymmetricMps> {
    let space = LocalSpace::with_dim(d)?;
    let enc = encode_single_species(&space, spec)?;
    build_encoded(&space, &[enc])
}

/// Join canonical states; the charges of every later segment are shifted by
/// the total charge of those before it.
pub fn concat(segments: &[SymmetricMps]) -> Result<SymmetricMps> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidState("nothing to concatenate".into()))?;
    let space = first.space.clone();
    let mut sites = Vec::new();
    let mut bonds = vec![first.bonds[0].clone()];
    let mut offset = first.bonds[0].sectors[0].charge;
    for seg in segments {
        if seg.space != space {
            return Err(Error::SpaceMismatch);
        }
        let base = seg.bonds[0].sectors[0].charge;
        let shift = offset - base;
        for site in &seg.sites {
            let blocks = site
                .blocks
                .iter()
                .map(|(&(q, s), m)| ((q + shift, s), m.clone()))
                .collect();
            sites.push(SiteTensor { blocks });
        }
        for b in &seg.bonds[1..] {
            bonds.push(Bond {
                sectors: b
                    .sectors
                    .iter()
                    .map(|s| Sector { charge: s.charge + shift, lambda: s.lambda.clone() })
                    .collect(),
            });
        }
        offset = offset + seg.total_charge();
    }
    Ok(SymmetricMps { space, sites, bonds })
}

/// Normalized single-particle wave function over a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleParticleWavefunction {
    amps: Vec<C64>,
}

impl SingleParticleWavefunction {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if amps.is_empty() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("wave function norm^2 = {n}, expected 1")));
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero wave function".into()));
        }
        Self::new(amps.into_iter().map(|a| a / n).collect())
    }

    pub fn plane_wave(k: f64, l: usize) -> Result<Self> {
        Self::normalized((1..=l).map(|j| cis(k * j as f64)).collect())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// `q_m` for `m = 0..=L`: probability of the particle on sites `1..=m`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.amps.len() + 1);
        let mut acc = 0.0;
        q.push(0.0);
        for a in &self.amps {
            acc += a.norm_sqr();
            q.push(acc.min(1.0));
        }
        *q.last_mut().unwrap() = 1.0;
        q
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

/// Binomial probability `B_q(l | N)`.
pub fn binomial_weight(q: f64, l: usize, n: usize) -> f64 {
    if l > n {
        return 0.0;
    }
    binomial(n, l) * q.powi(l as i32) * (1.0 - q).powi((n - l) as i32)
}

/// `|Gamma_{l r}|^2` between bonds with cumulative weights `q` (left) and
/// `q_next` (right) for `n` particles.
pub fn condensate_gamma_sq(l: usize, r: usize, n: usize, q: f64, q_next: f64) -> f64 {
    if r < l || r > n {
        return 0.0;
    }
    let log_comb = ln_factorial(r) + ln_factorial(n - l) - ln_factorial(r - l) - ln_factorial(n);
    log_comb.exp()
        * q_next.powi(-(r as i32))
        * (q_next - q).max(0.0).powi((r - l) as i32)
        * (1.0 - q).powi(l as i32 - n as i32)
}

/// Exact MPS of `(sum_j phi_j a_j^dag)^N / sqrt(N!) |vac>`; bond dimension
/// `N + 1`, already in canonical form.
pub fn build_condensate(n: usize, phi: &SingleParticleWavefunction, d: usize) -> Result<SymmetricMps> {
    if d < n + 1 {
        return Err(Error::Cutoff { occupation: n, dim: d });
    }
    let space = LocalSpace::with_dim(d)?;
    let q = phi.cumulative();
    let len = phi.len();
    let live = |qm: f64, l: usize| -> bool {
        if qm <= 0.0 {
            l == 0
        } else if qm >= 1.0 {
            l == n
        } else {
            true
        }
    };
    let bonds: Vec<Bond> = q
        .iter()
        .map(|&qm| Bond {
            sectors: (0..=n)
                .filter(|&l| live(qm, l))
                .map(|l| Sector {
                    charge: Charge::single(l as i32),
                    lambda: vec![binomial_weight(qm, l, n).sqrt()],
                })
                .collect(),
        })
        .collect();

    let mut sites = Vec::with_capacity(len);
    for m in 0..len {
        let (qm, qn) = (q[m], q[m + 1]);
        let dq = (qn - qm).max(0.0);
        let phase = phi.amplitudes()[m].arg();
        let mut blocks = BTreeMap::new();
        for l in (0..=n).filter(|&l| live(qm, l)) {
            for r in (l..=n).filter(|&r| live(qn, r)) {
                // |Gamma|^2 lambda_r^2 in a form that stays finite for q -> 0
                let mag_sq = binomial(n - l, r - l) * dq.powi((r - l) as i32) * (1.0 - qn).powi((n - r) as i32)
                    / (1.0 - qm).powi((n - l) as i32);
                if mag_sq == 0.0 {
                    continue;
                }
                let b = cis(phase * (r - l) as f64) * mag_sq.sqrt();
                blocks.insert((Charge::single(l as i32), r - l), one(b));
            }
        }
        sites.push(SiteTensor { blocks });
    }
    Ok(SymmetricMps { space, sites, bonds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    #[test]
    fn product_segment_labels() {
        let psi = build_product_segment(2, 8, 4).unwrap();
        for b in 0..=8 {
            let s = psi.bond(b).sectors();
            assert_eq!(s.len(), 1);
            assert_eq!(s[0].charge, Charge::single(2 * b as i32));
        }
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!(matches!(build_product_segment(4, 2, 4), Err(Error::Cutoff { .. })));
    }

    #[test]
    fn localized_hole_density() {
        let spec = SegmentSpec::new(2, 8).with_defect(DefectKind::Localized { site: 4 }, DefectSign::Hole);
        let psi = build_defect_segment(&spec, 4).unwrap();
        let n = psi.densities(0);
        for (j, x) in n.iter().enumerate() {
            let want = if j == 3 { 1.0 } else { 2.0 };
            assert!((x - want).abs() < 1e-12);
        }
        assert_eq!(psi.max_bond_dim(), 1);
    }

    #[test]
    fn momentum_hole_density_and_bond_dim() {
        let mode = SegmentSpec::mode_for(PI / 2.0, 8).unwrap();
        let spec = SegmentSpec::new(2, 8).with_defect(DefectKind::Momentum { mode }, DefectSign::Hole);
        let psi = build_defect_segment(&spec, 4).unwrap();
        for j in 0..8 {
            assert!((psi.occupancy_probability(j, 1).unwrap() - 0.125).abs() < 1e-12);
        }
        assert_eq!(psi.bond(4).dim(), 2);
        assert!(psi.canonical_residual() < 1e-10);
        assert!(SegmentSpec::mode_for(0.7, 8).is_err());
    }

    #[test]
    fn plane_wave_overlaps_position_state() {
        let pw = SegmentSpec::new(0, 8).with_defect(DefectKind::Momentum { mode: 0 }, DefectSign::Particle);
        let loc = SegmentSpec::new(0, 8).with_defect(DefectKind::Localized { site: 3 }, DefectSign::Particle);
        let a = build_defect_segment(&pw, 2).unwrap();
        let b = build_defect_segment(&loc, 2).unwrap();
        let o = a.overlap(&b).unwrap();
        assert!((o.value.norm() - 1.0 / 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn concat_of_vacua_and_cluster() {
        let v = build_product_segment(0, 32, 4).unwrap();
        let c = build_product_segment(2, 24, 4).unwrap();
        let psi = concat(&[v.clone(), c, v]).unwrap();
        assert_eq!(psi.len(), 88);
        assert_eq!(psi.total_charge(), Charge::single(48));
        assert!((psi.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn condensate_single_particle_weights() {
        let phi = SingleParticleWavefunction::plane_wave(0.0, 5).unwrap();
        let psi = build_condensate(1, &phi, 2).unwrap();
        for m in 1..5 {
            let sp = psi.schmidt_spectrum(m);
            let w0 = sp.iter().find(|(c, _)| *c == Charge::single(0)).unwrap().1;
            assert!((w0 - (1.0 - m as f64 / 5.0)).abs() < 1e-12);
        }
        assert!(psi.canonical_residual() < 1e-12);
        assert!((psi.overlap(&psi).unwrap().value - ONE).norm() < 1e-12);
    }

    #[test]
    fn display_round_trips_mode() {
        let s = SegmentSpec::new(2, 8).with_defect(DefectKind::Momentum { mode: -2 }, DefectSign::Hole);
        assert_eq!(s.to_string(), "seg(n = 2, l = 8, defect = momentum(-pi/2, hole))");
        assert_eq!(fmt_momentum(26, 64), "13*pi/16");
        assert_eq!(fmt_momentum(2, 4), "pi");
        assert_eq!(fmt_momentum(-3, 8), "-3*pi/4");
    }
}
