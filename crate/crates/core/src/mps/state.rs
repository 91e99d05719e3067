use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;

use super::charge::{Charge, LocalSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};

/// Largest charge-changing gate element treated as round-off.
const SECTOR_LEAK_TOL: f64 = 1e-10;

/// Schmidt values of one particle-number sector of a bond, in
/// non-increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub charge: Charge,
    pub lambda: Vec<f64>,
}

/// All sectors of one bond, sorted by charge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bond {
    pub(crate) sectors: Vec<Sector>,
}

impl Bond {
    pub(crate) fn trivial(q: Charge) -> Self {
        Self {
            sectors: vec![Sector { charge: q, lambda: vec![1.0] }],
        }
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(|s| s.lambda.len()).sum()
    }

    pub fn sector(&self, q: Charge) -> Option<&Sector> {
        self.sectors
            .binary_search_by(|s| s.charge.cmp(&q))
            .ok()
            .map(|i| &self.sectors[i])
    }

    pub fn sector_dim(&self, q: Charge) -> usize {
        self.sector(q).map_or(0, |s| s.lambda.len())
    }

    pub fn weight_sum(&self) -> f64 {
        self.sectors.iter().flat_map(|s| &s.lambda).map(|x| x * x).sum()
    }
}

pub(crate) type BlockKey = (Charge, usize);

/// Block-sparse site tensor: one matrix per `(left charge, physical index)`.
/// The right charge of a block is the left charge plus the charge of the
/// physical state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiteTensor {
    pub(crate) blocks: BTreeMap<BlockKey, CMat>,
}

impl SiteTensor {
    pub fn block(&self, left: Charge, s: usize) -> Option<&CMat> {
        self.blocks.get(&(left, s))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Charge, usize, &CMat)> {
        self.blocks.iter().map(|(&(q, s), m)| (q, s, m))
    }
}

/// Result of an overlap between two states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    pub value: C64,
    /// Set when the states carry different total charge; `value` is then 0.
    pub sector_mismatch: bool,
}

/// Outcome of one two-site update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSiteReport {
    /// Weight dropped by the truncation, relative to the updated state.
    pub discarded: f64,
    /// Squared norm of the updated two-site wave function before truncation.
    pub norm_sq: f64,
}

/// Truncation applied after a two-site update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub chi_max: usize,
    /// Schmidt values below `cutoff` (relative to the norm) are always dropped.
    pub cutoff: f64,
}

impl Truncation {
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, cutoff: 1e-14 }
    }
}

/// Particle-number-conserving MPS.
///
/// Site tensors are stored right-normalized (`B = Gamma lambda`), and every
/// bond keeps its Schmidt values per sector. The sector label of a bond is
/// the charge accumulated on the sites to its left.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMps {
    pub(crate) space: LocalSpace,
    pub(crate) sites: Vec<SiteTensor>,
    pub(crate) bonds: Vec<Bond>,
}

fn stack_rows(parts: &[&CMat], cols: usize) -> CMat {
    let rows: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = linalg::zeros(rows, cols);
    let mut off = 0;
    for m in parts {
        for j in 0..cols {
            for i in 0..m.nrows() {
                out[(off + i, j)] = m[(i, j)];
            }
        }
        off += m.nrows();
    }
    out
}

fn stack_cols(parts: &[&CMat], rows: usize) -> CMat {
    let cols: usize = parts.iter().map(|m| m.ncols()).sum();
    let mut out = linalg::zeros(rows, cols);
    let mut off = 0;
    for m in parts {
        for j in 0..m.ncols() {
            for i in 0..rows {
                out[(i, off + j)] = m[(i, j)];
            }
        }
        off += m.ncols();
    }
    out
}

fn rows_of(m: &CMat, start: usize, len: usize) -> CMat {
    Mat::from_fn(len, m.ncols(), |i, j| m[(start + i, j)])
}

fn scale_cols(m: &CMat, s: &[f64]) -> CMat {
    Mat::from_fn(m.nrows(), s.len(), |i, j| m[(i, j)] * s[j])
}

impl SymmetricMps {
    /// Canonical form of the chain `M_1 M_2 ... M_L` whose leftmost bond
    /// carries charge `left`. The state is normalized.
    pub(crate) fn from_raw(space: LocalSpace, mut sites: Vec<SiteTensor>, left: Charge) -> Result<Self> {
        let l = sites.len();
        if l == 0 {
            return Err(Error::InvalidState("empty chain".into()));
        }
        let cq = |s: usize| space.charge(s);

        // left to right: QR
        let mut carry: BTreeMap<Charge, CMat> = BTreeMap::new();
        carry.insert(left, linalg::identity(1));
        for site in sites.iter_mut() {
            let mut groups: BTreeMap<Charge, Vec<(BlockKey, CMat)>> = BTreeMap::new();
            for (&(ql, s), m) in &site.blocks {
                let Some(r) = carry.get(&ql) else { continue };
                if r.nrows() == 0 {
                    continue;
                }
                groups.entry(ql + cq(s)).or_default().push(((ql, s), r * m));
            }
            let mut blocks = BTreeMap::new();
            let mut next = BTreeMap::new();
            for (qr, parts) in groups {
                let cols = parts[0].1.ncols();
                let refs: Vec<&CMat> = parts.iter().map(|(_, m)| m).collect();
                let stacked = stack_rows(&refs, cols);
                let (q, r) = linalg::qr(&stacked);
                let mut off = 0;
                for (key, m) in &parts {
                    blocks.insert(*key, rows_of(&q, off, m.nrows()));
                    off += m.nrows();
                }
                next.insert(qr, r);
            }
            site.blocks = blocks;
            carry = next;
        }
        let finals: Vec<(Charge, CMat)> = carry
            .into_iter()
            .filter(|(_, r)| linalg::frobenius(r) > 0.0)
            .collect();
        if finals.is_empty() {
            return Err(Error::InvalidState("state has zero norm".into()));
        }
        if finals.len() > 1 {
            return Err(Error::InvalidState("state mixes different particle numbers".into()));
        }
        let (q_final, r_final) = finals.into_iter().next().unwrap();

        // right to left: SVD
        let mut bonds = vec![Bond::default(); l + 1];
        bonds[l] = Bond::trivial(q_final);
        let mut carry: BTreeMap<Charge, CMat> = BTreeMap::new();
        carry.insert(q_final, r_final);
        for i in (0..l).rev() {
            let mut groups: BTreeMap<Charge, Vec<(usize, CMat)>> = BTreeMap::new();
            for (&(ql, s), a) in &sites[i].blocks {
                let Some(c) = carry.get(&(ql + cq(s))) else { continue };
                if c.ncols() == 0 {
                    continue;
                }
                groups.entry(ql).or_default().push((s, a * c));
            }
            let mut decs = Vec::with_capacity(groups.len());
            let mut total = 0.0;
            for (ql, parts) in groups {
                let rows = parts[0].1.nrows();
                let refs: Vec<&CMat> = parts.iter().map(|(_, m)| m).collect();
                let d = linalg::svd(&stack_cols(&refs, rows))?;
                total += d.s.iter().map(|x| x * x).sum::<f64>();
                decs.push((ql, parts, d));
            }
            let tol = 1e-14 * total.sqrt();
            let mut blocks = BTreeMap::new();
            let mut next = BTreeMap::new();
            let mut sectors = Vec::new();
            for (ql, parts, d) in decs {
                let keep = d.s.iter().take_while(|&&x| x > tol).count();
                if keep == 0 {
                    continue;
                }
                let mut off = 0;
                for (s, m) in &parts {
                    let w = m.ncols();
                    let b = Mat::from_fn(keep, w, |a, j| d.v[(off + j, a)].conj());
                    blocks.insert((ql, *s), b);
                    off += w;
                }
                next.insert(ql, scale_cols(&d.u, &d.s[..keep]));
                sectors.push(Sector { charge: ql, lambda: d.s[..keep].to_vec() });
            }
            sites[i].blocks = blocks;
            if i > 0 {
                bonds[i] = Bond { sectors };
            } else {
                // keep the global phase
                let us = next.get(&left).ok_or_else(|| Error::InvalidState("state has zero norm".into()))?;
                let phase = us[(0, 0)] / us[(0, 0)].norm();
                for b in sites[0].blocks.values_mut() {
                    *b = Mat::from_fn(b.nrows(), b.ncols(), |r, c| b[(r, c)] * phase);
                }
            }
            carry = next;
        }
        bonds[0] = Bond::trivial(left);
        for b in bonds.iter_mut() {
            let n = b.weight_sum().sqrt();
            for s in b.sectors.iter_mut() {
                s.lambda.iter_mut().for_each(|x| *x /= n);
            }
        }
        Ok(Self { space, sites, bonds })
    }

    /// Restore the canonical form (and unit norm) in place.
    pub fn canonicalize(&mut self) -> Result<()> {
        let left = self.bonds[0].sectors[0].charge;
        let sites = std::mem::take(&mut self.sites);
        *self = Self::from_raw(self.space.clone(), sites, left)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn space(&self) -> &LocalSpace {
        &self.space
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }

    /// Bond `b` sits between sites `b - 1` and `b`; bond 0 and bond `L` are the
    /// edges.
    pub fn bond(&self, b: usize) -> &Bond {
        &self.bonds[b]
    }

    pub fn total_charge(&self) -> Charge {
        self.bonds[self.len()].sectors[0].charge - self.bonds[0].sectors[0].charge
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.bonds.iter().map(Bond::dim).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bonds.iter().map(Bond::dim).max().unwrap_or(0)
    }

    /// `(charge, weight)` pairs at bond `b`, ordered by weight (descending)
    /// and then by charge.
    pub fn schmidt_spectrum(&self, b: usize) -> Vec<(Charge, f64)> {
        let mut out: Vec<(Charge, f64)> = self.bonds[b]
            .sectors
            .iter()
            .flat_map(|s| s.lambda.iter().map(move |x| (s.charge, x * x)))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Von Neumann entropy of the bipartition at bond `b`.
    pub fn entropy(&self, b: usize) -> f64 {
        self.schmidt_spectrum(b)
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(_, w)| -w * w.ln())
            .sum()
    }

    /// Probability of every local basis state at site `i`.
    pub fn site_probabilities(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.space.dim()];
        for (&(ql, s), b) in &self.sites[i].blocks {
            let Some(sec) = self.bonds[i].sector(ql) else { continue };
            for (a, lam) in sec.lambda.iter().enumerate() {
                let row: f64 = (0..b.ncols()).map(|c| b[(a, c)].norm_sqr()).sum();
                p[s] += lam * lam * row;
            }
        }
        p
    }

    /// Probability of finding basis state `s` at site `i`.
    pub fn occupancy_probability(&self, i: usize, s: usize) -> Result<f64> {
        if s >= self.space.dim() {
            return Err(Error::Cutoff { occupation: s, dim: self.space.dim() });
        }
        Ok(self.site_probabilities(i)[s])
    }

    /// `<O_i>` for an operator diagonal in the local basis.
    pub fn expect_diagonal(&self, i: usize, diag: &[f64]) -> f64 {
        self.site_probabilities(i).iter().zip(diag).map(|(p, d)| p * d).sum()
    }

    /// Mean occupation of charge component `species` at every site.
    pub fn densities(&self, species: usize) -> Vec<f64> {
        let n = self.space.number_diagonal(species);
        (0..self.len()).map(|i| self.expect_diagonal(i, &n)).collect()
    }

    /// `<a|b>`
    pub fn overlap(&self, other: &SymmetricMps) -> Result<Overlap> {
        if self.len() != other.len() || self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let (la, lb) = (self.bonds[0].sectors[0].charge, other.bonds[0].sectors[0].charge);
        let (ra, rb) = (self.bonds[self.len()].sectors[0].charge, other.bonds[other.len()].sectors[0].charge);
        if la != lb || ra != rb {
            return Ok(Overlap { value: ZERO, sector_mismatch: true });
        }
        let mut env: BTreeMap<Charge, CMat> = BTreeMap::new();
        env.insert(la, linalg::identity(1));
        for i in 0..self.len() {
            let mut next: BTreeMap<Charge, CMat> = BTreeMap::new();
            for (&(q, s), ba) in &self.sites[i].blocks {
                let (Some(e), Some(bb)) = (env.get(&q), other.sites[i].blocks.get(&(q, s))) else {
                    continue;
                };
                let t = ba.adjoint() * (e * bb);
                let qr = q + self.space.charge(s);
                match next.get_mut(&qr) {
                    Some(acc) => *acc += &t,
                    None => {
                        next.insert(qr, t);
                    }
                }
            }
            env = next;
        }
        let value = env.get(&ra).map_or(ZERO, |m| m[(0, 0)]);
        Ok(Overlap { value, sector_mismatch: false })
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).map(|o| o.value.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// `<O_i O_j>` for single-site operators given as `d x d` matrices in the
    /// local basis (operators may change the charge).
    pub fn correlator(&self, i: usize, op_i: &CMat, j: usize, op_j: &CMat) -> C64 {
        let d = self.space.dim();
        let (first, a, last, b) = if i <= j { (i, op_i, j, op_j) } else { (j, op_j, i, op_i) };
        let single;
        let ops: Vec<(usize, &CMat)> = if first == last {
            single = a * b;
            vec![(first, &single)]
        } else {
            vec![(first, a), (last, b)]
        };
        // environment keyed by (bra charge, ket charge)
        let mut env: BTreeMap<(Charge, Charge), CMat> = BTreeMap::new();
        for sec in &self.bonds[first].sectors {
            let n = sec.lambda.len();
            env.insert(
                (sec.charge, sec.charge),
                Mat::from_fn(n, n, |r, c| if r == c { C64::new(sec.lambda[r] * sec.lambda[r], 0.0) } else { ZERO }),
            );
        }
        for site in first..=last {
            let op = ops.iter().find(|(k, _)| *k == site).map(|(_, m)| *m);
            let mut next: BTreeMap<(Charge, Charge), CMat> = BTreeMap::new();
            for (&(qb, qk), e) in &env {
                for sk in 0..d {
                    let Some(bk) = self.sites[site].blocks.get(&(qk, sk)) else { continue };
                    for sb in 0..d {
                        let w = match op {
                            Some(m) => m[(sb, sk)],
                            None if sb == sk => ONE,
                            None => ZERO,
                        };
                        if w == ZERO {
                            continue;
                        }
                        let Some(bb) = self.sites[site].blocks.get(&(qb, sb)) else { continue };
                        let t = linalg::scaled(&(bb.adjoint() * (e * bk)), w);
                        let key = (qb + self.space.charge(sb), qk + self.space.charge(sk));
                        match next.get_mut(&key) {
                            Some(acc) => *acc += &t,
                            None => {
                                next.insert(key, t);
                            }
                        }
                    }
                }
            }
            env = next;
        }
        let mut out = ZERO;
        for ((qb, qk), e) in &env {
            if qb == qk {
                for r in 0..e.nrows().min(e.ncols()) {
                    out += e[(r, r)];
                }
            }
        }
        out
    }

    /// Largest deviation from the right-canonical and Schmidt conditions:
    /// `sum_s B B^dag = 1` and `sum_s B^dag lambda_l^2 B = lambda_r^2`.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, site) in self.sites.iter().enumerate() {
            let mut right: BTreeMap<Charge, CMat> = BTreeMap::new();
            let mut left: BTreeMap<Charge, CMat> = BTreeMap::new();
            for (&(ql, s), b) in &site.blocks {
                let bb = b * b.adjoint();
                match right.get_mut(&ql) {
                    Some(acc) => *acc += &bb,
                    None => {
                        right.insert(ql, bb);
                    }
                }
                if let Some(sec) = self.bonds[i].sector(ql) {
                    let lb = Mat::from_fn(b.nrows(), b.ncols(), |r, c| b[(r, c)] * sec.lambda[r]);
                    let t = lb.adjoint() * &lb;
                    let qr = ql + self.space.charge(s);
                    match left.get_mut(&qr) {
                        Some(acc) => *acc += &t,
                        None => {
                            left.insert(qr, t);
                        }
                    }
                }
            }
            for (q, m) in &right {
                let n = self.bonds[i].sector_dim(*q);
                if m.nrows() != n {
                    return f64::INFINITY;
                }
                worst = worst.max(linalg::max_abs(&(m - linalg::identity(n))));
            }
            for (q, m) in &left {
                let Some(sec) = self.bonds[i + 1].sector(*q) else {
                    worst = worst.max(linalg::max_abs(m));
                    continue;
                };
                let target = Mat::from_fn(sec.lambda.len(), sec.lambda.len(), |r, c| {
                    if r == c { C64::new(sec.lambda[r] * sec.lambda[r], 0.0) } else { ZERO }
                });
                worst = worst.max(linalg::max_abs(&(m - target)));
            }
            for b in &self.bonds {
                worst = worst.max((b.weight_sum() - 1.0).abs());
            }
        }
        worst
    }

    /// Full state vector, site 0 being the most significant digit. Intended
    /// for small systems in tests and oracles.
    pub fn to_dense(&self, max_dim: usize) -> Result<Vec<C64>> {
        let d = self.space.dim();
        let total = (d as f64).powi(self.len() as i32);
        if total > max_dim as f64 {
            return Err(Error::Budget { what: "dense state dimension", size: total as usize, limit: max_dim });
        }
        let mut psi = vec![ZERO; total as usize];
        // frontier of (index prefix, charge, row vector)
        let mut frontier: Vec<(usize, Charge, CMat)> =
            vec![(0, self.bonds[0].sectors[0].charge, linalg::identity(1))];
        for site in &self.sites {
            let mut next = Vec::new();
            for (idx, q, v) in frontier {
                for s in 0..d {
                    if let Some(b) = site.blocks.get(&(q, s)) {
                        next.push((idx * d + s, q + self.space.charge(s), &v * b));
                    }
                }
            }
            frontier = next;
        }
        for (idx, _, v) in frontier {
            psi[idx] += v[(0, 0)];
        }
        Ok(psi)
    }

    /// Two-site update on sites `i` and `i + 1`. `gates[select(q_r)]` is the
    /// gate used for blocks whose right-bond charge is `q_r`. Returns the
    /// discarded weight and the pre-truncation norm.
    pub fn apply_two_site(
        &mut self,
        i: usize,
        gates: &[CMat],
        select: &dyn Fn(Charge) -> usize,
        trunc: Truncation,
    ) -> Result<TwoSiteReport> {
        let l = self.len();
        if i + 1 >= l {
            return Err(Error::Domain(format!("bond after site {i} is outside a {l}-site chain")));
        }
        let d = self.space.dim();
        let dd = d * d;
        let cq = |s: usize| self.space.charge(s);
        for g in gates {
            if g.nrows() != dd || g.ncols() != dd {
                return Err(Error::SpaceMismatch);
            }
        }

        // Phi = B_i B_{i+1}, keyed by (q_l, q_r), one slot per (s1, s2)
        let mut phi: BTreeMap<(Charge, Charge), Vec<Option<CMat>>> = BTreeMap::new();
        for (&(ql, s1), b1) in &self.sites[i].blocks {
            let qm = ql + cq(s1);
            for s2 in 0..d {
                if let Some(b2) = self.sites[i + 1].blocks.get(&(qm, s2)) {
                    let qr = qm + cq(s2);
                    phi.entry((ql, qr)).or_insert_with(|| vec![None; dd])[s1 * d + s2] = Some(b1 * b2);
                }
            }
        }

        let mut checked = vec![false; gates.len()];
        let mut rows: BTreeMap<Charge, BTreeSet<(Charge, usize)>> = BTreeMap::new();
        let mut cols: BTreeMap<Charge, BTreeSet<(usize, Charge)>> = BTreeMap::new();
        let mut out: BTreeMap<(Charge, Charge, usize), CMat> = BTreeMap::new();
        for ((ql, qr), slots) in &phi {
            let gi = select(*qr);
            let g = gates.get(gi).ok_or_else(|| Error::Domain(format!("no gate for sector {qr}")))?;
            if !checked[gi] {
                for o in 0..dd {
                    for p in 0..dd {
                        let moves = cq(o / d) + cq(o % d) != cq(p / d) + cq(p % d);
                        if moves && g[(o, p)].norm() > SECTOR_LEAK_TOL {
                            return Err(Error::SectorViolation);
                        }
                    }
                }
                checked[gi] = true;
            }
            let (rl, rr) = (self.bonds[i].sector_dim(*ql), self.bonds[i + 2].sector_dim(*qr));
            for o in 0..dd {
                let (o1, o2) = (o / d, o % d);
                if *ql + cq(o1) + cq(o2) != *qr {
                    continue;
                }
                let mut acc: Option<CMat> = None;
                for (p, slot) in slots.iter().enumerate() {
                    let (Some(m), w) = (slot, g[(o, p)]) else { continue };
                    if w == ZERO || cq(p / d) + cq(p % d) != cq(o1) + cq(o2) {
                        continue;
                    }
                    let t = linalg::scaled(m, w);
                    match acc.as_mut() {
                        Some(a) => *a += &t,
                        None => acc = Some(t),
                    }
                }
                let Some(m) = acc else { continue };
                debug_assert_eq!((m.nrows(), m.ncols()), (rl, rr));
                let qm = *ql + cq(o1);
                rows.entry(qm).or_default().insert((*ql, o1));
                cols.entry(qm).or_default().insert((o2, *qr));
                out.insert((*ql, *qr, o), m);
            }
        }

        // SVD per new middle charge
        struct Piece {
            qm: Charge,
            rows: Vec<(Charge, usize, usize)>,
            cols: Vec<(usize, Charge, usize)>,
            phi: CMat,
            svd: linalg::Svd,
        }
        let mut pieces = Vec::with_capacity(rows.len());
        for (qm, rset) in &rows {
            let cset = &cols[qm];
            let mut rlist = Vec::new();
            let mut nr = 0;
            for &(ql, s1) in rset {
                rlist.push((ql, s1, nr));
                nr += self.bonds[i].sector_dim(ql);
            }
            let mut clist = Vec::new();
            let mut nc = 0;
            for &(s2, qr) in cset {
                clist.push((s2, qr, nc));
                nc += self.bonds[i + 2].sector_dim(qr);
            }
            let mut phim = linalg::zeros(nr, nc);
            let mut theta = linalg::zeros(nr, nc);
            for &(ql, s1, r0) in &rlist {
                let lam = &self.bonds[i].sector(ql).expect("left sector").lambda;
                for &(s2, qr, c0) in &clist {
                    if let Some(m) = out.get(&(ql, qr, s1 * d + s2)) {
                        for c in 0..m.ncols() {
                            for r in 0..m.nrows() {
                                phim[(r0 + r, c0 + c)] = m[(r, c)];
                                theta[(r0 + r, c0 + c)] = m[(r, c)] * lam[r];
                            }
                        }
                    }
                }
            }
            let svd = linalg::svd(&theta)?;
            pieces.push(Piece { qm: *qm, rows: rlist, cols: clist, phi: phim, svd });
        }

        // global truncation across sectors
        let mut all: Vec<(f64, Charge, usize, usize)> = Vec::new();
        for (pi, p) in pieces.iter().enumerate() {
            for (k, &s) in p.svd.s.iter().enumerate() {
                all.push((s, p.qm, pi, k));
            }
        }
        let total: f64 = all.iter().map(|x| x.0 * x.0).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical("two-site update produced a zero or non-finite state".into()));
        }
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
        let floor = trunc.cutoff * total.sqrt();
        let keep_n = all
            .iter()
            .take(trunc.chi_max.max(1))
            .take_while(|x| x.0 > floor)
            .count()
            .max(1);
        let kept: f64 = all[..keep_n].iter().map(|x| x.0 * x.0).sum();
        let discarded = ((total - kept) / total).max(0.0);
        let norm = kept.sqrt();
        let mut keep_per = vec![0usize; pieces.len()];
        for x in &all[..keep_n] {
            keep_per[x.2] += 1;
        }

        let mut left_blocks = BTreeMap::new();
        let mut right_blocks = BTreeMap::new();
        let mut sectors = Vec::new();
        for (p, &k) in pieces.iter().zip(&keep_per) {
            if k == 0 {
                continue;
            }
            let v = &p.svd.v;
            let vk = Mat::from_fn(v.nrows(), k, |r, c| v[(r, c)]);
            let x = &p.phi * &vk;
            for &(ql, s1, r0) in &p.rows {
                let h = self.bonds[i].sector_dim(ql);
                left_blocks.insert((ql, s1), Mat::from_fn(h, k, |r, c| x[(r0 + r, c)] / norm));
            }
            for &(s2, qr, c0) in &p.cols {
                let w = self.bonds[i + 2].sector_dim(qr);
                right_blocks.insert((p.qm, s2), Mat::from_fn(k, w, |r, c| v[(c0 + c, r)].conj()));
            }
            sectors.push(Sector {
                charge: p.qm,
                lambda: p.svd.s[..k].iter().map(|s| s / norm).collect(),
            });
        }
        self.sites[i].blocks = left_blocks;
        self.sites[i + 1].blocks = right_blocks;
        self.bonds[i + 1] = Bond { sectors };
        Ok(TwoSiteReport { discarded, norm_sq: total })
    }
}
