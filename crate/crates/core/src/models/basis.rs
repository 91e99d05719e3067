use std::collections::HashMap;

use super::BondGenerator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::mps::{Charge, LocalSpace};

/// Largest Fock basis the exact builders will enumerate.
pub const MAX_BASIS_DIM: usize = 200_000;

/// Largest basis converted to a dense matrix.
const MAX_DENSE_DIM: usize = 4096;

/// Occupation-number basis of an `L`-site chain, optionally restricted to one
/// total charge. Configurations are ordered lexicographically with site 0 as
/// the most significant digit.
#[derive(Clone, Debug)]
pub struct FockBasis {
    space: LocalSpace,
    sites: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn new(space: LocalSpace, sites: usize, sector: Option<Charge>) -> Result<Self> {
        let d = space.dim();
        if d > u8::MAX as usize {
            return Err(Error::Domain("local dimension too large".into()));
        }
        // largest charge reachable on the sites to the right, per component
        let max_c = space
            .charges()
            .iter()
            .fold([0i32; 2], |m, c| [m[0].max(c.0[0]), m[1].max(c.0[1])]);
        let mut states = Vec::new();
        let mut cur = vec![0u8; sites];
        fn rec(
            pos: usize,
            acc: Charge,
            cur: &mut Vec<u8>,
            out: &mut Vec<Vec<u8>>,
            space: &LocalSpace,
            target: Option<Charge>,
            max_c: [i32; 2],
        ) -> Result<()> {
            let n = cur.len();
            if pos == n {
                if target.is_none_or(|t| t == acc) {
                    if out.len() >= MAX_BASIS_DIM {
                        return Err(Error::Budget { what: "Fock basis dimension", size: out.len() + 1, limit: MAX_BASIS_DIM });
                    }
                    out.push(cur.clone());
                }
                return Ok(());
            }
            for s in 0..space.dim() {
                let next = acc + space.charge(s);
                if let Some(t) = target {
                    let rest = (n - pos - 1) as i32;
                    let over = next.0[0] > t.0[0] || next.0[1] > t.0[1];
                    let short = next.0[0] + rest * max_c[0] < t.0[0] || next.0[1] + rest * max_c[1] < t.0[1];
                    if over || short {
                        continue;
                    }
                }
                cur[pos] = s as u8;
                rec(pos + 1, next, cur, out, space, target, max_c)?;
            }
            Ok(())
        }
        rec(0, Charge::ZERO, &mut cur, &mut states, &space, sector, max_c)?;
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { space, sites, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn space(&self) -> &LocalSpace {
        &self.space
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, config: &[u8]) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// Index of a configuration inside the full `d^L` product space (site 0
    /// most significant), matching `SymmetricMps::to_dense`.
    pub fn full_index(&self, i: usize) -> usize {
        let d = self.space.dim();
        self.states[i].iter().fold(0, |acc, &s| acc * d + s as usize)
    }

    /// Number of defects (total charge) on sites `from..L`.
    fn charge_from(&self, config: &[u8], from: usize) -> i32 {
        config[from.min(config.len())..]
            .iter()
            .map(|&s| self.space.charge(s as usize).total())
            .sum()
    }

    /// Embedding of the two-site generator of bond `b` (sites `b`, `b+1`,
    /// 0-based). For count-dependent generators the projector onto the number
    /// of defects on sites `b+2..L` is applied explicitly.
    pub fn bond_operator(&self, b: usize, gen: &BondGenerator) -> Result<SparseOperator> {
        if b + 1 >= self.sites {
            return Err(Error::Domain(format!("bond {b} outside a {}-site chain", self.sites)));
        }
        let d = self.space.dim();
        let mut op = SparseOperator::new(self.dim());
        let mut buf = Vec::with_capacity(self.sites);
        for (col, cfg) in self.states.iter().enumerate() {
            let g = match gen {
                BondGenerator::Fixed(m) => m,
                BondGenerator::PerRightCount { by_count, .. } => {
                    let n_r = self.charge_from(cfg, b + 2) as usize;
                    match by_count.get(n_r) {
                        Some(m) => m,
                        None => continue,
                    }
                }
            };
            let p = cfg[b] as usize * d + cfg[b + 1] as usize;
            for o in 0..d * d {
                let v = g[(o, p)];
                if v == ZERO {
                    continue;
                }
                buf.clear();
                buf.extend_from_slice(cfg);
                buf[b] = (o / d) as u8;
                buf[b + 1] = (o % d) as u8;
                let row = self.index_of(&buf).ok_or(Error::SectorViolation)?;
                op.push(row, col, v);
            }
        }
        Ok(op)
    }

    /// Diagonal operator `sum_s f(s)` on site `i`.
    pub fn site_diagonal(&self, i: usize, f: &[f64]) -> Vec<f64> {
        self.states.iter().map(|c| f[c[i] as usize]).collect()
    }
}

/// Matrix stored as a list of `(row, col, value)` triplets; duplicates add.
#[derive(Clone, Debug, Default)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, row: usize, col: usize, v: C64) {
        self.entries.push((row, col, v));
    }

    pub fn extend(&mut self, other: &SparseOperator) {
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for &(r, c, x) in &self.entries {
            out[r] += x * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> Result<CMat> {
        if self.dim > MAX_DENSE_DIM {
            return Err(Error::Budget { what: "dense matrix dimension", size: self.dim, limit: MAX_DENSE_DIM });
        }
        let mut m = linalg::zeros(self.dim, self.dim);
        for &(r, c, x) in &self.entries {
            m[(r, c)] += x;
        }
        Ok(m)
    }
}
