use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// Conserved quantum numbers carried by a bond or a local basis state.
///
/// Single-species models use only the first component (particle number);
/// two-species models use `(N_a, N_b)`; the defect register uses
/// `(monomers, trimers)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Charge(pub [i32; 2]);

impl Charge {
    pub const ZERO: Charge = Charge([0, 0]);

    pub fn single(n: i32) -> Self {
        Charge([n, 0])
    }

    pub fn total(self) -> i32 {
        self.0[0] + self.0[1]
    }
}

impl Add for Charge {
    type Output = Charge;
    fn add(self, o: Charge) -> Charge {
        Charge([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Charge {
    type Output = Charge;
    fn sub(self, o: Charge) -> Charge {
        Charge([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Neg for Charge {
    type Output = Charge;
    fn neg(self) -> Charge {
        Charge([-self.0[0], -self.0[1]])
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0[0], self.0[1])
    }
}

/// Which kind of particles a local basis describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Soft-core bosons with occupations `0..=n_max`.
    Bosons { n_max: usize },
    /// Two bosonic species, index `n_a * (cap_b + 1) + n_b`.
    TwoSpecies { cap_a: usize, cap_b: usize },
    /// Hard-core bosons (dimers of the pair model), `{empty, occupied}`.
    HardCore,
    /// Defect register `{empty, monomer, trimer}` with mutual exclusion.
    DefectRegister,
}

/// Local Hilbert space of one lattice site together with the charge of
/// every basis state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSpace {
    kind: SpaceKind,
    charges: Vec<Charge>,
}

impl LocalSpace {
    pub fn new(kind: SpaceKind) -> Self {
        let charges = match kind {
            SpaceKind::Bosons { n_max } => (0..=n_max as i32).map(Charge::single).collect(),
            SpaceKind::TwoSpecies { cap_a, cap_b } => {
                let mut v = Vec::new();
                for na in 0..=cap_a as i32 {
                    for nb in 0..=cap_b as i32 {
                        v.push(Charge([na, nb]));
                    }
                }
                v
            }
            SpaceKind::HardCore => vec![Charge::single(0), Charge::single(1)],
            SpaceKind::DefectRegister => vec![Charge([0, 0]), Charge([1, 0]), Charge([0, 1])],
        };
        Self { kind, charges }
    }

    pub fn bosons(n_max: usize) -> Self {
        Self::new(SpaceKind::Bosons { n_max })
    }

    /// Single-species space of dimension `d` (occupations `0..d`).
    pub fn with_dim(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::Domain("local dimension must be at least 1".into()));
        }
        Ok(Self::bosons(d - 1))
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.charges.len()
    }

    pub fn charge(&self, s: usize) -> Charge {
        self.charges[s]
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    /// Number of conserved components that are meaningful for this space.
    pub fn species(&self) -> usize {
        match self.kind {
            SpaceKind::Bosons { .. } | SpaceKind::HardCore => 1,
            SpaceKind::TwoSpecies { .. } | SpaceKind::DefectRegister => 2,
        }
    }

    /// Basis index with the given charge, if one exists.
    pub fn index_of(&self, c: Charge) -> Option<usize> {
        self.charges.iter().position(|&x| x == c)
    }

    /// Basis index holding `n` particles of a single-species space.
    pub fn occupation_index(&self, n: usize) -> Result<usize> {
        self.index_of(Charge::single(n as i32)).ok_or(Error::Cutoff {
            occupation: n,
            dim: self.dim(),
        })
    }

    /// Diagonal of the number operator of component `species`.
    pub fn number_diagonal(&self, species: usize) -> Vec<f64> {
        self.charges.iter().map(|c| c.0[species] as f64).collect()
    }
}
