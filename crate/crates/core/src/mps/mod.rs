//! Particle-number-conserving matrix product states.

mod build;
mod charge;
mod snapshot;
mod state;

pub use build::{
    binomial_weight, build_condensate, build_defect_segment, build_encoded, build_product_segment, concat,
    condensate_gamma_sq, encode_single_species, fmt_momentum, Defect, DefectKind, DefectSign, SegmentSpec,
    SingleParticleWavefunction, SiteEncoding, Species,
};
pub use charge::{Charge, LocalSpace, SpaceKind};
pub use snapshot::{read_snapshot, write_snapshot, FORMAT_VERSION};
pub use state::{Bond, Overlap, Sector, SiteTensor, SymmetricMps, Truncation, TwoSiteReport};
