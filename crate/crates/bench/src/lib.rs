//! Benchmark fixtures shared by the criterion benches.

use dimerlab::models::{BoseHubbardParams, EffectiveDefectConfig, HamiltonianSpec};
use dimerlab::mps::{build_encoded, DefectKind, DefectSign, SegmentSpec, SymmetricMps};

/// Vacuum, a dimer cluster with two localized holes, vacuum.
pub fn cluster_segments(flank: usize, seg: usize) -> Vec<SegmentSpec> {
    vec![
        SegmentSpec::new(0, flank),
        SegmentSpec::new(2, seg).with_defect(DefectKind::Localized { site: seg / 2 }, DefectSign::Hole),
        SegmentSpec::new(2, seg),
        SegmentSpec::new(2, seg).with_defect(DefectKind::Momentum { mode: 1 }, DefectSign::Hole),
        SegmentSpec::new(0, flank),
    ]
}

pub fn bose_hubbard() -> HamiltonianSpec {
    HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 100.0, n_max: 3 })
}

pub fn effective(segs: &[SegmentSpec]) -> HamiltonianSpec {
    HamiltonianSpec::EffectiveDefect(EffectiveDefectConfig::from_segments(1.0, segs).expect("valid segments"))
}

pub fn initial_state(model: &HamiltonianSpec, segs: &[SegmentSpec]) -> SymmetricMps {
    let enc: Vec<_> = segs.iter().map(|s| model.encode(s).expect("encodable segment")).collect();
    build_encoded(&model.local_space(), &enc).expect("consistent encoding")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let segs = cluster_segments(4, 4);
        let psi = initial_state(&effective(&segs), &segs);
        assert_eq!(psi.len(), 20);
        let psi = initial_state(&bose_hubbard(), &segs);
        assert_eq!(psi.len(), 20);
    }
}
