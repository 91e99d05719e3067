//! TEBD against exact propagation in a fixed-charge Fock basis.

use dimerlab::linalg::{self, C64};
use dimerlab::models::{BoseHubbardParams, EffectiveDefectConfig, FockBasis, HamiltonianSpec, TwoSpeciesParams};
use dimerlab::mps::{build_encoded, DefectKind, DefectSign, SegmentSpec, SymmetricMps};
use dimerlab::tebd::{run, TebdConfig, TrotterOrder, TrotterPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(model: &HamiltonianSpec, segs: &[SegmentSpec]) -> SymmetricMps {
    let enc: Vec<_> = segs.iter().map(|s| model.encode(s).unwrap()).collect();
    build_encoded(&model.local_space(), &enc).unwrap()
}

/// State vector of `psi` in the fixed-charge basis.
fn restrict(psi: &SymmetricMps, basis: &FockBasis) -> Vec<C64> {
    let full = psi.to_dense(1 << 22).unwrap();
    (0..basis.dim()).map(|i| full[basis.full_index(i)]).collect()
}

fn exact(model: &HamiltonianSpec, psi: &SymmetricMps, t: f64) -> (FockBasis, Vec<C64>) {
    let (basis, h) = model.dense_hamiltonian(psi.len(), psi.total_charge()).unwrap();
    let u = linalg::unitary_propagator(&h, t).unwrap();
    let v0 = restrict(psi, &basis);
    let v = linalg::mat_vec(&u, &v0);
    (basis, v)
}

fn evolve(model: &HamiltonianSpec, psi: &SymmetricMps, dt: f64, t: f64, order: TrotterOrder) -> SymmetricMps {
    let cfg = TebdConfig {
        dt,
        t_max: t,
        chi_max: 4096,
        order,
        error_budget: 1.0,
        sample_every: 1_000_000,
        cutoff: 1e-14,
    };
    let mut out = psi.clone();
    let plan = TrotterPlan::new(model, psi.len(), &cfg).unwrap();
    for _ in 0..cfg.steps() {
        plan.step(&mut out).unwrap();
    }
    out
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn random_three_particle_state(model: &HamiltonianSpec, seed: u64) -> SymmetricMps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a plane-wave particle on three empty sites next to a randomly placed pair
    let mode = rng.gen_range(-1..=1);
    let pair_first: bool = rng.gen();
    let wave = SegmentSpec::new(0, 3).with_defect(DefectKind::Momentum { mode }, DefectSign::Particle);
    let pair = SegmentSpec::new(1, 2);
    let rest = SegmentSpec::new(0, 1);
    let segs = if pair_first { [pair, rest, wave] } else { [wave, pair, rest] };
    build(model, &segs)
}

#[test]
fn bose_hubbard_matches_dense_propagation() {
    let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 100.0, n_max: 3 });
    for seed in [1, 2] {
        let psi = random_three_particle_state(&model, seed);
        let (basis, want) = exact(&model, &psi, 1.0);
        let got = restrict(&evolve(&model, &psi, 0.01, 1.0, TrotterOrder::Fourth), &basis);
        let f = linalg::inner(&want, &got).norm_sqr();
        assert!(f >= 1.0 - 1e-6, "fidelity {f}");
    }
}

#[test]
fn fourth_order_error_scaling() {
    let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 10.0, n_max: 3 });
    let psi = random_three_particle_state(&model, 7);
    let (basis, want) = exact(&model, &psi, 1.0);
    let e1 = distance(&restrict(&evolve(&model, &psi, 0.1, 1.0, TrotterOrder::Fourth), &basis), &want);
    let e2 = distance(&restrict(&evolve(&model, &psi, 0.05, 1.0, TrotterOrder::Fourth), &basis), &want);
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} ({e1:e} -> {e2:e})");
    let s1 = distance(&restrict(&evolve(&model, &psi, 0.1, 1.0, TrotterOrder::Second), &basis), &want);
    let s2 = distance(&restrict(&evolve(&model, &psi, 0.05, 1.0, TrotterOrder::Second), &basis), &want);
    assert!((3.0..=5.0).contains(&(s1 / s2)), "second-order ratio {}", s1 / s2);
}

#[test]
fn pure_interaction_is_exact() {
    let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 0.0, u: 3.0, n_max: 3 });
    let psi = random_three_particle_state(&model, 3);
    let (basis, want) = exact(&model, &psi, 0.7);
    let got = restrict(&evolve(&model, &psi, 0.35, 0.7, TrotterOrder::Second), &basis);
    assert!(distance(&got, &want) < 1e-12);
}

#[test]
fn single_particle_density_matches_propagator() {
    let model = HamiltonianSpec::BoseHubbard(BoseHubbardParams { j: 1.0, u: 100.0, n_max: 1 });
    let segs = [
        SegmentSpec::new(0, 16).with_defect(DefectKind::Localized { site: 6 }, DefectSign::Particle),
    ];
    let mut psi = build(&model, &segs);
    let cfg = TebdConfig { dt: 0.02, t_max: 2.0, chi_max: 64, ..TebdConfig::for_model(&model) };
    let ts = run(&mut psi, &model, &cfg, &[dimerlab::tebd::Probe::new("n", |p: &SymmetricMps| p.densities(0))]).unwrap();
    let got = ts.at("n", 2.0).unwrap();
    // exact single-particle propagator on the open chain
    let h = linalg::from_real(16, 16, |i, j| if i.abs_diff(j) == 1 { -1.0 } else { 0.0 });
    let u = linalg::unitary_propagator(&h, 2.0).unwrap();
    for (j, g) in got.iter().enumerate() {
        let want = u[(j, 5)].norm_sqr();
        assert!((g - want).abs() < 1e-4, "site {j}: {g} vs {want}");
    }
}

#[test]
fn effective_defect_model_matches_dense_projector_sum() {
    // monomer and trimer in a small cluster; the n_r-dependent hopping is
    // exercised whenever the defects pass each other's reference positions
    let segs = [
        SegmentSpec::new(0, 1),
        SegmentSpec::new(2, 3).with_defect(DefectKind::Momentum { mode: 1 }, DefectSign::Hole),
        SegmentSpec::new(2, 2).with_defect(DefectKind::Localized { site: 1 }, DefectSign::Particle),
        SegmentSpec::new(0, 1),
    ];
    let cfg = EffectiveDefectConfig::from_segments(1.0, &segs).unwrap();
    let model = HamiltonianSpec::EffectiveDefect(cfg);
    let psi = build(&model, &segs);
    let (basis, want) = exact(&model, &psi, 1.0);
    let got = restrict(&evolve(&model, &psi, 0.01, 1.0, TrotterOrder::Fourth), &basis);
    assert!(linalg::inner(&want, &got).norm_sqr() > 1.0 - 1e-8);
}

#[test]
fn two_species_matches_dense() {
    let p = TwoSpeciesParams { j_a: 1.0, j_b: 1.0, u_a: 6.0, u_b: 6.0, u_ab: 4.0, cap_a: 2, cap_b: 2 };
    let model = HamiltonianSpec::TwoSpecies(p);
    let segs = [
        SegmentSpec::new(2, 2).with_defect(DefectKind::Momentum { mode: 1 }, DefectSign::Hole),
        SegmentSpec::new(0, 2),
    ];
    let psi = build(&model, &segs);
    assert_eq!(psi.total_charge().0, [1, 2]);
    let (basis, want) = exact(&model, &psi, 1.0);
    let got = restrict(&evolve(&model, &psi, 0.01, 1.0, TrotterOrder::Fourth), &basis);
    assert!(linalg::inner(&want, &got).norm_sqr() > 1.0 - 1e-6);
}

#[test]
fn dimer_model_matches_dense() {
    let model = HamiltonianSpec::EffectiveDimer { j: 1.0, u: 2.0 };
    let segs = [SegmentSpec::new(0, 2), SegmentSpec::new(2, 3), SegmentSpec::new(0, 2)];
    let psi = build(&model, &segs);
    let (basis, want) = exact(&model, &psi, 3.0);
    let got = restrict(&evolve(&model, &psi, 0.05, 3.0, TrotterOrder::Fourth), &basis);
    assert!(linalg::inner(&want, &got).norm_sqr() > 1.0 - 1e-8);
}
