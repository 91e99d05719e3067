//! Single-particle scattering at a hopping-rate domain wall and classical
//! two-defect collision kinematics.
//!
//! The wall separates region A (sites `j <= 0`, hopping `J_A`) from region B
//! (sites `j > 0`, hopping `J_B`). A particle incident from A with
//! quasi-momentum `k` has energy `-2 J_A cos k`; it propagates into B only if
//! `-2 J_B cos k'` can match that energy with real `k'`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Hopping rates on either side of the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallParams {
    pub j_a: f64,
    pub j_b: f64,
}

impl WallParams {
    pub fn new(j_a: f64, j_b: f64) -> Result<Self> {
        if !(j_a > 0.0 && j_b > 0.0) {
            return Err(Error::Domain(format!(
                "hopping rates must be positive, got J_A = {j_a}, J_B = {j_b}"
            )));
        }
        Ok(Self { j_a, j_b })
    }

    /// Wall with `J_A = 1` and `J_B = alpha`.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        Self::new(1.0, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.j_b / self.j_a
    }

    /// The same wall seen from the other side.
    pub fn reversed(&self) -> Self {
        Self { j_a: self.j_b, j_b: self.j_a }
    }
}

/// Outcome of matching energies across the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refraction {
    Propagating(f64),
    Evanescent,
}

impl Refraction {
    pub fn propagating(self) -> Option<f64> {
        match self {
            Refraction::Propagating(k) => Some(k),
            Refraction::Evanescent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringResult {
    pub k: f64,
    pub k_prime: Refraction,
    pub rho: C64,
    pub tau: C64,
    pub transmission: f64,
    pub reflection: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be positive, got {alpha}")))
    }
}

/// Refracted quasi-momentum `k' = arccos(cos k / alpha)` for `0 < k < pi`.
pub fn refract(k: f64, alpha: f64) -> Result<Refraction> {
    if !(k > 0.0 && k < PI) {
        return Err(Error::Domain(format!("incident momentum {k} outside (0, pi)")));
    }
    check_alpha(alpha)?;
    let c = k.cos();
    if c.abs() >= alpha {
        Ok(Refraction::Evanescent)
    } else {
        Ok(Refraction::Propagating((c / alpha).acos()))
    }
}

/// Reflection/transmission at the wall for a particle incident from region A.
///
/// Negative momenta are mapped to `|k|`, since `T(-k) = T(k)`.
pub fn scatter(k: f64, wall: WallParams) -> Result<ScatteringResult> {
    let k = if k < 0.0 { -k } else { k };
    let alpha = wall.alpha();
    let k_prime = refract(k, alpha)?;
    let Some(kp) = k_prime.propagating() else {
        return Ok(ScatteringResult {
            k,
            k_prime,
            rho: C64::new(1.0, 0.0),
            tau: C64::new(0.0, 0.0),
            transmission: 0.0,
            reflection: 1.0,
        });
    };
    let (ja, jb) = (wall.j_a, wall.j_b);
    let two_cos = C64::new(2.0 * ja * k.cos(), 0.0);
    let num = jb * cis(kp) + ja * cis(-k) - two_cos;
    let den = -jb * cis(kp) - ja * cis(k) + two_cos;
    let rho = num / den;
    let tau = rho + 1.0;
    let reflection = rho.norm_sqr();
    let transmission = alpha * kp.sin() / k.sin() * tau.norm_sqr();
    Ok(ScatteringResult {
        k,
        k_prime,
        rho,
        tau,
        transmission,
        reflection,
    })
}

/// Open intervals of `(-pi, pi]` where `|cos k| < min(alpha, 1)`.
pub fn transmission_window(alpha: f64) -> Result<Vec<(f64, f64)>> {
    check_alpha(alpha)?;
    if alpha >= 1.0 {
        return Ok(vec![(-PI, 0.0), (0.0, PI)]);
    }
    let lo = alpha.acos();
    let hi = (-alpha).acos();
    Ok(vec![(-hi, -lo), (lo, hi)])
}

/// One row of a transmission table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSample {
    pub k: f64,
    pub transmission: f64,
    pub reflection: f64,
}

/// `T(k)` on the interior grid `k_i = pi (i + 1) / (n + 1)`, `i < n`.
pub fn transmission_scan(alpha: f64, n_points: usize) -> Result<Vec<TransmissionSample>> {
    if n_points < 2 {
        return Err(Error::Domain("transmission scan needs at least 2 points".into()));
    }
    let step = PI / (n_points + 1) as f64;
    transmission_scan_range(alpha, n_points, step, PI - step)
}

/// `T(k)` on `n_points` uniformly spaced momenta from `kmin` to `kmax`
/// inclusive. Both ends must lie in `(-pi, pi)` and avoid `k = 0`.
pub fn transmission_scan_range(
    alpha: f64,
    n_points: usize,
    kmin: f64,
    kmax: f64,
) -> Result<Vec<TransmissionSample>> {
    if n_points < 2 {
        return Err(Error::Domain("transmission scan needs at least 2 points".into()));
    }
    let wall = WallParams::from_alpha(alpha)?;
    (0..n_points)
        .map(|i| {
            let k = kmin + (kmax - kmin) * i as f64 / (n_points - 1) as f64;
            let r = scatter(k, wall)?;
            Ok(TransmissionSample {
                k,
                transmission: r.transmission,
                reflection: r.reflection,
            })
        })
        .collect()
}

/// A monomer (`J_mu = 2J`) or trimer (`J_mu = 3J`) moving inside the cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectKinematics {
    pub j_mu: f64,
    pub k: f64,
}

impl DefectKinematics {
    pub fn energy(&self) -> f64 {
        -2.0 * self.j_mu * self.k.cos()
    }

    pub fn group_velocity(&self) -> f64 {
        2.0 * self.j_mu * self.k.sin()
    }
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_momentum(k: f64) -> f64 {
    let mut x = k.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Residual of the energy balance for a trial outgoing monomer momentum.
pub fn collision_residual(k_a: f64, k_t: f64, j_a: f64, j_t: f64, k_a_out: f64) -> f64 {
    j_a * k_a.cos() + j_t * k_t.cos() - j_a * k_a_out.cos() - j_t * (k_a + k_t - k_a_out).cos()
}

/// Outgoing momenta of a monomer–trimer collision.
///
/// With total momentum `K` fixed, the outgoing energy
/// `J_a cos x + J_t cos(K - x)` is the sinusoid `Re[(J_a + J_t e^{iK}) e^{-ix}]`,
/// so its two level-set points are mirror images about `phi = arg(J_a + J_t e^{iK})`.
/// One of them is the incoming momentum; the other is `2 phi - k_a`.
pub fn collision_map(k_a: f64, k_t: f64, j_a: f64, j_t: f64) -> Result<(f64, f64)> {
    if !(j_a > 0.0 && j_t > 0.0) {
        return Err(Error::Domain(format!(
            "hopping rates must be positive, got J_a = {j_a}, J_t = {j_t}"
        )));
    }
    let total = k_a + k_t;
    let amp = j_a + j_t * cis(total);
    let (k_a_out, k_t_out) = if amp.norm() < 1e-14 {
        // Flat energy surface (J_a = J_t, K = pi): exchange is the physical outcome.
        (k_t, k_a)
    } else {
        let phi = amp.arg();
        let ka = 2.0 * phi - k_a;
        (ka, total - ka)
    };
    let (k_a_out, k_t_out) = (wrap_momentum(k_a_out), wrap_momentum(k_t_out));
    if wrap_momentum(k_a_out - k_a).abs() < 1e-8 {
        return Err(Error::DegenerateCollision);
    }
    Ok((k_a_out, k_t_out))
}

/// Time between returns to the initial momentum distribution of two defects
/// on a ring of `l` sites, `(L - 1) / |J_t sin k_t - J_a sin k_a|`.
pub fn revival_time(l: usize, k_a: f64, k_t: f64, j_a: f64, j_t: f64) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!("ring length {l} < 2")));
    }
    let dv = j_t * k_t.sin() - j_a * k_a.sin();
    if dv.abs() < 1e-14 {
        return Err(Error::NoCollision);
    }
    Ok((l - 1) as f64 / dv.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refraction_examples() {
        assert_eq!(refract(PI / 2.0, 0.5).unwrap(), Refraction::Propagating(PI / 2.0));
        assert_eq!(refract(PI / 4.0, 0.5).unwrap(), Refraction::Evanescent);
        let kp = refract(PI / 3.0, 2.0).unwrap().propagating().unwrap();
        assert!((kp - 0.25f64.acos()).abs() < 1e-14);
        // lower band edge is closed symmetrically
        assert_eq!(refract(3.0 * PI / 4.0, 0.5).unwrap(), Refraction::Evanescent);
    }

    #[test]
    fn refraction_domain_errors() {
        assert!(matches!(refract(0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(refract(PI, 0.5), Err(Error::Domain(_))));
        assert!(matches!(refract(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(refract(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scatter_half_alpha_at_band_centre() {
        let r = scatter(PI / 2.0, WallParams::from_alpha(0.5).unwrap()).unwrap();
        assert!((r.rho - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!((r.transmission - 8.0 / 9.0).abs() < 1e-14);
        assert!((r.reflection - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn scatter_uniform_lattice_is_transparent() {
        let wall = WallParams::new(3.0, 3.0).unwrap();
        for i in 1..50 {
            let k = PI * i as f64 / 50.0;
            let r = scatter(k, wall).unwrap();
            assert!((r.transmission - 1.0).abs() < 1e-12, "k = {k}");
            assert!(r.reflection < 1e-12);
        }
    }

    #[test]
    fn scatter_outside_window_reflects_fully() {
        let r = scatter(PI / 4.0, WallParams::from_alpha(0.5).unwrap()).unwrap();
        assert_eq!(r.k_prime, Refraction::Evanescent);
        assert_eq!(r.transmission, 0.0);
        assert_eq!(r.reflection, 1.0);
    }

    #[test]
    fn negative_momentum_maps_by_symmetry() {
        let wall = WallParams::from_alpha(0.7).unwrap();
        let a = scatter(-1.3, wall).unwrap();
        let b = scatter(1.3, wall).unwrap();
        assert_eq!(a.transmission, b.transmission);
    }

    #[test]
    fn windows() {
        let w = transmission_window(0.5).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[0].0 + 2.0 * PI / 3.0).abs() < 1e-12);
        assert!((w[0].1 + PI / 3.0).abs() < 1e-12);
        assert!((w[1].0 - PI / 3.0).abs() < 1e-12);
        assert!((w[1].1 - 2.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(transmission_window(3.0).unwrap(), vec![(-PI, 0.0), (0.0, PI)]);
        let tiny = transmission_window(1e-300).unwrap();
        assert!(tiny.iter().all(|(a, b)| (b - a) < 1e-12));
    }

    #[test]
    fn scan_shapes() {
        let scan = transmission_scan(0.5, 101).unwrap();
        assert_eq!(scan.len(), 101);
        for s in &scan {
            if s.k < PI / 3.0 - 1e-9 || s.k > 2.0 * PI / 3.0 + 1e-9 {
                assert_eq!(s.transmission, 0.0);
            }
        }
        // the grid contains pi/2 (i = 50)
        assert!((scan[50].k - PI / 2.0).abs() < 1e-14);
        assert!((scan[50].transmission - 8.0 / 9.0).abs() < 1e-12);
        assert!(transmission_scan(2.0, 64).unwrap().iter().all(|s| s.transmission > 0.0));
        assert!(transmission_scan(1.0, 2).is_ok());
        assert!(transmission_scan(1.0, 1).is_err());
    }

    #[test]
    fn collision_equal_rates_exchange() {
        let (a, t) = collision_map(0.3, -1.1, 2.5, 2.5).unwrap();
        assert!((a + 1.1).abs() < 1e-12);
        assert!((t - 0.3).abs() < 1e-12);
    }

    #[test]
    fn collision_comoving_is_degenerate() {
        assert_eq!(collision_map(0.7, 0.7, 2.0, 2.0), Err(Error::DegenerateCollision));
        // equal group velocities with unequal rates
        let k_a: f64 = 1.0;
        let k_t = (2.0 * k_a.sin() / 3.0).asin();
        assert_eq!(collision_map(k_a, k_t, 2.0, 3.0), Err(Error::DegenerateCollision));
    }

    #[test]
    fn revival_examples() {
        let tc = revival_time(64, 13.0 * PI / 16.0, -9.0 * PI / 16.0, 2.0, 3.0).unwrap();
        assert!((tc * 3.0 - 46.63).abs() / 46.63 < 5e-3);
        let t2 = revival_time(2, 0.4, -0.9, 2.0, 3.0).unwrap();
        let dv = 3.0 * (-0.9f64).sin() - 2.0 * 0.4f64.sin();
        assert!((t2 - 1.0 / dv.abs()).abs() < 1e-14);
        assert_eq!(revival_time(10, 0.5, 0.5, 1.0, 1.0), Err(Error::NoCollision));
        assert!(revival_time(1, 0.5, 0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn wrap_range() {
        assert!((wrap_momentum(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-14);
        assert_eq!(wrap_momentum(PI), PI);
        assert_eq!(wrap_momentum(-PI), PI);
    }
}
