//! Thin wrappers around the dense complex linear algebra used throughout the
//! crate. Everything is `faer` underneath.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `e^{i phi}`
pub fn cis(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn from_real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMat {
    Mat::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
}

/// `c * m`
pub fn scaled(m: &CMat, c: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

/// Kronecker product `a ⊗ b` with `a` as the slow index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut s: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].norm());
        }
    }
    s
}

/// Largest entry of `m - m^†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let x = v[j];
        if x == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * x;
        }
    }
    out
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascending, columns
/// of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if h.nrows() == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn unitary_propagator(h: &CMat, t: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = h.nrows();
    let phased = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * cis(-vals[k] * t));
    Ok(&phased * vecs.adjoint())
}

/// Thin singular value decomposition `m = u diag(s) v^†`, singular values in
/// non-increasing order.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Result<Svd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Svd {
            u: zeros(m.nrows(), 0),
            s: Vec::new(),
            v: zeros(m.ncols(), 0),
        });
    }
    let dec = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    Ok(Svd {
        u: dec.U().to_owned(),
        s: dec.S().column_vector().iter().map(|x| x.re).collect(),
        v: dec.V().to_owned(),
    })
}

/// Thin QR decomposition `m = q r`.
pub fn qr(m: &CMat) -> (CMat, CMat) {
    let dec = m.qr();
    (dec.compute_thin_Q(), dec.thin_R().to_owned())
}

/// Partition of `0..n` into the connected components of the sparsity graph
/// of `h` (entries with modulus above `tol` are edges). Each component is
/// returned sorted.
pub fn block_components(h: &CMat, tol: f64) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if h[(i, j)].norm() > tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

pub fn submatrix(h: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| h[(rows[i], cols[j])])
}

/// `‖a b − b a‖_F`
pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    let c = a * b - b * a;
    frobenius(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagator_of_pauli_x() {
        let x = from_real(2, 2, |i, j| if i != j { 1.0 } else { 0.0 });
        let u = unitary_propagator(&x, std::f64::consts::FRAC_PI_2).unwrap();
        // exp(-i pi/2 X) = -i X
        assert!((u[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(u[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let m = Mat::from_fn(3, 5, |i, j| C64::new((i * 5 + j) as f64, (i as f64) - (j as f64)));
        let d = svd(&m).unwrap();
        let k = d.s.len();
        let us = Mat::from_fn(3, k, |i, a| d.u[(i, a)] * d.s[a]);
        let back = &us * d.v.adjoint();
        assert!(max_abs(&(&back - &m)) < 1e-10);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn components_of_block_diagonal() {
        let h = from_real(4, 4, |i, j| if (i < 2) == (j < 2) { 1.0 } else { 0.0 });
        assert_eq!(block_components(&h, 1e-14), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = from_real(2, 2, |i, j| (i * 2 + j) as f64);
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 6);
        assert_eq!(k[(3, 3)], C64::new(3.0, 0.0));
        assert_eq!(k[(4, 1)], C64::new(2.0, 0.0));
    }
}
