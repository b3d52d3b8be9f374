//! Samplers and eigenvalue densities for the complex Gaussian, Wishart,
//! matrix-variate Beta and isotropic (Haar) truncated-unitary ensembles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, upper_cholesky, ComplexMatrix};
use crate::rng::RngHandle;
use crate::specfun::log_multivariate_gamma;

/// Eigenvalues within this distance of 1 count as unit eigenvalues of a singular Beta draw.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

/// m×n matrix of i.i.d. CN(0, variance) entries.
pub fn sample_gaussian(m: usize, n: usize, variance: f64, rng: &mut RngHandle) -> ComplexMatrix {
    let s = (variance / 2.0).sqrt();
    ComplexMatrix::from_fn(m, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

/// A = B Bᴴ with B an m×n matrix of CN(0, scale) entries; singular when n < m.
pub fn sample_wishart(m: usize, n: usize, scale: f64, rng: &mut RngHandle) -> ComplexMatrix {
    let b = sample_gaussian(m, n, scale, rng);
    &b * b.adjoint()
}

/// C = (Tᴴ)⁻¹ A T⁻¹ where A ~ W_m(p, I), B ~ W_m(n, I) and A + B = Tᴴ T
/// with T upper triangular. n < m yields the singular Beta with m - n unit
/// eigenvalues.
pub fn sample_matrix_beta(m: usize, p: usize, n: usize, rng: &mut RngHandle) -> Result<ComplexMatrix> {
    if m == 0 || n == 0 || p < m {
        return Err(Error::Domain(format!("matrix Beta needs p >= m >= 1 and n >= 1 (m = {m}, p = {p}, n = {n})")));
    }
    let a = sample_wishart(m, p, 1.0, rng);
    let b = sample_wishart(m, n, 1.0, rng);
    let t = upper_cholesky(&(&a + &b))?;
    let t_inv = t
        .solve_upper_triangular(&ComplexMatrix::identity(m, m))
        .ok_or_else(|| Error::DegenerateFactorization("triangular factor is singular".into()))?;
    let c = t_inv.adjoint() * a * t_inv;
    Ok((&c + c.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Ordered eigenvalues of a matrix-variate Beta draw.
pub fn sample_beta_eigenvalues(m: usize, p: usize, n: usize, rng: &mut RngHandle) -> Result<Vec<f64>> {
    let mut ev = hermitian_eigenvalues(&sample_matrix_beta(m, p, n, rng)?);
    for v in ev.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(ev)
}

/// T×M matrix with orthonormal columns, Haar-distributed on the Stiefel manifold.
///
/// Orthonormalizes a Gaussian matrix and rotates each column by the phase
/// of the matching diagonal entry of R so that R has a positive diagonal.
pub fn sample_isotropic_unitary(t: usize, m: usize, rng: &mut RngHandle) -> ComplexMatrix {
    assert!(t >= m && m >= 1, "isotropic unitary needs T >= M >= 1");
    let g = sample_gaussian(t, m, 1.0, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let rkk = r[(k, k)];
        let norm = rkk.norm();
        if norm > 0.0 {
            col *= rkk / norm;
        }
    }
    q
}

/// Joint density of the ordered eigenvalues of a Beta_m(p, n) matrix.
///
/// For n >= m `a` holds all m eigenvalues; for n < m it holds the n
/// eigenvalues that are not pinned at 1.
pub fn beta_eig_pdf(m: usize, p: usize, n: usize, a: &[f64]) -> Result<f64> {
    Ok(beta_eig_log_pdf(m, p, n, a)?.exp())
}

pub fn beta_eig_log_pdf(m: usize, p: usize, n: usize, a: &[f64]) -> Result<f64> {
    for w in a.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::Ordering(format!("eigenvalues must be strictly decreasing, got {a:?}")));
        }
    }
    beta_eig_log_kernel(m, p, n, a)
}

/// The density expression without the ordering check.
///
/// The expression is symmetric in its arguments, so integrating it over
/// the full box (0,1)^k and dividing by k! gives the ordered-region integral.
pub fn beta_eig_log_kernel(m: usize, p: usize, n: usize, a: &[f64]) -> Result<f64> {
    if m == 0 || n == 0 || p < m {
        return Err(Error::Domain(format!("Beta eigenvalue pdf needs p >= m >= 1, n >= 1 (m = {m}, p = {p}, n = {n})")));
    }
    let k = n.min(m);
    if a.len() != k {
        return Err(Error::Domain(format!("expected {k} eigenvalues, got {}", a.len())));
    }
    if let Some(x) = a.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain(format!("eigenvalue {x} outside (0, 1)")));
    }
    let (pf, mf) = (p as f64, m as f64);
    let (norm, exp_one_minus) = if n >= m {
        let nf = n as f64;
        let c = (m * (m - 1)) as f64 * PI.ln() - log_multivariate_gamma(m, mf)?.0
            + log_multivariate_gamma(m, pf + nf)?.0
            - log_multivariate_gamma(m, pf)?.0
            - log_multivariate_gamma(m, nf)?.0;
        (c, nf - mf)
    } else {
        let nf = n as f64;
        let c = (n * (n - 1)) as f64 * PI.ln() - log_multivariate_gamma(n, nf)?.0
            + log_multivariate_gamma(n, pf + nf)?.0
            - log_multivariate_gamma(n, mf)?.0
            - log_multivariate_gamma(n, pf + nf - mf)?.0;
        (c, mf - nf)
    };
    let mut acc = norm;
    for &x in a {
        acc += (pf - mf) * x.ln() + exp_one_minus * (1.0 - x).ln();
    }
    for i in 0..k {
        for j in i + 1..k {
            acc += 2.0 * (a[i] - a[j]).abs().ln();
        }
    }
    Ok(acc)
}

/// Real matrix of |entries|², handy for moment checks.
pub fn abs_squared(a: &ComplexMatrix) -> DMatrix<f64> {
    a.map(|z| z.norm_sqr())
}
