//! Closed-form output densities: the SVD Jacobian, the Stiefel-manifold
//! Itzykson–Zuber integral, the conditional law of Y given D, and the
//! finite-SNR and limiting conditional laws of the normalized singular
//! values.
//!
//! Conventions. `sv` arguments are raw singular values of Y; `svn`
//! arguments are normalized, with the first M entries multiplied by
//! √(M/ρ) and the rest left as is. `sv2` holds squared singular values.
//! All closed forms here need T <= N; for T > N the gains collide and the
//! formulas degenerate, so those inputs are rejected with a regime error.

use serde::{Deserialize, Serialize};

use crate::bstm::GainDiagonal;
use crate::error::{Error, Result};
use crate::linalg::{log_det_positive_entries, singular_values, ComplexMatrix, SignedLogDet};
use crate::params::DerivedParams;
use crate::snr_from_db;
use crate::specfun::{log_gamma, log_multivariate_gamma, log_stiefel_volume};

/// Relative gap below which two squared singular values, squared gains or
/// λ's are treated as coincident.
pub const CONFLUENCE_TOL: f64 = 1e-9;

/// Natural log of a probability density.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogDensity(pub f64);

impl LogDensity {
    pub fn log_value(self) -> f64 {
        self.0
    }

    pub fn density(self) -> f64 {
        self.0.exp()
    }
}

/// Strictly decreasing positive values with squared gaps above [`CONFLUENCE_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValueVector(Vec<f64>);

impl SingularValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_decreasing_squares("singular values", &values)?;
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_decreasing_squares(what: &str, xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("{what} must be positive and finite, got {x}")));
    }
    for w in xs.windows(2) {
        check_gap(what, w[0] * w[0], w[1] * w[1])?;
    }
    Ok(())
}

fn check_decreasing(what: &str, xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("{what} must be positive and finite, got {x}")));
    }
    for w in xs.windows(2) {
        check_gap(what, w[0], w[1])?;
    }
    Ok(())
}

/// `hi` must exceed `lo` by more than the relative confluence tolerance.
fn check_gap(what: &str, hi: f64, lo: f64) -> Result<()> {
    if hi < lo {
        return Err(Error::Ordering(format!("{what} must be strictly decreasing ({hi} <= {lo})")));
    }
    if (hi - lo) <= CONFLUENCE_TOL * hi.abs() {
        return Err(Error::Confluence(format!("{what}: {hi} and {lo} closer than the confluence tolerance")));
    }
    Ok(())
}

fn require_t_le_n(dp: &DerivedParams) -> Result<()> {
    if dp.t() > dp.n() {
        return Err(Error::Regime(format!(
            "closed-form output density needs T <= N (T = {}, N = {})",
            dp.t(),
            dp.n()
        )));
    }
    Ok(())
}

fn check_gains(d: &GainDiagonal, m: usize) -> Result<()> {
    if d.len() != m {
        return Err(Error::Domain(format!("expected {m} gains, got {}", d.len())));
    }
    check_decreasing_squares("gains", d.values())
}

/// Σ_{i<j} ln(x_i - x_j) for decreasing x.
fn log_vandermonde(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            acc += (x[i] - x[j]).ln();
        }
    }
    acc
}

fn squares(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

/// Σ_{i=lo}^{hi} ln Γ(i).
fn log_gamma_range(lo: usize, hi: usize) -> Result<f64> {
    (lo..=hi).map(|i| log_gamma(i as f64).map(|v| v.0)).sum()
}

/// ln of the SVD Jacobian Π σ_i^{2(R_max-R_min)+1} Π_{i<j} (σ_i² - σ_j²)².
pub fn svd_jacobian_log(sv: &[f64], r_max: usize, r_min: usize) -> Result<LogDensity> {
    if sv.len() != r_min || r_max < r_min {
        return Err(Error::Domain(format!(
            "Jacobian needs R_min = {} values and R_max >= R_min (R_max = {r_max}, R_min = {r_min})",
            sv.len()
        )));
    }
    check_decreasing_squares("singular values", sv)?;
    let power = (2 * (r_max - r_min) + 1) as f64;
    let lp: f64 = sv.iter().map(|s| power * s.ln()).sum();
    Ok(LogDensity(lp + 2.0 * log_vandermonde(&squares(sv))))
}

/// Log-entries of the T×T matrix with rows e^{λ_i σ_j²} (i <= M) and
/// σ_j^{2(T-i)} (i > M).
fn izuber_log_matrix(sv2: &[f64], lambda: &[f64]) -> nalgebra::DMatrix<f64> {
    let t = sv2.len();
    let m = lambda.len();
    nalgebra::DMatrix::from_fn(t, t, |i, j| {
        if i < m {
            lambda[i] * sv2[j]
        } else {
            (t - 1 - i) as f64 * sv2[j].ln()
        }
    })
}

/// Signed log of det of [`izuber_log_matrix`].
///
/// Column j is first divided by e^{λ_M σ_j²}. At high SNR all exponential
/// rows agree to leading order, and only their differences (λ_i - λ_M)σ_j²
/// stay of moderate size; without this step the generic equilibration
/// lets the polynomial rows set the column scale and the exponential rows
/// become numerically identical.
fn izuber_det(sv2: &[f64], lambda: &[f64]) -> SignedLogDet {
    let lmin = lambda[lambda.len() - 1];
    let mut a = izuber_log_matrix(sv2, lambda);
    let mut shift = 0.0;
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col.add_scalar_mut(-lmin * sv2[j]);
        shift += lmin * sv2[j];
    }
    let d = log_det_positive_entries(&a);
    SignedLogDet { log_abs: d.log_abs + shift, sign: d.sign }
}

/// Signed log of ∫_{S(T,M)} exp(tr(Δ Φ Λ Φᴴ)) dΦ with Δ = diag(sv2) and
/// Λ = diag(lambda), in closed form.
pub fn izuber_stiefel_log_det(sv2: &[f64], lambda: &[f64]) -> Result<SignedLogDet> {
    let (t, m) = (sv2.len(), lambda.len());
    if m == 0 || m > t {
        return Err(Error::Domain(format!("need 1 <= M <= T (T = {t}, M = {m})")));
    }
    if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Domain(format!("lambda {l} outside (0, 1)")));
    }
    check_decreasing("squared singular values", sv2)?;
    check_decreasing("lambda", lambda)?;
    let det = izuber_det(sv2, lambda);
    let log_abs = log_stiefel_volume(t, m, false)?.0
        + det.log_abs
        + (m as f64 - t as f64) * lambda.iter().map(|l| l.ln()).sum::<f64>()
        + log_gamma_range(t - m + 1, t)?
        - log_vandermonde(sv2)
        - log_vandermonde(lambda);
    Ok(SignedLogDet { log_abs, sign: det.sign })
}

/// ln f_{Y|D}(Y | D) for the channel Y = √(ρ/M)·Φ D H + W with Φ Haar.
pub fn cond_pdf_y_given_d_log(
    y: &ComplexMatrix,
    d: &GainDiagonal,
    dp: &DerivedParams,
    snr_db: f64,
) -> Result<LogDensity> {
    require_t_le_n(dp)?;
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    if y.shape() != (t, n) {
        return Err(Error::Domain(format!("Y must be {t}×{n}, got {:?}", y.shape())));
    }
    check_gains(d, m)?;
    let sv = singular_values(y);
    let sv2 = squares(&sv);
    check_decreasing("squared singular values of Y", &sv2)?;
    let rt = snr_from_db(snr_db) / m as f64;
    let g2 = squares(d.values());
    let lambda: Vec<f64> = g2.iter().map(|&x| rt * x / (1.0 + rt * x)).collect();
    // λ_i - λ_j = ρ̃(d_i² - d_j²) / ((1 + ρ̃d_i²)(1 + ρ̃d_j²)) without cancellation
    let mut log_lambda_gaps = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            log_lambda_gaps += rt.ln() + (g2[i] - g2[j]).ln() - (1.0 + rt * g2[i]).ln() - (1.0 + rt * g2[j]).ln();
        }
    }
    let det = izuber_det(&sv2, &lambda);
    if det.sign <= 0.0 {
        return Err(Error::Confluence("integral determinant lost its sign; inputs too close to confluence".into()));
    }
    let (tf, mf, nf) = (t as f64, m as f64, n as f64);
    let v = -nf * tf * std::f64::consts::PI.ln() + log_gamma_range(t - m + 1, t)?
        - sv2.iter().sum::<f64>()
        - nf * g2.iter().map(|&x| (rt * x).ln_1p()).sum::<f64>()
        + det.log_abs
        + (mf - tf) * lambda.iter().map(|l| l.ln()).sum::<f64>()
        - log_vandermonde(&sv2)
        - log_lambda_gaps;
    Ok(LogDensity(v))
}

/// Log singular-value density of a k×K (k <= K) matrix with i.i.d.
/// CN(0, variance) entries, at decreasing `a` of length k.
fn gaussian_sv_log_kernel(a: &[f64], big: usize, variance: f64) -> Result<f64> {
    let k = a.len();
    let (kf, bf) = (k as f64, big as f64);
    let norm = kf * 2f64.ln() + (k * (k.saturating_sub(1))) as f64 * std::f64::consts::PI.ln()
        - log_multivariate_gamma(k, bf)?.0
        - log_multivariate_gamma(k, kf)?.0
        - kf * bf * variance.ln();
    let power = (2 * (big - k) + 1) as f64;
    let body: f64 = a.iter().map(|&x| power * x.ln() - x * x / variance).sum();
    let s2 = squares(a);
    let mut vdm = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            vdm += (s2[i] - s2[j]).abs().ln();
        }
    }
    Ok(norm + body + 2.0 * vdm)
}

/// Density chosen for the M largest singular values of Y: those of an
/// M×Q matrix with i.i.d. CN(0, λ̄) entries, λ̄ = NTρ/(MQ).
pub fn first_sv_pdf_log(sv: &[f64], dp: &DerivedParams, snr_db: f64) -> Result<LogDensity> {
    if sv.len() != dp.m() {
        return Err(Error::Domain(format!("expected {} singular values, got {}", dp.m(), sv.len())));
    }
    check_decreasing_squares("singular values", sv)?;
    Ok(LogDensity(first_sv_log_kernel(sv, dp, snr_db)?))
}

/// [`first_sv_pdf_log`] without ordering checks; symmetric in its arguments.
pub fn first_sv_log_kernel(sv: &[f64], dp: &DerivedParams, snr_db: f64) -> Result<f64> {
    let lbar = (dp.n() * dp.t()) as f64 * snr_from_db(snr_db) / (dp.m() * dp.q) as f64;
    gaussian_sv_log_kernel(sv, dp.q, lbar)
}

/// Density chosen for the remaining R_min - M singular values: those of an
/// (N-M)×(T-M) standard complex Gaussian matrix.
pub fn tail_sv_pdf_log(sv: &[f64], dp: &DerivedParams) -> Result<LogDensity> {
    let k = dp.r_min - dp.m();
    if sv.len() != k {
        return Err(Error::Domain(format!("expected {k} tail singular values, got {}", sv.len())));
    }
    if k == 0 {
        return Ok(LogDensity(0.0));
    }
    check_decreasing_squares("singular values", sv)?;
    Ok(LogDensity(tail_sv_log_kernel(sv, dp)?))
}

/// [`tail_sv_pdf_log`] without ordering checks; symmetric in its arguments.
pub fn tail_sv_log_kernel(sv: &[f64], dp: &DerivedParams) -> Result<f64> {
    if sv.is_empty() {
        return Ok(0.0);
    }
    gaussian_sv_log_kernel(sv, dp.r_max - dp.m(), 1.0)
}

fn check_normalized(svn: &[f64], dp: &DerivedParams) -> Result<()> {
    let (t, m) = (dp.t(), dp.m());
    if svn.len() != t {
        return Err(Error::Domain(format!("expected {t} normalized singular values, got {}", svn.len())));
    }
    check_decreasing_squares("leading normalized singular values", &svn[..m])?;
    check_decreasing_squares("trailing singular values", &svn[m..])?;
    Ok(())
}

/// Conditional density of the normalized singular values σ̃ given D at finite SNR.
///
/// The support is σ̃_1 > … > σ̃_M, σ̃_{M+1} > … > σ̃_T and
/// σ̃_M √(ρ/M) > σ̃_{M+1}, i.e. the raw singular values are ordered.
pub fn cond_sv_pdf_finite_log(
    svn: &[f64],
    d: &GainDiagonal,
    dp: &DerivedParams,
    snr_db: f64,
) -> Result<LogDensity> {
    require_t_le_n(dp)?;
    check_normalized(svn, dp)?;
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    check_gains(d, m)?;
    let rt = snr_from_db(snr_db) / m as f64;
    let s2 = squares(svn);
    // raw squared singular values
    let raw: Vec<f64> = s2.iter().enumerate().map(|(i, &x)| if i < m { rt * x } else { x }).collect();
    if t > m {
        check_gap("raw singular values", raw[m - 1], raw[m])?;
    }
    let g2 = squares(d.values());
    let lambda: Vec<f64> = g2.iter().map(|&x| rt * x / (1.0 + rt * x)).collect();
    let (tf, mf, nf) = (t as f64, m as f64, n as f64);

    let mut v = tf * 2f64.ln() - s2[m..].iter().sum::<f64>()
        - log_gamma_range(n - t + 1, n)?
        - log_gamma_range(1, t - m)?;
    v += (tf - mf) * g2.iter().map(|&x| (1.0 / (rt * x)).ln_1p()).sum::<f64>();
    v -= (nf - mf + 1.0) * g2.iter().map(|&x| (x + 1.0 / rt).ln()).sum::<f64>();
    v += log_vandermonde(&s2[..m]) + log_vandermonde(&s2[m..]);
    for i in 0..m {
        for j in m..t {
            v += (s2[i] - s2[j] / rt).ln();
        }
    }
    // c_ρ(σ̃) = e^{-ρ̃ Σ_{i<=M} σ̃_i²} det(M)
    let det = izuber_det(&raw, &lambda);
    if det.sign <= 0.0 {
        return Err(Error::Confluence("integral determinant lost its sign; inputs too close to confluence".into()));
    }
    v += det.log_abs - raw[..m].iter().sum::<f64>();
    v += (2.0 * (nf - tf) + 1.0) * svn.iter().map(|x| x.ln()).sum::<f64>();
    v -= log_vandermonde(&g2);
    Ok(LogDensity(v))
}

/// Pointwise ρ → ∞ limit of [`cond_sv_pdf_finite_log`], g₁(σ̃_1..σ̃_M)·g₂(σ̃_{M+1}..σ̃_T).
pub fn cond_sv_pdf_limit_log(svn: &[f64], d: &GainDiagonal, dp: &DerivedParams) -> Result<LogDensity> {
    require_t_le_n(dp)?;
    check_normalized(svn, dp)?;
    check_gains(d, dp.m())?;
    Ok(LogDensity(limit_g1_log(&svn[..dp.m()], d, dp)? + limit_g2_log(&svn[dp.m()..], dp)?))
}

/// ln g₁: conditional density of the singular values of D H given D.
pub fn limit_g1_log(svn: &[f64], d: &GainDiagonal, dp: &DerivedParams) -> Result<f64> {
    let (m, n) = (dp.m(), dp.n());
    let (mf, nf) = (m as f64, n as f64);
    let s2 = squares(svn);
    let g2 = squares(d.values());
    let l_tilde = nalgebra::DMatrix::from_fn(m, m, |i, j| -s2[j] / g2[i]);
    let det = log_det_positive_entries(&l_tilde);
    if det.sign <= 0.0 {
        return Err(Error::Confluence("limit determinant lost its sign; inputs too close to confluence".into()));
    }
    let mut v = mf * 2f64.ln() + det.log_abs
        + (2.0 * (nf - mf) + 1.0) * svn.iter().map(|x| x.ln()).sum::<f64>()
        - nf * g2.iter().map(|x| x.ln()).sum::<f64>()
        - log_gamma_range(n - m + 1, n)?;
    for i in 0..m {
        for j in i + 1..m {
            v += (s2[i] - s2[j]).ln() - (g2[i] - g2[j]).ln() + g2[i].ln() + g2[j].ln();
        }
    }
    Ok(v)
}

/// ln g₂: singular-value density of an independent (T-M)×(N-M) Gaussian.
pub fn limit_g2_log(svn: &[f64], dp: &DerivedParams) -> Result<f64> {
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    if svn.len() != t - m {
        return Err(Error::Domain(format!("expected {} trailing values, got {}", t - m, svn.len())));
    }
    if svn.is_empty() {
        return Ok(0.0);
    }
    let s2 = squares(svn);
    Ok((t - m) as f64 * 2f64.ln() - s2.iter().sum::<f64>()
        + (2.0 * (n as f64 - t as f64) + 1.0) * svn.iter().map(|x| x.ln()).sum::<f64>()
        + 2.0 * log_vandermonde(&s2)
        - log_gamma_range(1, t - m)?
        - log_gamma_range(n - t + 1, n - m)?)
}

/// Normalizes raw singular values: the first M are scaled by √(M/ρ).
pub fn normalize_singular_values(sv: &[f64], m: usize, snr_db: f64) -> Vec<f64> {
    let s = (m as f64 / snr_from_db(snr_db)).sqrt();
    sv.iter().enumerate().map(|(i, &x)| if i < m { x * s } else { x }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_tmn;
    use crate::quad::{integrate, integrate_to_infinity, QuadOptions};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn jacobian_examples() {
        assert_abs_diff_eq!(svd_jacobian_log(&[2.0], 3, 1).unwrap().0, 5.0 * 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(svd_jacobian_log(&[2.0, 1.0], 2, 2).unwrap().0, 18f64.ln(), epsilon = 1e-14);
        assert!(matches!(svd_jacobian_log(&[1.0, 1.0 - 1e-14], 2, 2), Err(Error::Confluence(_))));
        assert!(matches!(svd_jacobian_log(&[1.0, 2.0], 2, 2), Err(Error::Ordering(_))));
    }

    // Direct 1-D quadrature over the unit sphere of C²: |φ_1|² is uniform on [0, 1].
    fn sphere_integral(s2: f64, t2: f64, l: f64) -> f64 {
        let vol = 2.0 * PI * PI;
        let r = integrate(|u| (l * (s2 * u + t2 * (1.0 - u))).exp(), 0.0, 1.0, QuadOptions::default());
        vol * r.value
    }

    #[test]
    fn izuber_matches_sphere_quadrature() {
        for &(s2, t2, l) in &[(3.0, 1.0, 0.5), (10.0, 0.2, 0.9), (1.5, 1.4, 0.01), (40.0, 39.0, 0.99)] {
            let closed = izuber_stiefel_log_det(&[s2, t2], &[l]).unwrap();
            assert_eq!(closed.sign, 1.0);
            let oracle = sphere_integral(s2, t2, l);
            assert!((closed.value() - oracle).abs() / oracle < 1e-6, "{} vs {oracle}", closed.value());
        }
    }

    #[test]
    fn izuber_small_lambda_limit() {
        // at T = 2 the determinant cancels to O(λ); larger T cancel to O(λ^{M(T-M)})
        for &(sv2, lam) in &[(&[3.0, 1.0][..], &[1e-6][..]), (&[4.0, 2.5, 1.0][..], &[1e-4][..])] {
            let v = izuber_stiefel_log_det(sv2, lam).unwrap();
            let vol = log_stiefel_volume(sv2.len(), lam.len(), false).unwrap().0;
            assert!((v.log_abs - vol).abs() < 1e-3, "{} vs {vol}", v.log_abs);
        }
    }

    #[test]
    fn izuber_errors() {
        assert!(matches!(izuber_stiefel_log_det(&[2.0, 1.0], &[1.5]), Err(Error::Domain(_))));
        assert!(matches!(izuber_stiefel_log_det(&[3.0, 2.0, 1.0], &[0.5, 0.5]), Err(Error::Confluence(_))));
        assert!(matches!(izuber_stiefel_log_det(&[1.0, 2.0], &[0.5]), Err(Error::Ordering(_))));
    }

    fn diag_y(sv: &[f64], n: usize) -> ComplexMatrix {
        let t = sv.len();
        ComplexMatrix::from_fn(t, n, |i, j| if i == j { Complex64::new(sv[i], 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    // f_σ̃(σ̃|D) = |S̃(T,T)| |S(N,T)| f_{Y|D} J(σ) ρ̃^{M/2}, σ_i = √ρ̃ σ̃_i for i <= M.
    fn composed(svn: &[f64], d: &GainDiagonal, dp: &DerivedParams, snr_db: f64) -> f64 {
        let (t, m, n) = (dp.t(), dp.m(), dp.n());
        let rt = snr_from_db(snr_db) / m as f64;
        let sv: Vec<f64> = svn.iter().enumerate().map(|(i, &x)| if i < m { x * rt.sqrt() } else { x }).collect();
        let y = diag_y(&sv, n);
        log_stiefel_volume(t, t, true).unwrap().0
            + log_stiefel_volume(n, t, false).unwrap().0
            + cond_pdf_y_given_d_log(&y, d, dp, snr_db).unwrap().0
            + svd_jacobian_log(&sv, n, t).unwrap().0
            + 0.5 * m as f64 * rt.ln()
    }

    #[test]
    fn finite_sv_density_matches_composition() {
        let cases: [(usize, usize, usize, Vec<f64>, Vec<f64>, f64); 4] = [
            (2, 1, 2, vec![1.3, 0.6], vec![1.2], 10.0),
            (2, 1, 3, vec![1.3, 0.6], vec![1.2], 7.0),
            (3, 1, 3, vec![1.5, 1.1, 0.7], vec![1.4], 6.0),
            (4, 2, 5, vec![1.5, 1.1, 0.7, 0.3], vec![1.4, 0.9], 4.77),
        ];
        for (t, m, n, svn, d, snr) in cases {
            let dp = derive_tmn(t, m, n).unwrap();
            let d = GainDiagonal::new(d).unwrap();
            let a = cond_sv_pdf_finite_log(&svn, &d, &dp, snr).unwrap().0;
            let b = composed(&svn, &d, &dp, snr);
            assert!((a - b).abs() < 1e-9, "({t},{m},{n}): {a} vs {b}");
        }
    }

    #[test]
    fn frozen_conditional_value() {
        // Independent double-precision evaluation: T=2, M=1, N=2, σ̃ = (1.3, 0.6), d = 1.2, ρ̃ = 10.
        let dp = derive_tmn(2, 1, 2).unwrap();
        let d = GainDiagonal::new(vec![1.2]).unwrap();
        let v = cond_sv_pdf_finite_log(&[1.3, 0.6], &d, &dp, 10.0).unwrap().density();
        assert_abs_diff_eq!(v, 0.541_832_307_617_902_9, epsilon = 1e-12);
    }

    #[test]
    fn conditional_pdf_regime_and_confluence() {
        let dp = derive_tmn(4, 2, 3).unwrap();
        let d = GainDiagonal::new(vec![2.0, 1.0]).unwrap();
        let y = ComplexMatrix::identity(4, 3);
        assert!(matches!(cond_pdf_y_given_d_log(&y, &d, &dp, 10.0), Err(Error::Regime(_))));
        let dp = derive_tmn(4, 2, 4).unwrap();
        let y = diag_y(&[3.0, 2.0, 1.0, 0.5], 4);
        let d_eq = GainDiagonal::new(vec![1.5, 1.5]).unwrap();
        assert!(matches!(cond_pdf_y_given_d_log(&y, &d_eq, &dp, 10.0), Err(Error::Confluence(_))));
        assert!(cond_pdf_y_given_d_log(&y, &d, &dp, 10.0).unwrap().0.is_finite());
    }

    #[test]
    fn first_sv_density_m1_normalizes() {
        let dp = derive_tmn(4, 1, 3).unwrap();
        let r = integrate_to_infinity(|a| first_sv_pdf_log(&[a], &dp, 3.0).map(|v| v.density()).unwrap_or(0.0), 0.0, QuadOptions::default());
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn first_sv_density_chi_form() {
        // T=2, M=1, N=1: Q = 1, λ̄ = 2ρ; a² / λ̄ ~ Exp(1) so f(a) = 2a/λ̄ e^{-a²/λ̄}.
        let dp = derive_tmn(2, 1, 1).unwrap();
        let snr_db = 5.0;
        let lbar = 2.0 * snr_from_db(snr_db);
        for &x in &[0.1, 0.7, 1.9] {
            let a = lbar.sqrt() * x;
            let want = (2.0 * a / lbar * (-a * a / lbar).exp()).ln();
            assert_abs_diff_eq!(first_sv_pdf_log(&[a], &dp, snr_db).unwrap().0, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_sv_density_scaling() {
        let dp = derive_tmn(10, 2, 5).unwrap();
        let a = [7.0, 3.0];
        let base = first_sv_pdf_log(&a, &dp, 10.0).unwrap().0;
        let scaled = first_sv_pdf_log(&[14.0, 6.0], &dp, 10.0 + 10.0 * 4f64.log10()).unwrap().0;
        assert_abs_diff_eq!(scaled, base - 2.0 * 2f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn tail_density() {
        let dp = derive_tmn(2, 1, 2).unwrap();
        for &a in &[0.2, 1.0, 2.3] {
            assert_abs_diff_eq!(tail_sv_pdf_log(&[a], &dp).unwrap().density(), 2.0 * a * (-a * a).exp(), epsilon = 1e-14);
        }
        let r = integrate_to_infinity(|a| tail_sv_pdf_log(&[a], &dp).unwrap().density(), 0.0, QuadOptions::default());
        assert!((r.value - 1.0).abs() < 1e-8);
        let dp = derive_tmn(2, 1, 1).unwrap();
        assert_eq!(tail_sv_pdf_log(&[], &dp).unwrap().0, 0.0);
    }

    #[test]
    fn limit_factors() {
        let dp = derive_tmn(3, 1, 4).unwrap();
        let tail = [1.1, 0.4];
        let g2 = limit_g2_log(&tail, &dp).unwrap();
        assert_abs_diff_eq!(g2, tail_sv_pdf_log(&tail, &dp).unwrap().0, epsilon = 1e-12);
        // M = 1: density of d·|h| with h a 1×N standard Gaussian row.
        let d = GainDiagonal::new(vec![1.7]).unwrap();
        let s: f64 = 2.2;
        let d2: f64 = 1.7 * 1.7;
        let want = (2.0 * s.powi(2 * 4 - 1) / (d2.powi(4) * 6.0) * (-s * s / d2).exp()).ln();
        assert_abs_diff_eq!(limit_g1_log(&[s], &d, &dp).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn finite_approaches_limit() {
        let dp = derive_tmn(2, 1, 2).unwrap();
        let d = GainDiagonal::new(vec![1.2]).unwrap();
        let svn = [1.3, 0.6];
        let lim = cond_sv_pdf_limit_log(&svn, &d, &dp).unwrap().0;
        let gaps: Vec<f64> = [40.0, 50.0, 60.0]
            .iter()
            .map(|&s| (cond_sv_pdf_finite_log(&svn, &d, &dp, s).unwrap().0 - lim).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-2, "{gaps:?}");

        let dp = derive_tmn(4, 2, 5).unwrap();
        let d = GainDiagonal::new(vec![1.4, 0.9]).unwrap();
        let svn = [1.5, 1.1, 0.7, 0.3];
        let lim = cond_sv_pdf_limit_log(&svn, &d, &dp).unwrap().0;
        let fin = cond_sv_pdf_finite_log(&svn, &d, &dp, 80.0).unwrap().0;
        assert!((fin - lim).abs() < 1e-4, "{fin} vs {lim}");
    }

    #[test]
    fn normalized_support_is_raw_ordering() {
        let dp = derive_tmn(2, 1, 2).unwrap();
        let d = GainDiagonal::new(vec![1.2]).unwrap();
        // σ̃_2 > σ̃_1 is allowed as long as √ρ̃ σ̃_1 > σ̃_2.
        assert!(cond_sv_pdf_finite_log(&[0.5, 0.9], &d, &dp, 10.0).is_ok());
        assert!(matches!(cond_sv_pdf_finite_log(&[0.1, 0.9], &d, &dp, 10.0), Err(Error::Ordering(_))));
    }

    #[test]
    fn log_det_matrix_layout() {
        let m = izuber_log_matrix(&[4.0, 2.0, 1.0], &[0.5]);
        let want = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 4f64.ln(), 2f64.ln(), 0.0, 0.0, 0.0, 0.0]);
        assert!((m - want).abs().max() < 1e-15);
    }
}
