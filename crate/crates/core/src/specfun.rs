//! Real special functions: log-Gamma, digamma, the complex multivariate
//! Gamma function and Stiefel-manifold volumes, all in nats.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the recurrences shift upward before the asymptotic series.
const ASYMPTOTIC_MIN: f64 = 15.0;

// B_{2k} / (2k (2k - 1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k) for k = 1..8
const DIGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// A quantity carried as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue(pub f64);

impl LogValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

fn check_positive(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a finite argument > 0, got {a}")))
    }
}

fn shift_count(a: f64) -> usize {
    if a >= ASYMPTOTIC_MIN {
        0
    } else {
        (ASYMPTOTIC_MIN - a).ceil() as usize
    }
}

/// ln Γ(a) for a > 0.
pub fn log_gamma(a: f64) -> Result<LogValue> {
    check_positive("log_gamma", a)?;
    let shift = shift_count(a);
    let mut prod = 1.0;
    for k in 0..shift {
        prod *= a + k as f64;
    }
    let x = a + shift as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    let lg = (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series;
    Ok(LogValue(lg - prod.ln()))
}

/// Euler's digamma function ψ(a) for a > 0.
pub fn digamma(a: f64) -> Result<f64> {
    check_positive("digamma", a)?;
    let shift = shift_count(a);
    let mut acc = 0.0;
    for k in 0..shift {
        acc -= 1.0 / (a + k as f64);
    }
    let x = a + shift as f64;
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_SERIES {
        series += c * pow;
        pow *= inv2;
    }
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// ln Γ_m(a) = m(m-1)/2 ln π + Σ_{k=1}^m ln Γ(a - k + 1).
pub fn log_multivariate_gamma(m: usize, a: f64) -> Result<LogValue> {
    if m == 0 {
        return Err(Error::Domain("multivariate Gamma needs m >= 1".into()));
    }
    if !(a - m as f64 + 1.0 > 0.0) {
        return Err(Error::Domain(format!(
            "Gamma_{m}({a}) has a factor Gamma({}) outside the domain",
            a - m as f64 + 1.0
        )));
    }
    let mut acc = (m * (m - 1)) as f64 / 2.0 * PI.ln();
    for k in 1..=m {
        acc += log_gamma(a - k as f64 + 1.0)?.0;
    }
    Ok(LogValue(acc))
}

/// E[ln det(H Hᴴ)] for an M×N matrix H with i.i.d. CN(0,1) entries,
/// i.e. Σ_{i=1}^M ψ(N - i + 1).
pub fn expected_logdet_wishart(m: usize, n: usize) -> Result<f64> {
    check_wishart_dims(m, n)?;
    let terms = (1..=m).map(|i| digamma((n - i + 1) as f64)).collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// Harmonic-sum form of [`expected_logdet_wishart`]:
/// -Mγ + Σ_{i=1}^M Σ_{k=1}^{N-i} 1/k.
pub fn expected_logdet_wishart_harmonic(m: usize, n: usize) -> Result<f64> {
    check_wishart_dims(m, n)?;
    // harmonic numbers summed from the small end
    let harmonic = |j: usize| compensated_sum((1..=j).rev().map(|k| 1.0 / k as f64));
    let sum = compensated_sum((1..=m).map(|i| harmonic(n - i)));
    Ok(sum - m as f64 * EULER_GAMMA)
}

/// Neumaier summation.
fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn check_wishart_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        Err(Error::Domain(format!("expected log-det needs 1 <= M <= N (M = {m}, N = {n})")))
    } else {
        Ok(())
    }
}

/// Log-volume of the complex Stiefel manifold S(n, m), or of the reduced
/// submanifold with real nonnegative diagonal when `reduced` is set.
pub fn log_stiefel_volume(n: usize, m: usize, reduced: bool) -> Result<LogValue> {
    if m == 0 || m > n {
        return Err(Error::Domain(format!("Stiefel volume needs n >= m >= 1 (n = {n}, m = {m})")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let mut v = mf * 2f64.ln() + mf * nf * PI.ln() - log_multivariate_gamma(m, nf)?.0;
    if reduced {
        v -= mf * (2.0 * PI).ln();
    }
    Ok(LogValue(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_gamma_known_values() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap().0, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(log_gamma(2.0).unwrap().0, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(log_gamma(5.0).unwrap().0, 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(log_gamma(0.5).unwrap().0, 0.572_364_942_924_700_1, epsilon = 1e-13);
        // ln Γ(101) = ln(100!)
        let ln_fact: f64 = (1..=100).map(|k| (k as f64).ln()).sum();
        assert!((log_gamma(101.0).unwrap().0 - ln_fact).abs() / ln_fact < 1e-13);
    }

    #[test]
    fn log_gamma_recurrence() {
        for &a in &[1e-3, 0.1, 0.5, 1.0, 2.5, 7.3, 14.9, 15.0, 20.0, 123.4, 1e4, 1e6] {
            let lhs = log_gamma(a + 1.0).unwrap().0;
            let rhs = log_gamma(a).unwrap().0 + a.ln();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "a = {a}");
        }
    }

    #[test]
    fn digamma_known_values() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-13);
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-13);
        assert_abs_diff_eq!(digamma(10.0).unwrap(), 2.251_752_589_066_721, epsilon = 1e-13);
        assert_abs_diff_eq!(digamma(0.5).unwrap(), -EULER_GAMMA - 2.0 * 2f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn digamma_recurrence() {
        for &a in &[0.5, 1.0, 2.0, 10.0, 100.0, 1e-2, 14.5, 1e6] {
            let d = digamma(a + 1.0).unwrap() - digamma(a).unwrap();
            assert_abs_diff_eq!(d, 1.0 / a, epsilon = 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_multivariate_gamma(2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(expected_logdet_wishart(3, 2), Err(Error::Domain(_))));
        assert!(matches!(log_stiefel_volume(1, 2, false), Err(Error::Domain(_))));
    }

    #[test]
    fn multivariate_gamma() {
        assert_abs_diff_eq!(log_multivariate_gamma(1, 3.0).unwrap().0, 2f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(log_multivariate_gamma(2, 2.0).unwrap().0, PI.ln(), epsilon = 1e-13);
        // Γ_2(1.5) = π Γ(1.5) Γ(0.5) = π · (√π/2) · √π
        assert_abs_diff_eq!(
            log_multivariate_gamma(2, 1.5).unwrap().0,
            (PI * PI / 2.0).ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn multivariate_gamma_increasing() {
        for m in 1..6 {
            let mut prev = f64::NEG_INFINITY;
            // ln Γ is increasing for a >= ~1.46, so start each factor above that.
            let mut a = m as f64 + 0.5;
            while a < 60.0 {
                let v = log_multivariate_gamma(m, a).unwrap().0;
                assert!(v > prev);
                prev = v;
                a += 0.37;
            }
        }
    }

    #[test]
    fn expected_logdet_examples() {
        assert_abs_diff_eq!(expected_logdet_wishart(1, 1).unwrap(), -EULER_GAMMA, epsilon = 1e-13);
        assert_abs_diff_eq!(expected_logdet_wishart(1, 2).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-13);
        assert_abs_diff_eq!(
            expected_logdet_wishart(2, 3).unwrap(),
            2.5 - 2.0 * EULER_GAMMA,
            epsilon = 1e-13
        );
    }

    #[test]
    fn expected_logdet_two_forms_agree() {
        for n in 1..=200 {
            for m in 1..=n {
                let a = expected_logdet_wishart(m, n).unwrap();
                let b = expected_logdet_wishart_harmonic(m, n).unwrap();
                assert!((a - b).abs() < 1e-12, "M = {m}, N = {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn stiefel_volumes() {
        assert_abs_diff_eq!(log_stiefel_volume(1, 1, false).unwrap().0, (2.0 * PI).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(log_stiefel_volume(1, 1, true).unwrap().0, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            log_stiefel_volume(2, 1, false).unwrap().0,
            (2.0 * PI * PI).ln(),
            epsilon = 1e-13
        );
        // reduced form equals π^{m(n-1)} / Γ_m(n)
        let (n, m) = (5, 3);
        let alt = (m * (n - 1)) as f64 * PI.ln() - log_multivariate_gamma(m, n as f64).unwrap().0;
        assert_abs_diff_eq!(log_stiefel_volume(n, m, true).unwrap().0, alt, epsilon = 1e-12);
    }
}
