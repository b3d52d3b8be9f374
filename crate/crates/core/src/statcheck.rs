//! Kolmogorov–Smirnov checks and the distributional-identity suites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bstm::{noiseless_sv_sample, reference_sv_sample};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, upper_cholesky};
use crate::params::{derive, ChannelDims};
use crate::randmat::{sample_matrix_beta, sample_wishart};
use crate::rng::RngHandle;

/// KS tests pass when the p-value exceeds this level.
pub const KS_LEVEL: f64 = 0.01;

/// Outcome of one statistical or numerical check.
///
/// `seed` and `stream` identify the random stream that produced the
/// samples; re-running with them reproduces `statistic` bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub passed: bool,
    pub n_samples: usize,
    pub seed: u64,
    pub stream: u64,
}

impl TestReport {
    /// A deterministic check that passes when `statistic < threshold`.
    pub fn bound(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            p_value: None,
            passed: statistic < threshold,
            n_samples: 0,
            seed: 0,
            stream: 0,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_rng(mut self, rng: &RngHandle) -> Self {
        self.seed = rng.seed();
        self.stream = rng.stream();
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }
}

/// Survival function of the Kolmogorov distribution, P(K > x).
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form converges fast for small x
        let w = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=6).map(|j| (-((2 * j - 1) as f64).powi(2) * w).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS distance `d` with effective sample size `ne`.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sample KS test; passes when p > 0.01.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample("KS two-sample test needs two nonempty samples".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let p = ks_p_value(d, na * nb / (na + nb));
    Ok(TestReport {
        name: "ks_two_sample".into(),
        statistic: d,
        threshold: KS_LEVEL,
        p_value: Some(p),
        passed: p > KS_LEVEL,
        n_samples: a.len() + b.len(),
        seed: 0,
        stream: 0,
    })
}

/// sup |F_n - F| of the empirical CDF of `a` against `cdf`.
pub fn sup_distance<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySample("sup distance needs a nonempty sample".into()));
    }
    let a = sorted(a);
    let n = a.len() as f64;
    Ok(a.iter().enumerate().fold(0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    }))
}

/// One-sample KS test against a continuous CDF; passes when p > 0.01.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<TestReport> {
    let d = sup_distance(a, cdf)?;
    let p = ks_p_value(d, a.len() as f64);
    Ok(TestReport {
        name: "ks_one_sample".into(),
        statistic: d,
        threshold: KS_LEVEL,
        p_value: Some(p),
        passed: p > KS_LEVEL,
        n_samples: a.len(),
        seed: 0,
        stream: 0,
    })
}

/// Per-index two-sample KS over equal-length sample vectors.
pub fn ks_per_index(label: &str, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<TestReport>> {
    let k = a.first().map(Vec::len).ok_or_else(|| Error::EmptySample(format!("{label}: no draws")))?;
    (0..k)
        .map(|i| {
            let xa: Vec<f64> = a.iter().map(|v| v[i]).collect();
            let xb: Vec<f64> = b.iter().map(|v| v[i]).collect();
            Ok(ks_two_sample(&xa, &xb)?.with_name(format!("{label} [{}]", i + 1)))
        })
        .collect()
}

/// Singular values of D H against those of an M×Q Gaussian with variance TN/Q.
pub fn lemma5_suite(dims_list: &[ChannelDims], n: usize, rng: &RngHandle) -> Result<Vec<TestReport>> {
    if n < 1000 {
        return Err(Error::Domain(format!("lemma5 suite needs n >= 1000, got {n}")));
    }
    let per_case: Vec<Result<Vec<TestReport>>> = dims_list
        .par_iter()
        .enumerate()
        .map(|(i, &dims)| {
            let dp = derive(dims)?;
            let case_rng = rng.split(i as u64);
            let mut r1 = case_rng.split(0);
            let mut r2 = case_rng.split(1);
            let a: Vec<Vec<f64>> = (0..n).map(|_| noiseless_sv_sample(&dp, &mut r1)).collect();
            let b: Vec<Vec<f64>> = (0..n).map(|_| reference_sv_sample(&dp, &mut r2)).collect();
            let label = format!("lemma5 T={} M={} N={} sv", dims.t, dims.m, dims.n);
            Ok(ks_per_index(&label, &a, &b)?
                .into_iter()
                .map(|r| r.with_rng(&case_rng).with_samples(2 * n))
                .collect())
        })
        .collect();
    flatten(per_case)
}

/// Eigenvalues of Tᴴ C T, with Tᴴ T ~ W_m(p+n, I) and C ~ Beta_m(p, n),
/// against those of W_m(p, I).
pub fn lemma4_suite(cases: &[(usize, usize, usize)], n_draws: usize, rng: &RngHandle) -> Result<Vec<TestReport>> {
    let per_case: Vec<Result<Vec<TestReport>>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(m, p, n))| {
            if p < m {
                return Err(Error::Domain(format!("lemma4 case needs p >= m (m = {m}, p = {p})")));
            }
            let case_rng = rng.split(i as u64);
            let mut r1 = case_rng.split(0);
            let mut r2 = case_rng.split(1);
            let a = (0..n_draws)
                .map(|_| {
                    let s = sample_wishart(m, p + n, 1.0, &mut r1);
                    let t = upper_cholesky(&s)?;
                    let c = sample_matrix_beta(m, p, n, &mut r1)?;
                    Ok(hermitian_eigenvalues(&(t.adjoint() * c * t)))
                })
                .collect::<Result<Vec<_>>>()?;
            let b: Vec<Vec<f64>> = (0..n_draws).map(|_| hermitian_eigenvalues(&sample_wishart(m, p, 1.0, &mut r2))).collect();
            let label = format!("lemma4 m={m} p={p} n={n} eig");
            Ok(ks_per_index(&label, &a, &b)?
                .into_iter()
                .map(|r| r.with_rng(&case_rng).with_samples(2 * n_draws))
                .collect())
        })
        .collect();
    flatten(per_case)
}

fn flatten(parts: Vec<Result<Vec<TestReport>>>) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
