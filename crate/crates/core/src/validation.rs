//! Named validation suites driven by the CLI and the acceptance run.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bstm::{compose_input, sample_gain, sample_input, simulate_channel, GainDiagonal};
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::outpdf::{
    cond_pdf_y_given_d_log, cond_sv_pdf_finite_log, cond_sv_pdf_limit_log, first_sv_pdf_log, tail_sv_pdf_log,
};
use crate::params::{derive, derive_tmn, ChannelDims, DerivedParams};
use crate::quad::{integrate, integrate_2d, integrate_to_infinity, QuadOptions};
use crate::randmat::{beta_eig_pdf, sample_isotropic_unitary};
use crate::rng::RngHandle;
use crate::snr_from_db;
use crate::statcheck::{lemma4_suite, lemma5_suite, TestReport};

/// Dimension triples shared by the lemma5 and power suites.
pub const DEFAULT_DIMS: [ChannelDims; 3] =
    [ChannelDims { t: 8, m: 2, n: 4 }, ChannelDims { t: 10, m: 5, n: 100 }, ChannelDims { t: 4, m: 2, n: 3 }];

/// (m, p, n) cases of the lemma4 suite.
pub const DEFAULT_LEMMA4_CASES: [(usize, usize, usize); 3] = [(2, 3, 2), (2, 2, 1), (3, 4, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemma4,
    Lemma5,
    Power,
    DensityNormalization,
    PdfOracle,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Lemma4, Suite::Lemma5, Suite::Power, Suite::DensityNormalization, Suite::PdfOracle, Suite::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma4 => "lemma4",
            Suite::Lemma5 => "lemma5",
            Suite::Power => "power",
            Suite::DensityNormalization => "density-normalization",
            Suite::PdfOracle => "pdf-oracle",
            Suite::Convergence => "convergence",
        }
    }

    /// Sample count used when none is given.
    pub fn default_n(self) -> usize {
        match self {
            Suite::Lemma4 | Suite::Lemma5 => 10_000,
            Suite::Power => 100_000,
            Suite::PdfOracle => 20,
            Suite::DensityNormalization | Suite::Convergence => 0,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown suite '{s}'")))
    }
}

pub fn run_suite(suite: Suite, n: Option<usize>, rng: &RngHandle) -> Result<Vec<TestReport>> {
    let n = n.unwrap_or(suite.default_n());
    match suite {
        Suite::Lemma4 => lemma4_suite(&DEFAULT_LEMMA4_CASES, n, rng),
        Suite::Lemma5 => lemma5_suite(&DEFAULT_DIMS, n, rng),
        Suite::Power => power_suite(&DEFAULT_DIMS, n, rng),
        Suite::DensityNormalization => density_normalization_suite(),
        Suite::PdfOracle => pdf_oracle_suite(n, rng),
        Suite::Convergence => convergence_suite(),
    }
}

const POWER_CHUNK: usize = 4096;

/// Relative deviation of the Monte Carlo mean of tr(X Xᴴ) from T M.
pub fn power_suite(dims_list: &[ChannelDims], n: usize, rng: &RngHandle) -> Result<Vec<TestReport>> {
    if n == 0 {
        return Err(Error::EmptySample("power suite needs n >= 1".into()));
    }
    dims_list
        .iter()
        .enumerate()
        .map(|(i, &dims)| {
            let dp = derive(dims)?;
            let case_rng = rng.split(i as u64);
            let chunks = n.div_ceil(POWER_CHUNK);
            let sums: Vec<f64> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut r = case_rng.split(c as u64);
                    let len = POWER_CHUNK.min(n - c * POWER_CHUNK);
                    (0..len).map(|_| sample_input(&dp, &mut r).norm_squared()).sum()
                })
                .collect();
            let mean = sums.iter().sum::<f64>() / n as f64;
            let target = (dims.t * dims.m) as f64;
            Ok(TestReport::bound(
                format!("power T={} M={} N={} mean tr(XX^H) = {mean:.6}", dims.t, dims.m, dims.n),
                (mean / target - 1.0).abs(),
                0.01,
            )
            .with_rng(&case_rng)
            .with_samples(n))
        })
        .collect()
}

fn opts(abs_tol: f64, rel_tol: f64) -> QuadOptions {
    QuadOptions { abs_tol, rel_tol, max_intervals: 4000 }
}

/// Quadrature normalization of the closed-form densities with at most two free variables.
pub fn density_normalization_suite() -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for p in 1..=6 {
        for n in 1..=6 {
            let r = integrate(|x| beta_eig_pdf(1, p, n, &[x]).unwrap_or(0.0), 0.0, 1.0, opts(1e-13, 1e-12));
            out.push(TestReport::bound(format!("beta_eig_pdf m=1 p={p} n={n}"), (r.value - 1.0).abs(), 1e-6));
        }
    }
    let r = integrate(|x| beta_eig_pdf(2, 2, 1, &[x]).unwrap_or(0.0), 0.0, 1.0, opts(1e-13, 1e-12));
    out.push(TestReport::bound("beta_eig_pdf m=2 p=2 n=1", (r.value - 1.0).abs(), 1e-6));
    let r = integrate_2d(
        |a1, a2| beta_eig_pdf(2, 2, 2, &[a1, a2]).unwrap_or(0.0),
        0.0,
        1.0,
        |_| 0.0,
        |a1| a1,
        opts(1e-10, 1e-8),
    );
    out.push(TestReport::bound("beta_eig_pdf m=2 p=2 n=2", (r.value - 1.0).abs(), 1e-3));

    for (t, m, n, snr) in [(4, 1, 3, 3.0), (2, 1, 1, 10.0), (10, 1, 5, 30.0)] {
        let dp = derive_tmn(t, m, n)?;
        let r = integrate_to_infinity(
            |a| first_sv_pdf_log(&[a], &dp, snr).map(|v| v.density()).unwrap_or(0.0),
            0.0,
            opts(1e-13, 1e-12),
        );
        out.push(TestReport::bound(
            format!("first_sv_pdf T={t} M={m} N={n} {snr} dB"),
            (r.value - 1.0).abs(),
            1e-8,
        ));
    }
    for (t, m, n) in [(2, 1, 2), (2, 1, 5), (6, 1, 2)] {
        let dp = derive_tmn(t, m, n)?;
        let r = integrate_to_infinity(
            |a| tail_sv_pdf_log(&[a], &dp).map(|v| v.density()).unwrap_or(0.0),
            0.0,
            opts(1e-13, 1e-12),
        );
        out.push(TestReport::bound(format!("tail_sv_pdf T={t} M={m} N={n}"), (r.value - 1.0).abs(), 1e-8));
    }
    for (n, d, snr) in [(2, 1.2, 10.0), (3, 0.8, 5.0), (2, 1.9, 20.0)] {
        let dp = derive_tmn(2, 1, n)?;
        let v = finite_sv_mass(&dp, d, snr)?;
        out.push(TestReport::bound(
            format!("cond_sv_pdf_finite T=2 M=1 N={n} d={d} {snr} dB"),
            (v - 1.0).abs(),
            1e-3,
        ));
    }
    Ok(out)
}

/// Mass of the T = 2, M = 1 finite-SNR conditional density over its ordered support.
fn finite_sv_mass(dp: &DerivedParams, d: f64, snr_db: f64) -> Result<f64> {
    let gain = GainDiagonal::new(vec![d])?;
    let rt = snr_from_db(snr_db);
    // both factors carry Gaussian tails: e^{-σ̃_1²/d²} and e^{-σ̃_2²}
    let x_max = 7.0 * d.max(1.0);
    let y_max = 7.0;
    let r = integrate_2d(
        |x, y| cond_sv_pdf_finite_log(&[x, y], &gain, dp, snr_db).map(|v| v.density()).unwrap_or(0.0),
        0.0,
        x_max,
        |_| 0.0,
        |x| (x * rt.sqrt()).min(y_max),
        opts(1e-10, 1e-8),
    );
    Ok(r.value)
}

/// ln of the Stiefel average (1/|S(2,1)|) ∫ f_{Y|X}(Y | φ d) dφ by 2-D
/// quadrature over (|φ_1|², relative phase), from the Gaussian law of Y given X.
pub fn stiefel_oracle_log(y: &crate::ComplexMatrix, d: f64, snr_db: f64) -> f64 {
    let n = y.ncols() as f64;
    let rt = snr_from_db(snr_db);
    let lambda = rt * d * d / (1.0 + rt * d * d);
    let a = y * y.adjoint();
    let (a11, a22, a12) = (a[(0, 0)].re, a[(1, 1)].re, a[(0, 1)]);
    let s1 = singular_values(y)[0].powi(2);
    let r = integrate_2d(
        |u: f64, psi: f64| {
            let cross = 2.0 * (u * (1.0 - u)).sqrt() * (a12 * num_complex::Complex64::from_polar(1.0, psi)).re;
            (lambda * (a11 * u + a22 * (1.0 - u) + cross - s1)).exp()
        },
        0.0,
        1.0,
        |_| 0.0,
        |_| 2.0 * PI,
        opts(1e-14, 1e-11),
    );
    -2.0 * n * PI.ln() - n * (rt * d * d).ln_1p() - y.norm_squared() + lambda * s1 + (r.value / (2.0 * PI)).ln()
}

/// Closed-form f_{Y|D} against the quadrature oracle at T = 2, M = 1, N = 2.
pub fn pdf_oracle_suite(triples: usize, rng: &RngHandle) -> Result<Vec<TestReport>> {
    let dp = derive_tmn(2, 1, 2)?;
    let mut r = rng.split(0);
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        let snr_db = r.random_range(0.0..15.0);
        let d = sample_gain(&dp, &mut r);
        let x = compose_input(&sample_isotropic_unitary(2, 1, &mut r), &d);
        let y = simulate_channel(&x, 2, snr_db, &mut r);
        let closed = cond_pdf_y_given_d_log(&y, &d, &dp, snr_db)?.0;
        let oracle = stiefel_oracle_log(&y, d.values()[0], snr_db);
        worst = worst.max((closed - oracle).exp_m1().abs());
    }
    Ok(vec![TestReport::bound("pdf-oracle T=2 M=1 N=2 max relative error", worst, 1e-5)
        .with_rng(&r)
        .with_samples(triples)])
}

/// SNRs at which the finite-SNR conditional density is compared with its limit.
pub const CONVERGENCE_SNRS_DB: [f64; 3] = [40.0, 50.0, 60.0];

/// |finite − limit| log-density gaps at T = 2, M = 1, N = 2, d = 1.2, σ̃ = (1.3, 0.6).
pub fn convergence_gaps() -> Result<Vec<f64>> {
    let dp = derive_tmn(2, 1, 2)?;
    let d = GainDiagonal::new(vec![1.2])?;
    let svn = [1.3, 0.6];
    let lim = cond_sv_pdf_limit_log(&svn, &d, &dp)?.0;
    CONVERGENCE_SNRS_DB
        .iter()
        .map(|&s| Ok((cond_sv_pdf_finite_log(&svn, &d, &dp, s)?.0 - lim).abs()))
        .collect()
}

pub fn convergence_suite() -> Result<Vec<TestReport>> {
    let g = convergence_gaps()?;
    let monotone = g.windows(2).all(|w| w[1] < w[0]);
    let mut rep = TestReport::bound(
        format!("convergence T=2 M=1 N=2 gaps {:.3e} {:.3e} {:.3e}", g[0], g[1], g[2]),
        g[2],
        1e-2,
    );
    rep.passed &= monotone;
    Ok(vec![rep])
}
