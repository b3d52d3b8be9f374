//! Beta-variate space-time modulation: the gain diagonal D, the input
//! X = Φ D, and the block-fading channel Y = √(ρ/M)·X H + W.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacity::Scheme;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, ComplexMatrix};
use crate::params::DerivedParams;
use crate::randmat::{sample_beta_eigenvalues, sample_gaussian, sample_isotropic_unitary, UNIT_EIGENVALUE_TOL};
use crate::rng::RngHandle;
use crate::snr_from_db;

/// Nonnegative, nonincreasing diagonal of D in X = Φ D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainDiagonal(Vec<f64>);

impl GainDiagonal {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("gain entries must be finite and >= 0, got {d:?}")));
        }
        if d.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Ordering(format!("gain entries must be nonincreasing, got {d:?}")));
        }
        Ok(Self(d))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn squared_sum(&self) -> f64 {
        self.0.iter().map(|d| d * d).sum()
    }
}

/// Largest admissible gain, √(TN/Q).
pub fn gain_bound(dp: &DerivedParams) -> f64 {
    ((dp.t() * dp.n()) as f64 / dp.q as f64).sqrt()
}

/// Draws D from the capacity-achieving law.
///
/// T >= M + N gives √T on every entry. Otherwise d_i² / (TN/Q) are the
/// ordered eigenvalues of a Beta_M(T - M, M + N - T) matrix; in the
/// singular case (T > N) the leading T - N unit eigenvalues are pinned to 1.
pub fn sample_gain(dp: &DerivedParams, rng: &mut RngHandle) -> GainDiagonal {
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    if !dp.large_mimo {
        return GainDiagonal(vec![(t as f64).sqrt(); m]);
    }
    let beta_n = m + n - t;
    let mut ev = sample_beta_eigenvalues(m, t - m, beta_n, rng)
        .expect("Beta parameters are valid for validated dimensions");
    if beta_n < m {
        for v in ev.iter_mut().take(m - beta_n) {
            debug_assert!((*v - 1.0).abs() < UNIT_EIGENVALUE_TOL);
            *v = 1.0;
        }
    }
    let scale = gain_bound(dp);
    GainDiagonal(ev.into_iter().map(|l| scale * l.sqrt()).collect())
}

/// Gain diagonal for the requested scheme; USTM is √T·I regardless of regime.
pub fn sample_gain_for(dp: &DerivedParams, scheme: Scheme, rng: &mut RngHandle) -> GainDiagonal {
    match scheme {
        Scheme::Bstm => sample_gain(dp, rng),
        Scheme::Ustm => GainDiagonal(vec![(dp.t() as f64).sqrt(); dp.m()]),
    }
}

/// X = Φ D for a Haar Φ on S(T, M).
pub fn compose_input(phi: &ComplexMatrix, d: &GainDiagonal) -> ComplexMatrix {
    let mut x = phi.clone();
    for (mut col, &g) in x.column_iter_mut().zip(d.values()) {
        col *= Complex64::new(g, 0.0);
    }
    x
}

/// BSTM input X = Φ D.
pub fn sample_input(dp: &DerivedParams, rng: &mut RngHandle) -> ComplexMatrix {
    sample_input_for(dp, Scheme::Bstm, rng)
}

pub fn sample_input_for(dp: &DerivedParams, scheme: Scheme, rng: &mut RngHandle) -> ComplexMatrix {
    let phi = sample_isotropic_unitary(dp.t(), dp.m(), rng);
    let d = sample_gain_for(dp, scheme, rng);
    compose_input(&phi, &d)
}

/// One coherence block: Y = √(ρ/M)·X H + W with fresh H (M×N) and W (T×N).
pub fn simulate_channel(x: &ComplexMatrix, n: usize, snr_db: f64, rng: &mut RngHandle) -> ComplexMatrix {
    let (t, m) = x.shape();
    let h = sample_gaussian(m, n, 1.0, rng);
    let w = sample_gaussian(t, n, 1.0, rng);
    let g = (snr_from_db(snr_db) / m as f64).sqrt();
    x * h * Complex64::new(g, 0.0) + w
}

/// Ordered singular values of D H for a fresh pair (D, H).
pub fn noiseless_sv_sample(dp: &DerivedParams, rng: &mut RngHandle) -> Vec<f64> {
    let d = sample_gain(dp, rng);
    let mut h = sample_gaussian(dp.m(), dp.n(), 1.0, rng);
    for (mut row, &g) in h.row_iter_mut().zip(d.values()) {
        row *= Complex64::new(g, 0.0);
    }
    singular_values(&h)
}

/// Ordered singular values of an M×Q matrix of i.i.d. CN(0, TN/Q) entries.
pub fn reference_sv_sample(dp: &DerivedParams, rng: &mut RngHandle) -> Vec<f64> {
    let var = (dp.t() * dp.n()) as f64 / dp.q as f64;
    singular_values(&sample_gaussian(dp.m(), dp.q, var, rng))
}
