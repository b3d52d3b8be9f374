//! High-SNR capacity expansions of the noncoherent block-fading channel.
//!
//! Both BSTM (the capacity-achieving input) and USTM share the pre-log
//! M(1 - M/T); they differ in the additive constant. Expansions truncate the
//! o(1) remainder, so values are approximations only at high SNR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{derive_tmn, DerivedParams};
use crate::snr_from_db;
use crate::specfun::{expected_logdet_wishart, log_multivariate_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Bstm,
    Ustm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityTerm {
    pub label: &'static str,
    pub value: f64,
}

/// Pre-log and additive constant of a high-SNR expansion, with the
/// constant split into its addends in left-to-right order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityBreakdown {
    pub prelog: f64,
    pub constant: f64,
    pub terms: Vec<CapacityTerm>,
}

impl CapacityBreakdown {
    fn from_terms(dp: &DerivedParams, terms: Vec<CapacityTerm>) -> Self {
        let constant = terms.iter().map(|t| t.value).sum();
        Self { prelog: prelog(dp), constant, terms }
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

pub fn prelog(dp: &DerivedParams) -> f64 {
    let (t, m) = (dp.t(), dp.m());
    // M(T - M)/T with a single rounding
    (m * (t - m)) as f64 / t as f64
}

/// c* of the BSTM expansion.
pub fn bstm_constant(dp: &DerivedParams) -> Result<CapacityBreakdown> {
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    let (tf, mf, nf) = (t as f64, m as f64, n as f64);
    let (pf, qf) = (dp.p as f64, dp.q as f64);
    let gamma_ratio = (log_multivariate_gamma(m, mf)?.0 + log_multivariate_gamma(m, qf)?.0
        - log_multivariate_gamma(m, nf)?.0
        - log_multivariate_gamma(m, tf)?.0)
        / tf;
    let terms = vec![
        CapacityTerm { label: "gamma_ratio", value: gamma_ratio },
        CapacityTerm { label: "log_t_over_m", value: prelog(dp) * (tf / mf).ln() },
        CapacityTerm { label: "log_n_over_q", value: mf * qf / tf * (nf / qf).ln() },
        CapacityTerm {
            label: "expected_logdet",
            value: pf / tf * (expected_logdet_wishart(m, n)? - mf),
        },
    ];
    Ok(CapacityBreakdown::from_terms(dp, terms))
}

/// c_U of the USTM expansion.
pub fn ustm_constant(dp: &DerivedParams) -> Result<CapacityBreakdown> {
    let (t, m, n) = (dp.t(), dp.m(), dp.n());
    let (tf, mf) = (t as f64, m as f64);
    let gamma_ratio =
        (log_multivariate_gamma(m, mf)?.0 - log_multivariate_gamma(m, tf)?.0) / tf;
    let terms = vec![
        CapacityTerm { label: "gamma_ratio", value: gamma_ratio },
        CapacityTerm { label: "log_t_over_em", value: prelog(dp) * ((tf / mf).ln() - 1.0) },
        CapacityTerm {
            label: "expected_logdet",
            value: (1.0 - mf / tf) * expected_logdet_wishart(m, n)?,
        },
    ];
    Ok(CapacityBreakdown::from_terms(dp, terms))
}

pub fn constant(dp: &DerivedParams, scheme: Scheme) -> Result<CapacityBreakdown> {
    match scheme {
        Scheme::Bstm => bstm_constant(dp),
        Scheme::Ustm => ustm_constant(dp),
    }
}

/// prelog · ln ρ + constant, in nats per channel use, with ρ = 10^(snr_db/10).
///
/// The result may be nonpositive at low SNR where the expansion says
/// nothing useful; callers that care should check [`expansion_valid`].
pub fn capacity_approx(dp: &DerivedParams, snr_db: f64, scheme: Scheme) -> Result<f64> {
    let b = constant(dp, scheme)?;
    Ok(b.prelog * snr_from_db(snr_db).ln() + b.constant)
}

/// True when the USTM expansion is positive at this SNR.
pub fn expansion_valid(dp: &DerivedParams, snr_db: f64) -> Result<bool> {
    Ok(capacity_approx(dp, snr_db, Scheme::Ustm)? > 0.0)
}

/// Relative rate gain (Ĉ - Ĉ_U) / Ĉ_U of BSTM over USTM.
pub fn gain_ratio(dp: &DerivedParams, snr_db: f64) -> Result<f64> {
    let c = bstm_constant(dp)?;
    let cu = ustm_constant(dp)?;
    let lnrho = snr_from_db(snr_db).ln();
    let cu_hat = cu.prelog * lnrho + cu.constant;
    if !(cu_hat > 0.0) {
        return Err(Error::ApproximationOutOfRange(format!(
            "USTM expansion is {cu_hat} <= 0 at {snr_db} dB; the high-SNR approximation is out of range"
        )));
    }
    if !dp.large_mimo {
        // c* and c_U coincide analytically here.
        return Ok(0.0);
    }
    Ok((c.constant - cu.constant) / cu_hat)
}

/// Limit c_{M,T} of c* - c_U - (M²/2T) ln N as N → ∞.
pub fn asymptotic_gain_constant(t: usize, m: usize) -> Result<f64> {
    if m < 1 || t < 2 || m > t / 2 {
        return Err(Error::Dimension(format!("need 1 <= M <= floor(T/2) (T = {t}, M = {m})")));
    }
    let (tf, mf) = (t as f64, m as f64);
    let tm = tf - mf;
    Ok(log_multivariate_gamma(m, tm)?.0 / tf + mf * tm / tf * (1.0 - tm.ln())
        - mf / (2.0 * tf) * (mf * (std::f64::consts::PI.ln() + 1.0) + 2f64.ln()))
}

/// c* - c_U - (M²/2T) ln N for each N; approaches [`asymptotic_gain_constant`].
pub fn gain_limit_sequence(t: usize, m: usize, ns: &[usize]) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| {
            let dp = derive_tmn(t, m, n)?;
            let diff = bstm_constant(&dp)?.constant - ustm_constant(&dp)?.constant;
            Ok(diff - (m * m) as f64 / (2.0 * t as f64) * (n as f64).ln())
        })
        .collect()
}
