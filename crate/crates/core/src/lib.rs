//! Numerics for noncoherent Rayleigh block-fading MIMO channels at high SNR.
//!
//! The crate covers the capacity constants of Beta-variate and unitary
//! space-time modulation (BSTM/USTM), samplers for the complex Wishart,
//! matrix-variate Beta and isotropic unitary ensembles, the closed-form
//! conditional output densities, and the statistical checks used to
//! validate the distributional identities these rest on.
//!
//! All logarithms are natural; rates are in nats per channel use.

pub mod bstm;
pub mod capacity;
pub mod error;
pub mod linalg;
pub mod outpdf;
pub mod params;
pub mod quad;
pub mod randmat;
pub mod rng;
pub mod specfun;
pub mod statcheck;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use params::{ChannelDims, DerivedParams};
pub use rng::RngHandle;

/// Converts an SNR given in dB to linear scale.
pub fn snr_from_db(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}
