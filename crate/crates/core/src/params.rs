//! Channel dimensions and the derived parameters P, Q, R_max, R_min.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coherence time `t`, transmit antennas `m` and receive antennas `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelDims {
    pub t: usize,
    pub m: usize,
    pub n: usize,
}

impl ChannelDims {
    pub fn new(t: usize, m: usize, n: usize) -> Self {
        Self { t, m, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::Dimension(format!("T >= 2 (got T = {})", self.t)));
        }
        if self.m < 1 {
            return Err(Error::Dimension("M >= 1 (got M = 0)".into()));
        }
        if self.n < 1 {
            return Err(Error::Dimension("N >= 1 (got N = 0)".into()));
        }
        if self.m > self.t / 2 {
            return Err(Error::Dimension(format!(
                "M > floor(T/2) (M = {}, T = {})",
                self.m, self.t
            )));
        }
        if self.m > self.n {
            return Err(Error::Dimension(format!("M > N (M = {}, N = {})", self.m, self.n)));
        }
        Ok(())
    }
}

/// Validated dimensions together with the four derived parameters.
///
/// Only obtainable through [`derive`], so holding one means the
/// dimensions satisfy `2 <= T` and `M <= min(N, floor(T/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivedParams {
    dims: ChannelDims,
    /// max(N, T - M)
    pub p: usize,
    /// min(N, T - M)
    pub q: usize,
    /// max(N, T)
    pub r_max: usize,
    /// min(N, T)
    pub r_min: usize,
    /// T < M + N
    pub large_mimo: bool,
}

impl DerivedParams {
    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    pub fn t(&self) -> usize {
        self.dims.t
    }

    pub fn m(&self) -> usize {
        self.dims.m
    }

    pub fn n(&self) -> usize {
        self.dims.n
    }
}

pub fn derive(dims: ChannelDims) -> Result<DerivedParams> {
    dims.validate()?;
    let ChannelDims { t, m, n } = dims;
    let tm = t - m;
    Ok(DerivedParams {
        dims,
        p: n.max(tm),
        q: n.min(tm),
        r_max: n.max(t),
        r_min: n.min(t),
        large_mimo: t < m + n,
    })
}

/// Shorthand for `derive(ChannelDims::new(t, m, n))`.
pub fn derive_tmn(t: usize, m: usize, n: usize) -> Result<DerivedParams> {
    derive(ChannelDims::new(t, m, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_values() {
        let dp = derive_tmn(10, 5, 100).unwrap();
        assert_eq!((dp.p, dp.q, dp.r_max, dp.r_min, dp.large_mimo), (100, 5, 100, 10, true));
        let dp = derive_tmn(8, 2, 4).unwrap();
        assert_eq!((dp.p, dp.q, dp.r_max, dp.r_min, dp.large_mimo), (6, 4, 8, 4, false));
    }

    #[test]
    fn rejects_too_many_transmit_antennas() {
        let err = derive_tmn(4, 3, 4).unwrap_err();
        assert!(matches!(&err, Error::Dimension(msg) if msg.contains("M > floor(T/2)")));
        assert!(matches!(derive_tmn(1, 1, 1), Err(Error::Dimension(_))));
        assert!(matches!(derive_tmn(8, 3, 2), Err(Error::Dimension(msg)) if msg.contains("M > N")));
        assert!(derive_tmn(8, 0, 2).is_err());
    }

    proptest! {
        #[test]
        fn derived_invariants(t in 2usize..200, m_frac in 0.0f64..1.0, n in 1usize..300) {
            let m_max = (t / 2).min(n);
            let m = 1 + ((m_max - 1) as f64 * m_frac) as usize;
            let dp = derive_tmn(t, m, n).unwrap();
            prop_assert_eq!(dp.p * dp.q, n * (t - m));
            prop_assert_eq!(dp.p + dp.q, n + t - m);
            prop_assert!(dp.r_min >= dp.q && dp.r_max >= dp.p);
            prop_assert_eq!(dp.large_mimo, t < m + n);
            if dp.large_mimo {
                prop_assert_eq!(dp.q, t - m);
                prop_assert_eq!(dp.p, n);
            }
            prop_assert_eq!(derive_tmn(t, m, n).unwrap(), dp);
        }
    }
}
