use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hurst index of a self-similar Gaussian process, constrained to (0, 1).
///
/// The value is validated once at construction, so numerical code downstream
/// can rely on `0 < H < 1` without re-checking.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    /// The critical index H = 1/4, where the weighted quadratic variation of
    /// the path picks up its second-order correction term.
    pub const QUARTER: Hurst = Hurst(0.25);

    /// H = 1/2, ordinary Brownian motion.
    pub const HALF: Hurst = Hurst(0.5);

    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(Hurst(h))
        } else {
            Err(Error::HurstOutOfRange(h))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when H is exactly 1/4. The constant is representable in binary,
    /// so exact comparison is the intended semantics.
    #[inline]
    pub fn is_quarter(self) -> bool {
        self.0 == 0.25
    }

    /// True when |H - 3/4| <= 1e-12. The unweighted variation switches to its
    /// sqrt(n log n) normalization inside this window.
    #[inline]
    pub fn is_three_quarters(self) -> bool {
        (self.0 - 0.75).abs() <= 1e-12
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Hurst::new(v)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

impl fmt::Display for Hurst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
