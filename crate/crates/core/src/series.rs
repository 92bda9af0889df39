//! Series evaluation of the two limit-law constants.
//!
//! Both constants are sums over the lag correlation kernel rho:
//!
//! * `c_weighted = sqrt( (rho(0)^2 + 2 sum_{r>=1} rho(r)^2) / 2 )`, the
//!   conditional standard deviation scale of the weighted quadratic
//!   variation limit;
//! * `kappa = sqrt( 2 + sum_{r>=1} (-1)^r rho(r)^2 )`, the scale appearing in
//!   the midpoint-rule and alternating-variation limits.
//!
//! Truncation at a finite radius R carries a rigorous tail bound: from
//! `|rho(r)| <= (1/2) r^{-3/2}` the squared-kernel tail is below
//! `1/(8 R^2)`, and the alternating series tail is below its first omitted
//! term `rho(R+1)^2`. Tail bounds are propagated through the square root and
//! attached to the returned value.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cov::rho;

/// Default truncation radius; at 1e5 both tail bounds are below 1e-11.
pub const DEFAULT_RADIUS: u64 = 100_000;

/// A truncated series value together with its truncation radius and a
/// rigorous bound on the distance to the untruncated limit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SeriesConstant {
    pub value: f64,
    pub radius: u64,
    pub tail_bound: f64,
}

/// Weighted-variation constant by truncated series; `radius >= 1`.
pub fn constant_weighted(radius: u64) -> SeriesConstant {
    let radius = radius.max(1);
    let mut sq = 2.0;
    for r in 1..=radius as i64 {
        let x = rho(r);
        sq += x * x;
    }
    let value = sq.sqrt();
    // Tail of the squared series, then through sqrt: the truncated value is a
    // lower bound, so dividing by it is conservative.
    let tail_sq = 1.0 / (8.0 * (radius as f64) * (radius as f64));
    SeriesConstant {
        value,
        radius,
        tail_bound: tail_sq / (2.0 * value),
    }
}

/// Midpoint/alternating constant kappa by truncated series; `radius >= 1`.
pub fn constant_kappa(radius: u64) -> SeriesConstant {
    let radius = radius.max(1);
    let mut sq = 2.0;
    let mut sign = -1.0;
    for r in 1..=radius as i64 {
        let x = rho(r);
        sq += sign * x * x;
        sign = -sign;
    }
    let value = sq.sqrt();
    // Alternating series with terms decreasing in absolute value: the tail is
    // bounded by the first omitted term.
    let t = rho(radius as i64 + 1);
    let tail_sq = t * t;
    SeriesConstant {
        value,
        radius,
        tail_bound: tail_sq / (2.0 * (sq - tail_sq).max(1.0).sqrt()),
    }
}

/// Both constants at the default radius, computed once per process.
pub fn default_constants() -> &'static (SeriesConstant, SeriesConstant) {
    static CONSTS: OnceLock<(SeriesConstant, SeriesConstant)> = OnceLock::new();
    CONSTS.get_or_init(|| {
        (
            constant_weighted(DEFAULT_RADIUS),
            constant_kappa(DEFAULT_RADIUS),
        )
    })
}

/// Convenience accessor for the weighted-variation constant.
pub fn c_weighted() -> f64 {
    default_constants().0.value
}

/// Convenience accessor for kappa.
pub fn kappa() -> f64 {
    default_constants().1.value
}
