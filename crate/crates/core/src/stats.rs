//! Weighted variation statistics and Riemann sums evaluated on a sampled
//! path, given as the level array `values = [B_0, B_{1/n}, ..., B_1]` with
//! `values[0] = 0`.
//!
//! All functions are pure and allocation-free so they can run inside
//! Monte Carlo loops. Pair-indexed statistics (midpoint, alternating,
//! cubic) use the first `2 * (n / 2)` increments and ignore a trailing odd
//! increment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hurst::Hurst;
use crate::testfn::TestFunction;

/// Identifies a statistic in exported records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    WeightedQv,
    UnweightedQv,
    TrapezoidSum,
    MidpointSum,
    AlternatingQv,
    CubicCorrection,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::WeightedQv => "weighted_qv",
            StatKind::UnweightedQv => "unweighted_qv",
            StatKind::TrapezoidSum => "trapezoid_sum",
            StatKind::MidpointSum => "midpoint_sum",
            StatKind::AlternatingQv => "alternating_qv",
            StatKind::CubicCorrection => "cubic_correction",
        }
    }
}

impl std::fmt::Display for StatKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One exported Monte Carlo observation of a statistic.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VariationStatistic {
    pub kind: StatKind,
    pub n: usize,
    pub f: Option<TestFunction>,
    pub replicate: u64,
    pub value: f64,
}

fn check_path(values: &[f64]) -> usize {
    assert!(
        values.len() >= 2,
        "path must hold at least two levels, got {}",
        values.len()
    );
    values.len() - 1
}

/// Weighted centered quadratic variation at the critical roughness 1/4:
/// `n^{-1/2} * sum_k f(B_{k/n}) * (n^{1/2} (B_{(k+1)/n} - B_{k/n})^2 - 1)`.
pub fn weighted_qv(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let sqrt_n = (n as f64).sqrt();
    let mut sum = 0.0;
    for k in 0..n {
        let inc = values[k + 1] - values[k];
        sum += f(values[k]) * (sqrt_n * inc * inc - 1.0);
    }
    sum / sqrt_n
}

/// Centered quadratic variation of fBm under the normalization that keeps
/// the fluctuation scale order one in each roughness regime: `1/sqrt(n)`
/// below 3/4, `1/sqrt(n ln n)` at 3/4, and `n^{1 - 2H}` above.
pub fn unweighted_qv(values: &[f64], h: Hurst) -> f64 {
    let n = check_path(values);
    let nf = n as f64;
    let scale = nf.powf(2.0 * h.value());
    let mut sum = 0.0;
    for k in 0..n {
        let inc = values[k + 1] - values[k];
        sum += scale * inc * inc - 1.0;
    }
    if h.is_three_quarters() {
        sum / (nf * nf.ln()).sqrt()
    } else if h.value() < 0.75 {
        sum / nf.sqrt()
    } else {
        sum * nf.powf(1.0 - 2.0 * h.value())
    }
}

/// Trapezoid-rule Riemann sum against the path's own increments:
/// `sum_k (g(B_k) + g(B_{k+1})) / 2 * (B_{k+1} - B_k)`.
pub fn trapezoid_sum(values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let mut sum = 0.0;
    for k in 0..n {
        sum += 0.5 * (g(values[k]) + g(values[k + 1])) * (values[k + 1] - values[k]);
    }
    sum
}

/// Midpoint-rule Riemann sum over consecutive increment pairs:
/// `sum_{k=1}^{floor(n/2)} g(B_{(2k-1)/n}) * (B_{2k/n} - B_{(2k-2)/n})`.
pub fn midpoint_sum(values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let mut sum = 0.0;
    for k in 1..=n / 2 {
        sum += g(values[2 * k - 1]) * (values[2 * k] - values[2 * k - 2]);
    }
    sum
}

/// Alternating weighted difference of squared increments over pairs:
/// `sum_{k=1}^{floor(n/2)} f(B_{(2k-1)/n}) * (d_{2k-1}^2 - d_{2k-2}^2)`
/// where `d_j = B_{(j+1)/n} - B_{j/n}`. Order one at roughness 1/4 without
/// further normalization.
pub fn alternating_qv(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let mut sum = 0.0;
    for k in 1..=n / 2 {
        let d_odd = values[2 * k] - values[2 * k - 1];
        let d_even = values[2 * k - 1] - values[2 * k - 2];
        sum += f(values[2 * k - 1]) * (d_odd * d_odd - d_even * d_even);
    }
    sum
}

/// Raw cubic increment sum over pairs, weighted at the pair midpoint:
/// `sum_{k=1}^{floor(n/2)} f(B_{(2k-1)/n}) * (d_{2k-2}^3 + d_{2k-1}^3)`.
pub fn cubic_correction(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let mut sum = 0.0;
    for k in 1..=n / 2 {
        let d_odd = values[2 * k] - values[2 * k - 1];
        let d_even = values[2 * k - 1] - values[2 * k - 2];
        sum += f(values[2 * k - 1]) * (d_even * d_even * d_even + d_odd * d_odd * d_odd);
    }
    sum
}

/// Probabilists' Hermite polynomial of the given order (supported up to 4).
pub fn hermite(order: u32, x: f64) -> Result<f64> {
    match order {
        0 => Ok(1.0),
        1 => Ok(x),
        2 => Ok(x * x - 1.0),
        3 => Ok(x * x * x - 3.0 * x),
        4 => Ok(x * x * x * x - 6.0 * x * x + 3.0),
        other => Err(Error::UnsupportedHermite(other)),
    }
}

/// The Hermite-rank-3 part of the cubic sum: the cubic sum equals
/// `weighted_hermite3_sum + 3 n^{-1/2} * midpoint_sum` exactly, because
/// `a^3 + b^3 = n^{-3/4} (H_3(n^{1/4} a) + H_3(n^{1/4} b))
///  + 3 n^{-1/2} (a + b)` for any increments a, b of one pair.
pub fn weighted_hermite3_sum(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = check_path(values);
    let quarter_root = (n as f64).powf(0.25);
    let mut sum = 0.0;
    for k in 1..=n / 2 {
        let d_odd = values[2 * k] - values[2 * k - 1];
        let d_even = values[2 * k - 1] - values[2 * k - 2];
        let h3 = |d: f64| {
            let y = quarter_root * d;
            y * y * y - 3.0 * y
        };
        sum += f(values[2 * k - 1]) * (h3(d_even) + h3(d_odd));
    }
    sum / (quarter_root * quarter_root * quarter_root)
}
