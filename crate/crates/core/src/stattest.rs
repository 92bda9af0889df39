//! Monte Carlo hypothesis-test helpers: a two-sample Kolmogorov-Smirnov
//! test with an asymptotic p-value, an empirical-characteristic-function
//! distance, and z-score moment checks.
//!
//! All helpers reject empty or non-finite samples up front so that a NaN
//! produced upstream fails loudly instead of silently passing a comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which two-sample discrepancy was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Ks,
    Ecf,
}

/// Outcome of a two-sample comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub test: TestKind,
    pub statistic: f64,
    /// Asymptotic p-value; `None` for distances without a calibrated null.
    pub p_value: Option<f64>,
    /// Pass threshold: lower bound on p for KS, upper bound on the
    /// statistic for ECF.
    pub threshold: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub pass: bool,
}

/// Outcome of a mean-versus-target z-test.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MomentCheck {
    pub empirical: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub tolerance_sigmas: f64,
    pub pass: bool,
}

/// Frequencies probed by the characteristic-function distance.
pub const DEFAULT_ECF_LAMBDAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn validate_sample(context: &'static str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain {
            context,
            detail: "sample contains a non-finite value".into(),
        });
    }
    Ok(())
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
///
/// Two theta-series representations are combined: the Jacobi form of the
/// CDF converges fast for small lambda, the alternating form of the tail
/// for large lambda; they are switched at 1.18 where both are accurate to
/// well below 1e-10.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let t = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for j in (1..=9u32).step_by(2) {
            cdf += (-t * (j * j) as f64).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..=20u32 {
            let term = (-2.0 * ((j * j) as f64) * lambda * lambda).exp();
            if term < 1e-18 {
                break;
            }
            sf += if j % 2 == 1 { term } else { -term };
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Exact two-sample KS statistic (ties handled by advancing both walks
/// through equal values) with the finite-size-corrected asymptotic
/// p-value. Passes when `p > p_threshold`.
pub fn ks_two_sample(a: &[f64], b: &[f64], p_threshold: f64) -> Result<TwoSampleResult> {
    validate_sample("ks_two_sample", a)?;
    validate_sample("ks_two_sample", b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    Ok(TwoSampleResult {
        test: TestKind::Ks,
        statistic: d,
        p_value: Some(p),
        threshold: p_threshold,
        n_a: sa.len(),
        n_b: sb.len(),
        pass: p > p_threshold,
    })
}

/// Maximum modulus distance between the empirical characteristic functions
/// of two samples over a frequency grid. Passes when the distance stays
/// below `threshold`.
pub fn ecf_distance(
    a: &[f64],
    b: &[f64],
    lambdas: &[f64],
    threshold: f64,
) -> Result<TwoSampleResult> {
    validate_sample("ecf_distance", a)?;
    validate_sample("ecf_distance", b)?;
    if lambdas.is_empty() {
        return Err(Error::Domain {
            context: "ecf_distance",
            detail: "frequency grid is empty".into(),
        });
    }
    let ecf = |xs: &[f64], l: f64| {
        let (mut c, mut s) = (0.0, 0.0);
        for &x in xs {
            c += (l * x).cos();
            s += (l * x).sin();
        }
        (c / xs.len() as f64, s / xs.len() as f64)
    };
    let mut max_d: f64 = 0.0;
    for &l in lambdas {
        let (ca, sa) = ecf(a, l);
        let (cb, sb) = ecf(b, l);
        max_d = max_d.max(((ca - cb).powi(2) + (sa - sb).powi(2)).sqrt());
    }
    Ok(TwoSampleResult {
        test: TestKind::Ecf,
        statistic: max_d,
        p_value: None,
        threshold,
        n_a: a.len(),
        n_b: b.len(),
        pass: max_d < threshold,
    })
}

/// z-test of the sample mean against a target. Passes when
/// `|z| <= tolerance_sigmas`.
pub fn moment_check(sample: &[f64], target: f64, tolerance_sigmas: f64) -> Result<MomentCheck> {
    validate_sample("moment_check", sample)?;
    if sample.len() < 2 {
        return Err(Error::DegenerateSample);
    }
    let m = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / m;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let std_error = (var / m).sqrt();
    if std_error == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let z_score = (mean - target) / std_error;
    Ok(MomentCheck {
        empirical: mean,
        target,
        std_error,
        z_score,
        tolerance_sigmas,
        pass: z_score.abs() <= tolerance_sigmas,
    })
}

/// z-test of the sample variance against a target, run as a moment check
/// on the bias-corrected squared deviations
/// `(x_i - mean)^2 * m / (m - 1)`.
pub fn variance_check(sample: &[f64], target_var: f64, tolerance_sigmas: f64) -> Result<MomentCheck> {
    validate_sample("variance_check", sample)?;
    if sample.len() < 2 {
        return Err(Error::DegenerateSample);
    }
    let m = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / m;
    let ys: Vec<f64> = sample
        .iter()
        .map(|x| (x - mean).powi(2) * m / (m - 1.0))
        .collect();
    moment_check(&ys, target_var, tolerance_sigmas)
}
