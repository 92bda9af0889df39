//! Experiment drivers.
//!
//! Each `run_*` function turns a resolved configuration into an
//! `ExperimentReport` plus optional CSV payload. Replications are
//! embarrassingly parallel: every replicate owns a counter-derived RNG
//! stream, results are collected in replicate order, and all floating-point
//! reductions run sequentially over those ordered vectors, so reports are
//! byte-identical for any worker count.
//!
//! Stream indices pack `(experiment tag << 48) | (part << 40) | replicate`,
//! which keeps every experiment part in a disjoint slice of the stream
//! space for a fixed master seed.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rayon::ThreadPool;

use fracvar::cov::{
    bifractional_increment_variance_ratio, eps_delta, fbm_cov, level_increment_cov_quarter,
};
use fracvar::kernel::factorized_cov;
use fracvar::limit::{conditional_params, limit_sample, weighted_qv_moment_targets};
use fracvar::quad::QuadratureOptions;
use fracvar::series::{constant_kappa, constant_weighted, kappa, DEFAULT_RADIUS};
use fracvar::sim::MAX_CHOLESKY_N;
use fracvar::stats::{
    alternating_qv, cubic_correction, midpoint_sum, trapezoid_sum, unweighted_qv, weighted_qv,
};
use fracvar::stattest::{ecf_distance, ks_two_sample, moment_check, variance_check};
use fracvar::{
    CholeskyFactor, CirculantEmbedding, Error, GridPath, Hurst, LimitLaw, Model, RngStream,
    StreamPurpose, TestFunction, TwoSampleResult,
};

use crate::config::{ExperimentName, ResolvedConfig};
use crate::csv::StatRow;
use crate::report::{
    CheckResult, ConfigEcho, ConstantsBlock, ExperimentReport, SuiteReport, TimingBlock,
};

/// Four-decimal anchors for the two series limits; the full-precision values
/// live in the library's frozen oracle tests, these coarser pins guard the
/// shipped defaults end to end.
const WEIGHTED_ANCHOR: f64 = 1.5354;
const KAPPA_ANCHOR: f64 = 1.2901;

/// Everything a single invocation produces.
pub struct RunOutput {
    pub report: ExperimentReport,
    pub csv: CsvPayload,
}

/// Optional CSV payload accompanying a report.
pub enum CsvPayload {
    None,
    Stats(Vec<StatRow>),
    Path(Box<GridPath>),
}

fn exp_tag(name: ExperimentName) -> u64 {
    match name {
        ExperimentName::Constants => 0,
        ExperimentName::Simulate => 1,
        ExperimentName::WeightedQv => 2,
        ExperimentName::Midpoint => 3,
        ExperimentName::Cubic => 4,
        ExperimentName::Alternating => 5,
        ExperimentName::Trapezoid => 6,
        ExperimentName::Scaling => 7,
        ExperimentName::Kernel => 8,
        ExperimentName::Bounds => 9,
        ExperimentName::Bifractional => 10,
    }
}

fn stream_for(
    seed: u64,
    purpose: StreamPurpose,
    name: ExperimentName,
    part: u64,
    replicate: u64,
) -> RngStream {
    debug_assert!(part < 1 << 8 && replicate < 1 << 40);
    RngStream::for_purpose(seed, purpose, (exp_tag(name) << 48) | (part << 40) | replicate)
}

fn thread_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")
}

/// Ordered parallel map over replicate indices; the output vector is in
/// replicate order regardless of scheduling.
fn par_map<T: Send>(pool: &ThreadPool, m: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    pool.install(|| (0..m as u64).into_par_iter().map(&f).collect())
}

/// Path source for one (model, n): circulant embedding when available,
/// otherwise a Cholesky factor.
enum BatchSampler {
    Circulant(CirculantEmbedding),
    Cholesky(Box<CholeskyFactor>),
}

impl BatchSampler {
    fn fbm(h: Hurst, n: usize) -> Result<Self> {
        if n.is_power_of_two() {
            match CirculantEmbedding::new(h, n) {
                Ok(emb) => return Ok(BatchSampler::Circulant(emb)),
                Err(Error::EmbeddingFailed { .. }) if n <= MAX_CHOLESKY_N => {}
                Err(e) => return Err(e.into()),
            }
        }
        let factor = CholeskyFactor::new(Model::FractionalBrownian { h }, n)?;
        Ok(BatchSampler::Cholesky(Box::new(factor)))
    }

    fn sample(&self, stream: RngStream) -> GridPath {
        match self {
            BatchSampler::Circulant(emb) => emb.sample(stream),
            BatchSampler::Cholesky(factor) => factor.sample(stream),
        }
    }
}

fn bound_check(
    name: impl Into<String>,
    gate: bool,
    value: f64,
    bound: f64,
    pass: bool,
) -> CheckResult {
    CheckResult::Bound {
        name: name.into(),
        gate,
        value,
        bound,
        pass,
    }
}

/// Gating upper bound `value <= bound`.
fn upper(name: impl Into<String>, value: f64, bound: f64) -> CheckResult {
    bound_check(name, true, value, bound, value <= bound)
}

fn info(name: impl Into<String>, value: f64) -> CheckResult {
    CheckResult::Info {
        name: name.into(),
        value,
    }
}

fn two_sample(name: impl Into<String>, gate: bool, detail: TwoSampleResult) -> CheckResult {
    CheckResult::TwoSample {
        name: name.into(),
        gate,
        detail,
    }
}

fn report(
    name: ExperimentName,
    cfg: &ResolvedConfig,
    constants: Option<ConstantsBlock>,
    checks: Vec<CheckResult>,
) -> ExperimentReport {
    ExperimentReport {
        experiment: name.as_str().to_owned(),
        config: ConfigEcho::from_config(cfg),
        constants,
        overall_pass: ExperimentReport::compute_overall(&checks),
        checks,
        timing: None,
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_unstable_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
}

fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    m4 / (m2 * m2) - 3.0
}

/// Dispatch a single experiment and stamp its timing block.
pub fn run_experiment(name: ExperimentName, cfg: &ResolvedConfig) -> Result<RunOutput> {
    let t0 = Instant::now();
    let pool = thread_pool(cfg.workers)?;
    let mut out = match name {
        ExperimentName::Constants => run_constants(cfg),
        ExperimentName::Bounds => run_bounds(cfg),
        ExperimentName::Kernel => run_kernel(cfg),
        ExperimentName::Simulate => run_simulate(cfg, &pool),
        ExperimentName::WeightedQv => run_weighted_qv(cfg, &pool),
        ExperimentName::Midpoint => run_midpoint(cfg, &pool),
        ExperimentName::Cubic => run_cubic(cfg, &pool),
        ExperimentName::Alternating => run_alternating(cfg, &pool),
        ExperimentName::Trapezoid => run_trapezoid(cfg, &pool),
        ExperimentName::Scaling => run_scaling(cfg, &pool),
        ExperimentName::Bifractional => run_bifractional(cfg, &pool),
    }?;
    out.report.timing = Some(TimingBlock {
        seconds: t0.elapsed().as_secs_f64(),
        workers: cfg.workers,
    });
    Ok(out)
}

/// The full gating suite, in a fixed order. CSV payloads are dropped here;
/// exports are a single-experiment feature.
pub fn run_all(cfg: &ResolvedConfig) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let mut experiments = Vec::with_capacity(ExperimentName::RUN_ALL.len());
    for name in ExperimentName::RUN_ALL {
        experiments.push(run_experiment(name, cfg)?.report);
    }
    let overall_pass = experiments.iter().all(|e| e.overall_pass);
    Ok(SuiteReport {
        experiments,
        overall_pass,
        timing: Some(TimingBlock {
            seconds: t0.elapsed().as_secs_f64(),
            workers: cfg.workers,
        }),
    })
}

/// Series constants with tail bounds, anchor deviations, and stability under
/// doubling the truncation radius.
fn run_constants(cfg: &ResolvedConfig) -> Result<RunOutput> {
    let weighted = constant_weighted(DEFAULT_RADIUS);
    let alternating = constant_kappa(DEFAULT_RADIUS);
    let weighted_double = constant_weighted(2 * DEFAULT_RADIUS);
    let alternating_double = constant_kappa(2 * DEFAULT_RADIUS);
    // Doubling the radius re-accumulates a few hundred thousand terms, so the
    // two values can differ by resummation rounding even when the analytic
    // tails are far smaller; allow that float noise on top of the tail bound.
    const RESUM_EPS: f64 = 5e-13;
    let checks = vec![
        upper(
            "weighted_anchor_deviation",
            (weighted.value - WEIGHTED_ANCHOR).abs(),
            1e-3,
        ),
        upper("weighted_tail_bound", weighted.tail_bound, 1e-5),
        upper(
            "weighted_radius_stability",
            (weighted_double.value - weighted.value).abs(),
            weighted.tail_bound + RESUM_EPS,
        ),
        upper(
            "kappa_anchor_deviation",
            (alternating.value - KAPPA_ANCHOR).abs(),
            1e-3,
        ),
        upper("kappa_tail_bound", alternating.tail_bound, 1e-5),
        upper(
            "kappa_radius_stability",
            (alternating_double.value - alternating.value).abs(),
            alternating.tail_bound + RESUM_EPS,
        ),
    ];
    let constants = ConstantsBlock {
        weighted,
        alternating,
    };
    Ok(RunOutput {
        report: report(ExperimentName::Constants, cfg, Some(constants), checks),
        csv: CsvPayload::None,
    })
}

/// Deterministic covariance inequalities at the critical index.
fn run_bounds(cfg: &ResolvedConfig) -> Result<RunOutput> {
    let quarter = Hurst::QUARTER;
    const NS: [usize; 5] = [16, 64, 256, 1024, 4096];

    // |E[B_r (B_t - B_s)]| <= sqrt(t - s) over a 3-d grid.
    let mut level_ratio: f64 = 0.0;
    let grid = 32usize;
    for ti in 1..=grid {
        let t = ti as f64 / grid as f64;
        for si in 0..ti {
            let s = si as f64 / grid as f64;
            for ri in 0..=grid {
                let r = ri as f64 / grid as f64;
                let ratio = level_increment_cov_quarter(r, s, t).abs() / (t - s).sqrt();
                level_ratio = level_ratio.max(ratio);
            }
        }
    }

    // sup_t sum_k |E[B_t (B_{(k+1)/n} - B_{k/n})]| stays bounded in n.
    let mut eps_sum_sup: f64 = 0.0;
    for n in NS {
        for i in 0..100 {
            let t = (i as f64 + 0.5) / 100.0;
            let mut sum = 0.0;
            for k in 0..n {
                sum += eps_delta(quarter, t, k, n)?.abs();
            }
            eps_sum_sup = eps_sum_sup.max(sum);
        }
    }

    // |E[B_{k/n} d_k]^2 - 1/(4n)| <= (sqrt(k+1) - sqrt(k)) / (2n).
    let mut endpoint_ratio: f64 = 0.0;
    for n in NS {
        for k in 0..n {
            let ip = eps_delta(quarter, k as f64 / n as f64, k, n)?;
            let num = (ip * ip - 0.25 / n as f64).abs();
            let den = ((k as f64 + 1.0).sqrt() - (k as f64).sqrt()) / (2.0 * n as f64);
            endpoint_ratio = endpoint_ratio.max(num / den);
        }
    }

    let checks = vec![
        upper("level_increment_ratio", level_ratio, 1.0 + 1e-12),
        upper("eps_abs_sum_sup", eps_sum_sup, 1.25),
        upper("endpoint_eps_ratio", endpoint_ratio, 1.0 + 1e-12),
    ];
    Ok(RunOutput {
        report: report(ExperimentName::Bounds, cfg, None, checks),
        csv: CsvPayload::None,
    })
}

/// Moving-average kernel factorization against the closed covariance.
fn run_kernel(cfg: &ResolvedConfig) -> Result<RunOutput> {
    let opts = QuadratureOptions::default();
    let mut checks = Vec::new();
    for h_val in [0.1, 0.25, 0.4] {
        let h = Hurst::new(h_val)?;
        let mut max_err: f64 = 0.0;
        for ti in 1..=8 {
            let t = ti as f64 / 8.0;
            for si in 1..=ti {
                let s = si as f64 / 8.0;
                let approx = factorized_cov(h, s, t, opts)?;
                let exact = fbm_cov(h, s, t)?;
                max_err = max_err.max((approx - exact).abs());
            }
        }
        checks.push(upper(
            format!("factorization_max_error_h_{h_val}"),
            max_err,
            1e-4,
        ));
    }
    Ok(RunOutput {
        report: report(ExperimentName::Kernel, cfg, None, checks),
        csv: CsvPayload::None,
    })
}

/// Generator validation: exact-covariance z-scores for the Cholesky route
/// and an endpoint two-sample test between the two generators.
fn run_simulate(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Simulate;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let m_cov = cfg.m.unwrap_or(100_000);
    let m_ks = (m_cov / 10).max(100);
    if m_cov < 2 {
        bail!("simulate needs at least 2 replicates, got {m_cov}");
    }

    // Level covariance at n = 64 against the closed form, in fixed blocks
    // reduced in block order so totals do not depend on the worker count.
    let n_cov = 64usize;
    let factor = CholeskyFactor::new(Model::FractionalBrownian { h: quarter }, n_cov)?;
    let n_pairs = n_cov * (n_cov + 1) / 2;
    const BLOCK: usize = 1000;
    let blocks = m_cov.div_ceil(BLOCK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = par_map(pool, blocks, |b| {
        let lo = b as usize * BLOCK;
        let hi = ((b as usize + 1) * BLOCK).min(m_cov);
        let mut sum = vec![0.0; n_pairs];
        let mut sumsq = vec![0.0; n_pairs];
        for r in lo..hi {
            let path = factor.sample(stream_for(seed, StreamPurpose::Path, EXP, 0, r as u64));
            let mut idx = 0;
            for i in 1..=n_cov {
                let vi = path.values[i];
                for j in 1..=i {
                    let p = vi * path.values[j];
                    sum[idx] += p;
                    sumsq[idx] += p * p;
                    idx += 1;
                }
            }
        }
        (sum, sumsq)
    });
    let mut sum = vec![0.0; n_pairs];
    let mut sumsq = vec![0.0; n_pairs];
    for (s, q) in &partials {
        for idx in 0..n_pairs {
            sum[idx] += s[idx];
            sumsq[idx] += q[idx];
        }
    }
    let m = m_cov as f64;
    let mut max_z: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    let mut idx = 0;
    for i in 1..=n_cov {
        for j in 1..=i {
            let mean = sum[idx] / m;
            let var = (sumsq[idx] - m * mean * mean).max(0.0) / (m - 1.0);
            let se = (var / m).sqrt();
            let target = fbm_cov(quarter, i as f64 / n_cov as f64, j as f64 / n_cov as f64)?;
            max_err = max_err.max((mean - target).abs());
            max_z = max_z.max(((mean - target) / se).abs());
            idx += 1;
        }
    }

    // Endpoint distribution: circulant vs Cholesky at n = 1024.
    let n_ks = 1024usize;
    let embedding = CirculantEmbedding::new(quarter, n_ks)?;
    let circulant_ends = par_map(pool, m_ks, |r| {
        embedding
            .sample(stream_for(seed, StreamPurpose::Path, EXP, 1, r))
            .endpoint()
    });
    let cholesky = CholeskyFactor::new(Model::FractionalBrownian { h: quarter }, n_ks)?;
    let cholesky_ends = par_map(pool, m_ks, |r| {
        cholesky
            .sample(stream_for(seed, StreamPurpose::Path, EXP, 2, r))
            .endpoint()
    });
    let ks = ks_two_sample(&circulant_ends, &cholesky_ends, cfg.thresholds.ks_p)?;

    let checks = vec![
        upper("cov_max_abs_z", max_z, cfg.thresholds.moment_sigmas),
        two_sample("ks_endpoint_generators", true, ks),
        info("cov_max_abs_error", max_err),
        info("embedding_min_eigenvalue", embedding.min_eigenvalue()),
        info(
            "embedding_doubled",
            if embedding.doubled() { 1.0 } else { 0.0 },
        ),
        info("cholesky_jitter", cholesky.jitter()),
    ];

    // Optional path export at the requested size and index.
    let csv = if cfg.csv_path.is_some() {
        let n = cfg.n.unwrap_or(512);
        let h = cfg.hurst.unwrap_or(quarter);
        let stream = stream_for(seed, StreamPurpose::Aux, EXP, 3, 0);
        let path = if n.is_power_of_two() {
            fracvar::sim::simulate_circulant(h, n, stream)?
        } else {
            fracvar::sim::simulate_cholesky(Model::FractionalBrownian { h }, n, stream)?
        };
        CsvPayload::Path(Box::new(path))
    } else {
        CsvPayload::None
    };

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv,
    })
}

/// Weighted quadratic variation: moment checks against closed or
/// Monte Carlo targets plus paired-law two-sample tests.
fn run_weighted_qv(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::WeightedQv;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let n = cfg.n.unwrap_or(512);
    let sampler = BatchSampler::fbm(quarter, n)?;
    let sigmas = cfg.thresholds.moment_sigmas;
    let mut checks = Vec::new();
    let mut rows = Vec::new();

    // Weights exercised by the law comparison and by the moment gate.
    let (moment_f, law_fs): (TestFunction, Vec<TestFunction>) = match cfg.f {
        None => (TestFunction::Square, vec![TestFunction::Identity, TestFunction::Sin]),
        Some(f) => (f, vec![f]),
    };

    // Unconditional moments. Closed-form targets exist for polynomial
    // weights; anything else estimates targets over dedicated streams.
    let m_mom = cfg.m.unwrap_or(20_000);
    let targets = weighted_qv_moment_targets(moment_f, seed, 2_000, 256)?;
    if let fracvar::TargetMethod::MonteCarlo { .. } = targets.method {
        // Estimated targets carry their own sampling error on top of the
        // moment check's; flag that the gate is approximate.
        checks.push(info("target_monte_carlo", 1.0));
    }
    let stats = par_map(pool, m_mom, |r| {
        let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, 0, r));
        weighted_qv(&path.values, moment_f.as_fn())
    });
    for (r, &g) in stats.iter().enumerate() {
        rows.push(StatRow {
            experiment: EXP.as_str(),
            f: Some(moment_f.name()),
            n,
            hurst: Some(quarter.value()),
            replicate: r as u64,
            statistic: g,
            limit_value: None,
        });
    }
    let squares: Vec<f64> = stats.iter().map(|g| g * g).collect();
    checks.push(CheckResult::Moment {
        name: format!("moment_mean_{}", moment_f.name()),
        gate: true,
        detail: moment_check(&stats, targets.mean, sigmas)?,
    });
    checks.push(CheckResult::Moment {
        name: format!("moment_second_{}", moment_f.name()),
        gate: true,
        detail: moment_check(&squares, targets.second_moment, sigmas)?,
    });

    // Paired conditional-law comparison: each replicate contributes the
    // statistic and one draw from the mixed limit on the same path.
    let m_law = cfg.m.unwrap_or(5_000);
    let fs = law_fs.clone();
    let law: Vec<Vec<(f64, f64)>> = par_map(pool, m_law, |r| {
        let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, 1, r));
        let zs = stream_for(seed, StreamPurpose::Draw, EXP, 1, r).normals(fs.len());
        fs.iter()
            .zip(&zs)
            .map(|(&f, &z)| {
                let stat = weighted_qv(&path.values, f.as_fn());
                let lim = limit_sample(LimitLaw::WeightedQv, &path.values, f, z).value;
                (stat, lim)
            })
            .collect()
    });
    for (j, &f) in law_fs.iter().enumerate() {
        let a: Vec<f64> = law.iter().map(|per_f| per_f[j].0).collect();
        let b: Vec<f64> = law.iter().map(|per_f| per_f[j].1).collect();
        for (r, (&stat, &lim)) in a.iter().zip(&b).enumerate() {
            rows.push(StatRow {
                experiment: EXP.as_str(),
                f: Some(f.name()),
                n,
                hurst: Some(quarter.value()),
                replicate: r as u64,
                statistic: stat,
                limit_value: Some(lim),
            });
        }
        checks.push(two_sample(
            format!("ks_{}", f.name()),
            true,
            ks_two_sample(&a, &b, cfg.thresholds.ks_p)?,
        ));
        checks.push(two_sample(
            format!("ecf_{}", f.name()),
            true,
            ecf_distance(
                &a,
                &b,
                &fracvar::stattest::DEFAULT_ECF_LAMBDAS,
                cfg.thresholds.ecf_distance,
            )?,
        ));
    }

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Midpoint Riemann sums against the conditionally Gaussian correction law.
fn run_midpoint(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Midpoint;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let n = cfg.n.unwrap_or(512);
    if n % 2 != 0 {
        bail!("the midpoint experiment needs an even grid size, got {n}");
    }
    let m = cfg.m.unwrap_or(5_000);
    let fs: Vec<TestFunction> = match cfg.f {
        None => vec![TestFunction::Square, TestFunction::Sin],
        Some(f) => vec![f],
    };
    let sampler = BatchSampler::fbm(quarter, n)?;

    let fs_inner = fs.clone();
    let results: Vec<Vec<(f64, f64)>> = par_map(pool, m, |r| {
        let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, 0, r));
        let zs = stream_for(seed, StreamPurpose::Draw, EXP, 0, r).normals(fs_inner.len());
        fs_inner
            .iter()
            .zip(&zs)
            .map(|(&f, &z)| {
                let stat = midpoint_sum(&path.values, move |x| f.d1(x));
                let lim = limit_sample(LimitLaw::MidpointRule, &path.values, f, z).value;
                (stat, lim)
            })
            .collect()
    });

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (j, &f) in fs.iter().enumerate() {
        let a: Vec<f64> = results.iter().map(|per_f| per_f[j].0).collect();
        let b: Vec<f64> = results.iter().map(|per_f| per_f[j].1).collect();
        for (r, (&stat, &lim)) in a.iter().zip(&b).enumerate() {
            rows.push(StatRow {
                experiment: EXP.as_str(),
                f: Some(f.name()),
                n,
                hurst: Some(quarter.value()),
                replicate: r as u64,
                statistic: stat,
                limit_value: Some(lim),
            });
        }
        if matches!(f, TestFunction::One | TestFunction::Identity) {
            // Affine weights have no correction term; the midpoint sum
            // telescopes to the endpoint difference exactly.
            let max_err = a
                .iter()
                .zip(&b)
                .map(|(s, l)| (s - l).abs())
                .fold(0.0f64, f64::max);
            checks.push(upper(format!("midpoint_exact_{}", f.name()), max_err, 1e-10));
        } else {
            checks.push(two_sample(
                format!("ks_{}", f.name()),
                true,
                ks_two_sample(&a, &b, cfg.thresholds.ks_p)?,
            ));
            // The mixed law has heavy conditional spread here, so the ECF
            // distance is recorded without gating.
            checks.push(two_sample(
                format!("ecf_{}", f.name()),
                false,
                ecf_distance(
                    &a,
                    &b,
                    &fracvar::stattest::DEFAULT_ECF_LAMBDAS,
                    cfg.thresholds.ecf_distance,
                )?,
            ));
        }
    }

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Third-power correction sums: their scaled second moments must vanish
/// along the grid ladder.
fn run_cubic(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Cubic;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let preset = cfg.n.is_none() && cfg.f.is_none();
    let ns: Vec<usize> = match cfg.n {
        None => vec![256, 1024, 4096],
        Some(n) => vec![n],
    };
    let fs: Vec<TestFunction> = match cfg.f {
        None => vec![TestFunction::Square, TestFunction::Cos],
        Some(f) => vec![f],
    };
    let m = cfg.m.unwrap_or(10_000);

    // scaled_second[j][i] = E[(cubic / 6)^2] for weight j at grid ns[i].
    let mut scaled_second = vec![Vec::with_capacity(ns.len()); fs.len()];
    let mut raw_second = vec![Vec::with_capacity(ns.len()); fs.len()];
    let mut rows = Vec::new();
    for (part, &n) in ns.iter().enumerate() {
        let sampler = BatchSampler::fbm(quarter, n)?;
        let fs_inner = fs.clone();
        let per_path: Vec<Vec<f64>> = par_map(pool, m, |r| {
            let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, part as u64, r));
            fs_inner
                .iter()
                .map(|&f| cubic_correction(&path.values, f.as_fn()))
                .collect()
        });
        for (j, &f) in fs.iter().enumerate() {
            let mut raw_sq = 0.0;
            for (r, per_f) in per_path.iter().enumerate() {
                let raw = per_f[j];
                raw_sq += raw * raw;
                rows.push(StatRow {
                    experiment: EXP.as_str(),
                    f: Some(f.name()),
                    n,
                    hurst: Some(quarter.value()),
                    replicate: r as u64,
                    statistic: raw / 6.0,
                    limit_value: None,
                });
            }
            let raw_m2 = raw_sq / m as f64;
            raw_second[j].push(raw_m2);
            scaled_second[j].push(raw_m2 / 36.0);
        }
    }

    let mut checks = Vec::new();
    for (j, &f) in fs.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            checks.push(info(format!("raw_second_{}_{}", f.name(), n), raw_second[j][i]));
        }
        if preset {
            for i in 1..ns.len() {
                let value = scaled_second[j][i];
                let prev = scaled_second[j][i - 1];
                checks.push(bound_check(
                    format!("scaled_second_decrease_{}_{}_to_{}", f.name(), ns[i - 1], ns[i]),
                    true,
                    value,
                    prev,
                    value < prev,
                ));
            }
            let last = *scaled_second[j].last().unwrap();
            checks.push(bound_check(
                format!("scaled_second_final_{}", f.name()),
                true,
                last,
                0.02,
                last < 0.02,
            ));
        } else {
            for (i, &n) in ns.iter().enumerate() {
                checks.push(info(
                    format!("scaled_second_{}_{}", f.name(), n),
                    scaled_second[j][i],
                ));
            }
        }
    }

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Alternating sign-flipped variation: centered mean, limiting variance,
/// and plain plus stratified two-sample law checks.
fn run_alternating(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Alternating;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let n = cfg.n.unwrap_or(512);
    if n % 2 != 0 {
        bail!("the alternating experiment needs an even grid size, got {n}");
    }
    let m = cfg.m.unwrap_or(10_000);
    let sampler = BatchSampler::fbm(quarter, n)?;
    let sigmas = cfg.thresholds.moment_sigmas;
    let ks_p = cfg.thresholds.ks_p;
    let mut checks = Vec::new();
    let mut rows = Vec::new();

    let fs: Vec<TestFunction> = match cfg.f {
        None => vec![TestFunction::One, TestFunction::Square],
        Some(f) => vec![f],
    };
    let fs_inner = fs.clone();
    // Per replicate: (statistic, paired limit draw) per weight, plus the
    // midpoint level used for stratification.
    let results: Vec<(Vec<(f64, f64)>, f64)> = par_map(pool, m, |r| {
        let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, 0, r));
        let zs = stream_for(seed, StreamPurpose::Draw, EXP, 0, r).normals(fs_inner.len());
        let per_f = fs_inner
            .iter()
            .zip(&zs)
            .map(|(&f, &z)| {
                let stat = alternating_qv(&path.values, f.as_fn());
                let lim = limit_sample(LimitLaw::AlternatingQv, &path.values, f, z).value;
                (stat, lim)
            })
            .collect();
        (per_f, path.values[n / 2])
    });
    let mids: Vec<f64> = results.iter().map(|(_, mid)| *mid).collect();

    for (j, &f) in fs.iter().enumerate() {
        let a: Vec<f64> = results.iter().map(|(per_f, _)| per_f[j].0).collect();
        let b: Vec<f64> = results.iter().map(|(per_f, _)| per_f[j].1).collect();
        for (r, (&stat, &lim)) in a.iter().zip(&b).enumerate() {
            rows.push(StatRow {
                experiment: EXP.as_str(),
                f: Some(f.name()),
                n,
                hurst: Some(quarter.value()),
                replicate: r as u64,
                statistic: stat,
                limit_value: Some(lim),
            });
        }
        // The unit weight carries the full gating battery; other weights
        // get the paired-law and stratified views.
        let primary = f == TestFunction::One;
        if primary || cfg.f.is_some() {
            checks.push(CheckResult::Moment {
                name: format!("moment_mean_{}", f.name()),
                gate: true,
                detail: moment_check(&a, 0.0, sigmas)?,
            });
        }
        if primary {
            let k = kappa();
            checks.push(CheckResult::Moment {
                name: "variance_one".into(),
                gate: true,
                detail: variance_check(&a, k * k, sigmas)?,
            });
        }
        if primary || cfg.f.is_some() {
            checks.push(two_sample(
                format!("ks_{}", f.name()),
                true,
                ks_two_sample(&a, &b, ks_p)?,
            ));
            checks.push(two_sample(
                format!("ecf_{}", f.name()),
                false,
                ecf_distance(
                    &a,
                    &b,
                    &fracvar::stattest::DEFAULT_ECF_LAMBDAS,
                    cfg.thresholds.ecf_distance,
                )?,
            ));
        }
        // Stratify by the sign of the mid-time level: the limit is mixed
        // Gaussian, so agreement must hold within each stratum, not just
        // marginally. Only the unit weight gates here.
        let pos: Vec<usize> = (0..m).filter(|&r| mids[r] >= 0.0).collect();
        let neg: Vec<usize> = (0..m).filter(|&r| mids[r] < 0.0).collect();
        for (label, idxs) in [("positive", &pos), ("negative", &neg)] {
            let sa: Vec<f64> = idxs.iter().map(|&r| a[r]).collect();
            let sb: Vec<f64> = idxs.iter().map(|&r| b[r]).collect();
            checks.push(two_sample(
                format!("ks_{}_{}_stratum", f.name(), label),
                primary,
                ks_two_sample(&sa, &sb, ks_p)?,
            ));
        }
    }
    checks.push(info(
        "stratum_positive_count",
        mids.iter().filter(|&&x| x >= 0.0).count() as f64,
    ));

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Trapezoid Riemann sums of a gradient along the path: the error against
/// the endpoint difference must vanish (exactly for polynomial gradients of
/// degree <= 1 in the weight's derivative, stochastically otherwise).
fn run_trapezoid(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Trapezoid;
    let quarter = Hurst::QUARTER;
    let seed = cfg.seed;
    let preset = cfg.n.is_none() && cfg.f.is_none();
    let ns: Vec<usize> = match cfg.n {
        None => vec![64, 256, 1024, 4096],
        Some(n) => vec![n],
    };
    let fs: Vec<TestFunction> = match cfg.f {
        None => vec![TestFunction::Identity, TestFunction::Square, TestFunction::Sin],
        Some(f) => vec![f],
    };
    let m = cfg.m.unwrap_or(1_000);

    let mut medians = vec![Vec::with_capacity(ns.len()); fs.len()];
    let mut rows = Vec::new();
    for (part, &n) in ns.iter().enumerate() {
        let sampler = BatchSampler::fbm(quarter, n)?;
        let fs_inner = fs.clone();
        let per_path: Vec<Vec<(f64, f64)>> = par_map(pool, m, |r| {
            let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, part as u64, r));
            fs_inner
                .iter()
                .map(|&f| {
                    let stat = trapezoid_sum(&path.values, move |x| f.d1(x));
                    let target = f.value(path.endpoint()) - f.value(path.values[0]);
                    (stat, target)
                })
                .collect()
        });
        for (j, &f) in fs.iter().enumerate() {
            let errs: Vec<f64> = per_path
                .iter()
                .map(|per_f| (per_f[j].0 - per_f[j].1).abs())
                .collect();
            for (r, per_f) in per_path.iter().enumerate() {
                rows.push(StatRow {
                    experiment: EXP.as_str(),
                    f: Some(f.name()),
                    n,
                    hurst: Some(quarter.value()),
                    replicate: r as u64,
                    statistic: per_f[j].0,
                    limit_value: Some(per_f[j].1),
                });
            }
            medians[j].push(median(errs));
        }
    }

    let mut checks = Vec::new();
    for (j, &f) in fs.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            checks.push(info(format!("median_error_{}_{}", f.name(), n), medians[j][i]));
        }
        if !preset {
            continue;
        }
        match f {
            // d1 is affine, so the trapezoid sum telescopes exactly and only
            // float accumulation error remains.
            TestFunction::Identity | TestFunction::Square => {
                let max_median = medians[j].iter().copied().fold(0.0f64, f64::max);
                checks.push(upper(
                    format!("median_error_{}_max", f.name()),
                    max_median,
                    1e-10,
                ));
            }
            _ => {
                for i in 1..ns.len() {
                    let value = medians[j][i];
                    let prev = medians[j][i - 1];
                    checks.push(bound_check(
                        format!("median_error_{}_{}_to_{}", f.name(), ns[i - 1], ns[i]),
                        true,
                        value,
                        prev,
                        value < prev,
                    ));
                }
                let last = *medians[j].last().unwrap();
                checks.push(bound_check(
                    format!("median_error_{}_final", f.name()),
                    true,
                    last,
                    0.05,
                    last < 0.05,
                ));
            }
        }
    }

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Normalization regimes of the unweighted variation across the index range:
/// variance stabilization below and at the 3/4 boundary, heavy-tailed
/// (positive excess kurtosis) limit above it.
fn run_scaling(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Scaling;
    let seed = cfg.seed;
    let hs: Vec<f64> = match cfg.hurst {
        None => vec![0.4, 0.75, 0.8],
        Some(h) => vec![h.value()],
    };
    let ns: Vec<usize> = match cfg.n {
        None => vec![1024, 4096],
        Some(n) => vec![n],
    };
    let m = cfg.m.unwrap_or(10_000);

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (hi, &h_val) in hs.iter().enumerate() {
        let h = Hurst::new(h_val)?;
        let mut variances = Vec::with_capacity(ns.len());
        let mut kurtoses = Vec::with_capacity(ns.len());
        for (ni, &n) in ns.iter().enumerate() {
            let part = (hi * ns.len() + ni) as u64;
            let sampler = BatchSampler::fbm(h, n)?;
            let stats = par_map(pool, m, |r| {
                let path = sampler.sample(stream_for(seed, StreamPurpose::Path, EXP, part, r));
                unweighted_qv(&path.values, h)
            });
            for (r, &u) in stats.iter().enumerate() {
                rows.push(StatRow {
                    experiment: EXP.as_str(),
                    f: None,
                    n,
                    hurst: Some(h_val),
                    replicate: r as u64,
                    statistic: u,
                    limit_value: None,
                });
            }
            variances.push(sample_variance(&stats));
            kurtoses.push(excess_kurtosis(&stats));
        }
        let gaussian_regime = h_val <= 0.75 + 1e-12;
        for (i, &n) in ns.iter().enumerate() {
            checks.push(info(format!("variance_h_{h_val}_n_{n}"), variances[i]));
            if gaussian_regime {
                checks.push(info(format!("excess_kurtosis_h_{h_val}_n_{n}"), kurtoses[i]));
            } else {
                // Above the boundary the limit is non-Gaussian; excess
                // kurtosis must stay clearly positive as n grows.
                checks.push(bound_check(
                    format!("excess_kurtosis_h_{h_val}_n_{n}"),
                    true,
                    kurtoses[i],
                    0.3,
                    kurtoses[i] > 0.3,
                ));
            }
        }
        if gaussian_regime && ns.len() >= 2 {
            let ratio = variances.last().unwrap() / variances.first().unwrap();
            checks.push(upper(
                format!("variance_ratio_h_{h_val}"),
                (ratio - 1.0).abs(),
                0.15,
            ));
        }
    }

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}

/// Companion-process probe (opt-in): midpoint sums on the square-root
/// bifractional model against the mixed-Gaussian limit form evaluated on
/// those paths, with the kappa correction rescaled to the model's local
/// squared-increment scale (sqrt(2/pi) of the critical-fBm scale).
fn run_bifractional(cfg: &ResolvedConfig, pool: &ThreadPool) -> Result<RunOutput> {
    const EXP: ExperimentName = ExperimentName::Bifractional;
    let seed = cfg.seed;
    let n = cfg.n.unwrap_or(512);
    if n % 2 != 0 {
        bail!("the bifractional experiment needs an even grid size, got {n}");
    }
    let m = cfg.m.unwrap_or(2_000);
    let f = cfg.f.unwrap_or(TestFunction::Square);
    let factor = CholeskyFactor::new(Model::BifractionalHalf, n)?;
    let qv_scale = bifractional_increment_variance_ratio();

    let results: Vec<(f64, f64)> = par_map(pool, m, |r| {
        let path = factor.sample(stream_for(seed, StreamPurpose::Path, EXP, 0, r));
        let z = stream_for(seed, StreamPurpose::Draw, EXP, 0, r).normals(1)[0];
        let stat = midpoint_sum(&path.values, move |x| f.d1(x));
        let (mean, std) = conditional_params(LimitLaw::MidpointRule, &path.values, f);
        let lim = mean + qv_scale * std * z;
        (stat, lim)
    });
    let a: Vec<f64> = results.iter().map(|(s, _)| *s).collect();
    let b: Vec<f64> = results.iter().map(|(_, l)| *l).collect();
    let mut rows = Vec::new();
    for (r, (&stat, &lim)) in a.iter().zip(&b).enumerate() {
        rows.push(StatRow {
            experiment: EXP.as_str(),
            f: Some(f.name()),
            n,
            hurst: None,
            replicate: r as u64,
            statistic: stat,
            limit_value: Some(lim),
        });
    }

    let checks = vec![
        two_sample(
            format!("ks_bifractional_{}", f.name()),
            true,
            ks_two_sample(&a, &b, cfg.thresholds.ks_p)?,
        ),
        two_sample(
            format!("ecf_bifractional_{}", f.name()),
            false,
            ecf_distance(
                &a,
                &b,
                &fracvar::stattest::DEFAULT_ECF_LAMBDAS,
                cfg.thresholds.ecf_distance,
            )?,
        ),
        info("cholesky_jitter", factor.jitter()),
    ];

    Ok(RunOutput {
        report: report(EXP, cfg, None, checks),
        csv: CsvPayload::Stats(rows),
    })
}
