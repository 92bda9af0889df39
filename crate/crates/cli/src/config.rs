//! Configuration resolution for the experiment CLI.
//!
//! Settings come from three layers, lowest precedence first: built-in
//! defaults, an optional JSON config file, and command-line flags. The
//! resolved configuration is echoed into every report so a report is
//! self-describing.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use fracvar::{Hurst, TestFunction};

/// All experiments the CLI can run. `run-all` executes every entry except
/// `bifractional`, which ships as an opt-in extra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    /// Series constants with radii and tail bounds.
    Constants,
    /// Path-generator exactness: covariance z-matrix and endpoint KS.
    Simulate,
    /// Weighted quadratic variation: moment targets and law tests.
    WeightedQv,
    /// Midpoint Riemann sums against the corrected limit law.
    Midpoint,
    /// Cubic increment sums vanish in mean square.
    Cubic,
    /// Alternating squared-increment sums: variance and stability probes.
    Alternating,
    /// Trapezoid Riemann sums obey the classical change of variables.
    Trapezoid,
    /// Quadratic-variation fluctuation regimes across the roughness range.
    Scaling,
    /// Square-root kernel factorizes the covariance (quadrature check).
    Kernel,
    /// Deterministic inner-product inequality suite.
    Bounds,
    /// Opt-in: midpoint limit law on the bifractional companion process.
    Bifractional,
}

impl ExperimentName {
    /// Experiments executed by `run-all`, in execution order.
    pub const RUN_ALL: [ExperimentName; 10] = [
        ExperimentName::Constants,
        ExperimentName::Bounds,
        ExperimentName::Kernel,
        ExperimentName::Simulate,
        ExperimentName::WeightedQv,
        ExperimentName::Midpoint,
        ExperimentName::Cubic,
        ExperimentName::Alternating,
        ExperimentName::Trapezoid,
        ExperimentName::Scaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Constants => "constants",
            ExperimentName::Simulate => "simulate",
            ExperimentName::WeightedQv => "weighted-qv",
            ExperimentName::Midpoint => "midpoint",
            ExperimentName::Cubic => "cubic",
            ExperimentName::Alternating => "alternating",
            ExperimentName::Trapezoid => "trapezoid",
            ExperimentName::Scaling => "scaling",
            ExperimentName::Kernel => "kernel",
            ExperimentName::Bounds => "bounds",
            ExperimentName::Bifractional => "bifractional",
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pass/fail thresholds shared by all statistical checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Two-sample KS tests pass when p exceeds this.
    pub ks_p: f64,
    /// Characteristic-function distances pass when below this.
    pub ecf_distance: f64,
    /// Moment z-scores pass within this many standard errors.
    pub moment_sigmas: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks_p: 0.01,
            ecf_distance: 0.05,
            moment_sigmas: 4.0,
        }
    }
}

/// On-disk config layout: every field optional, flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub f: Option<String>,
    pub hurst: Option<f64>,
    pub workers: Option<usize>,
    pub thresholds: Option<Thresholds>,
    /// Per-sample CSV export path (config-file-only setting).
    pub csv_path: Option<PathBuf>,
}

/// Flag-level overrides collected by the argument parser.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub f: Option<String>,
    pub hurst: Option<f64>,
    pub workers: Option<usize>,
}

/// Fully resolved configuration handed to the experiment runners.
///
/// `n`, `m`, `f`, and `hurst` stay optional here: when absent, each
/// experiment substitutes its preset (the pre-registered acceptance
/// parameters); when present, they pin every sub-check of the experiment.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub f: Option<TestFunction>,
    pub hurst: Option<Hurst>,
    pub workers: usize,
    pub thresholds: Thresholds,
    pub csv_path: Option<PathBuf>,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        ResolvedConfig {
            seed: 42,
            n: None,
            m: None,
            f: None,
            hurst: None,
            workers: default_workers(),
            thresholds: Thresholds::default(),
            csv_path: None,
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing config file {}", path.display()))
}

/// Merge defaults, file, and flags (flags win).
pub fn resolve(file: Option<FileConfig>, flags: &Overrides) -> Result<ResolvedConfig> {
    let file = file.unwrap_or_default();
    let f_name = flags.f.clone().or(file.f);
    let f = f_name
        .map(|name| TestFunction::from_name(&name))
        .transpose()
        .context("resolving the weight function name")?;
    let hurst = flags
        .hurst
        .or(file.hurst)
        .map(Hurst::new)
        .transpose()
        .context("resolving the Hurst index")?;
    let workers = flags.workers.or(file.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        anyhow::bail!("--workers must be at least 1");
    }
    Ok(ResolvedConfig {
        seed: flags.seed.or(file.seed).unwrap_or(42),
        n: flags.n.or(file.n),
        m: flags.m.or(file.m),
        f,
        hurst,
        workers,
        thresholds: file.thresholds.unwrap_or_default(),
        csv_path: file.csv_path,
    })
}
