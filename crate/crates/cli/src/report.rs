//! Report schema: every experiment emits one `ExperimentReport`, `run-all`
//! wraps them in a `SuiteReport`. Reports are plain serde structs so the
//! JSON field order is fixed by declaration order, which makes reports
//! byte-comparable once the volatile `timing` blocks are stripped.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use fracvar::{MomentCheck, SeriesConstant, TwoSampleResult};

use crate::config::{ResolvedConfig, Thresholds};

/// Echo of the configuration an experiment actually ran with. Worker count
/// and output paths are excluded: they must not influence numeric content.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub f: Option<String>,
    pub hurst: Option<f64>,
    pub thresholds: Thresholds,
}

impl ConfigEcho {
    pub fn from_config(cfg: &ResolvedConfig) -> Self {
        ConfigEcho {
            seed: cfg.seed,
            n: cfg.n,
            m: cfg.m,
            f: cfg.f.map(|f| f.name().to_owned()),
            hurst: cfg.hurst.map(|h| h.value()),
            thresholds: cfg.thresholds,
        }
    }
}

/// The series constants used by an experiment, with radii and tail bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsBlock {
    pub weighted: SeriesConstant,
    pub alternating: SeriesConstant,
}

/// One named check inside a report. `gate` marks whether the check
/// contributes to the overall verdict; informational entries record
/// context without gating.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckResult {
    Moment {
        name: String,
        gate: bool,
        #[serde(flatten)]
        detail: MomentCheck,
    },
    TwoSample {
        name: String,
        gate: bool,
        #[serde(flatten)]
        detail: TwoSampleResult,
    },
    /// A deterministic comparison `value` vs `bound`; the direction is
    /// encoded in `pass` by the runner (some bounds are lower bounds).
    Bound {
        name: String,
        gate: bool,
        value: f64,
        bound: f64,
        pass: bool,
    },
    /// Context-only numeric record.
    Info { name: String, value: f64 },
}

impl CheckResult {
    pub fn name(&self) -> &str {
        match self {
            CheckResult::Moment { name, .. }
            | CheckResult::TwoSample { name, .. }
            | CheckResult::Bound { name, .. }
            | CheckResult::Info { name, .. } => name,
        }
    }

    /// `Some(pass)` for gating checks, `None` otherwise.
    pub fn gate_verdict(&self) -> Option<bool> {
        match self {
            CheckResult::Moment { gate: true, detail, .. } => Some(detail.pass),
            CheckResult::TwoSample { gate: true, detail, .. } => Some(detail.pass),
            CheckResult::Bound { gate: true, pass, .. } => Some(*pass),
            _ => None,
        }
    }

    /// The pass flag regardless of gating, when the check has one.
    pub fn pass_flag(&self) -> Option<bool> {
        match self {
            CheckResult::Moment { detail, .. } => Some(detail.pass),
            CheckResult::TwoSample { detail, .. } => Some(detail.pass),
            CheckResult::Bound { pass, .. } => Some(*pass),
            CheckResult::Info { .. } => None,
        }
    }
}

/// Volatile wall-clock block; stripped before byte comparisons.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimingBlock {
    pub seconds: f64,
    pub workers: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsBlock>,
    pub checks: Vec<CheckResult>,
    pub overall_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingBlock>,
}

impl ExperimentReport {
    /// Conjunction of all gating verdicts (true when nothing gates).
    pub fn compute_overall(checks: &[CheckResult]) -> bool {
        checks.iter().filter_map(CheckResult::gate_verdict).all(|p| p)
    }

    pub fn find(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name() == name)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub experiments: Vec<ExperimentReport>,
    pub overall_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingBlock>,
}

/// Remove every `timing` key, recursively. Two reports from identical
/// configurations must serialize identically after this.
pub fn strip_volatile(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("timing");
            for v in map.values_mut() {
                strip_volatile(v);
            }
        }
        Value::Array(items) => {
            for v in items {
                strip_volatile(v);
            }
        }
        _ => {}
    }
}

/// Serialize with volatile fields removed, for byte comparisons.
pub fn stable_json<T: Serialize>(report: &T) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    strip_volatile(&mut value);
    serde_json::to_string_pretty(&value).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bound(name: &str, gate: bool, pass: bool) -> CheckResult {
        CheckResult::Bound {
            name: name.into(),
            gate,
            value: 1.0,
            bound: 2.0,
            pass,
        }
    }

    #[test]
    fn overall_ignores_non_gating_checks() {
        let checks = vec![
            bound("a", true, true),
            bound("b", false, false),
            CheckResult::Info {
                name: "c".into(),
                value: 3.0,
            },
        ];
        assert!(ExperimentReport::compute_overall(&checks));
        let checks = vec![bound("a", true, true), bound("b", true, false)];
        assert!(!ExperimentReport::compute_overall(&checks));
        assert!(ExperimentReport::compute_overall(&[]));
    }

    #[test]
    fn strip_volatile_removes_nested_timing() {
        let mut v = serde_json::json!({
            "timing": {"seconds": 1.0},
            "experiments": [
                {"name": "x", "timing": {"seconds": 2.0}, "checks": []}
            ]
        });
        strip_volatile(&mut v);
        assert!(v.get("timing").is_none());
        assert!(v["experiments"][0].get("timing").is_none());
        assert_eq!(v["experiments"][0]["name"], "x");
    }

    #[test]
    fn check_result_json_shape() {
        let c = bound("cov_max_abs_z", true, true);
        let j = serde_json::to_value(&c).unwrap();
        assert_eq!(j["type"], "bound");
        assert_eq!(j["name"], "cov_max_abs_z");
        assert_eq!(j["gate"], true);
    }
}
