//! Catalog of smooth weight functions used by the variation statistics and
//! the limit-law samplers, with exact derivatives up to order three.
//!
//! Moment experiments need f and f''; bound checks need f'''. Keeping the
//! derivatives in closed form avoids finite-difference noise inside
//! acceptance tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named weight function with derivatives up to order three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// f(x) = 1
    One,
    /// f(x) = x
    Identity,
    /// f(x) = x^2
    Square,
    /// f(x) = x^3
    Cube,
    /// f(x) = sin x
    Sin,
    /// f(x) = cos x
    Cos,
    /// f(x) = exp(-x^2 / 2)
    Gauss,
}

impl TestFunction {
    pub const ALL: [TestFunction; 7] = [
        TestFunction::One,
        TestFunction::Identity,
        TestFunction::Square,
        TestFunction::Cube,
        TestFunction::Sin,
        TestFunction::Cos,
        TestFunction::Gauss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Identity => "identity",
            TestFunction::Square => "square",
            TestFunction::Cube => "cube",
            TestFunction::Sin => "sin",
            TestFunction::Cos => "cos",
            TestFunction::Gauss => "gauss",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFunction(name.to_owned()))
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Identity => x,
            TestFunction::Square => x * x,
            TestFunction::Cube => x * x * x,
            TestFunction::Sin => x.sin(),
            TestFunction::Cos => x.cos(),
            TestFunction::Gauss => (-0.5 * x * x).exp(),
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Identity => 1.0,
            TestFunction::Square => 2.0 * x,
            TestFunction::Cube => 3.0 * x * x,
            TestFunction::Sin => x.cos(),
            TestFunction::Cos => -x.sin(),
            TestFunction::Gauss => -x * (-0.5 * x * x).exp(),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Identity => 0.0,
            TestFunction::Square => 2.0,
            TestFunction::Cube => 6.0 * x,
            TestFunction::Sin => -x.sin(),
            TestFunction::Cos => -x.cos(),
            TestFunction::Gauss => (x * x - 1.0) * (-0.5 * x * x).exp(),
        }
    }

    pub fn d3(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Identity => 0.0,
            TestFunction::Square => 0.0,
            TestFunction::Cube => 6.0,
            TestFunction::Sin => -x.cos(),
            TestFunction::Cos => x.sin(),
            TestFunction::Gauss => x * (3.0 - x * x) * (-0.5 * x * x).exp(),
        }
    }

    /// Closure view, convenient for passing into the statistics.
    pub fn as_fn(self) -> impl Fn(f64) -> f64 + Copy {
        move |x| self.value(x)
    }
}

impl std::fmt::Display for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in TestFunction::ALL {
            assert_eq!(TestFunction::from_name(f.name()).unwrap(), f);
        }
        assert!(matches!(
            TestFunction::from_name("tan"),
            Err(Error::UnknownFunction(_))
        ));
    }

    fn central_d1(f: TestFunction, x: f64, h: f64) -> f64 {
        (f.value(x + h) - f.value(x - h)) / (2.0 * h)
    }

    fn central_d2(f: TestFunction, x: f64, h: f64) -> f64 {
        (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h)
    }

    fn central_d3(f: TestFunction, x: f64, h: f64) -> f64 {
        (f.d2(x + h) - f.d2(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for f in TestFunction::ALL {
            for &x in &[-1.3, -0.4, 0.0, 0.6, 2.1] {
                assert!(
                    (f.d1(x) - central_d1(f, x, 1e-4)).abs() < 1e-6,
                    "{f} d1 at {x}"
                );
                assert!(
                    (f.d2(x) - central_d2(f, x, 1e-4)).abs() < 1e-5,
                    "{f} d2 at {x}"
                );
                assert!(
                    (f.d3(x) - central_d3(f, x, 1e-3)).abs() < 1e-5,
                    "{f} d3 at {x}"
                );
            }
        }
    }

    #[test]
    fn finite_difference_error_shrinks_at_second_order() {
        // Central differences converge at O(h^2); the error ratio between
        // h and h/2 sits near 4 when the analytic derivative is right.
        for f in [TestFunction::Sin, TestFunction::Cos, TestFunction::Gauss] {
            let x = 0.6;
            let e1 = (f.d1(x) - central_d1(f, x, 1e-2)).abs();
            let e2 = (f.d1(x) - central_d1(f, x, 5e-3)).abs();
            let ratio = e1 / e2;
            assert!(
                (3.4..4.6).contains(&ratio),
                "{f}: error ratio {ratio} (e1={e1}, e2={e2})"
            );
        }
    }

    #[test]
    fn gauss_third_derivative_value() {
        // At x = 1: d3 = 1 * (3 - 1) * e^{-1/2} = 2 e^{-1/2}.
        let want = 2.0 * (-0.5f64).exp();
        assert!((TestFunction::Gauss.d3(1.0) - want).abs() < 1e-15);
    }
}
