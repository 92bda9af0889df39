//! Simulation and inference toolkit for fractional Brownian motion at the
//! critical roughness index 1/4, where weighted quadratic variations stop
//! converging classically and acquire mixed-Gaussian fluctuations.
//!
//! The crate provides, in dependency order:
//!
//! * [`hurst`] — a validated Hurst index newtype.
//! * [`cov`] — covariance kernels of fBm and of a bifractional companion
//!   process, the increment autocorrelation `rho`, and the inner products
//!   between step functions on the grid that drive every second-order
//!   computation.
//! * [`quad`] — adaptive Gauss-Kronrod quadrature used by the kernel
//!   module.
//! * [`kernel`] — the square-root (Volterra) kernel of fBm for rough
//!   indices, with a quadrature check that it factorizes the covariance.
//! * [`series`] — the two variance constants of the limit theorems,
//!   evaluated by series with rigorous tail bounds.
//! * [`rng`] — deterministic, collision-free stream splitting on top of a
//!   counter-based generator.
//! * [`sim`] — exact path simulation: dense Cholesky (oracle route) and
//!   FFT circulant embedding (fast route).
//! * [`testfn`] — a catalog of smooth weight functions with exact
//!   derivatives.
//! * [`stats`] — the weighted variation statistics and Riemann sums.
//! * [`limit`] — conditional mixed-Gaussian limit laws and their moment
//!   targets.
//! * [`stattest`] — KS / characteristic-function / moment tests used to
//!   compare Monte Carlo statistics against the limit laws.

pub mod cov;
pub mod error;
pub mod hurst;
pub mod kernel;
pub mod limit;
pub mod quad;
pub mod rng;
pub mod series;
pub mod sim;
pub mod stats;
pub mod stattest;
pub mod testfn;

pub use error::{Error, Result};
pub use hurst::Hurst;
pub use limit::{LimitLaw, LimitSample, MomentTargets, TargetMethod};
pub use rng::{RngStream, StreamPurpose};
pub use series::SeriesConstant;
pub use sim::{CholeskyFactor, CirculantEmbedding, Generator, GridPath, Model};
pub use stats::{StatKind, VariationStatistic};
pub use stattest::{MomentCheck, TestKind, TwoSampleResult};
pub use testfn::TestFunction;
