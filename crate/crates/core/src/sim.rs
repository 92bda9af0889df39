//! Exact simulation of rough Gaussian paths on the uniform grid
//! {0, 1/n, ..., 1}.
//!
//! Two generators are provided:
//!
//! * `CholeskyFactor`: factor the full level covariance matrix once, then
//!   draw paths by one triangular matrix-vector product each. Exact for any
//!   model and any grid size up to `MAX_CHOLESKY_N`, at O(n^3) setup and
//!   O(n^2) per path.
//! * `CirculantEmbedding`: embed the stationary increment covariance in a
//!   circulant matrix, diagonalize it with one FFT, and synthesize paths at
//!   O(n log n) each. Exact whenever the embedding eigenvalues are
//!   nonnegative, which holds for every (H, n) pair this crate ships; if an
//!   eigenvalue falls below -1e-10 the embedding is doubled once and, should
//!   that also fail, path generation falls back to Cholesky.
//!
//! Both generators consume the stream assigned to the path in a fixed draw
//! order, so a `(master_seed, stream_index, model, n, generator)` tuple pins
//! the path bitwise.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cov::{bifractional_cov, fbm_cov, increment_cov, rho};
use crate::error::{Error, Result};
use crate::hurst::Hurst;
use crate::rng::RngStream;

/// Largest grid for which a dense Cholesky factorization is attempted.
pub const MAX_CHOLESKY_N: usize = 4096;

/// Eigenvalue floor below which a circulant embedding is rejected.
pub const EMBEDDING_EIG_TOL: f64 = -1e-10;

/// Gaussian process being simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum Model {
    /// Fractional Brownian motion with Hurst index `h`.
    FractionalBrownian { h: Hurst },
    /// The bifractional companion process with covariance
    /// `(sqrt(t+s) - sqrt|t-s|) / sqrt(2 pi)`. Its increments are not
    /// stationary, so only the Cholesky generator applies.
    BifractionalHalf,
}

impl Model {
    pub fn cov(self, s: f64, t: f64) -> Result<f64> {
        match self {
            Model::FractionalBrownian { h } => fbm_cov(h, s, t),
            Model::BifractionalHalf => bifractional_cov(s, t),
        }
    }
}

/// Which algorithm actually produced a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Cholesky,
    Circulant,
}

/// A simulated path sampled on {0, 1/n, ..., 1}; `values[0] = 0` always.
#[derive(Clone, Debug)]
pub struct GridPath {
    pub model: Model,
    pub generator: Generator,
    pub stream: RngStream,
    pub values: Vec<f64>,
}

impl GridPath {
    /// Number of increments; `values` holds n + 1 levels.
    #[inline]
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.n() as f64
    }

    /// Increment `values[k+1] - values[k]` for `k < n`.
    #[inline]
    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    #[inline]
    pub fn endpoint(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// In-place Cholesky factorization of a packed lower-triangular symmetric
/// matrix. Returns false when a pivot is not strictly positive.
fn factor_packed(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[packed_index(i, j)];
            for k in 0..j {
                sum -= a[packed_index(i, k)] * a[packed_index(j, k)];
            }
            if j < i {
                a[packed_index(i, j)] = sum / a[packed_index(j, j)];
            } else {
                if sum <= 0.0 || !sum.is_finite() {
                    return false;
                }
                a[packed_index(i, i)] = sum.sqrt();
            }
        }
    }
    true
}

fn packed_cov(model: Model, times: &[f64]) -> Result<Vec<f64>> {
    let n = times.len();
    let mut a = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            a[packed_index(i, j)] = model.cov(times[i], times[j])?;
        }
    }
    Ok(a)
}

/// Dense exact generator: the lower Cholesky factor of the level covariance
/// on the interior grid points {1/n, ..., 1}.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    model: Model,
    n: usize,
    lower: Vec<f64>,
    /// Diagonal jitter that was needed to complete the factorization
    /// (0 or 1e-12).
    jitter: f64,
}

impl CholeskyFactor {
    pub fn new(model: Model, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                context: "CholeskyFactor::new",
                detail: "grid size must be positive".into(),
            });
        }
        if n > MAX_CHOLESKY_N {
            return Err(Error::GridTooLarge {
                n,
                max: MAX_CHOLESKY_N,
            });
        }
        let times: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let base = packed_cov(model, &times)?;
        // Jitter policy: try the exact matrix first, then at most 1e-12 on
        // the diagonal.
        for jitter in [0.0, 1e-12] {
            let mut a = base.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    a[packed_index(i, i)] += jitter;
                }
            }
            if factor_packed(&mut a, n) {
                return Ok(CholeskyFactor {
                    model,
                    n,
                    lower: a,
                    jitter,
                });
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Entry L[i][j] of the lower factor, `j <= i`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    /// Draw one path; consumes exactly n standard normals from the stream.
    pub fn sample(&self, stream: RngStream) -> GridPath {
        let mut rng = stream.rng();
        let z: Vec<f64> = (0..self.n)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut values = vec![0.0; self.n + 1];
        for i in 0..self.n {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            let mut x = 0.0;
            for (l, zj) in row.iter().zip(&z) {
                x += l * zj;
            }
            values[i + 1] = x;
        }
        GridPath {
            model: self.model,
            generator: Generator::Cholesky,
            stream,
            values,
        }
    }
}

/// Autocovariance `E[X_0 X_k]` of the fBm increment sequence on a grid of
/// mesh 1/n; lag k may run past n (the stationary sequence extends beyond
/// the unit interval).
fn fgn_autocov(h: Hurst, n: usize, k: usize) -> f64 {
    if h.is_quarter() {
        rho(k as i64) / (2.0 * (n as f64).sqrt())
    } else {
        let inv = 1.0 / n as f64;
        increment_cov(h, 0.0, inv, k as f64 * inv, (k + 1) as f64 * inv)
            .expect("nonnegative grid times")
    }
}

/// O(n log n) generator for fBm via circulant embedding of the increment
/// covariance.
pub struct CirculantEmbedding {
    h: Hurst,
    n: usize,
    /// Embedding size: 2n, or 4n when the first attempt had an eigenvalue
    /// below the tolerance.
    m: usize,
    sqrt_eig: Vec<f64>,
    min_eigenvalue: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantEmbedding {
    pub fn new(h: Hurst, n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Self::with_autocov(&|k| fgn_autocov(h, n, k), h, n)
    }

    /// Embedding construction from an arbitrary increment autocovariance;
    /// separated out so that the eigenvalue acceptance logic is testable
    /// against synthetic sequences.
    fn with_autocov(gamma: &dyn Fn(usize) -> f64, h: Hurst, n: usize) -> Result<Self> {
        let mut planner = FftPlanner::new();
        let mut last_min = f64::INFINITY;
        for m in [2 * n, 4 * n] {
            let half = m / 2;
            let mut buf: Vec<Complex<f64>> = (0..m)
                .map(|k| Complex::new(gamma(k.min(m - k)), 0.0))
                .collect();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut buf);
            let eig: Vec<f64> = buf.iter().map(|c| c.re).collect();
            let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
            last_min = min_eigenvalue;
            if min_eigenvalue >= EMBEDDING_EIG_TOL {
                // Clip roundoff-negative eigenvalues to zero.
                let sqrt_eig = eig.iter().map(|&l| l.max(0.0).sqrt()).collect();
                debug_assert_eq!(half * 2, m);
                return Ok(CirculantEmbedding {
                    h,
                    n,
                    m,
                    sqrt_eig,
                    min_eigenvalue,
                    fft,
                });
            }
        }
        Err(Error::EmbeddingFailed {
            min_eigenvalue: last_min,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn doubled(&self) -> bool {
        self.m == 4 * self.n
    }

    /// Draw one path; consumes exactly m = 2n (or 4n) standard normals in a
    /// fixed order: the k = 0 coefficient, one (u, v) pair per conjugate
    /// coefficient pair, then the real middle coefficient.
    pub fn sample(&self, stream: RngStream) -> GridPath {
        let m = self.m;
        let half = m / 2;
        let mut rng = stream.rng();
        let mut w = vec![Complex::new(0.0, 0.0); m];
        let z0: f64 = StandardNormal.sample(&mut rng);
        w[0] = Complex::new(self.sqrt_eig[0] * z0, 0.0);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..half {
            let u: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = StandardNormal.sample(&mut rng);
            let amp = self.sqrt_eig[k] * scale;
            w[k] = Complex::new(amp * u, amp * v);
            w[m - k] = w[k].conj();
        }
        let zh: f64 = StandardNormal.sample(&mut rng);
        w[half] = Complex::new(self.sqrt_eig[half] * zh, 0.0);

        self.fft.process(&mut w);

        let norm = 1.0 / (m as f64).sqrt();
        let mut values = vec![0.0; self.n + 1];
        let mut acc = 0.0;
        for (k, c) in w.iter().take(self.n).enumerate() {
            acc += c.re * norm;
            values[k + 1] = acc;
        }
        GridPath {
            model: Model::FractionalBrownian { h: self.h },
            generator: Generator::Circulant,
            stream,
            values,
        }
    }
}

/// One-shot Cholesky path. Batch callers should build a `CholeskyFactor`
/// once and call `sample` per replication instead.
pub fn simulate_cholesky(model: Model, n: usize, stream: RngStream) -> Result<GridPath> {
    Ok(CholeskyFactor::new(model, n)?.sample(stream))
}

/// One-shot circulant path for fBm; `n` must be a power of two. Falls back
/// to the Cholesky generator if the embedding fails even after doubling.
/// Batch callers should build a `CirculantEmbedding` once.
pub fn simulate_circulant(h: Hurst, n: usize, stream: RngStream) -> Result<GridPath> {
    match CirculantEmbedding::new(h, n) {
        Ok(embedding) => Ok(embedding.sample(stream)),
        Err(Error::EmbeddingFailed { .. }) if n <= MAX_CHOLESKY_N => {
            simulate_cholesky(Model::FractionalBrownian { h }, n, stream)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamPurpose;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn stream(r: u64) -> RngStream {
        RngStream::for_purpose(42, StreamPurpose::Aux, r)
    }

    #[test]
    fn brownian_cholesky_factor_is_constant() {
        // For Brownian motion the level covariance factors into the running
        // sum of independent increments: every factor entry is 1/sqrt(n).
        let f = CholeskyFactor::new(
            Model::FractionalBrownian { h: Hurst::HALF },
            8,
        )
        .unwrap();
        for i in 0..8 {
            for j in 0..=i {
                assert_abs_diff_eq!(f.entry(i, j), 0.125f64.sqrt(), epsilon = 1e-12);
            }
        }
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn cholesky_reproduces_covariance_exactly() {
        // L L^T must reproduce the covariance matrix to roundoff.
        let model = Model::FractionalBrownian { h: Hurst::QUARTER };
        let n = 32;
        let f = CholeskyFactor::new(model, n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                let mut dot = 0.0;
                for k in 0..=j {
                    dot += f.entry(i, k) * f.entry(j, k);
                }
                let want = model
                    .cov((i + 1) as f64 / n as f64, (j + 1) as f64 / n as f64)
                    .unwrap();
                assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn guards_reject_oversize_and_non_power_grids() {
        let model = Model::FractionalBrownian { h: Hurst::QUARTER };
        assert!(matches!(
            CholeskyFactor::new(model, MAX_CHOLESKY_N + 1),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(matches!(
            CirculantEmbedding::new(Hurst::QUARTER, 100),
            Err(Error::NotPowerOfTwo(100))
        ));
    }

    #[test]
    fn shipped_embeddings_need_no_doubling() {
        for (h, n) in [
            (0.25, 512usize),
            (0.25, 4096),
            (0.4, 1024),
            (0.75, 1024),
            (0.8, 4096),
        ] {
            let e = CirculantEmbedding::new(Hurst::new(h).unwrap(), n).unwrap();
            assert!(
                e.min_eigenvalue() > 0.0,
                "H={h} n={n}: min eig {}",
                e.min_eigenvalue()
            );
            assert!(!e.doubled(), "H={h} n={n} doubled unexpectedly");
        }
    }

    #[test]
    fn synthetic_indefinite_autocov_fails_even_doubled() {
        // gamma = (1, 0.9, -0.9, 0, ...) embeds with eigenvalue -1.7 at
        // m = 2n and -0.27 at m = 4n.
        let gamma = |k: usize| match k {
            0 => 1.0,
            1 => 0.9,
            2 => -0.9,
            _ => 0.0,
        };
        let out = CirculantEmbedding::with_autocov(&gamma, Hurst::QUARTER, 2);
        assert!(matches!(out, Err(Error::EmbeddingFailed { .. })));
    }

    #[test]
    fn paths_are_bitwise_reproducible_per_stream() {
        let h = Hurst::QUARTER;
        let e = CirculantEmbedding::new(h, 64).unwrap();
        let a = e.sample(stream(3));
        let b = e.sample(stream(3));
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, e.sample(stream(4)).values);

        let f = CholeskyFactor::new(Model::FractionalBrownian { h }, 64).unwrap();
        let a = f.sample(stream(3));
        let b = f.sample(stream(3));
        assert_eq!(a.values, b.values);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.n(), 64);
        assert_eq!(a.generator, Generator::Cholesky);
    }

    #[test]
    fn endpoint_variance_matches_model() {
        // E[B_1^2] = 1 for fBm at any H; E[F_1^2] = sqrt(2/pi) * ... for the
        // bifractional model it is cov(1, 1).
        let m = 4000;
        let e = CirculantEmbedding::new(Hurst::QUARTER, 64).unwrap();
        let var = (0..m)
            .map(|r| e.sample(stream(r as u64)).endpoint().powi(2))
            .sum::<f64>()
            / m as f64;
        assert!((var - 1.0).abs() < 0.12, "circulant endpoint var = {var}");

        let f = CholeskyFactor::new(Model::BifractionalHalf, 16).unwrap();
        let want = Model::BifractionalHalf.cov(1.0, 1.0).unwrap();
        let var = (0..m)
            .map(|r| f.sample(stream(10_000 + r as u64)).endpoint().powi(2))
            .sum::<f64>()
            / m as f64;
        assert!(
            (var - want).abs() < 0.07,
            "bifractional endpoint var = {var}, want {want}"
        );
    }

    #[test]
    fn lag_one_increment_correlation_is_negative_half_of_rho_one() {
        // Pooled lag-1 correlation of increments at H = 1/4 approaches
        // rho(1)/2 = (sqrt 2 - 2)/2.
        let e = CirculantEmbedding::new(Hurst::QUARTER, 512).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..2000u64 {
            let p = e.sample(stream(50_000 + r));
            for k in 0..511 {
                num += p.increment(k) * p.increment(k + 1);
            }
            for k in 0..512 {
                den += p.increment(k) * p.increment(k);
            }
        }
        let corr = num / den * (512.0 / 511.0);
        assert!(
            (corr - (2f64.sqrt() - 2.0) / 2.0).abs() < 0.02,
            "lag-1 corr = {corr}"
        );
    }

    #[test]
    fn circulant_fallback_path_matches_direct_cholesky_guard() {
        // Non-power-of-two is a hard error, not a silent fallback.
        assert!(simulate_circulant(Hurst::QUARTER, 100, stream(0)).is_err());
        // One-shot helpers agree with their batched counterparts.
        let p = simulate_circulant(Hurst::QUARTER, 32, stream(1)).unwrap();
        let q = CirculantEmbedding::new(Hurst::QUARTER, 32)
            .unwrap()
            .sample(stream(1));
        assert_eq!(p.values, q.values);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn covariance_grids_are_positive_semidefinite(
            mut times in proptest::collection::vec(1e-3f64..1.0, 1..=64),
            h in 0.05f64..0.95,
        ) {
            // lambda_min >= -1e-10 iff the matrix plus 1e-10 I admits a
            // Cholesky factorization.
            times.sort_by(f64::total_cmp);
            let h = Hurst::new(h).unwrap();
            let model = Model::FractionalBrownian { h };
            let n = times.len();
            let mut a = packed_cov(model, &times).unwrap();
            for i in 0..n {
                a[packed_index(i, i)] += 1e-10;
            }
            prop_assert!(factor_packed(&mut a, n), "indefinite grid at H = {}", h.value());
        }
    }
}
