//! Capacity bounds for the electro-optic frequency-comb phase-noise channel.
//!
//! An M-subchannel channel is impaired by two correlated Wiener phase-noise
//! sources (continuous-wave laser and RF oscillator) plus complex AWGN. This
//! crate computes duality upper bounds and truncated-gamma lower bounds on
//! capacity, their high-SNR asymptotes, and QAM achievable information rates
//! over the simulated channel, together with the special functions, samplers,
//! entropy estimators, and derivative-free optimizer they require.
//!
//! Layering, bottom up:
//! - [`specfun`]: scalar special functions (incomplete gamma, E1, Lambert W,
//!   digamma, Bessel I0/I1) with documented accuracy targets.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration.
//! - [`rngdist`]: reproducible RNG streams; truncated-gamma, wrapped-normal
//!   and von Mises densities, samplers, and entropies.
//! - [`channel`]: exact simulator of the comb channel.
//! - [`entropy`]: Kozachenko-Leonenko kNN differential entropy on mixed
//!   linear/circular samples; noncentral-chi-square entropies.
//! - [`optim`]: Nelder-Mead with box constraints and a quadratic penalty
//!   wrapper for power constraints.
//! - [`bounds`]: finite-SNR capacity bounds (upper/lower) and the AWGN
//!   reference.
//! - [`highsnr`]: high-SNR asymptotes and the constant gap terms.
//! - [`air`]: QAM achievable information rates via a quantized-phase
//!   auxiliary channel and forward recursion.
//! - [`stats`]: small goodness-of-fit helpers used by the test suites.

pub mod air;
pub mod bounds;
pub mod channel;
pub mod entropy;
pub mod highsnr;
pub mod optim;
pub mod quadrature;
pub mod rngdist;
pub mod specfun;
pub mod stats;

/// Base-2 logarithm of Euler's number; multiplies nat-valued quantities into bits.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.5772156649015328606;
