//! Distributions of the channel model: truncated gamma families, wrapped
//! normal, von Mises; their samplers, densities, moments and entropies.
//!
//! All entropies are reported in bits. Samplers draw from explicit
//! [`RngStream`]s so every Monte Carlo result is reproducible and distinct
//! streams can run on distinct threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use thiserror::Error;

use crate::quadrature::{integrate, integrate_to_inf};
use crate::specfun::{
    self, bessel_i0_scaled, bessel_i1_i0_ratio, ln_bessel_i0, upper_incomplete_gamma,
};
use crate::LOG2_E;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("gamma = 0 requires every alpha > 0")]
    ZeroGammaNeedsPositiveAlpha,
    #[error(transparent)]
    SpecFun(#[from] specfun::SpecFunError),
}

pub type Result<T> = std::result::Result<T, DistError>;

/// Counter-based RNG stream: identical `(seed, stream_id)` reproduce
/// identical sample sequences, and distinct streams are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive a child stream; `tag` values must be distinct per child.
    pub fn substream(&self, tag: u64) -> RngStream {
        // splitmix64 mix of (stream_id, tag) keeps children decorrelated
        let mut z = self
            .stream_id
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(tag)
            .wrapping_add(0x2545f4914f6cdd1d);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        RngStream::new(self.seed, z ^ (z >> 31))
    }
}

/// Wrap an angle into [-pi, pi).
pub fn wrap(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi for arguments just below a period
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Truncated gamma family
// ---------------------------------------------------------------------------

/// Parameters of the M-dimensional truncated gamma distribution: independent
/// elements with density proportional to e^(-r/mu) r^(alpha_m - 1) on
/// r > mu * gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGammaParams {
    pub mu: f64,
    pub alpha: Vec<f64>,
    pub gamma: f64,
}

impl TruncatedGammaParams {
    pub fn new(mu: f64, alpha: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(DistError::InvalidParam {
                name: "mu",
                value: mu,
            });
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(DistError::InvalidParam {
                name: "gamma",
                value: gamma,
            });
        }
        for &a in &alpha {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(DistError::InvalidParam {
                    name: "alpha",
                    value: a,
                });
            }
            if gamma == 0.0 && a == 0.0 {
                return Err(DistError::ZeroGammaNeedsPositiveAlpha);
            }
        }
        Ok(Self { mu, alpha, gamma })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// Density of the truncated gamma vector at `r`; zero off the support.
pub fn gtr_pdf(p: &TruncatedGammaParams, r: &[f64]) -> Result<f64> {
    assert_eq!(r.len(), p.dim());
    let lo = p.mu * p.gamma;
    let mut acc = 1.0;
    for (&rm, &am) in r.iter().zip(&p.alpha) {
        if rm <= lo {
            return Ok(0.0);
        }
        let norm = upper_incomplete_gamma(am, p.gamma)?;
        acc *= (-rm / p.mu).exp() / norm * p.mu.powf(-am) * rm.powf(am - 1.0);
    }
    Ok(acc)
}

/// Draw `n` i.i.d. vectors from the truncated gamma law.
///
/// Rejection from the untruncated gamma proposal; the acceptance rate is
/// Gamma(alpha, gamma)/Gamma(alpha), near 1 for the small gamma used here.
/// Falls back to inverse-CDF bisection if rejection stalls.
pub fn gtr_sample(p: &TruncatedGammaParams, stream: RngStream, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream.rng();
    let lo = p.mu * p.gamma;
    let mut gammas = Vec::with_capacity(p.dim());
    for &am in &p.alpha {
        let a = if am == 0.0 { f64::MIN_POSITIVE } else { am };
        gammas.push(Gamma::new(a, p.mu).map_err(|_| DistError::InvalidParam {
            name: "alpha",
            value: am,
        })?);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = Vec::with_capacity(p.dim());
        for (j, g) in gammas.iter().enumerate() {
            let mut accepted = None;
            for _ in 0..400 {
                let x = g.sample(&mut rng);
                if x > lo {
                    accepted = Some(x);
                    break;
                }
            }
            let x = match accepted {
                Some(x) => x,
                None => inverse_cdf_truncated(p.alpha[j], p.gamma, p.mu, rng.gen::<f64>())?,
            };
            v.push(x);
        }
        out.push(v);
    }
    Ok(out)
}

// Inverse CDF of the scalar truncated gamma by bisection.
fn inverse_cdf_truncated(alpha: f64, gamma: f64, mu: f64, q: f64) -> Result<f64> {
    let norm = upper_incomplete_gamma(alpha, gamma)?;
    // survival S(x) = Gamma(alpha, x/mu)/Gamma(alpha,gamma); solve S = 1 - q
    let target = (1.0 - q).clamp(1e-300, 1.0);
    let mut lo = gamma;
    let mut hi = (gamma + 1.0).max(2.0 * alpha + 20.0);
    while upper_incomplete_gamma(alpha, hi)? / norm > target {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if upper_incomplete_gamma(alpha, mid)? / norm > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
    }
    Ok(mu * 0.5 * (lo + hi))
}

/// Draw from the square-root truncated gamma law (elementwise sqrt of `gtr_sample`).
pub fn sgtr_sample(p: &TruncatedGammaParams, stream: RngStream, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = gtr_sample(p, stream, n)?;
    for v in &mut out {
        for x in v.iter_mut() {
            *x = x.sqrt();
        }
    }
    Ok(out)
}

/// Draw circularly symmetric complex vectors whose squared magnitudes follow
/// the truncated gamma law; phases are i.i.d. Uniform[-pi, pi), independent
/// of the magnitudes.
pub fn csgtr_sample(
    p: &TruncatedGammaParams,
    stream: RngStream,
    n: usize,
) -> Result<Vec<Vec<num_complex::Complex64>>> {
    let mags = sgtr_sample(p, stream.substream(0), n)?;
    let mut rng = stream.substream(1).rng();
    let out = mags
        .into_iter()
        .map(|v| {
            v.into_iter()
                .map(|s| {
                    let phase = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    num_complex::Complex64::from_polar(s, phase)
                })
                .collect()
        })
        .collect();
    Ok(out)
}

/// Mean factor J(alpha, gamma) = Gamma(alpha+1, gamma)/Gamma(alpha, gamma),
/// so that a scalar truncated gamma with scale mu has mean mu * J.
pub fn j_factor(alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(DistError::InvalidParam {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(upper_incomplete_gamma(alpha + 1.0, gamma)? / upper_incomplete_gamma(alpha, gamma)?)
}

/// E[f(u)] for scalar u with density u^(alpha-1) e^-u / Gamma(alpha, gamma) on
/// (gamma, inf) — the unit-scale truncated gamma. The substitution u = t^(1/alpha)
/// removes the u^(alpha-1) singularity near zero for alpha < 1.
pub fn truncated_gamma_expect<F: Fn(f64) -> f64>(alpha: f64, gamma: f64, f: F) -> Result<f64> {
    let norm = upper_incomplete_gamma(alpha, gamma)?;
    let split = (gamma + 1.0).max(1.0);
    let head = if gamma < split {
        // int_gamma^split u^(alpha-1) e^-u f(u) du with u = t^(1/alpha)
        let inv_a = 1.0 / alpha;
        integrate(
            |t| {
                let u = t.powf(inv_a);
                inv_a * (-u).exp() * f(u)
            },
            gamma.powf(alpha),
            split.powf(alpha),
            1e-11,
        )
        .value
    } else {
        0.0
    };
    let lo = split.max(gamma);
    let tail = integrate_to_inf(|u| u.powf(alpha - 1.0) * (-u).exp() * f(u), lo, 1e-11).value;
    Ok((head + tail) / norm)
}

/// Differential entropy in bits of the scalar truncated gamma with scale `mu`,
/// shape `alpha`, truncation `gamma`.
///
/// For gamma = 0 this is the closed-form gamma entropy; for gamma > 0 it is
/// computed by quadrature of -f log f (no closed form is available).
pub fn truncated_gamma_entropy_bits(alpha: f64, gamma: f64, mu: f64) -> Result<f64> {
    if gamma == 0.0 {
        let h_nats = alpha
            + specfun::log_gamma(alpha)?
            + (1.0 - alpha) * specfun::digamma(alpha)?
            + mu.ln();
        return Ok(h_nats * LOG2_E);
    }
    // unit-scale density g(u) = u^(alpha-1) e^-u / norm; h(r) = h(u) + log2 mu
    let norm = upper_incomplete_gamma(alpha, gamma)?;
    let ln_norm = norm.ln();
    let h_u = truncated_gamma_expect(alpha, gamma, |u| {
        let ln_g = (alpha - 1.0) * u.ln() - u - ln_norm;
        -ln_g
    })?;
    Ok((h_u + mu.ln()) * LOG2_E)
}

// ---------------------------------------------------------------------------
// Wrapped normal
// ---------------------------------------------------------------------------

/// Wrapped normal WN(0, sigma2): a zero-mean Gaussian reduced mod 2*pi into
/// [-pi, pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedNormalParams {
    pub sigma2: f64,
}

impl WrappedNormalParams {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(DistError::InvalidParam {
                name: "sigma2",
                value: sigma2,
            });
        }
        Ok(Self { sigma2 })
    }
}

/// Draw `n` wrapped-normal increments.
pub fn wrapped_normal_sample(p: WrappedNormalParams, stream: RngStream, n: usize) -> Vec<f64> {
    let mut rng = stream.rng();
    let normal = Normal::new(0.0, p.sigma2.sqrt()).expect("validated sigma");
    (0..n).map(|_| wrap(normal.sample(&mut rng))).collect()
}

/// Wrapped normal density via the theta series, truncated when the tail term
/// drops below 1e-16 of the accumulated value.
pub fn wrapped_normal_pdf(p: WrappedNormalParams, theta: f64) -> f64 {
    use std::f64::consts::PI;
    let sigma = p.sigma2.sqrt();
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let l_max = ((8.6 * sigma + PI) / (2.0 * PI)).ceil() as i64 + 1;
    let mut acc = 0.0;
    for l in -l_max..=l_max {
        let t = theta + 2.0 * PI * l as f64;
        let term = (-t * t / (2.0 * p.sigma2)).exp();
        acc += term;
        if l > 0 && term < 1e-16 * acc {
            break;
        }
    }
    norm * acc
}

/// Exact differential entropy in bits of WN(0, sigma2), by periodic-trapezoid
/// quadrature of the wrapped density. Spectrally accurate for smooth periodic
/// integrands. For extremely small sigma the Gaussian asymptote
/// 0.5*log2(2*pi*e*sigma2) is returned; there the wrapped and unwrapped laws
/// agree to far below f64 resolution.
pub fn wrapped_normal_entropy_bits(p: WrappedNormalParams) -> f64 {
    use std::f64::consts::PI;
    let sigma = p.sigma2.sqrt();
    if sigma < 1.6e-5 {
        return 0.5 * (2.0 * PI * std::f64::consts::E * p.sigma2).log2();
    }
    let n = ((64.0 / sigma).ceil() as usize).clamp(4096, 1 << 22);
    let step = 2.0 * PI / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let theta = -PI + (i as f64 + 0.5) * step;
        let f = wrapped_normal_pdf(p, theta);
        if f > 0.0 {
            acc -= f * f.log2();
        }
    }
    acc * step
}

// ---------------------------------------------------------------------------
// Von Mises
// ---------------------------------------------------------------------------

/// Von Mises (Tikhonov) distribution VM(mu, kappa) on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesParams {
    pub mu: f64,
    pub kappa: f64,
}

impl VonMisesParams {
    pub fn new(mu: f64, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(DistError::InvalidParam {
                name: "kappa",
                value: kappa,
            });
        }
        Ok(Self {
            mu: wrap(mu),
            kappa,
        })
    }
}

/// Von Mises density, evaluated in exponentially scaled form so it stays
/// finite at arbitrarily high concentration.
pub fn von_mises_pdf(p: VonMisesParams, phi: f64) -> f64 {
    use std::f64::consts::PI;
    let c = (p.kappa * ((phi - p.mu).cos() - 1.0)).exp();
    c / (2.0 * PI * bessel_i0_scaled(p.kappa))
}

/// Von Mises entropy in bits: log2(2 pi I0(k)) - k I1(k)/I0(k) log2(e),
/// with log-scaled Bessel evaluation for large kappa.
pub fn von_mises_entropy_bits(p: VonMisesParams) -> f64 {
    use std::f64::consts::PI;
    let k = p.kappa;
    ((2.0 * PI).ln() + ln_bessel_i0(k) - k * bessel_i1_i0_ratio(k)) * LOG2_E
}
