//! High-SNR capacity asymptotes and the constant gap between them.
//!
//! The upper asymptote is (M-1) log2(rho/(M-1)) + 2 log2(pi) - h(Dc, Dr); the
//! lower one subtracts a sum of SNR-independent gap terms driven by ratios of
//! square-root-gamma magnitudes. For M = 2 the sum is empty and the two
//! asymptotes coincide, which pins the high-SNR capacity itself.

use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::channel::ChannelParams;
use crate::rngdist::RngStream;
use crate::specfun::lambert_w0;
use crate::stats::mean_stderr;


#[derive(Debug, Error, Clone, PartialEq)]
pub enum HsnrError {
    #[error("subchannel index {m} out of range for M = {big_m}")]
    IndexOutOfRange { m: usize, big_m: usize },
    #[error("gamma = {0} outside (0, x_max]")]
    GammaOutOfRange(f64),
    #[error("rho must be positive, got {0}")]
    NonPositiveSnr(f64),
}

/// Largest truncation for which the Lambert construction below is defined:
/// the smallest x > 0 where x^(1/2) ln(x) = -1/e.
pub const X_MAX: f64 = 0.00471;

/// Unique positive root of (2+x) ln(2+x) - x ln(x) - 2 = 0, the upper end of
/// the incomplete-gamma inequality range.
pub const X_0: f64 = 0.1770;

/// Bisection check that the hard-coded constants solve their defining
/// equations to 1e-6. Returns the refined roots.
pub fn verify_constants() -> (f64, f64) {
    let f = |x: f64| x.sqrt() * x.ln() + (-1.0f64).exp();
    let x_max = bisect(f, 1e-8, (-2.0f64).exp());
    let g = |x: f64| (2.0 + x) * (2.0 + x).ln() - x * x.ln() - 2.0;
    let x_0 = bisect(g, 1e-9, 1.0);
    assert!((x_max - X_MAX).abs() < 1e-4, "x_max root {x_max}");
    assert!((x_0 - X_0).abs() < 1e-4, "x_0 root {x_0}");
    (x_max, x_0)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) < 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Limiting shape exponents: 1/2 on the two phase-reference subchannels,
/// 1 elsewhere.
pub fn alpha_star(m: usize, big_m: usize) -> Result<f64, HsnrError> {
    if m >= big_m {
        return Err(HsnrError::IndexOutOfRange { m, big_m });
    }
    Ok(if m < 2 { 0.5 } else { 1.0 })
}

/// c_m(gamma) = W(gamma^(alpha*) ln gamma) / ln gamma for 0 < gamma <= x_max.
pub fn c_factor(m: usize, big_m: usize, gamma: f64) -> Result<f64, HsnrError> {
    let a = alpha_star(m, big_m)?;
    if !(gamma > 0.0) || gamma > X_MAX + 1e-12 {
        return Err(HsnrError::GammaOutOfRange(gamma));
    }
    let ln_g = gamma.ln();
    let w = lambert_w0(gamma.powf(a) * ln_g).expect("argument >= -1/e for gamma <= x_max");
    Ok(w / ln_g)
}

/// alpha'_m(gamma) = alpha*_m - c_m(gamma); converges to alpha* as gamma -> 0
/// and keeps the power constraint feasible (J(alpha', gamma) <= alpha*).
pub fn alpha_prime(m: usize, big_m: usize, gamma: f64) -> Result<f64, HsnrError> {
    Ok(alpha_star(m, big_m)? - c_factor(m, big_m, gamma)?)
}

/// Truncation schedule gamma(rho) = x_max * min(1/sqrt(rho), rho).
pub fn gamma_schedule(rho: f64) -> Result<f64, HsnrError> {
    if !(rho > 0.0) {
        return Err(HsnrError::NonPositiveSnr(rho));
    }
    Ok(X_MAX * if rho >= 1.0 { 1.0 / rho.sqrt() } else { rho })
}

/// Configuration for the asymptote evaluation.
#[derive(Debug, Clone)]
pub struct HsnrConfig {
    pub channel: ChannelParams,
    pub mc_samples: usize,
    pub stream: RngStream,
}

/// High-SNR upper asymptote in total bits per channel use (o(1) dropped).
pub fn u_hsnr(rho: f64, cfg: &HsnrConfig) -> Result<f64, HsnrError> {
    if !(rho > 0.0) {
        return Err(HsnrError::NonPositiveSnr(rho));
    }
    let m1 = (cfg.channel.m - 1) as f64;
    Ok(m1 * (rho / m1).log2() + 2.0 * std::f64::consts::PI.log2()
        - cfg.channel.increment_entropy_bits())
}

/// One SNR-independent gap term, by Monte Carlo over independent gamma
/// magnitudes u_i^2 ~ Gamma(alpha*_i, 1). Returns (estimate, stderr) in bits.
///
/// The factor 1/2 comes from the deterministic limit of the per-subchannel
/// penalty; see `bounds::g_penalty` and its tests for the matching finite-s
/// form.
pub fn g_hsnr_term(m: usize, big_m: usize, mc_samples: usize, stream: RngStream) -> Result<(f64, f64), HsnrError> {
    if m < 2 || m >= big_m {
        return Err(HsnrError::IndexOutOfRange { m, big_m });
    }
    let mut rng = stream.rng();
    let g_half = Gamma::new(0.5, 1.0).expect("const");
    let g_one = Gamma::new(1.0, 1.0).expect("const");
    let draw = |idx: usize, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        if idx < 2 {
            g_half.sample(rng)
        } else {
            g_one.sample(rng)
        }
    };
    let mut vals = Vec::with_capacity(mc_samples);
    for _ in 0..mc_samples {
        let um = draw(m, &mut rng);
        let v = if m == 2 {
            let u0 = draw(0, &mut rng);
            let u1 = draw(1, &mut rng);
            1.0 + 4.0 * um / u1 + um / u0
        } else {
            let a = draw(m - 1, &mut rng);
            let b = draw(m - 2, &mut rng);
            let c = draw(m - 3, &mut rng);
            1.0 + um / a + um / b + um / c
        };
        vals.push(0.5 * v.log2());
    }
    Ok(mean_stderr(&vals))
}

/// Asymptote pair and the gap between them, total and per subchannel.
#[derive(Debug, Clone)]
pub struct AsymptoteResult {
    pub u_hsnr: f64,
    pub l_hsnr: f64,
    pub gap: f64,
    pub gap_stderr: f64,
    pub u_hsnr_per_subchannel: f64,
    pub l_hsnr_per_subchannel: f64,
}

/// Total gap between the asymptotes: sum over m = 2..M-1 of the gap terms.
/// Empty (exactly zero) for M = 2.
pub fn hsnr_gap(big_m: usize, mc_samples: usize, stream: RngStream) -> Result<(f64, f64), HsnrError> {
    let mut gap = 0.0;
    let mut var = 0.0;
    for m in 2..big_m {
        let (g, se) = g_hsnr_term(m, big_m, mc_samples, stream.substream(m as u64))?;
        gap += g;
        var += se * se;
    }
    Ok((gap, var.sqrt()))
}

/// High-SNR lower asymptote and gap report.
pub fn l_hsnr(rho: f64, cfg: &HsnrConfig) -> Result<AsymptoteResult, HsnrError> {
    let u = u_hsnr(rho, cfg)?;
    let (gap, gap_stderr) = hsnr_gap(cfg.channel.m, cfg.mc_samples, cfg.stream)?;
    let l = u - gap;
    let m = cfg.channel.m as f64;
    Ok(AsymptoteResult {
        u_hsnr: u,
        l_hsnr: l,
        gap,
        gap_stderr,
        u_hsnr_per_subchannel: u / m,
        l_hsnr_per_subchannel: l / m,
    })
}
