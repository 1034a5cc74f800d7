//! Achievable information rates for QAM inputs over the simulated channel.
//!
//! The estimator simulates the true two-source channel and decodes it through
//! an auxiliary finite-state channel in which each subchannel's composed
//! phase theta_m = theta_c + m theta_r is modeled as its own Wiener process
//! (increment variance sigma_c^2 + m^2 sigma_r^2) quantized to a fixed number
//! of levels. The per-subchannel forward recursions yield log q(y|x) and
//! log q(y); by mismatched-decoding the averaged difference is a capacity
//! lower bound up to quantization and correlation mismatch.
//!
//! The auxiliary model deliberately drops the cross-subchannel phase
//! correlation: it reproduces the reference QAM rate curves and keeps the
//! recursion at M independent chains of `levels` states instead of one
//! product chain, whose level requirements at high SNR are prohibitive.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::ChannelParams;
use crate::quadrature::integrate;
use crate::rngdist::RngStream;
use crate::stats::mean_stderr;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AirError {
    #[error("unsupported constellation order {0}; use a perfect square in 4..=1024")]
    UnsupportedOrder(usize),
    #[error("phase levels {0} outside 4..=65536; reduce the state space")]
    BadLevels(usize),
    #[error("block length {0} too short; need >= 100 uses")]
    BlockTooShort(usize),
    #[error("need at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
}

/// A unit-average-energy constellation.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub points: Vec<Complex64>,
}

/// Square QAM with zero mean and unit average energy.
pub fn make_qam(order: usize) -> Result<Constellation, AirError> {
    let k = (order as f64).sqrt().round() as usize;
    if k * k != order || !(2..=32).contains(&k) {
        return Err(AirError::UnsupportedOrder(order));
    }
    let mut points = Vec::with_capacity(order);
    for i in 0..k {
        for q in 0..k {
            points.push(Complex64::new(
                (2 * i) as f64 - (k - 1) as f64,
                (2 * q) as f64 - (k - 1) as f64,
            ));
        }
    }
    let energy: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
    let scale = energy.sqrt().recip();
    for p in &mut points {
        *p *= scale;
    }
    Ok(Constellation { points })
}

/// Quantization and blocking configuration for the auxiliary-channel
/// forward recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrellisConfig {
    /// phase quantization levels per subchannel process
    pub levels: usize,
    /// channel uses per block
    pub block_len: usize,
    /// independent blocks (mean and stderr are taken across blocks)
    pub n_blocks: usize,
}

impl TrellisConfig {
    pub fn validate(&self) -> Result<(), AirError> {
        if !(4..=65536).contains(&self.levels) {
            return Err(AirError::BadLevels(self.levels));
        }
        if self.block_len < 100 {
            return Err(AirError::BlockTooShort(self.block_len));
        }
        if self.n_blocks < 2 {
            return Err(AirError::TooFewBlocks(self.n_blocks));
        }
        Ok(())
    }

    /// Reduced configuration for quick runs and CI gates.
    pub fn desk() -> Self {
        Self {
            levels: 256,
            block_len: 500,
            n_blocks: 20,
        }
    }

    /// Full-scale configuration matching the reference curves
    /// (512 levels, 2000-use blocks).
    pub fn full() -> Self {
        Self {
            levels: 512,
            block_len: 2000,
            n_blocks: 20,
        }
    }
}

/// AIR estimate in bits per subchannel with the across-block standard error.
#[derive(Debug, Clone)]
pub struct AirEstimate {
    pub bits_per_subchannel: f64,
    pub bits_total: f64,
    pub stderr: f64,
    pub per_block: Vec<f64>,
}

// Circular transition kernel of one quantized Wiener phase: the increment is
// wrapped normal; each entry integrates the wrapped density over a
// destination bin for 8 source positions inside the origin bin (midpoint
// rule), then the row is normalized.
fn bin_kernel(sigma2: f64, levels: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let w = 2.0 * PI / levels as f64;
    let sigma = sigma2.max(1e-30).sqrt();
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let density = |t: f64| norm * (-t * t / (2.0 * sigma2.max(1e-30))).exp();
    // Gaussian interval mass with the integration window clipped to the
    // +-12 sigma support, so narrow spikes are never stepped over
    let interval_mass = |a: f64, b: f64| -> f64 {
        let lo = a.max(-12.0 * sigma);
        let hi = b.min(12.0 * sigma);
        if lo >= hi {
            return 0.0;
        }
        integrate(density, lo, hi, 1e-13).value
    };
    let l_wraps = (12.0 * sigma / (2.0 * PI)).ceil() as i64 + 1;
    let reach = (12.0 * sigma + w).min(PI + w);
    let mut p = vec![0.0; levels];
    for (d, pd) in p.iter_mut().enumerate() {
        // signed bin displacement
        let dd = if d <= levels / 2 {
            d as f64
        } else {
            d as f64 - levels as f64
        };
        let center = dd * w;
        if center.abs() > reach {
            continue;
        }
        let mut acc = 0.0;
        for j in 0..8 {
            let xi = ((j as f64 + 0.5) / 8.0 - 0.5) * w;
            for l in -l_wraps..=l_wraps {
                let shift = 2.0 * PI * l as f64;
                acc += interval_mass(center - xi - 0.5 * w + shift, center - xi + 0.5 * w + shift);
            }
        }
        *pd = acc / 8.0;
    }
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

// Sparse taps of a circular kernel: (displacement, weight) pairs above a
// relative floor.
fn kernel_taps(p: &[f64]) -> Vec<(isize, f64)> {
    let peak = p.iter().cloned().fold(0.0f64, f64::max);
    let levels = p.len() as isize;
    let mut taps = Vec::new();
    for (d, &v) in p.iter().enumerate() {
        if v > 1e-17 * peak {
            let dd = if d as isize <= levels / 2 {
                d as isize
            } else {
                d as isize - levels
            };
            taps.push((dd, v));
        }
    }
    taps
}

struct SubchannelRecursion<'a> {
    levels: usize,
    taps: &'a [(isize, f64)],
    alpha: Vec<f64>,
    scratch: Vec<f64>,
    log_likelihood: f64,
}

impl<'a> SubchannelRecursion<'a> {
    fn new(levels: usize, taps: &'a [(isize, f64)]) -> Self {
        Self {
            levels,
            taps,
            alpha: vec![1.0 / levels as f64; levels],
            scratch: vec![0.0; levels],
            log_likelihood: 0.0,
        }
    }

    // one step: predict through the transition kernel, weight by the
    // observation in log domain, renormalize, accumulate log-likelihood
    fn step(&mut self, log_obs: &[f64]) {
        let l = self.levels as isize;
        self.scratch.iter_mut().for_each(|v| *v = 0.0);
        for &(d, w) in self.taps {
            for a in 0..self.levels {
                let src = ((a as isize - d).rem_euclid(l)) as usize;
                self.scratch[a] += w * self.alpha[src];
            }
        }
        let offset = log_obs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for a in 0..self.levels {
            let v = self.scratch[a] * (log_obs[a] - offset).exp();
            self.scratch[a] = v;
            sum += v;
        }
        self.log_likelihood += sum.ln() + offset;
        let inv = 1.0 / sum;
        for a in 0..self.levels {
            self.alpha[a] = self.scratch[a] * inv;
        }
    }
}

/// Simulation-based AIR estimate: i.i.d. uniform QAM on all subchannels
/// through the true channel, decoded by the quantized auxiliary channel.
pub fn air_estimate(
    constellation: &Constellation,
    ch: &ChannelParams,
    rho: f64,
    trellis: &TrellisConfig,
    stream: RngStream,
) -> Result<AirEstimate, AirError> {
    trellis.validate()?;
    let m = ch.m;
    let levels = trellis.levels;
    let amp = (rho / m as f64).sqrt(); // per-subchannel average energy rho/M
    let scaled: Vec<Complex64> = constellation.points.iter().map(|p| p * amp).collect();

    // independent square-grid factorization of the marginal observation
    let side: Vec<f64> = {
        let mut re: Vec<f64> = scaled.iter().map(|p| p.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        re.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        re
    };

    let kernels: Vec<Vec<f64>> = (0..m)
        .map(|i| bin_kernel(ch.sigma2_c + (i * i) as f64 * ch.sigma2_r, levels))
        .collect();
    let taps: Vec<Vec<(isize, f64)>> = kernels.iter().map(|k| kernel_taps(k)).collect();

    let grid: Vec<Complex64> = (0..levels)
        .map(|a| {
            let th = -std::f64::consts::PI
                + (a as f64 + 0.5) * 2.0 * std::f64::consts::PI / levels as f64;
            Complex64::from_polar(1.0, th)
        })
        .collect();

    let per_block: Vec<f64> = (0..trellis.n_blocks)
        .into_par_iter()
        .map(|b| {
            simulate_block(
                &scaled,
                &side,
                ch,
                &taps,
                &grid,
                trellis.block_len,
                stream.substream(b as u64),
            )
        })
        .collect();

    let (mean, stderr) = mean_stderr(&per_block);
    Ok(AirEstimate {
        bits_per_subchannel: mean,
        bits_total: mean * m as f64,
        stderr,
        per_block,
    })
}

fn simulate_block(
    scaled: &[Complex64],
    side: &[f64],
    ch: &ChannelParams,
    taps: &[Vec<(isize, f64)>],
    grid: &[Complex64],
    n_uses: usize,
    stream: RngStream,
) -> f64 {
    use rand_distr::{Distribution, Normal};
    let m = ch.m;
    let levels = grid.len();
    let mut rng = stream.substream(0).rng();
    let nc = Normal::new(0.0, ch.sigma2_c.sqrt()).expect("validated");
    let nr = Normal::new(0.0, ch.sigma2_r.sqrt()).expect("validated");
    let half = Normal::new(0.0, (0.5f64).sqrt()).expect("const");

    let mut theta_c: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let mut theta_r: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);

    let mut cond: Vec<SubchannelRecursion> = (0..m)
        .map(|i| SubchannelRecursion::new(levels, &taps[i]))
        .collect();
    let mut marg: Vec<SubchannelRecursion> = (0..m)
        .map(|i| SubchannelRecursion::new(levels, &taps[i]))
        .collect();

    let ln_order_inv = -((scaled.len() as f64).ln());
    let mut log_obs_cond = vec![0.0; levels];
    let mut log_obs_marg = vec![0.0; levels];

    for _ in 0..n_uses {
        theta_c = crate::rngdist::wrap(theta_c + nc.sample(&mut rng));
        theta_r = crate::rngdist::wrap(theta_r + nr.sample(&mut rng));
        for i in 0..m {
            let x = scaled[rng.gen_range(0..scaled.len())];
            let phase = crate::rngdist::wrap(theta_c + i as f64 * theta_r);
            let y = Complex64::from_polar(1.0, phase) * x
                + Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
            for a in 0..levels {
                // conditional on the transmitted symbol
                let diff = y - grid[a] * x;
                log_obs_cond[a] = -diff.norm_sqr();
                // marginal over the (separable) QAM grid
                let z = y * grid[a].conj();
                let mut sum_re = 0.0;
                let mut max_re = f64::NEG_INFINITY;
                for &c in side {
                    let e = -(z.re - c) * (z.re - c);
                    if e > max_re {
                        max_re = e;
                    }
                }
                for &c in side {
                    sum_re += (-(z.re - c) * (z.re - c) - max_re).exp();
                }
                let mut sum_im = 0.0;
                let mut max_im = f64::NEG_INFINITY;
                for &c in side {
                    let e = -(z.im - c) * (z.im - c);
                    if e > max_im {
                        max_im = e;
                    }
                }
                for &c in side {
                    sum_im += (-(z.im - c) * (z.im - c) - max_im).exp();
                }
                log_obs_marg[a] = max_re + sum_re.ln() + max_im + sum_im.ln() + ln_order_inv;
            }
            cond[i].step(&log_obs_cond);
            marg[i].step(&log_obs_marg);
        }
    }

    let mut bits = 0.0;
    for i in 0..m {
        bits += cond[i].log_likelihood - marg[i].log_likelihood;
    }
    bits / (n_uses as f64 * m as f64 * std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn stream(tag: u64) -> RngStream {
        RngStream::new(0xA12, tag)
    }

    #[test]
    fn qam_construction() {
        let qpsk = make_qam(4).unwrap();
        for p in &qpsk.points {
            assert!((p.re.abs() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
            assert!((p.im.abs() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        }
        for order in [4usize, 16, 64, 256, 1024] {
            let c = make_qam(order).unwrap();
            assert_eq!(c.points.len(), order);
            let e: f64 = c.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12, "order {order}: energy {e}");
            let mean: Complex64 = c.points.iter().sum::<Complex64>() / order as f64;
            assert!(mean.norm() < 1e-12);
        }
        // 16-QAM minimum squared distance on the normalized grid
        let c = make_qam(16).unwrap();
        let mut min_d2 = f64::INFINITY;
        for (i, a) in c.points.iter().enumerate() {
            for b in &c.points[i + 1..] {
                min_d2 = min_d2.min((a - b).norm_sqr());
            }
        }
        assert!((min_d2 - 0.4).abs() < 1e-12, "min d^2 = {min_d2}");
        assert!(make_qam(8).is_err());
        assert!(make_qam(2048).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrellisConfig {
            levels: 2,
            block_len: 500,
            n_blocks: 4
        }
        .validate()
        .is_err());
        assert!(TrellisConfig {
            levels: 64,
            block_len: 50,
            n_blocks: 4
        }
        .validate()
        .is_err());
        assert!(TrellisConfig {
            levels: 1 << 17,
            block_len: 500,
            n_blocks: 4
        }
        .validate()
        .is_err());
    }

    #[test]
    fn qpsk_without_phase_noise_reaches_two_bits() {
        // effectively zero phase noise at high SNR: the discrete limit
        let ch = ChannelParams::new(2, 1e-12, 1e-13).unwrap();
        let qpsk = make_qam(4).unwrap();
        let trellis = TrellisConfig {
            levels: 64,
            block_len: 250,
            n_blocks: 8,
        };
        let rho = 2.0 * 10f64.powf(2.0); // 20 dB per subchannel
        let est = air_estimate(&qpsk, &ch, rho, &trellis, stream(1)).unwrap();
        assert!(
            (est.bits_per_subchannel - 2.0).abs() < 0.02,
            "AIR = {} +- {}",
            est.bits_per_subchannel,
            est.stderr
        );
        assert!(est.bits_per_subchannel <= 2.0 + 1e-9);
    }

    #[test]
    fn air_below_constellation_entropy_and_monotone() {
        let ch = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
        let qam = make_qam(16).unwrap();
        let trellis = TrellisConfig {
            levels: 64,
            block_len: 150,
            n_blocks: 6,
        };
        let mut prev = f64::NEG_INFINITY;
        let mut prev_se = 0.0;
        for db in [5.0, 12.0, 19.0] {
            let rho = 2.0 * 10f64.powf(db / 10.0);
            let est = air_estimate(&qam, &ch, rho, &trellis, stream(2)).unwrap();
            assert!(est.bits_per_subchannel <= 4.0 + 1e-9);
            assert!(
                est.bits_per_subchannel >= prev - 2.0 * (est.stderr + prev_se),
                "AIR decreased: {} after {}",
                est.bits_per_subchannel,
                prev
            );
            prev = est.bits_per_subchannel;
            prev_se = est.stderr;
        }
    }

    #[test]
    fn refinement_does_not_reduce_air() {
        let ch = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
        let qam = make_qam(16).unwrap();
        let rho = 2.0 * 10f64.powf(1.5);
        let coarse = air_estimate(
            &qam,
            &ch,
            rho,
            &TrellisConfig {
                levels: 32,
                block_len: 200,
                n_blocks: 8,
            },
            stream(3),
        )
        .unwrap();
        let fine = air_estimate(
            &qam,
            &ch,
            rho,
            &TrellisConfig {
                levels: 64,
                block_len: 200,
                n_blocks: 8,
            },
            stream(3),
        )
        .unwrap();
        assert!(
            fine.bits_per_subchannel
                >= coarse.bits_per_subchannel - 2.0 * (fine.stderr + coarse.stderr),
            "refinement reduced AIR: {} -> {}",
            coarse.bits_per_subchannel,
            fine.bits_per_subchannel
        );
    }

    #[test]
    fn deterministic_across_runs() {
        let ch = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
        let qam = make_qam(4).unwrap();
        let trellis = TrellisConfig {
            levels: 32,
            block_len: 120,
            n_blocks: 3,
        };
        let a = air_estimate(&qam, &ch, 20.0, &trellis, stream(4)).unwrap();
        let b = air_estimate(&qam, &ch, 20.0, &trellis, stream(4)).unwrap();
        assert_eq!(a.per_block, b.per_block);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = bin_kernel(PI * 1e-2, 64);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for d in 1..32 {
            assert!((k[d] - k[64 - d]).abs() < 1e-12 * (k[d] + 1e-300));
        }
        // tiny variance concentrates all mass on the diagonal
        let k = bin_kernel(1e-18, 64);
        assert!(k[0] > 1.0 - 1e-12);
    }
}
