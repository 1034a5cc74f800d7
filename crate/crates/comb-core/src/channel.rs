//! Exact simulator of the EO-comb phase-noise channel.
//!
//! Two Wiener phase processes (CW laser and RF oscillator) evolve by wrapped
//! normal increments; subchannel m sees the composed phase
//! theta_m = wrap(theta_c + m * theta_r). The received vector is
//! y_m = e^(j theta_m) x_m + w_m with unit-variance circular complex AWGN, so
//! the SNR is swept entirely through the input power.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::rngdist::{wrap, RngStream, WrappedNormalParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("subchannel count must be >= 2, got {0}")]
    TooFewSubchannels(usize),
    #[error("increment variance {name} must be positive, got {value}")]
    InvalidVariance { name: &'static str, value: f64 },
    #[error("input dimension {got} does not match channel dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// Channel parameters: the subchannel count and the two wrapped-normal
/// increment variances, which fully determine the channel law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub m: usize,
    pub sigma2_c: f64,
    pub sigma2_r: f64,
}

impl ChannelParams {
    pub fn new(m: usize, sigma2_c: f64, sigma2_r: f64) -> Result<Self, ChannelError> {
        if m < 2 {
            return Err(ChannelError::TooFewSubchannels(m));
        }
        if !(sigma2_c > 0.0) || !sigma2_c.is_finite() {
            return Err(ChannelError::InvalidVariance {
                name: "sigma2_c",
                value: sigma2_c,
            });
        }
        if !(sigma2_r > 0.0) || !sigma2_r.is_finite() {
            return Err(ChannelError::InvalidVariance {
                name: "sigma2_r",
                value: sigma2_r,
            });
        }
        Ok(Self {
            m,
            sigma2_c,
            sigma2_r,
        })
    }

    /// Joint differential entropy in bits of the two increments,
    /// h(Delta_c, Delta_r); the increments are independent.
    pub fn increment_entropy_bits(&self) -> f64 {
        crate::rngdist::wrapped_normal_entropy_bits(
            WrappedNormalParams::new(self.sigma2_c).expect("validated"),
        ) + crate::rngdist::wrapped_normal_entropy_bits(
            WrappedNormalParams::new(self.sigma2_r).expect("validated"),
        )
    }
}

/// The pair of source phases carried between channel uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub theta_c: f64,
    pub theta_r: f64,
}

/// Initial state: independent uniform phases on [-pi, pi).
pub fn init_state(stream: RngStream) -> PhaseState {
    let mut rng = stream.rng();
    PhaseState {
        theta_c: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        theta_r: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    }
}

/// Advance the state by one channel use with independent wrapped-normal
/// increments.
pub fn step_state<R: Rng>(s: PhaseState, p: &ChannelParams, rng: &mut R) -> PhaseState {
    let nc = Normal::new(0.0, p.sigma2_c.sqrt()).expect("validated");
    let nr = Normal::new(0.0, p.sigma2_r.sqrt()).expect("validated");
    PhaseState {
        theta_c: wrap(s.theta_c + nc.sample(rng)),
        theta_r: wrap(s.theta_r + nr.sample(rng)),
    }
}

/// Per-subchannel phases theta_m = wrap(theta_c + m * theta_r), m = 0..M-1.
pub fn subchannel_phases(s: PhaseState, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| wrap(s.theta_c + i as f64 * s.theta_r))
        .collect()
}

/// Rotate the input by the subchannel phases without adding noise
/// (the deterministic "noiseless" test hook).
pub fn apply_phase(x: &[Complex64], s: PhaseState) -> Vec<Complex64> {
    let phases = subchannel_phases(s, x.len());
    x.iter()
        .zip(phases)
        .map(|(xm, th)| xm * Complex64::from_polar(1.0, th))
        .collect()
}

/// One full channel use: y_m = e^(j theta_m) x_m + w_m with w ~ CN(0, I).
pub fn transmit<R: Rng>(
    x: &[Complex64],
    s: PhaseState,
    p: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<Complex64>, ChannelError> {
    if x.len() != p.m {
        return Err(ChannelError::DimensionMismatch {
            got: x.len(),
            want: p.m,
        });
    }
    let half = Normal::new(0.0, (0.5f64).sqrt()).expect("const");
    let mut y = apply_phase(x, s);
    for ym in &mut y {
        *ym += Complex64::new(half.sample(rng), half.sample(rng));
    }
    Ok(y)
}

/// Write a simulated trajectory as CSV (k, theta_c, theta_r, then I/Q per
/// subchannel) for debugging.
pub fn write_trajectory_csv<W: std::io::Write>(
    out: &mut W,
    p: &ChannelParams,
    x: &[Complex64],
    n_uses: usize,
    stream: RngStream,
) -> std::io::Result<()> {
    let mut rng = stream.substream(1).rng();
    let mut state = init_state(stream.substream(0));
    write!(out, "k,theta_c,theta_r")?;
    for m in 0..p.m {
        write!(out, ",i{m},q{m}")?;
    }
    writeln!(out)?;
    for k in 0..n_uses {
        state = step_state(state, p, &mut rng);
        let y = transmit(x, state, p, &mut rng).expect("dimensions validated");
        write!(out, "{k},{},{}", state.theta_c, state.theta_r)?;
        for ym in &y {
            write!(out, ",{},{}", ym.re, ym.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{circular_resultant, ks_statistic_two_sample};
    use std::f64::consts::PI;

    fn stream(tag: u64) -> RngStream {
        RngStream::new(0xABCD, tag)
    }

    fn params() -> ChannelParams {
        ChannelParams::new(4, PI * 1e-2, PI * 1e-4).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ChannelParams::new(1, 0.1, 0.1).is_err());
        assert!(ChannelParams::new(2, 0.0, 0.1).is_err());
        assert!(ChannelParams::new(2, 0.1, -1.0).is_err());
    }

    #[test]
    fn init_state_deterministic_and_uniform() {
        assert_eq!(init_state(stream(1)), init_state(stream(1)));
        let n = 100_000;
        let mut cs = Vec::with_capacity(n);
        let mut rs = Vec::with_capacity(n);
        for i in 0..n {
            let s = init_state(stream(100).substream(i as u64));
            cs.push(s.theta_c);
            rs.push(s.theta_r);
        }
        let bound = 3.0 / (n as f64).sqrt() * 1.5;
        assert!(circular_resultant(&cs) < bound);
        assert!(circular_resultant(&rs) < bound);
        // independence: circular correlation of the pair near zero
        let corr: f64 = cs
            .iter()
            .zip(&rs)
            .map(|(a, b)| (a - b).cos())
            .sum::<f64>()
            / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt() * 1.5);
    }

    #[test]
    fn step_state_variance_and_zero_limit() {
        let p = ChannelParams::new(2, 1e-12, 1e-12).unwrap();
        let mut rng = stream(2).rng();
        let s0 = PhaseState {
            theta_c: 0.3,
            theta_r: -1.0,
        };
        let s1 = step_state(s0, &p, &mut rng);
        assert!((s1.theta_c - s0.theta_c).abs() < 1e-5);
        assert!((s1.theta_r - s0.theta_r).abs() < 1e-5);

        let p = params();
        let mut rng = stream(3).rng();
        let mut s = init_state(stream(4));
        let n = 100_000;
        let mut incr = Vec::with_capacity(n);
        for _ in 0..n {
            let next = step_state(s, &p, &mut rng);
            incr.push(wrap(next.theta_c - s.theta_c));
            s = next;
        }
        let var: f64 = incr.iter().map(|d| d * d).sum::<f64>() / n as f64;
        assert!((var / p.sigma2_c - 1.0).abs() < 0.03);
        // increments across disjoint steps uncorrelated
        let mean: f64 = incr.iter().sum::<f64>() / n as f64;
        let lag1: f64 = incr
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / ((n - 1) as f64 * var);
        assert!(lag1.abs() < 3.0 / (n as f64).sqrt() * 1.5);
    }

    #[test]
    fn stationary_marginal_is_uniform() {
        // KS of a long trajectory's theta_c against fresh uniforms
        let p = params();
        let mut rng = stream(5).rng();
        let mut s = init_state(stream(6));
        let n = 50_000;
        let mut cs = Vec::with_capacity(n);
        for _ in 0..n {
            s = step_state(s, &p, &mut rng);
            cs.push(s.theta_c);
        }
        // thin to reduce serial correlation before the KS comparison
        let thinned: Vec<f64> = cs.iter().step_by(25).copied().collect();
        let mut r2 = stream(7).rng();
        let us: Vec<f64> = (0..thinned.len())
            .map(|_| rand::Rng::gen_range(&mut r2, -PI..PI))
            .collect();
        let ks = ks_statistic_two_sample(&thinned, &us);
        assert!(
            ks < 1.95 * (2.0 / thinned.len() as f64).sqrt(),
            "KS = {ks}"
        );
    }

    #[test]
    fn subchannel_phase_composition() {
        let s = PhaseState {
            theta_c: 0.1,
            theta_r: 0.01,
        };
        let ph = subchannel_phases(s, 4);
        for (m, want) in [0.1, 0.11, 0.12, 0.13].iter().enumerate() {
            assert!((ph[m] - want).abs() < 1e-12);
        }
        let s = PhaseState {
            theta_c: 0.7,
            theta_r: 0.0,
        };
        assert!(subchannel_phases(s, 4).iter().all(|&t| (t - 0.7).abs() < 1e-12));
        let s = PhaseState {
            theta_c: 3.0,
            theta_r: 1.0,
        };
        assert!((subchannel_phases(s, 2)[1] - (4.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn phase_difference_law() {
        // theta_(k,m) - theta_(k-1,m) has the law of wrap(dc + m dr)
        let p = params();
        let m_idx = 2usize;
        let mut rng = stream(8).rng();
        let mut s = init_state(stream(9));
        let n = 40_000;
        let mut diffs = Vec::with_capacity(n);
        for _ in 0..n {
            let next = step_state(s, &p, &mut rng);
            let a = subchannel_phases(next, p.m)[m_idx];
            let b = subchannel_phases(s, p.m)[m_idx];
            diffs.push(wrap(a - b));
            s = next;
        }
        let direct: Vec<f64> = {
            let mut r = stream(10).rng();
            let nc = Normal::new(0.0, p.sigma2_c.sqrt()).unwrap();
            let nr = Normal::new(0.0, p.sigma2_r.sqrt()).unwrap();
            (0..n)
                .map(|_| wrap(nc.sample(&mut r) + m_idx as f64 * nr.sample(&mut r)))
                .collect()
        };
        let ks = ks_statistic_two_sample(&diffs, &direct);
        assert!(ks < 1.95 * (2.0 / n as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn transmit_noise_statistics() {
        let p = params();
        let s = PhaseState {
            theta_c: 0.0,
            theta_r: 0.0,
        };
        let mut rng = stream(11).rng();
        let x0 = vec![Complex64::new(0.0, 0.0); p.m];
        let n = 100_000;
        let mut e2 = 0.0;
        for _ in 0..n {
            let y = transmit(&x0, s, &p, &mut rng).unwrap();
            e2 += y[0].norm_sqr();
        }
        e2 /= n as f64;
        assert!((e2 - 1.0).abs() < 0.02, "|y|^2 mean = {e2}");

        // E|y|^2 = |x|^2 + 1
        let x = vec![Complex64::new(2.0, -1.0); p.m];
        let mut e2 = 0.0;
        for _ in 0..n {
            let y = transmit(&x, s, &p, &mut rng).unwrap();
            e2 += y[1].norm_sqr();
        }
        e2 /= n as f64;
        assert!((e2 - 6.0).abs() < 0.1, "E|y|^2 = {e2}");

        // noiseless hook preserves magnitudes exactly
        let y = apply_phase(&x, init_state(stream(12)));
        for (ym, xm) in y.iter().zip(&x) {
            assert!((ym.norm() - xm.norm()).abs() < 1e-12);
        }

        let bad = vec![Complex64::new(1.0, 0.0); p.m + 1];
        assert!(transmit(&bad, s, &p, &mut rng).is_err());
    }

    #[test]
    fn trajectory_csv_shape() {
        let p = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &p, &x, 5, stream(13)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0].split(',').count(), 3 + 2 * p.m);
    }
}
