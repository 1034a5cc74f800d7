//! Cross-bound validity checks: any admissible parameter point of the upper
//! bound must stay above any admissible lower bound, up to the combined
//! Monte Carlo tolerance.

use comb_core::bounds::{
    lower_bound_at, upper_bound_at, BoundOptConfig, LowerBoundParams,
};
use comb_core::channel::ChannelParams;
use comb_core::rngdist::RngStream;
use comb_core::LOG2_E;
use rand::Rng;
use std::f64::consts::PI;

fn fig_m2() -> ChannelParams {
    ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap()
}

#[test]
fn random_upper_points_never_undercut_a_lower_bound() {
    let ch = fig_m2();
    let rho = 2.0 * 10f64.powf(2.499); // 24.99 dB per subchannel
    let n = 20_000;
    let opt = BoundOptConfig {
        inner_evals: 50,
        outer_evals: 40,
        n_starts: 1,
    };
    // one decent feasible lower-bound point
    let lb = LowerBoundParams {
        mu: rho,
        alpha: vec![0.48, 0.48],
        gamma: 0.0,
    };
    let l = lower_bound_at(rho, &ch, &lb, 40_000, 4, RngStream::new(11, 1))
        .unwrap()
        .bits;

    // twenty random (lambda, alpha) points inside the admissible box;
    // every one of them upper-bounds capacity, so none may fall below L
    let mut rng = RngStream::new(12, 2).rng();
    for trial in 0..20 {
        let a0 = rng.gen_range(0.1..3.0);
        let a1 = rng.gen_range(0.1..3.0);
        let alpha_sum: f64 = a0 + a1;
        let lambda = alpha_sum * LOG2_E + rng.gen_range(0.0..2.0);
        let u = upper_bound_at(
            rho,
            &ch,
            lambda,
            &[a0, a1],
            n,
            4,
            RngStream::new(13, 100 + trial),
            &opt,
        )
        .unwrap();
        assert!(
            u.bits >= l - 0.1,
            "trial {trial}: U({lambda:.3}, [{a0:.3},{a1:.3}]) = {:.3} < L = {l:.3}",
            u.bits
        );
    }
}
