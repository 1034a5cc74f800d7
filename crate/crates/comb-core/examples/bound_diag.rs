//! Developer diagnostic: optimized upper/lower bound values at reference SNRs.
use comb_core::bounds::{maximize_lower_bound, minimize_upper_bound, BoundOptConfig, McConfig};
use comb_core::channel::ChannelParams;
use comb_core::rngdist::RngStream;
use std::f64::consts::PI;

fn main() {
    let ch = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
    let args: Vec<String> = std::env::args().collect();
    let db: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(24.99);
    let which = args.get(2).cloned().unwrap_or_else(|| "U".to_string());
    let n: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(20_000);
    let rho = 2.0 * 10f64.powf(db / 10.0);
    let mut mc = McConfig::new(n.max(10_000), RngStream::new(42, 1)).unwrap();
    mc.n_search = n.max(10_000);
    let cfg = BoundOptConfig::default();
    let t = std::time::Instant::now();
    match which.as_str() {
        "U" => {
            let b = minimize_upper_bound(rho, &ch, &mc, &cfg).unwrap();
            println!(
                "U({db} dB) = {:.4} total, {:.4}/sub, params {:?}, converged {}, {:.1}s",
                b.bits,
                b.bits_per_subchannel,
                b.params,
                b.converged,
                t.elapsed().as_secs_f64()
            );
        }
        _ => {
            let b = maximize_lower_bound(rho, &ch, &mc, &cfg).unwrap();
            println!(
                "L({db} dB) = {:.4} total, {:.4}/sub, params {:?}, converged {}, {:.1}s",
                b.bits,
                b.bits_per_subchannel,
                b.params,
                b.converged,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
