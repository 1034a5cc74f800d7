//! Developer microbenchmark for the F-functional and its kNN core.
use comb_core::bounds::f_functional;
use comb_core::channel::ChannelParams;
use comb_core::rngdist::RngStream;
use std::f64::consts::PI;

fn main() {
    let ch = ChannelParams::new(2, PI * 1e-2, PI * 1e-4).unwrap();
    for &n in &[10_000usize, 20_000, 200_000] {
        let t = std::time::Instant::now();
        let mut acc = 0.0;
        let reps = if n <= 20_000 { 10 } else { 2 };
        for r in 0..reps {
            acc += f_functional(&[30.0, 25.0], &ch, n, 4, RngStream::new(1, r as u64)).unwrap();
        }
        println!(
            "n={n}: {:.1} ms/eval (F = {:.4})",
            t.elapsed().as_secs_f64() * 1000.0 / reps as f64,
            acc / reps as f64
        );
    }
}
