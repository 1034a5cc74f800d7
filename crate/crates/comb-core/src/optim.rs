//! Derivative-free optimization: Nelder-Mead simplex with box constraints by
//! coordinate clipping, deterministic multi-start, and a quadratic-penalty
//! wrapper for power-constrained maximization.
//!
//! Objectives may be stochastic; callers are expected to fix their Monte
//! Carlo seeds per optimization (common random numbers) so the optimizer
//! sees a deterministic surface.

use rand::Rng;
use thiserror::Error;

use crate::rngdist::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("box is empty or inconsistent in dimension {0}")]
    BadBox(usize),
    #[error("start point lies outside the box in dimension {0}")]
    StartOutsideBox(usize),
    #[error("no feasible point found under the constraint")]
    NoFeasiblePoint,
}

/// Search specification: per-dimension box, evaluation budget, tolerance,
/// and the seed used for multi-start draws.
#[derive(Debug, Clone)]
pub struct OptimSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub max_evals: usize,
    pub tol: f64,
    pub seed: u64,
    pub n_starts: usize,
}

impl OptimSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OptimError> {
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l < h) {
                return Err(OptimError::BadBox(i));
            }
        }
        Ok(Self {
            lo,
            hi,
            max_evals: 400,
            tol: 1e-6,
            seed: 0,
            n_starts: 5,
        })
    }

    pub fn with_budget(mut self, max_evals: usize, tol: f64) -> Self {
        self.max_evals = max_evals;
        self.tol = tol;
        self
    }

    pub fn with_starts(mut self, n_starts: usize, seed: u64) -> Self {
        self.n_starts = n_starts;
        self.seed = seed;
        self
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn clip(&self, x: &mut [f64]) {
        for j in 0..x.len() {
            x[j] = x[j].clamp(self.lo[j], self.hi[j]);
        }
    }
}

/// Minimization result.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 0.5, 0.5). Trial points are
/// clipped to the box. Converges when the simplex diameter or the
/// function spread falls below `tol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    spec: &OptimSpec,
    f: &mut F,
    x0: &[f64],
) -> Result<OptimResult, OptimError> {
    let d = spec.dim();
    assert_eq!(x0.len(), d);
    for j in 0..d {
        if x0[j] < spec.lo[j] - 1e-12 || x0[j] > spec.hi[j] + 1e-12 {
            return Err(OptimError::StartOutsideBox(j));
        }
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    // initial simplex: x0 plus per-coordinate steps of 5% of the box width
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut fvals: Vec<f64> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    spec.clip(&mut start);
    simplex.push(start.clone());
    fvals.push(eval(&start, &mut evals));
    for j in 0..d {
        let mut v = start.clone();
        let step = 0.05 * (spec.hi[j] - spec.lo[j]);
        v[j] = if v[j] + step <= spec.hi[j] {
            v[j] + step
        } else {
            v[j] - step
        };
        spec.clip(&mut v);
        fvals.push(eval(&v, &mut evals));
        simplex.push(v);
    }

    let centroid = |simplex: &[Vec<f64>], skip: usize| -> Vec<f64> {
        let mut c = vec![0.0; d];
        for (i, v) in simplex.iter().enumerate() {
            if i == skip {
                continue;
            }
            for j in 0..d {
                c[j] += v[j];
            }
        }
        for cj in &mut c {
            *cj /= d as f64;
        }
        c
    };

    let mut converged = false;
    while evals < spec.max_evals {
        // order the simplex
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reorder_simplex: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let reorder_f: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = reorder_simplex;
        fvals = reorder_f;

        let diam = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        let spread = fvals[d] - fvals[0];
        if diam < spec.tol || spread.abs() < spec.tol {
            converged = true;
            break;
        }

        let worst = d;
        let c = centroid(&simplex, worst);
        let mut reflect = vec![0.0; d];
        for j in 0..d {
            reflect[j] = c[j] + (c[j] - simplex[worst][j]);
        }
        spec.clip(&mut reflect);
        let f_r = eval(&reflect, &mut evals);

        if f_r < fvals[0] {
            // try expansion
            let mut expand = vec![0.0; d];
            for j in 0..d {
                expand[j] = c[j] + 2.0 * (c[j] - simplex[worst][j]);
            }
            spec.clip(&mut expand);
            let f_e = eval(&expand, &mut evals);
            if f_e < f_r {
                simplex[worst] = expand;
                fvals[worst] = f_e;
            } else {
                simplex[worst] = reflect;
                fvals[worst] = f_r;
            }
        } else if f_r < fvals[d - 1] {
            simplex[worst] = reflect;
            fvals[worst] = f_r;
        } else {
            // contraction (outside if the reflection improved on the worst)
            let towards = if f_r < fvals[worst] { &reflect } else { &simplex[worst] };
            let mut contract = vec![0.0; d];
            for j in 0..d {
                contract[j] = c[j] + 0.5 * (towards[j] - c[j]);
            }
            spec.clip(&mut contract);
            let f_c = eval(&contract, &mut evals);
            if f_c < fvals[worst].min(f_r) {
                simplex[worst] = contract;
                fvals[worst] = f_c;
            } else {
                // shrink toward the best vertex
                for i in 1..=d {
                    let mut v = vec![0.0; d];
                    for j in 0..d {
                        v[j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    spec.clip(&mut v);
                    fvals[i] = eval(&v, &mut evals);
                    simplex[i] = v;
                }
            }
        }
    }

    let (best_i, _) = fvals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    Ok(OptimResult {
        x_best: simplex[best_i].clone(),
        f_best: fvals[best_i],
        evals,
        converged,
    })
}

/// Multi-start Nelder-Mead: the given start plus `n_starts - 1` seeded
/// uniform draws inside the box; never returns worse than the single start.
pub fn nelder_mead_multistart<F: FnMut(&[f64]) -> f64>(
    spec: &OptimSpec,
    f: &mut F,
    x0: &[f64],
) -> Result<OptimResult, OptimError> {
    let mut best = nelder_mead(spec, f, x0)?;
    let mut rng = RngStream::new(spec.seed, 0x6f70_7469).rng();
    for _ in 1..spec.n_starts.max(1) {
        let d = spec.dim();
        let x: Vec<f64> = (0..d)
            .map(|j| rng.gen_range(spec.lo[j]..spec.hi[j]))
            .collect();
        let r = nelder_mead(spec, f, &x)?;
        let total = best.evals + r.evals;
        if r.f_best < best.f_best {
            best = r;
        }
        best.evals = total;
    }
    Ok(best)
}

/// Result of a constrained maximization.
#[derive(Debug, Clone)]
pub struct ConstrainedResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub constraint_residual: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Maximize `objective` subject to `constraint(x) <= budget` using a
/// quadratic penalty escalated by a factor of 10 per restart until the
/// violation at the returned point is below 1e-4 * budget.
pub fn constrained_maximize<F, G>(
    spec: &OptimSpec,
    mut objective: F,
    mut constraint: G,
    budget: f64,
    x0: &[f64],
) -> Result<ConstrainedResult, OptimError>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> f64,
{
    let mut weight = 1.0;
    let mut evals = 0usize;
    let mut last: Option<OptimResult> = None;
    for _ in 0..6 {
        let mut wrapped = |x: &[f64]| -> f64 {
            let viol = (constraint(x) - budget).max(0.0);
            -(objective(x)) + weight * viol * viol
        };
        let r = nelder_mead_multistart(spec, &mut wrapped, x0)?;
        evals += r.evals;
        let viol = (constraint(&r.x_best) - budget).max(0.0);
        if viol <= 1e-4 * budget.abs().max(1e-12) {
            return Ok(ConstrainedResult {
                f_best: objective(&r.x_best),
                x_best: r.x_best,
                constraint_residual: viol,
                evals,
                converged: r.converged,
            });
        }
        last = Some(r);
        weight *= 10.0;
    }
    match last {
        Some(r) => {
            let viol = (constraint(&r.x_best) - budget).max(0.0);
            if viol > 0.05 * budget.abs().max(1e-12) {
                Err(OptimError::NoFeasiblePoint)
            } else {
                Ok(ConstrainedResult {
                    f_best: objective(&r.x_best),
                    x_best: r.x_best,
                    constraint_residual: viol,
                    evals,
                    converged: false,
                })
            }
        }
        None => Err(OptimError::NoFeasiblePoint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_1d() {
        let spec = OptimSpec::new(vec![0.0], vec![10.0])
            .unwrap()
            .with_budget(500, 1e-9);
        let mut f = |x: &[f64]| (x[0] - 3.0) * (x[0] - 3.0);
        let r = nelder_mead(&spec, &mut f, &[9.0]).unwrap();
        assert!((r.x_best[0] - 3.0).abs() < 1e-6, "x = {:?}", r.x_best);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock_2d() {
        let spec = OptimSpec::new(vec![-2.0, -2.0], vec![2.0, 2.0])
            .unwrap()
            .with_budget(2000, 1e-10);
        let mut f =
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&spec, &mut f, &[-1.0, 1.0]).unwrap();
        assert!(
            (r.x_best[0] - 1.0).abs() < 1e-3 && (r.x_best[1] - 1.0).abs() < 1e-3,
            "x = {:?} after {} evals",
            r.x_best,
            r.evals
        );
    }

    #[test]
    fn noisy_quadratic() {
        // additive noise of std 1e-2; best f should still be near the true minimum
        let mut rng = RngStream::new(9, 9).rng();
        let noise: Vec<f64> = (0..4000).map(|_| rand::Rng::gen_range(&mut rng, -0.5..0.5) * 2e-2).collect();
        let mut calls = 0usize;
        let mut f = move |x: &[f64]| {
            calls += 1;
            (x[0] - 3.0) * (x[0] - 3.0) + noise[calls % noise.len()]
        };
        let spec = OptimSpec::new(vec![0.0], vec![10.0])
            .unwrap()
            .with_budget(300, 1e-4);
        let r = nelder_mead(&spec, &mut f, &[8.0]).unwrap();
        assert!(
            (r.x_best[0] - 3.0).abs() < 0.1,
            "x = {:?}",
            r.x_best
        );
    }

    #[test]
    fn determinism_and_box() {
        let spec = OptimSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0])
            .unwrap()
            .with_budget(200, 1e-8)
            .with_starts(3, 42);
        let run = || {
            let mut f = |x: &[f64]| x[0] * x[0] + 0.5 * (x[1] + 0.3).powi(2);
            nelder_mead_multistart(&spec, &mut f, &[0.9, 0.9]).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.x_best, b.x_best);
        assert!(a.x_best.iter().all(|&x| (-1.0..=1.0).contains(&x)));
    }

    #[test]
    fn multistart_not_worse_than_single() {
        // bimodal trap: single start from the wrong basin
        let f_def = |x: &[f64]| {
            let a = (x[0] + 2.0).powi(2) + 0.2;
            let b = (x[0] - 2.5).powi(2);
            a.min(b)
        };
        let spec = OptimSpec::new(vec![-4.0], vec![4.0])
            .unwrap()
            .with_budget(200, 1e-9)
            .with_starts(6, 7);
        let mut f1 = f_def;
        let single = nelder_mead(&spec, &mut f1, &[-3.0]).unwrap();
        let mut f2 = f_def;
        let multi = nelder_mead_multistart(&spec, &mut f2, &[-3.0]).unwrap();
        assert!(multi.f_best <= single.f_best + 1e-12);
        assert!(multi.f_best < 1e-4, "f = {}", multi.f_best);
    }

    #[test]
    fn constrained_symmetric_optimum() {
        // maximize sum log x_m^2 subject to sum x_m^2 <= rho: equal split
        let rho = 12.0;
        let spec = OptimSpec::new(vec![0.05, 0.05, 0.05], vec![6.0, 6.0, 6.0])
            .unwrap()
            .with_budget(1200, 1e-10)
            .with_starts(4, 3);
        let r = constrained_maximize(
            &spec,
            |x: &[f64]| x.iter().map(|v| (v * v).ln()).sum::<f64>(),
            |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>(),
            rho,
            &[1.0, 2.0, 0.5],
        )
        .unwrap();
        let target = (rho / 3.0f64).sqrt();
        for &x in &r.x_best {
            assert!((x - target).abs() < 2e-3, "x = {:?}", r.x_best);
        }
        assert!(r.constraint_residual <= 1e-4 * rho);
        // active constraint: unconstrained optimum would push past the budget
        assert!(r.x_best.iter().map(|v| v * v).sum::<f64>() > 0.95 * rho);
    }
}
