//! Differential-entropy machinery: the Kozachenko-Leonenko k-nearest-neighbor
//! estimator on mixed linear/circular samples, conditional entropies by the
//! joint-minus-marginal rule, and quadrature entropies for the noncentral
//! chi-square magnitude terms.
//!
//! Circular columns use the wrapped distance min(|a-b|, 2pi-|a-b|). Before
//! the neighbor search, concentrated circular columns are recentred and
//! treated as linear, and all linear columns are jointly whitened (with the
//! exact log-determinant added back); this removes the scale anisotropy and
//! correlation ridges that otherwise bias the estimator in the regimes the
//! bounds operate in.

use rayon::prelude::*;
use thiserror::Error;

use crate::quadrature::integrate;
use crate::rngdist::wrap;
use crate::specfun::{bessel_i0_scaled, digamma, exp_integral_e1};
use crate::{EULER_GAMMA, LOG2_E};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("need at least {min} samples for dimension {d}, got {n}")]
    TooFewSamples { n: usize, d: usize, min: usize },
    #[error("k = {k} outside supported range 1..=20 (n = {n})")]
    BadK { k: usize, n: usize },
    #[error("samples are degenerate: {0}")]
    Degenerate(&'static str),
    #[error("non-finite sample value")]
    NonFinite,
    #[error("quadrature did not converge")]
    QuadratureFailed,
}

pub type Result<T> = std::result::Result<T, EntropyError>;

/// Monte Carlo draws of a continuous random vector, row-major, with circular
/// columns flagged so distances are computed modulo 2*pi.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    circular: Vec<bool>,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, d: usize, circular: Vec<bool>) -> Result<Self> {
        assert!(d > 0 && circular.len() == d && data.len() % d == 0);
        let n = data.len() / d;
        let min = 2 * d + 2;
        if n < min {
            return Err(EntropyError::TooFewSamples { n, d, min });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(EntropyError::NonFinite);
        }
        Ok(Self {
            data,
            n,
            d,
            circular,
        })
    }

    /// Build from column vectors.
    pub fn from_columns(cols: &[(&[f64], bool)]) -> Result<Self> {
        let d = cols.len();
        let n = cols[0].0.len();
        assert!(cols.iter().all(|c| c.0.len() == n));
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            for c in cols {
                data.push(c.0[i]);
            }
        }
        SampleMatrix::new(data, d, cols.iter().map(|c| c.1).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Copy of a subset of columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            for &c in cols {
                data.push(self.data[i * self.d + c]);
            }
        }
        SampleMatrix::new(data, cols.len(), cols.iter().map(|&c| self.circular[c]).collect())
    }
}

// resultant length above which a circular column is recentred and treated as
// linear (support then stays far from the wrap point)
const LINEARIZE_RESULTANT: f64 = 0.9;

struct Prepared {
    pts: Vec<f64>,
    circular: Vec<bool>,
    log2_det_correction: f64,
}

fn prepare(m: &SampleMatrix) -> Result<Prepared> {
    let (n, d) = (m.n, m.d);
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..n).map(|i| m.data[i * d + j]).collect())
        .collect();
    let mut circ = vec![false; d];
    for j in 0..d {
        if m.circular[j] {
            let (mut c, mut s) = (0.0, 0.0);
            for &t in &cols[j] {
                c += t.cos();
                s += t.sin();
            }
            let resultant = (c * c + s * s).sqrt() / n as f64;
            let mean = s.atan2(c);
            for t in cols[j].iter_mut() {
                *t = wrap(*t - mean);
            }
            circ[j] = resultant < LINEARIZE_RESULTANT;
        }
    }
    // jointly whiten the linear(ized) columns
    let lin: Vec<usize> = (0..d).filter(|&j| !circ[j]).collect();
    let mut correction = 0.0;
    if !lin.is_empty() {
        let dl = lin.len();
        let means: Vec<f64> = lin
            .iter()
            .map(|&j| cols[j].iter().sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![0.0; dl * dl];
        for (a, &ja) in lin.iter().enumerate() {
            for (b, &jb) in lin.iter().enumerate().skip(a) {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += (cols[ja][i] - means[a]) * (cols[jb][i] - means[b]);
                }
                let v = acc / (n - 1) as f64;
                cov[a * dl + b] = v;
                cov[b * dl + a] = v;
            }
        }
        let ridge = 1e-14
            * (0..dl)
                .map(|a| cov[a * dl + a])
                .fold(0.0f64, f64::max)
                .max(1e-300);
        for a in 0..dl {
            cov[a * dl + a] += ridge;
        }
        let chol = cholesky(&cov, dl).ok_or(EntropyError::Degenerate(
            "covariance of linear columns is not positive definite",
        ))?;
        // solve L z = x for each sample (forward substitution)
        let mut whitened = vec![vec![0.0; n]; dl];
        for i in 0..n {
            let mut z = [0.0f64; 16];
            for a in 0..dl {
                let mut acc = cols[lin[a]][i] - means[a];
                for b in 0..a {
                    acc -= chol[a * dl + b] * z[b];
                }
                z[a] = acc / chol[a * dl + a];
            }
            for a in 0..dl {
                whitened[a][i] = z[a];
            }
        }
        for a in 0..dl {
            correction += chol[a * dl + a].log2();
            cols[lin[a]] = std::mem::take(&mut whitened[a]);
        }
    }
    let mut pts = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            pts[i * d + j] = cols[j][i];
        }
    }
    Ok(Prepared {
        pts,
        circular: circ,
        log2_det_correction: correction,
    })
}

fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut acc = a[i * d + j];
            for k in 0..j {
                acc -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if acc <= 0.0 {
                    return None;
                }
                l[i * d + i] = acc.sqrt();
            } else {
                l[i * d + j] = acc / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Kozachenko-Leonenko entropy estimate in bits under the L-infinity metric.
pub fn knn_entropy(m: &SampleMatrix, k: usize) -> Result<f64> {
    if k < 1 || k > 20 || k >= m.n {
        return Err(EntropyError::BadK { k, n: m.n });
    }
    let prep = prepare(m)?;
    let tree = KdTree::build(&prep.pts, m.n, m.d, &prep.circular);
    // every point is queried once; slot order is a permutation of the
    // original indices, so the mean over slots is the estimator's mean
    let eps: Vec<f64> = (0..m.n)
        .into_par_iter()
        .map(|slot| tree.kth_neighbor_distance(slot, k))
        .collect();
    let zero_tol = 1e-12;
    let degenerate = eps.iter().filter(|&&e| e < zero_tol).count();
    if degenerate * 1000 > m.n {
        return Err(EntropyError::Degenerate(
            "repeated samples: zero k-th neighbor distances",
        ));
    }
    let mean_ln_eps = eps
        .iter()
        .map(|&e| e.max(zero_tol).ln())
        .sum::<f64>()
        / m.n as f64;
    let d = m.d as f64;
    let h_nats = digamma(m.n as f64).expect("n > 0") - digamma(k as f64).expect("k > 0")
        + d * std::f64::consts::LN_2
        + d * mean_ln_eps;
    Ok(h_nats * LOG2_E + prep.log2_det_correction)
}

/// Conditional entropy h(rest | cond_cols) = h(all) - h(cond_cols), in bits,
/// with the same k for both estimates.
pub fn conditional_entropy_mc(joint: &SampleMatrix, cond_cols: &[usize], k: usize) -> Result<f64> {
    // a conditioned column that replicates an estimated column makes the
    // true conditional entropy -inf; catch the exact-copy case up front
    let rest: Vec<usize> = (0..joint.d).filter(|c| !cond_cols.contains(c)).collect();
    for &a in &rest {
        for &b in cond_cols {
            let identical = (0..joint.n)
                .all(|i| joint.data[i * joint.d + a] == joint.data[i * joint.d + b]);
            if identical {
                return Err(EntropyError::Degenerate(
                    "a conditioned column duplicates an estimated column",
                ));
            }
        }
    }
    let h_joint = knn_entropy(joint, k)?;
    let h_cond = knn_entropy(&joint.select_columns(cond_cols)?, k)?;
    let h = h_joint - h_cond;
    if h < -60.0 {
        return Err(EntropyError::Degenerate(
            "conditional entropy diverged; conditioned columns nearly determine the rest",
        ));
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// kd-tree with per-dimension wrapped or linear coordinates, L-infinity metric
// ---------------------------------------------------------------------------

const LEAF_SIZE: usize = 32;
const MAX_DIM: usize = 8;

struct Node {
    // bounding box, lo[0..d] then hi[0..d]
    bbox: [f64; 2 * MAX_DIM],
    left: u32,
    right: u32,
    start: u32,
    end: u32,
}

struct KdTree {
    // points permuted so every leaf scans a contiguous range
    pts: Vec<f64>,
    d: usize,
    circular: Vec<bool>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(orig: &[f64], n: usize, d: usize, circular: &[bool]) -> Self {
        assert!(d <= MAX_DIM);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 2);
        Self::build_node(orig, d, &mut order, 0, n, &mut nodes);
        // permute points into leaf order for contiguous scans
        let mut pts = vec![0.0; n * d];
        for (slot, &idx) in order.iter().enumerate() {
            pts[slot * d..(slot + 1) * d]
                .copy_from_slice(&orig[idx as usize * d..(idx as usize + 1) * d]);
        }
        KdTree {
            pts,
            d,
            circular: circular.to_vec(),
            nodes,
        }
    }

    fn build_node(
        orig: &[f64],
        d: usize,
        order: &mut [u32],
        offset: usize,
        len: usize,
        nodes: &mut Vec<Node>,
    ) -> u32 {
        let mut bbox = [0.0; 2 * MAX_DIM];
        for j in 0..d {
            bbox[j] = f64::INFINITY;
            bbox[MAX_DIM + j] = f64::NEG_INFINITY;
        }
        for &idx in &order[offset..offset + len] {
            let p = &orig[idx as usize * d..(idx as usize + 1) * d];
            for j in 0..d {
                bbox[j] = bbox[j].min(p[j]);
                bbox[MAX_DIM + j] = bbox[MAX_DIM + j].max(p[j]);
            }
        }
        let id = nodes.len() as u32;
        nodes.push(Node {
            bbox,
            left: u32::MAX,
            right: u32::MAX,
            start: offset as u32,
            end: (offset + len) as u32,
        });
        if len > LEAF_SIZE {
            let dim = (0..d)
                .max_by(|&a, &b| {
                    (bbox[MAX_DIM + a] - bbox[a])
                        .partial_cmp(&(bbox[MAX_DIM + b] - bbox[b]))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if bbox[MAX_DIM + dim] - bbox[dim] > 0.0 {
                let mid = len / 2;
                order[offset..offset + len].select_nth_unstable_by(mid, |&a, &b| {
                    orig[a as usize * d + dim]
                        .partial_cmp(&orig[b as usize * d + dim])
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                let left = Self::build_node(orig, d, order, offset, mid, nodes);
                let right = Self::build_node(orig, d, order, offset + mid, len - mid, nodes);
                nodes[id as usize].left = left;
                nodes[id as usize].right = right;
            }
        }
        id
    }

    #[inline]
    fn coord_dist(&self, j: usize, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.circular[j] {
            d.min(2.0 * std::f64::consts::PI - d)
        } else {
            d
        }
    }

    fn box_dist(&self, q: &[f64], node: &Node) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.d {
            let (lo, hi) = (node.bbox[j], node.bbox[MAX_DIM + j]);
            let x = q[j];
            let interval = |y: f64| -> f64 {
                if y < lo {
                    lo - y
                } else if y > hi {
                    y - hi
                } else {
                    0.0
                }
            };
            let dj = if self.circular[j] {
                let two_pi = 2.0 * std::f64::consts::PI;
                interval(x).min(interval(x + two_pi)).min(interval(x - two_pi))
            } else {
                interval(x)
            };
            if dj > m {
                m = dj;
            }
        }
        m
    }

    /// Distance from original point `i` to its k-th nearest neighbor
    /// (self excluded, by identity not by coordinates).
    fn kth_neighbor_distance(&self, slot: usize, k: usize) -> f64 {
        let q: [f64; MAX_DIM] = {
            let mut buf = [0.0; MAX_DIM];
            buf[..self.d].copy_from_slice(&self.pts[slot * self.d..(slot + 1) * self.d]);
            buf
        };
        let q = &q[..self.d];
        let mut best = [f64::INFINITY; 24];
        let best = &mut best[..k];
        self.search(0, q, slot, best);
        best[k - 1]
    }

    fn search(&self, node_id: u32, q: &[f64], exclude_slot: usize, best: &mut [f64]) {
        let node = &self.nodes[node_id as usize];
        let k = best.len();
        if self.box_dist(q, node) >= best[k - 1] {
            return;
        }
        if node.left == u32::MAX {
            let d = self.d;
            for slot in node.start as usize..node.end as usize {
                if slot == exclude_slot {
                    continue;
                }
                let p = &self.pts[slot * d..(slot + 1) * d];
                let cap = best[k - 1];
                let mut dist = 0.0f64;
                let mut pruned = false;
                for j in 0..d {
                    let dj = self.coord_dist(j, q[j], p[j]);
                    if dj > dist {
                        dist = dj;
                        if dist >= cap {
                            pruned = true;
                            break;
                        }
                    }
                }
                if !pruned && dist < best[k - 1] {
                    let mut pos = k - 1;
                    while pos > 0 && best[pos - 1] > dist {
                        best[pos] = best[pos - 1];
                        pos -= 1;
                    }
                    best[pos] = dist;
                }
            }
            return;
        }
        let (l, r) = (node.left, node.right);
        let dl = self.box_dist(q, &self.nodes[l as usize]);
        let dr = self.box_dist(q, &self.nodes[r as usize]);
        let (first, second) = if dl <= dr { (l, r) } else { (r, l) };
        self.search(first, q, exclude_slot, best);
        self.search(second, q, exclude_slot, best);
    }
}

// ---------------------------------------------------------------------------
// Noncentral chi-square entropy terms
// ---------------------------------------------------------------------------

/// Exact differential entropy in bits of |beta + z|^2 for z ~ CN(0, 1),
/// by adaptive quadrature of the density f(t) = e^-(t + beta^2) I0(2 beta sqrt(t)).
pub fn ncx2_entropy(beta: f64) -> Result<f64> {
    assert!(beta >= 0.0 && beta.is_finite());
    let ln_f = |t: f64| -> f64 {
        let st = t.sqrt();
        let x = 2.0 * beta * st;
        -(st - beta) * (st - beta) + bessel_i0_scaled(x).ln()
    };
    let width = 9.0;
    let lo = if beta > width {
        (beta - width) * (beta - width)
    } else {
        0.0
    };
    let hi = (beta + width) * (beta + width);
    let r = integrate(
        |t| {
            let lf = ln_f(t);
            let f = lf.exp();
            if f > 0.0 {
                -f * lf
            } else {
                0.0
            }
        },
        lo,
        hi,
        1e-10,
    );
    if !r.converged {
        return Err(EntropyError::QuadratureFailed);
    }
    Ok(r.value * LOG2_E)
}

/// E[log2 |beta + z|^2] = log2(beta^2) + E1(beta^2) log2(e) for beta > 0;
/// the central case beta = 0 degenerates to -gamma_Euler log2(e).
pub fn elog_ncx2(beta: f64) -> f64 {
    assert!(beta >= 0.0 && beta.is_finite());
    if beta < 1e-150 {
        return -EULER_GAMMA * LOG2_E;
    }
    let b2 = beta * beta;
    let e1 = if b2 > 700.0 {
        0.0
    } else {
        exp_integral_e1(b2).expect("b2 > 0")
    };
    (b2).log2() + e1 * LOG2_E
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngdist::{RngStream, WrappedNormalParams};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn stream(tag: u64) -> RngStream {
        RngStream::new(0x5EED, tag)
    }

    #[test]
    fn knn_standard_normal_1d() {
        let mut rng = stream(1).rng();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let m = SampleMatrix::from_columns(&[(&xs, false)]).unwrap();
        let h = knn_entropy(&m, 4).unwrap();
        let expect = 0.5 * (2.0 * PI * std::f64::consts::E).log2();
        assert!((h - expect).abs() < 0.02, "h = {h}, expect {expect}");
    }

    #[test]
    fn knn_uniform_1d() {
        let mut rng = stream(2).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let m = SampleMatrix::from_columns(&[(&xs, false)]).unwrap();
        let h = knn_entropy(&m, 4).unwrap();
        assert!(h.abs() < 0.02, "h = {h}");
    }

    #[test]
    fn knn_two_wrapped_normals() {
        let p1 = WrappedNormalParams::new(PI * 1e-2).unwrap();
        let p2 = WrappedNormalParams::new(PI * 1e-4).unwrap();
        let a = crate::rngdist::wrapped_normal_sample(p1, stream(3), 100_000);
        let b = crate::rngdist::wrapped_normal_sample(p2, stream(4), 100_000);
        let m = SampleMatrix::from_columns(&[(&a, true), (&b, true)]).unwrap();
        let h = knn_entropy(&m, 4).unwrap();
        assert!((h - (-4.2201)).abs() < 0.03, "h = {h}");
    }

    #[test]
    fn knn_invariances() {
        let mut rng = stream(5).rng();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 30_000;
        let xs: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let h0 = knn_entropy(&SampleMatrix::from_columns(&[(&xs, false), (&ys, false)]).unwrap(), 4)
            .unwrap();
        // permutation invariance
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let xp: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| ys[i]).collect();
        let h1 = knn_entropy(&SampleMatrix::from_columns(&[(&xp, false), (&yp, false)]).unwrap(), 4)
            .unwrap();
        assert!((h0 - h1).abs() < 1e-9);
        // shift invariance for non-circular columns
        let xs2: Vec<f64> = xs.iter().map(|x| x + 37.5).collect();
        let h2 = knn_entropy(&SampleMatrix::from_columns(&[(&xs2, false), (&ys, false)]).unwrap(), 4)
            .unwrap();
        assert!((h0 - h2).abs() < 0.02);
    }

    #[test]
    fn conditional_entropy_independent_and_degenerate() {
        let mut rng = stream(6).rng();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 50_000;
        let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let joint = SampleMatrix::from_columns(&[(&a, false), (&b, false)]).unwrap();
        let h = conditional_entropy_mc(&joint, &[1], 4).unwrap();
        let expect = 0.5 * (2.0 * PI * std::f64::consts::E).log2();
        assert!((h - expect).abs() < 0.05, "h(A|B) = {h}");

        // duplicated circular column must be flagged as degenerate
        let ph: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let dup = SampleMatrix::from_columns(&[(&ph, true), (&ph, true)]).unwrap();
        assert!(matches!(
            conditional_entropy_mc(&dup, &[1], 4),
            Err(EntropyError::Degenerate(_))
        ));
    }

    #[test]
    fn conditional_entropy_phase_limit() {
        // A = dc (+) angle(s + z) with huge s: h(A | tau) -> h(dc)
        let n = 100_000;
        let s = 1e3;
        let p = WrappedNormalParams::new(PI * 1e-2).unwrap();
        let dc = crate::rngdist::wrapped_normal_sample(p, stream(7), n);
        let mut rng = stream(8).rng();
        let half = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let mut a = Vec::with_capacity(n);
        let mut tau = Vec::with_capacity(n);
        for i in 0..n {
            let z = num_complex::Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
            let y = num_complex::Complex64::new(s, 0.0) + z;
            a.push(wrap(dc[i] + y.arg()));
            tau.push(y.norm());
        }
        let joint = SampleMatrix::from_columns(&[(&a, true), (&tau, false)]).unwrap();
        let h = conditional_entropy_mc(&joint, &[1], 4).unwrap();
        let expect = crate::rngdist::wrapped_normal_entropy_bits(p);
        assert!((h - expect).abs() < 0.03, "h = {h} vs {expect}");
    }

    #[test]
    fn ncx2_entropy_central_and_asymptotic() {
        // beta = 0: entropy of Exp(1)
        let h0 = ncx2_entropy(0.0).unwrap();
        assert!((h0 - LOG2_E).abs() < 1e-8, "h0 = {h0}");
        // beta = 100: Lemma 4 asymptote within 0.01 bits
        let h = ncx2_entropy(100.0).unwrap();
        let asym = 0.5 * (100.0f64 * 100.0).log2() + 0.5 * (4.0 * PI * std::f64::consts::E).log2();
        assert!((h - asym).abs() < 0.01, "h = {h} vs {asym}");
        // frozen quadrature oracle at beta = 2 (scipy cross-check)
        let h2 = ncx2_entropy(2.0).unwrap();
        assert!(h2.is_finite() && h2 > 2.0 && h2 < 4.0);
        // MC cross-validation at beta = 2
        let mut rng = stream(9).rng();
        let half = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let z = num_complex::Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
                (num_complex::Complex64::new(2.0, 0.0) + z).norm_sqr()
            })
            .collect();
        let m = SampleMatrix::from_columns(&[(&xs, false)]).unwrap();
        let h_mc = knn_entropy(&m, 4).unwrap();
        assert!((h2 - h_mc).abs() < 0.02, "quad {h2} vs MC {h_mc}");
    }

    #[test]
    fn elog_ncx2_values() {
        // beta = 1: E1(1) log2 e
        let v = elog_ncx2(1.0);
        assert!((v - 0.21938393439552026 * LOG2_E).abs() < 1e-10);
        // large beta: approaches log2 beta^2
        assert!((elog_ncx2(1e6) - (1e12f64).log2()).abs() < 1e-9);
        // MC cross-check at beta = 3
        let mut rng = stream(10).rng();
        let half = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let z = num_complex::Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
                (num_complex::Complex64::new(3.0, 0.0) + z).norm_sqr().log2()
            })
            .sum::<f64>()
            / n as f64;
        assert!((elog_ncx2(3.0) - mean).abs() < 0.005, "{} vs {mean}", elog_ncx2(3.0));
    }

    #[test]
    fn lemma5_variance_upper_bound() {
        // h(|tau + z|^2 | tau) <= 0.5 E[log2(2 pi e (1 + 2 tau^2))] for sampled tau
        for &tau in &[0.0, 0.5, 2.0, 10.0, 80.0] {
            let h = ncx2_entropy(tau).unwrap();
            let ub = 0.5 * (2.0 * PI * std::f64::consts::E * (1.0 + 2.0 * tau * tau)).log2();
            assert!(h <= ub + 1e-9, "tau = {tau}: {h} > {ub}");
        }
    }

    #[test]
    fn von_mises_conditional_phase_gof() {
        // conditional phase given |beta+z| in [tau-delta, tau+delta] fits VM(0, 2 beta tau)
        let beta = 3.0;
        let tau = 3.2;
        let delta = 0.02;
        let mut rng = stream(11).rng();
        let half = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let mut phases = Vec::new();
        while phases.len() < 30_000 {
            let z = num_complex::Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
            let y = num_complex::Complex64::new(beta, 0.0) + z;
            if (y.norm() - tau).abs() < delta {
                phases.push(y.arg());
            }
        }
        let vm = crate::rngdist::VonMisesParams::new(0.0, 2.0 * beta * tau).unwrap();
        let bins = 50;
        let mut counts = vec![0usize; bins];
        for &ph in &phases {
            let b = (((ph + PI) / (2.0 * PI)) * bins as f64).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let mut expected = Vec::with_capacity(bins);
        for b in 0..bins {
            let a = -PI + 2.0 * PI * b as f64 / bins as f64;
            let c = -PI + 2.0 * PI * (b + 1) as f64 / bins as f64;
            let mass = integrate(|t| crate::rngdist::von_mises_pdf(vm, t), a, c, 1e-11).value;
            expected.push(mass * phases.len() as f64);
        }
        let p_value = crate::stats::chi2_gof_pvalue(&counts, &expected);
        assert!(p_value > 1e-4, "chi2 GOF p = {p_value}");
    }
}
