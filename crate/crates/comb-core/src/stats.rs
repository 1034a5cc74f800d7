//! Small statistical helpers for the goodness-of-fit checks in the test
//! suites: chi-square p-values, two-sample Kolmogorov-Smirnov statistics,
//! and mean/standard-error accumulation.

use crate::specfun::reg_upper_gamma;

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2);
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Chi-square goodness-of-fit p-value for observed counts against expected
/// counts. Bins with expected count below 5 are merged into their neighbor.
pub fn chi2_gof_pvalue(observed: &[usize], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let mut obs = Vec::with_capacity(observed.len());
    let mut exp = Vec::with_capacity(expected.len());
    let (mut o_acc, mut e_acc) = (0.0f64, 0.0f64);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o as f64;
        e_acc += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
            *lo += o_acc;
            *le += e_acc;
        } else {
            obs.push(o_acc);
            exp.push(e_acc);
        }
    }
    let dof = obs.len().saturating_sub(1).max(1);
    let chi2: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    // survival function of chi-square with dof degrees of freedom
    reg_upper_gamma(dof as f64 / 2.0, chi2 / 2.0).unwrap_or(0.0)
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
pub fn ks_statistic_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Circular mean resultant length of a set of angles.
pub fn circular_resultant(angles: &[f64]) -> f64 {
    let (mut c, mut s) = (0.0, 0.0);
    for &t in angles {
        c += t.cos();
        s += t.sin();
    }
    (c * c + s * s).sqrt() / angles.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_uniform_counts() {
        let obs = vec![100usize; 10];
        let exp = vec![100.0f64; 10];
        let p = chi2_gof_pvalue(&obs, &exp);
        assert!(p > 0.99);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert!(ks_statistic_two_sample(&a, &a) <= 1.0 / 1000.0 + 1e-12);
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        assert!(se > 0.0);
    }
}
