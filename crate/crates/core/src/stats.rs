//! Small statistical helpers shared by the test harnesses and reports.

/// Conservative three-sigma half-width for a binomial proportion estimated
/// from `m` samples: `3 * sqrt(0.25 / m)`.
pub fn binomial_ci_halfwidth(m: usize) -> f64 {
    assert!(m > 0, "binomial CI needs at least one sample");
    3.0 * (0.25 / m as f64).sqrt()
}

/// Wilson score interval for `hits` successes out of `n` trials.
///
/// `z` is the normal quantile for the desired coverage (1.96 for 95%).
/// Degenerates gracefully for small `n`, including `n = 1`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs at least one trial");
    assert!(hits <= n);
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "mean of empty slice");
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    assert!(xs.len() >= 2, "variance needs at least two samples");
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sample z statistic for equality of means under pooled variance.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> f64 {
    let va = variance(a);
    let vb = variance(b);
    let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (mean(a) - mean(b)) / se
}

/// Euclidean norm.
pub fn l2_norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
