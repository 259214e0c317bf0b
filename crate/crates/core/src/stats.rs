//! Small summary statistics used by the Monte Carlo estimators.

/// Pairwise (cascade) summation; error grows as O(log n) rather than O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and its standard error. The standard error is `None` for
/// fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64) -> Self {
        Estimate { mean, stderr }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, se) = mean_stderr(xs);
        Estimate { mean, stderr: se.unwrap_or(0.0) }
    }
}

/// Whether `values` is non-increasing up to `k` combined standard errors
/// between every consecutive pair.
pub fn non_increasing_within(values: &[Estimate], k: f64) -> bool {
    values.windows(2).all(|w| {
        let slack = k * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].mean <= w[0].mean + slack
    })
}
