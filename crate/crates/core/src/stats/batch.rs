/// Number of batches used for every batch-means standard error.
pub const DEFAULT_BATCHES: usize = 20;

/// Batch-means summary of a (possibly autocorrelated) series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance of the raw values.
    pub variance: f64,
    /// Standard error of `mean`.
    pub se: f64,
    /// `variance / se²`, capped at `n`.
    pub ess: f64,
}

/// Splits `values` into `n_batches` contiguous batches and estimates the
/// standard error of the mean from the spread of batch means.
///
/// With fewer than two values per batch the i.i.d. formula is used.
pub fn batch_means(values: &[f64], n_batches: usize) -> BatchMeans {
    let n = values.len();
    assert!(n >= 2, "batch means needs at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let iid_se = (variance / n as f64).sqrt();
    let b = n_batches.max(2);
    if n < 2 * b {
        return BatchMeans {
            n,
            mean,
            variance,
            se: iid_se,
            ess: n as f64,
        };
    }
    let batch: Vec<f64> = (0..b)
        .map(|k| {
            let (lo, hi) = (k * n / b, (k + 1) * n / b);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let bm = batch.iter().sum::<f64>() / b as f64;
    let var_b = batch.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    let se = (var_b / b as f64).sqrt();
    let ess = if se > 0.0 {
        (variance / (se * se)).min(n as f64)
    } else {
        n as f64
    };
    BatchMeans {
        n,
        mean,
        variance,
        se,
        ess,
    }
}
