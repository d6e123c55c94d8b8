use statrs::function::erf::erfc;

use super::batch::{batch_means, DEFAULT_BATCHES};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Matrix, Samples};

/// KS acceptance constant: pass iff `D ≤ KS_CRITICAL / √n_eff`.
pub const KS_CRITICAL: f64 = 1.95;
/// Bound on `|mean| / se` per coordinate.
pub const MEAN_Z_THRESHOLD: f64 = 4.0;
/// Covariance error allowance in standard errors.
pub const COV_Z_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    /// One-sample KS distance to `N(0, Σ_Y)`; scalar samples only.
    pub ks_distance: Option<f64>,
    pub ks_threshold: Option<f64>,
    pub mean_z: Vec<f64>,
    /// `‖S - Σ_Y‖_F / ‖Σ_Y‖_F` for the sample covariance `S`.
    pub cov_rel_err: f64,
    pub cov_threshold: f64,
    /// Smallest per-coordinate batch-means effective sample size.
    pub n_eff: f64,
    pub pass: bool,
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup |F_n - F|` for the empirical CDF of `samples`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Tests samples against the centered Gaussian `N(0, Σ_Y)`.
///
/// All standard errors come from batch means, so thinned chain output can
/// be passed directly.
pub fn gaussian_gof(samples: &Samples, sigma_y: &Matrix) -> Result<GofReport> {
    let d = samples.dim();
    if sigma_y.nrows() != d || sigma_y.ncols() != d {
        return Err(Error::InvalidArgument("Σ_Y dimension mismatch".into()));
    }
    if linalg::cholesky_lower(sigma_y, "Σ_Y").is_err() {
        return Err(Error::NotPositiveDefinite("Σ_Y"));
    }
    let n = samples.len();
    if n < 2 * DEFAULT_BATCHES {
        return Err(Error::InsufficientSamples {
            needed: 2 * DEFAULT_BATCHES,
            got: n,
        });
    }
    let columns: Vec<Vec<f64>> = (0..d).map(|j| samples.column(j)).collect();
    let coord: Vec<_> = columns
        .iter()
        .map(|c| batch_means(c, DEFAULT_BATCHES))
        .collect();
    let n_eff = coord.iter().map(|b| b.ess).fold(f64::INFINITY, f64::min);
    let mean_z: Vec<f64> = coord
        .iter()
        .map(|b| {
            if b.se > 0.0 {
                b.mean / b.se
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let mut cov = Matrix::zeros(d, d);
    let mut se_sq = 0.0;
    let mut prod = vec![0.0; n];
    for i in 0..d {
        for j in 0..=i {
            let (mi, mj) = (coord[i].mean, coord[j].mean);
            for (k, p) in prod.iter_mut().enumerate() {
                *p = (columns[i][k] - mi) * (columns[j][k] - mj);
            }
            let bm = batch_means(&prod, DEFAULT_BATCHES);
            let s = bm.mean * n as f64 / (n - 1) as f64;
            cov[(i, j)] = s;
            cov[(j, i)] = s;
            let mult = if i == j { 1.0 } else { 2.0 };
            se_sq += mult * bm.se * bm.se;
        }
    }
    let scale = sigma_y.norm();
    let cov_rel_err = (&cov - sigma_y).norm() / scale;
    let cov_threshold = COV_Z_THRESHOLD * se_sq.sqrt() / scale;

    let (ks_distance, ks_threshold) = if d == 1 {
        let sd = sigma_y[(0, 0)].sqrt();
        let dist = ks_distance(&columns[0], |x| normal_cdf(x / sd));
        (Some(dist), Some(KS_CRITICAL / n_eff.sqrt()))
    } else {
        (None, None)
    };
    let pass = ks_distance.zip(ks_threshold).is_none_or(|(k, t)| k <= t)
        && mean_z.iter().all(|z| z.abs() <= MEAN_Z_THRESHOLD)
        && cov_rel_err <= cov_threshold;
    Ok(GofReport {
        ks_distance,
        ks_threshold,
        mean_z,
        cov_rel_err,
        cov_threshold,
        n_eff,
        pass,
    })
}
