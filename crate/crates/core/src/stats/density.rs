use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MIN_DENSITY_SAMPLES: usize = 1000;

/// Gaussian-kernel density estimate on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub n_samples: usize,
}

impl DensityEstimate {
    /// Trapezoidal integral of the estimate over its grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn at(&self, y: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || y < g[0] || y > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|v| *v <= y).clamp(1, g.len() - 1);
        let (x0, x1) = (g[i - 1], g[i]);
        if x1 == x0 {
            return self.density[i];
        }
        let w = (y - x0) / (x1 - x0);
        self.density[i - 1] * (1.0 - w) + self.density[i] * w
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Silverman's rule `1.06 · s · n^{-1/5}` with the unbiased sample deviation.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    silverman_bandwidth_effective(samples, samples.len() as f64)
}

/// Silverman's rule with `n` replaced by an effective sample size, for
/// autocorrelated samples.
pub fn silverman_bandwidth_effective(samples: &[f64], n_eff: f64) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n_eff.clamp(1.0, n).powf(-0.2)
}

// Kernel contributions beyond 8 bandwidths are below 1e-14 of the peak.
const KERNEL_CUTOFF: f64 = 8.0;

pub fn estimate_density(samples: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    estimate_density_with_bandwidth(samples, grid, None)
}

/// Kernel estimate with an explicit bandwidth; `None` uses Silverman's rule.
pub fn estimate_density_with_bandwidth(
    samples: &[f64],
    grid: &[f64],
    bandwidth: Option<f64>,
) -> Result<DensityEstimate> {
    if samples.len() < MIN_DENSITY_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_DENSITY_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite sample"));
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(samples));
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Degenerate("zero bandwidth"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .par_iter()
        .map(|&y| {
            let lo = sorted.partition_point(|s| *s < y - KERNEL_CUTOFF * h);
            let hi = sorted.partition_point(|s| *s <= y + KERNEL_CUTOFF * h);
            let sum: f64 = sorted[lo..hi]
                .iter()
                .map(|s| {
                    let u = (y - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            sum * norm
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        density,
        bandwidth: h,
        n_samples: samples.len(),
    })
}
