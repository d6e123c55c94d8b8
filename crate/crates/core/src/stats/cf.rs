use rand::Rng;
use rand_distr::StandardNormal;

use super::batch::{batch_means, DEFAULT_BATCHES};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::types::{Matrix, Samples, Vector};

/// Monte-Carlo estimate of `E[(tᵀΣt - 2i tᵀM Y) e^{i tᵀY}]` per probe `t`.
///
/// The expectation vanishes for every `t` exactly when `Y` is the Gaussian
/// whose covariance solves `M Σ_Y + Σ_Y Mᵀ + Σ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfResidualReport {
    pub t_grid: Vec<Vector>,
    pub residual_re: Vec<f64>,
    pub residual_im: Vec<f64>,
    /// Batch-means standard errors of the real and imaginary parts.
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    /// `sqrt(se_re² + se_im²)`, the standard error of the modulus.
    pub monte_carlo_se: Vec<f64>,
    pub max_abs_residual: f64,
}

impl CfResidualReport {
    /// `|residual| / se` per probe; zero where both vanish (e.g. `t = 0`).
    pub fn z_scores(&self) -> Vec<f64> {
        self.residual_re
            .iter()
            .zip(&self.residual_im)
            .zip(&self.monte_carlo_se)
            .map(|((re, im), se)| {
                let r = re.hypot(*im);
                if r == 0.0 {
                    0.0
                } else {
                    r / se
                }
            })
            .collect()
    }

    pub fn max_z(&self) -> f64 {
        self.z_scores().into_iter().fold(0.0, f64::max)
    }
}

pub fn cf_residual(
    samples: &Samples,
    m: &Matrix,
    sigma: &Matrix,
    t_grid: &[Vector],
) -> Result<CfResidualReport> {
    let d = samples.dim();
    if m.nrows() != d || m.ncols() != d || sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::InvalidArgument(
            "dimension mismatch in cf_residual".into(),
        ));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if t_grid.iter().any(|t| t.len() != d) {
        return Err(Error::InvalidArgument("probe t has wrong dimension".into()));
    }
    let n = samples.len();
    let mut report = CfResidualReport {
        t_grid: t_grid.to_vec(),
        residual_re: Vec::with_capacity(t_grid.len()),
        residual_im: Vec::with_capacity(t_grid.len()),
        se_re: Vec::with_capacity(t_grid.len()),
        se_im: Vec::with_capacity(t_grid.len()),
        monte_carlo_se: Vec::with_capacity(t_grid.len()),
        max_abs_residual: 0.0,
    };
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for t in t_grid {
        let a = t.dot(&(sigma * t));
        // tᵀ M y = (Mᵀ t)ᵀ y
        let mt = m.transpose() * t;
        for (j, y) in samples.rows().enumerate() {
            let mut theta = 0.0;
            let mut b = 0.0;
            for k in 0..d {
                theta += t[k] * y[k];
                b += mt[k] * y[k];
            }
            let (s, c) = theta.sin_cos();
            // (a - 2ib)(cos θ + i sin θ)
            re[j] = a * c + 2.0 * b * s;
            im[j] = a * s - 2.0 * b * c;
        }
        let bre = batch_means(&re, DEFAULT_BATCHES);
        let bim = batch_means(&im, DEFAULT_BATCHES);
        report.residual_re.push(bre.mean);
        report.residual_im.push(bim.mean);
        report.se_re.push(bre.se);
        report.se_im.push(bim.se);
        report.monte_carlo_se.push(bre.se.hypot(bim.se));
        report.max_abs_residual = report.max_abs_residual.max(bre.mean.hypot(bim.mean));
    }
    Ok(report)
}

/// Probe set: `±{0.25, 0.5, 1, 2}` in one dimension; otherwise the `±e_i`
/// axis vectors at magnitudes 0.5 and 1 plus eight random unit directions.
pub fn default_t_grid(dim: usize, rng: &mut RngState) -> Vec<Vector> {
    if dim == 1 {
        return [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|t| Vector::from_element(1, *t))
            .collect();
    }
    let mut grid = Vec::with_capacity(4 * dim + 8);
    for mag in [0.5, 1.0] {
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut t = Vector::zeros(dim);
                t[i] = sign * mag;
                grid.push(t);
            }
        }
    }
    for _ in 0..8 {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        grid.push(v.normalize());
    }
    grid
}

/// Empirical characteristic function `(1/n) Σ e^{i tᵀ y_j}` as `(re, im)`.
pub fn empirical_cf(samples: &Samples, t: &Vector) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for y in samples.rows() {
        let theta: f64 = y.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
        let (s, c) = theta.sin_cos();
        re += c;
        im += s;
    }
    (re / n, im / n)
}

/// `exp(-tᵀ Σ_Y t / 2)`, the characteristic function of `N(0, Σ_Y)`.
pub fn gaussian_cf(sigma_y: &Matrix, t: &Vector) -> f64 {
    (-0.5 * t.dot(&(sigma_y * t))).exp()
}

/// Solution `exp(-(a / 4b) t²)` of `a t φ(t) + 2b φ'(t) = 0` with `φ(0) = 1`.
///
/// In one dimension the residual equation reduces to this ODE with
/// `a = Σ` and `b = -M`.
pub fn scalar_ode_cf(a: f64, b: f64, t: f64) -> f64 {
    (-(a / (4.0 * b)) * t * t).exp()
}
