//! Zero-mean i.i.d. noise with covariance `Σ`.
//!
//! A draw is `L z` where `L Lᵀ = Σ` and `z` has independent, zero-mean,
//! unit-variance entries of the chosen shape. All shapes share the first
//! two moments.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::RngState;
use crate::types::{Matrix, Vector};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseShape {
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// `±1` with equal probability.
    Rademacher,
}

impl NoiseShape {
    pub const ALL: [NoiseShape; 3] = [
        NoiseShape::Gaussian,
        NoiseShape::Uniform,
        NoiseShape::Rademacher,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseShape::Gaussian => "gaussian",
            NoiseShape::Uniform => "uniform",
            NoiseShape::Rademacher => "rademacher",
        }
    }

    #[inline]
    pub(crate) fn draw(self, rng: &mut RngState) -> f64 {
        match self {
            NoiseShape::Gaussian => rng.sample(StandardNormal),
            NoiseShape::Uniform => SQRT_3 * (2.0 * rng.random::<f64>() - 1.0),
            NoiseShape::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for NoiseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseShape::Gaussian),
            "uniform" => Ok(NoiseShape::Uniform),
            "rademacher" => Ok(NoiseShape::Rademacher),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise shape `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    shape: NoiseShape,
    sigma: Matrix,
    cholesky: Matrix,
    noiseless: bool,
}

impl NoiseModel {
    /// Noise with symmetric positive definite covariance `sigma`.
    pub fn new(shape: NoiseShape, sigma: Matrix) -> Result<Self> {
        let cholesky = linalg::cholesky_lower(&sigma, "Σ")?;
        Ok(Self {
            shape,
            sigma,
            cholesky,
            noiseless: false,
        })
    }

    /// Identically zero noise, for debugging deterministic dynamics.
    /// Stationary analysis refuses this model.
    pub fn noiseless(dim: usize) -> Self {
        Self {
            shape: NoiseShape::Gaussian,
            sigma: Matrix::zeros(dim, dim),
            cholesky: Matrix::zeros(dim, dim),
            noiseless: true,
        }
    }

    pub fn shape(&self) -> NoiseShape {
        self.shape
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn cholesky_factor(&self) -> &Matrix {
        &self.cholesky
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    /// Writes one draw into `out`, using `scratch` for the unit-variance vector.
    #[inline]
    #[allow(clippy::needless_range_loop)]
    pub fn sample_into(&self, rng: &mut RngState, scratch: &mut [f64], out: &mut [f64]) {
        if self.noiseless {
            out.fill(0.0);
            return;
        }
        let d = out.len();
        if d == 1 {
            out[0] = self.cholesky[(0, 0)] * self.shape.draw(rng);
            return;
        }
        for z in scratch.iter_mut() {
            *z = self.shape.draw(rng);
        }
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.cholesky[(i, j)] * scratch[j];
            }
            out[i] = acc;
        }
    }

    pub fn sample(&self, rng: &mut RngState) -> Vector {
        let d = self.dim();
        let mut scratch = vec![0.0; d];
        let mut out = Vector::zeros(d);
        self.sample_into(rng, &mut scratch, out.as_mut_slice());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;

    #[test]
    fn cholesky_reproduces_sigma() {
        let sigma = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let nm = NoiseModel::new(NoiseShape::Gaussian, sigma.clone()).unwrap();
        let l = nm.cholesky_factor();
        assert!((l * l.transpose() - sigma).amax() <= 1e-12);
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let sigma = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = NoiseModel::new(NoiseShape::Gaussian, sigma).unwrap_err();
        assert_eq!(err.to_string(), "Σ not positive definite");
    }

    #[test]
    fn gaussian_moments() {
        let nm = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(1, 1)).unwrap();
        let mut rng = seed_rng(1, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| nm.sample(&mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn rademacher_support() {
        let nm = NoiseModel::new(NoiseShape::Rademacher, Matrix::identity(1, 1)).unwrap();
        let mut rng = seed_rng(2, 0);
        for _ in 0..10_000 {
            let w = nm.sample(&mut rng)[0];
            assert!(w == 1.0 || w == -1.0);
        }
    }

    #[test]
    fn uniform_range() {
        let nm = NoiseModel::new(NoiseShape::Uniform, Matrix::identity(2, 2) * 2.0).unwrap();
        let mut rng = seed_rng(3, 0);
        let bound = 6.0_f64.sqrt();
        for _ in 0..10_000 {
            let w = nm.sample(&mut rng);
            assert!(w.iter().all(|x| x.abs() <= bound + 1e-12));
        }
    }

    #[test]
    fn noiseless_draws_zero() {
        let nm = NoiseModel::noiseless(2);
        let mut rng = seed_rng(4, 0);
        assert_eq!(nm.sample(&mut rng), Vector::zeros(2));
    }

    #[test]
    fn shape_names_round_trip() {
        for s in NoiseShape::ALL {
            assert_eq!(s.as_str().parse::<NoiseShape>().unwrap(), s);
        }
        assert!("cauchy".parse::<NoiseShape>().is_err());
    }
}
