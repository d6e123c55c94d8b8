//! Shared vocabulary types.

use std::fmt;

use crate::error::{Error, Result};

/// Dense column vector of state coordinates.
pub type Vector = nalgebra::DVector<f64>;
/// Dense square matrix (drift derivatives, covariances).
pub type Matrix = nalgebra::DMatrix<f64>;

/// A constant stepsize `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StepSize(f64);

impl StepSize {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive (got {alpha})"
            )));
        }
        Ok(Self(alpha))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Power-law scaling function `g(α) = c · α^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFn {
    exponent: f64,
    coefficient: f64,
}

impl ScalingFn {
    /// `g(α) = α^p` with `p ∈ (0, 1]`.
    pub fn power(exponent: f64) -> Result<Self> {
        Self::with_coefficient(exponent, 1.0)
    }

    pub fn with_coefficient(exponent: f64, coefficient: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling exponent must lie in (0, 1] (got {exponent})"
            )));
        }
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling coefficient must be positive (got {coefficient})"
            )));
        }
        Ok(Self {
            exponent,
            coefficient,
        })
    }

    /// The central-limit scaling `g(α) = √α`.
    pub fn sqrt() -> Self {
        Self {
            exponent: 0.5,
            coefficient: 1.0,
        }
    }

    /// The identity scaling `g(α) = 1`, i.e. unscaled iterates.
    ///
    /// Records raw `X - x*`; it does not satisfy the vanishing condition on `g`.
    pub fn unit() -> Self {
        Self {
            exponent: 0.0,
            coefficient: 1.0,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    #[inline]
    pub fn eval(&self, alpha: f64) -> f64 {
        self.coefficient * alpha.powf(self.exponent)
    }

    /// Both `g(α)` and `α / g(α)` vanish as `α → 0`.
    ///
    /// Holds exactly when `p < 1`; `p = 1` keeps `α / g(α)` constant.
    pub fn satisfies_vanishing_condition(&self) -> bool {
        self.exponent > 0.0 && self.exponent < 1.0
    }
}

/// Row-major `n × d` table of sample vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "sample dimension must be at least 1");
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        assert!(dim >= 1, "sample dimension must be at least 1");
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    /// Wraps a flat row-major buffer. Panics if the length is not a multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim >= 1, "sample dimension must be at least 1");
        assert_eq!(data.len() % dim, 0, "buffer length not a multiple of dim");
        Self { dim, data }
    }

    /// Scalar samples.
    pub fn from_scalars(values: Vec<f64>) -> Self {
        Self::from_flat(1, values)
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Values of a single coordinate, in row order.
    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.dim);
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn extend(&mut self, other: &Samples) {
        assert_eq!(self.dim, other.dim);
        self.data.extend_from_slice(&other.data);
    }
}
