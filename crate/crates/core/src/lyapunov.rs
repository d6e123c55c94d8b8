//! Predicted limiting covariance.
//!
//! The limit of the centered scaled iterate is Gaussian with covariance
//! `Σ_Y` solving `M Σ_Y + Σ_Y Mᵀ + Σ = 0`, where `M` is the drift's
//! Lyapunov matrix. Two independent routes are provided: a dense Kronecker
//! solve and direct quadrature of `∫₀^∞ e^{Mu} Σ e^{Mᵀu} du`.

use crate::drift::{check_hurwitz, DriftOperator};
use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::NoiseModel;
use crate::types::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMethod {
    Kronecker,
    Integral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSolution {
    pub sigma_y: Matrix,
    /// `‖M Σ_Y + Σ_Y Mᵀ + Σ‖_F`.
    pub residual_norm: f64,
    pub min_eigenvalue: f64,
    pub method: LyapunovMethod,
}

impl LyapunovSolution {
    fn certify(m: &Matrix, sigma: &Matrix, sigma_y: Matrix, method: LyapunovMethod) -> Self {
        let residual_norm = lyapunov_residual(m, sigma, &sigma_y);
        let min_eigenvalue = linalg::min_symmetric_eigenvalue(&sigma_y);
        Self {
            sigma_y,
            residual_norm,
            min_eigenvalue,
            method,
        }
    }
}

pub fn lyapunov_residual(m: &Matrix, sigma: &Matrix, sigma_y: &Matrix) -> f64 {
    (m * sigma_y + sigma_y * m.transpose() + sigma).norm()
}

fn check_inputs(m: &Matrix, sigma: &Matrix) -> Result<f64> {
    if !m.is_square() || !sigma.is_square() || m.nrows() != sigma.nrows() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "M and Σ must be square matrices of equal size".into(),
        ));
    }
    if !linalg::all_finite(sigma) || !linalg::is_symmetric(sigma, 1e-12) {
        return Err(Error::InvalidArgument(
            "Σ must be finite and symmetric".into(),
        ));
    }
    let report = check_hurwitz(m)?;
    if !report.hurwitz {
        return Err(Error::NotHurwitz {
            max_real_part: report.max_real_part,
        });
    }
    Ok(report.max_real_part)
}

/// Solves `M X + X Mᵀ + Σ = 0` through `(M ⊗ I + I ⊗ M) vec(X) = -vec(Σ)`.
pub fn solve_lyapunov(m: &Matrix, sigma: &Matrix) -> Result<LyapunovSolution> {
    check_inputs(m, sigma)?;
    let d = m.nrows();
    let n = d * d;
    // Column-major vec: vec(M X) = (I ⊗ M) vec X and vec(X Mᵀ) = (M ⊗ I) vec X.
    let mut kron = Matrix::zeros(n, n);
    for col in 0..d {
        for row in 0..d {
            let r = col * d + row;
            for k in 0..d {
                kron[(r, col * d + k)] += m[(row, k)];
                kron[(r, k * d + row)] += m[(col, k)];
            }
        }
    }
    let rhs = -nalgebra::DVector::from_column_slice(sigma.as_slice());
    let vec_x = kron
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Kronecker Lyapunov system"))?;
    if vec_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("Kronecker Lyapunov system"));
    }
    let x = Matrix::from_column_slice(d, d, vec_x.as_slice());
    Ok(LyapunovSolution::certify(
        m,
        sigma,
        linalg::symmetrize(&x),
        LyapunovMethod::Kronecker,
    ))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Target bound on `‖e^{MU}‖₂` at the truncation point.
const TAIL_TOLERANCE: f64 = 1e-8;

/// Composite Gauss–Legendre quadrature of `∫₀^U e^{Mu} Σ e^{Mᵀu} du`.
///
/// `U` starts at `ln(1e8) / |max Re λ(M)|` and doubles until
/// `‖e^{MU}‖₂ ≤ 1e-8`. Panels are at most one decade of decay long and
/// short enough to resolve the fastest rotation; each uses `quad_points`
/// nodes.
pub fn solve_lyapunov_integral(
    m: &Matrix,
    sigma: &Matrix,
    quad_points: usize,
) -> Result<LyapunovSolution> {
    let abscissa = check_inputs(m, sigma)?;
    if quad_points == 0 {
        return Err(Error::InvalidArgument(
            "quad_points must be positive".into(),
        ));
    }
    let decay = abscissa.abs();
    let mut upper = (1.0 / TAIL_TOLERANCE).ln() / decay;
    while (m * upper).exp().norm() > TAIL_TOLERANCE {
        upper *= 2.0;
        if !upper.is_finite() {
            return Err(Error::EigenFailure);
        }
    }
    let radius = linalg::eigenvalues(m)?
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max);
    let panel = (std::f64::consts::LN_10 / decay).min(2.0 / radius);
    let n_panels = (upper / panel).ceil().max(1.0) as usize;
    let h = upper / n_panels as f64;

    let (nodes, weights) = gauss_legendre(quad_points);
    // e^{M(p h + s)} = e^{M h}^p · e^{M s}; only quad_points + 1 exponentials.
    let node_exps: Vec<Matrix> = nodes
        .iter()
        .map(|x| (m * (0.5 * h * (x + 1.0))).exp())
        .collect();
    let step = (m * h).exp();
    let d = m.nrows();
    let mut start = Matrix::identity(d, d);
    let mut acc = Matrix::zeros(d, d);
    for _ in 0..n_panels {
        for (e_node, w) in node_exps.iter().zip(&weights) {
            let e = &start * e_node;
            acc += (&e * sigma * e.transpose()) * (0.5 * h * w);
        }
        start = &start * &step;
    }
    Ok(LyapunovSolution::certify(
        m,
        sigma,
        linalg::symmetrize(&acc),
        LyapunovMethod::Integral,
    ))
}

/// Gaussian limit predicted for the drift and noise: `Σ_Y` for `M = ∂F(x*)`.
pub fn predict_stationary(op: &DriftOperator, nm: &NoiseModel) -> Result<LyapunovSolution> {
    if nm.is_noiseless() {
        return Err(Error::Unsupported("a noise model with positive definite Σ"));
    }
    if op.dim() != nm.dim() {
        return Err(Error::InvalidArgument(
            "drift and noise dimensions differ".into(),
        ));
    }
    let m = op.derivative_at_root(true)?;
    solve_lyapunov(&m, nm.sigma())
}
