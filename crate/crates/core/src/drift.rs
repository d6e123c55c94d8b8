//! Drift operators `F` for the iteration `X_{k+1} = X_k + α (F(X_k) + w_k)`.
//!
//! Each operator carries its root `x*` (checked at construction) and, when
//! known in closed form, its *Lyapunov matrix* `M`: the matrix for which the
//! predicted limiting covariance solves `M Σ_Y + Σ_Y Mᵀ + Σ = 0`.
//! That is `M = -H_f` for gradient drifts, `M = A` for linear drifts and
//! `M = J - I` for fixed-point drifts `F = T - I`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::RngState;
use crate::types::{Matrix, Vector};

/// In-place vector field `out = f(x)`.
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Tolerance on `‖F(x*)‖₂` accepted at construction.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Central finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Hurwitz margin: the spectral abscissa must lie below `-HURWITZ_TOL`.
pub const HURWITZ_TOL: f64 = 1e-10;

/// Smoothness / strong-convexity constants of a gradient drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothConvexCertificate {
    pub l: f64,
    pub sigma: f64,
}

impl SmoothConvexCertificate {
    pub fn new(l: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && l >= sigma && l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "certificate needs 0 < sigma <= L (got L={l}, sigma={sigma})"
            )));
        }
        Ok(Self { l, sigma })
    }

    /// `0.1 · min(1, σ / L²)`.
    pub fn default_stepsize_threshold(&self) -> f64 {
        0.1 * (self.sigma / (self.l * self.l)).min(1.0)
    }
}

/// The map `T` of a fixed-point drift `F(x) = T(x) - x`.
#[derive(Clone)]
pub enum ContractiveMap {
    /// `T(x)_i = tanh(gain · x_i)`, fixed point 0.
    Tanh { gain: f64 },
    /// `T(x) = B x + c`.
    Affine { matrix: Matrix, offset: Vector },
    Custom {
        map: VectorField,
        jacobian_at_fixed_point: Option<Matrix>,
    },
}

impl ContractiveMap {
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ContractiveMap::Tanh { gain } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = (gain * xi).tanh();
                }
            }
            ContractiveMap::Affine { matrix, offset } => {
                let n = offset.len();
                for i in 0..n {
                    let mut acc = offset[i];
                    for j in 0..n {
                        acc += matrix[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
            ContractiveMap::Custom { map, .. } => map(x, out),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(x.len());
        self.apply_into(x.as_slice(), out.as_mut_slice());
        out
    }

    /// Empirical Lipschitz constant in the weighted norm `‖·‖_μ`.
    ///
    /// Draws `n_probes` pairs uniformly from the ball of the given radius
    /// and reports the largest ratio `‖T(x₁) - T(x₂)‖_μ / ‖x₁ - x₂‖_μ`.
    pub fn probe_contraction(
        &self,
        weights: &Vector,
        n_probes: usize,
        radius: f64,
        rng: &mut RngState,
    ) -> Result<ContractionReport> {
        if n_probes == 0 || !(radius > 0.0) {
            return Err(Error::InvalidArgument(
                "contraction probe needs n_probes >= 1 and radius > 0".into(),
            ));
        }
        let d = weights.len();
        let mut gamma_hat = 0.0_f64;
        let mut done = 0;
        while done < n_probes {
            let x1 = uniform_in_ball(d, radius, rng);
            let x2 = uniform_in_ball(d, radius, rng);
            let dx = weighted_norm(&(&x1 - &x2), weights);
            if dx == 0.0 || !dx.is_finite() {
                continue;
            }
            let dt = weighted_norm(&(self.apply(&x1) - self.apply(&x2)), weights);
            gamma_hat = gamma_hat.max(dt / dx);
            done += 1;
        }
        Ok(ContractionReport {
            gamma_hat,
            contractive: gamma_hat < 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub gamma_hat: f64,
    pub contractive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzReport {
    pub hurwitz: bool,
    pub max_real_part: f64,
}

#[derive(Clone)]
pub enum DriftKind {
    /// `F(x) = -H (x - x*)`, the negative gradient of `½ (x-x*)ᵀ H (x-x*)`.
    GradQuadratic {
        hessian: Matrix,
    },
    /// `F = -∇f` for a user-supplied gradient.
    GradGeneric {
        gradient: VectorField,
    },
    /// `F(x) = A x + b`.
    Linear {
        a: Matrix,
        b: Vector,
    },
    /// `F(x) = T(x) - x`.
    Contractive {
        map: ContractiveMap,
        weights: Vector,
    },
    /// `f(x) = Σ x_i⁴ / 4`, so `F(x)_i = -x_i³`.
    Quartic,
    /// `f(x) = Σ exp(x_i²)`, so `F(x)_i = -2 x_i exp(x_i²)`.
    ExpSquare,
    /// `f(x) = Σ x_i⁴/4 + sin²(x_i)/2`, so `F(x)_i = -(x_i³ + sin x_i cos x_i)`.
    QuarticSine,
    Custom {
        field: VectorField,
    },
}

impl DriftKind {
    pub fn name(&self) -> &'static str {
        match self {
            DriftKind::GradQuadratic { .. } => "grad_quadratic",
            DriftKind::GradGeneric { .. } => "grad_generic",
            DriftKind::Linear { .. } => "linear",
            DriftKind::Contractive {
                map: ContractiveMap::Tanh { .. },
                ..
            } => "contractive_tanh",
            DriftKind::Contractive { .. } => "contractive",
            DriftKind::Quartic => "quartic",
            DriftKind::ExpSquare => "exp_square",
            DriftKind::QuarticSine => "quartic_sine",
            DriftKind::Custom { .. } => "custom",
        }
    }
}

/// A drift operator with verified root.
#[derive(Clone)]
pub struct DriftOperator {
    kind: DriftKind,
    root: Vector,
    lyapunov: Option<Matrix>,
    certificate: Option<SmoothConvexCertificate>,
}

impl fmt::Debug for DriftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftOperator")
            .field("kind", &self.kind.name())
            .field("root", &self.root.as_slice())
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl DriftOperator {
    fn build(
        kind: DriftKind,
        root: Vector,
        lyapunov: Option<Matrix>,
        certificate: Option<SmoothConvexCertificate>,
    ) -> Result<Self> {
        if root.is_empty() {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if root.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("root must be finite".into()));
        }
        if let Some(m) = &lyapunov {
            if m.nrows() != root.len() || m.ncols() != root.len() {
                return Err(Error::InvalidArgument(
                    "derivative dimension does not match the root".into(),
                ));
            }
        }
        let op = Self {
            kind,
            root,
            lyapunov,
            certificate,
        };
        let residual = op.eval(&op.root)?.norm();
        let scale = 1.0 + op.root.norm() * op.scale_hint();
        if residual > ROOT_TOLERANCE * scale {
            return Err(Error::InvalidArgument(format!(
                "F(x*) = {residual:e} exceeds root tolerance"
            )));
        }
        Ok(op)
    }

    // Magnitude used to make the root check relative for affine drifts.
    fn scale_hint(&self) -> f64 {
        match &self.kind {
            DriftKind::GradQuadratic { hessian } => hessian.amax(),
            DriftKind::Linear { a, .. } => a.amax(),
            DriftKind::Contractive {
                map: ContractiveMap::Affine { matrix, .. },
                ..
            } => matrix.amax() + 1.0,
            _ => 0.0,
        }
    }

    /// `F(x) = -H (x - x*)` with `H` symmetric positive definite.
    pub fn grad_quadratic(hessian: Matrix, minimizer: Vector) -> Result<Self> {
        if hessian.nrows() != minimizer.len() || !hessian.is_square() {
            return Err(Error::InvalidArgument(
                "hessian/minimizer dimension mismatch".into(),
            ));
        }
        if !linalg::all_finite(&hessian) || !linalg::is_symmetric(&hessian, 1e-12) {
            return Err(Error::InvalidArgument(
                "hessian must be finite and symmetric".into(),
            ));
        }
        let sigma = linalg::min_symmetric_eigenvalue(&hessian);
        if !(sigma > 0.0) {
            return Err(Error::NotPositiveDefinite("hessian"));
        }
        let l = linalg::max_symmetric_eigenvalue(&hessian);
        let cert = SmoothConvexCertificate::new(l, sigma)?;
        let m = -hessian.clone();
        Self::build(
            DriftKind::GradQuadratic { hessian },
            minimizer,
            Some(m),
            Some(cert),
        )
    }

    /// `F(x) = A x + b`; the root solves `A x* = -b`.
    pub fn linear(a: Matrix, b: Vector) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::InvalidArgument("A/b dimension mismatch".into()));
        }
        if !linalg::all_finite(&a) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("A and b must be finite".into()));
        }
        let root = a
            .clone()
            .lu()
            .solve(&(-&b))
            .ok_or(Error::Singular("A x = -b"))?;
        let m = a.clone();
        Self::build(DriftKind::Linear { a, b }, root, Some(m), None)
    }

    /// `T(x)_i = tanh(gain · x_i)` in dimension `dim`, fixed point 0, `J = gain · I`.
    pub fn contractive_tanh(gain: f64, dim: usize) -> Result<Self> {
        if !gain.is_finite() {
            return Err(Error::InvalidArgument("gain must be finite".into()));
        }
        let m = Matrix::identity(dim, dim) * (gain - 1.0);
        let weights = Vector::from_element(dim, 1.0);
        Self::build(
            DriftKind::Contractive {
                map: ContractiveMap::Tanh { gain },
                weights,
            },
            Vector::zeros(dim),
            Some(m),
            None,
        )
    }

    /// `T(x) = B x + c`; fixed point solves `(I - B) x* = c`.
    pub fn contractive_affine(matrix: Matrix, offset: Vector, weights: Vector) -> Result<Self> {
        let d = offset.len();
        if !matrix.is_square() || matrix.nrows() != d || weights.len() != d {
            return Err(Error::InvalidArgument(
                "affine map dimension mismatch".into(),
            ));
        }
        check_weights(&weights)?;
        let eye = Matrix::identity(d, d);
        let root = (&eye - &matrix)
            .lu()
            .solve(&offset)
            .ok_or(Error::Singular("(I - B) x = c"))?;
        let m = &matrix - eye;
        Self::build(
            DriftKind::Contractive {
                map: ContractiveMap::Affine { matrix, offset },
                weights,
            },
            root,
            Some(m),
            None,
        )
    }

    pub fn contractive_custom(
        map: VectorField,
        fixed_point: Vector,
        jacobian: Option<Matrix>,
        weights: Vector,
    ) -> Result<Self> {
        check_weights(&weights)?;
        if weights.len() != fixed_point.len() {
            return Err(Error::InvalidArgument("weights dimension mismatch".into()));
        }
        let d = fixed_point.len();
        let m = jacobian.as_ref().map(|j| j - Matrix::identity(d, d));
        Self::build(
            DriftKind::Contractive {
                map: ContractiveMap::Custom {
                    map,
                    jacobian_at_fixed_point: jacobian,
                },
                weights,
            },
            fixed_point,
            m,
            None,
        )
    }

    pub fn quartic(dim: usize) -> Result<Self> {
        Self::build(
            DriftKind::Quartic,
            Vector::zeros(dim),
            Some(Matrix::zeros(dim, dim)),
            None,
        )
    }

    pub fn exp_square(dim: usize) -> Result<Self> {
        Self::build(
            DriftKind::ExpSquare,
            Vector::zeros(dim),
            Some(Matrix::identity(dim, dim) * -2.0),
            None,
        )
    }

    pub fn quartic_sine(dim: usize) -> Result<Self> {
        Self::build(
            DriftKind::QuarticSine,
            Vector::zeros(dim),
            Some(-Matrix::identity(dim, dim)),
            None,
        )
    }

    /// `F = -∇f` with user gradient; `hessian_at_root` is `H_f` if known.
    pub fn grad_generic(
        gradient: VectorField,
        minimizer: Vector,
        hessian_at_root: Option<Matrix>,
        certificate: Option<SmoothConvexCertificate>,
    ) -> Result<Self> {
        if let Some(h) = &hessian_at_root {
            if !linalg::is_symmetric(h, 1e-12) {
                return Err(Error::InvalidArgument("hessian must be symmetric".into()));
            }
        }
        let m = hessian_at_root.map(|h| -h);
        Self::build(
            DriftKind::GradGeneric { gradient },
            minimizer,
            m,
            certificate,
        )
    }

    /// Arbitrary drift with known root; `jacobian_at_root` is `∂F(x*)` if known.
    pub fn custom(
        field: VectorField,
        root: Vector,
        jacobian_at_root: Option<Matrix>,
    ) -> Result<Self> {
        Self::build(DriftKind::Custom { field }, root, jacobian_at_root, None)
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.root.len()
    }

    pub fn root(&self) -> &Vector {
        &self.root
    }

    pub fn certificate(&self) -> Option<SmoothConvexCertificate> {
        self.certificate
    }

    /// `out = F(x)` without allocation or finiteness checks. Hot path of every chain.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::GradQuadratic { hessian } => {
                let n = x.len();
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += hessian[(i, j)] * (x[j] - self.root[j]);
                    }
                    out[i] = -acc;
                }
            }
            DriftKind::GradGeneric { gradient } => {
                gradient(x, out);
                for o in out.iter_mut() {
                    *o = -*o;
                }
            }
            DriftKind::Linear { a, b } => {
                let n = x.len();
                for i in 0..n {
                    let mut acc = b[i];
                    for j in 0..n {
                        acc += a[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
            DriftKind::Contractive { map, .. } => {
                map.apply_into(x, out);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o -= xi;
                }
            }
            DriftKind::Quartic => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -xi * xi * xi;
                }
            }
            DriftKind::ExpSquare => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -2.0 * xi * (xi * xi).exp();
                }
            }
            DriftKind::QuarticSine => {
                for (o, xi) in out.iter_mut().zip(x) {
                    let (s, c) = xi.sin_cos();
                    *o = -(xi * xi * xi + s * c);
                }
            }
            DriftKind::Custom { field } => field(x, out),
        }
    }

    /// `F(x)`; a non-finite result is reported as [`Error::DriftOverflow`].
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "state has dimension {}, drift expects {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("state must be finite".into()));
        }
        let mut out = Vector::zeros(x.len());
        self.eval_into(x.as_slice(), out.as_mut_slice());
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::DriftOverflow);
        }
        Ok(out)
    }

    /// Lyapunov matrix `M` (`-H_f`, `A` or `J - I`).
    ///
    /// Falls back to a central finite-difference Jacobian of `F` at `x*`
    /// when no closed form is known and `allow_finite_difference` is set.
    pub fn derivative_at_root(&self, allow_finite_difference: bool) -> Result<Matrix> {
        if let Some(m) = &self.lyapunov {
            return Ok(m.clone());
        }
        if !allow_finite_difference {
            return Err(Error::NoAnalyticDerivative(self.name().into()));
        }
        let jac = checked_jacobian(self, &self.root)?;
        Ok(jac)
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.lyapunov.is_some()
    }

    /// Default stepsize threshold for this drift.
    ///
    /// `0.1 · min(1, σ/L²)` from a smooth/strongly-convex certificate; for
    /// linear drifts `0.1` times the largest `α` keeping `I + αA` stable;
    /// for fixed-point drifts the certificate `(σ, L) = (1-γ, 1+γ)` with
    /// `γ` the Jacobian's spectral radius. Catalog drifts without a global
    /// certificate default to 1.
    pub fn default_stepsize_threshold(&self) -> f64 {
        if let Some(c) = self.certificate {
            return c.default_stepsize_threshold();
        }
        match &self.kind {
            DriftKind::Linear { a, .. } => linalg::eigenvalues(a)
                .ok()
                .and_then(|eig| {
                    eig.into_iter()
                        .map(|(re, im)| -2.0 * re / (re * re + im * im))
                        .filter(|v| *v > 0.0)
                        .reduce(f64::min)
                })
                .map(|amax| 0.1 * amax.min(1.0))
                .unwrap_or(0.0),
            DriftKind::Contractive { .. } => {
                let gamma = self
                    .lyapunov
                    .as_ref()
                    .and_then(|m| {
                        let j = m + Matrix::identity(self.dim(), self.dim());
                        linalg::eigenvalues(&j).ok()
                    })
                    .map(|eig| {
                        eig.into_iter()
                            .map(|(re, im)| re.hypot(im))
                            .fold(0.0, f64::max)
                    })
                    .unwrap_or(0.0);
                if gamma < 1.0 {
                    let (sigma, l) = (1.0 - gamma, 1.0 + gamma);
                    0.1 * (sigma / (l * l)).min(1.0)
                } else {
                    0.0
                }
            }
            _ => 1.0,
        }
    }

    /// Empirical contraction check; only defined for fixed-point drifts.
    pub fn check_contraction(
        &self,
        n_probes: usize,
        radius: f64,
        rng: &mut RngState,
    ) -> Result<ContractionReport> {
        match &self.kind {
            DriftKind::Contractive { map, weights } => {
                map.probe_contraction(weights, n_probes, radius, rng)
            }
            _ => Err(Error::Unsupported("a contractive drift")),
        }
    }

    /// True when `F` vanishes at every probe point, i.e. there is no restoring force.
    pub fn vanishes_identically(&self, rng: &mut RngState) -> bool {
        let d = self.dim();
        let mut out = vec![0.0; d];
        (0..32).all(|_| {
            let x = uniform_in_ball(d, 4.0, rng) + &self.root;
            self.eval_into(x.as_slice(), &mut out);
            out.iter().all(|v| *v == 0.0)
        })
    }
}

/// Spectral test for the Hurwitz property.
pub fn check_hurwitz(m: &Matrix) -> Result<HurwitzReport> {
    let max_real_part = linalg::spectral_abscissa(m)?;
    Ok(HurwitzReport {
        hurwitz: max_real_part < -HURWITZ_TOL,
        max_real_part,
    })
}

/// Central-difference Jacobian of `F` at `point` with step `h`.
pub fn finite_difference_jacobian(op: &DriftOperator, point: &Vector, h: f64) -> Result<Matrix> {
    let d = op.dim();
    let mut jac = Matrix::zeros(d, d);
    for j in 0..d {
        let mut xp = point.clone();
        let mut xm = point.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (op.eval(&xp)? - op.eval(&xm)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

// Central Jacobian plus a one-sided consistency check that catches kinks.
fn checked_jacobian(op: &DriftOperator, point: &Vector) -> Result<Matrix> {
    let h = FD_STEP;
    let f0 = op.eval(point)?;
    let d = op.dim();
    let mut jac = Matrix::zeros(d, d);
    for j in 0..d {
        let mut xp = point.clone();
        let mut xm = point.clone();
        xp[j] += h;
        xm[j] -= h;
        let fp = op.eval(&xp)?;
        let fm = op.eval(&xm)?;
        let forward = (&fp - &f0) / h;
        let backward = (&f0 - &fm) / h;
        let central = (&fp - &fm) / (2.0 * h);
        for i in 0..d {
            if (forward[i] - backward[i]).abs() > 1e-3 * (1.0 + central[i].abs()) {
                return Err(Error::NonDifferentiable(format!(
                    "one-sided derivatives of F_{i} along e_{j} disagree ({} vs {})",
                    forward[i], backward[i]
                )));
            }
        }
        jac.set_column(j, &central);
    }
    Ok(jac)
}

pub fn weighted_norm(x: &Vector, weights: &Vector) -> f64 {
    x.iter()
        .zip(weights.iter())
        .map(|(v, w)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

fn check_weights(weights: &Vector) -> Result<()> {
    if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidArgument(
            "norm weights must be positive".into(),
        ));
    }
    Ok(())
}

pub(crate) fn uniform_in_ball(d: usize, radius: f64, rng: &mut RngState) -> Vector {
    let dir = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 {
        return Vector::zeros(d);
    }
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    dir * (r / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        let n = rows.len();
        Matrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn catalog() -> Vec<DriftOperator> {
        vec![
            DriftOperator::grad_quadratic(m(&[&[2.0, 0.5], &[0.5, 1.0]]), v(&[1.0, -1.0])).unwrap(),
            DriftOperator::linear(m(&[&[-1.0, 2.0], &[0.0, -3.0]]), v(&[1.0, 2.0])).unwrap(),
            DriftOperator::contractive_tanh(0.9, 2).unwrap(),
            DriftOperator::contractive_affine(
                m(&[&[0.3, 0.1], &[0.0, 0.5]]),
                v(&[1.0, 1.0]),
                v(&[1.0, 2.0]),
            )
            .unwrap(),
            DriftOperator::quartic(1).unwrap(),
            DriftOperator::exp_square(1).unwrap(),
            DriftOperator::quartic_sine(1).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let lin = DriftOperator::linear(m(&[&[-1.0]]), v(&[0.0])).unwrap();
        assert_eq!(lin.eval(&v(&[2.0])).unwrap()[0], -2.0);
        let q = DriftOperator::quartic(1).unwrap();
        assert_eq!(q.eval(&v(&[2.0])).unwrap()[0], -8.0);
        let zero_map =
            DriftOperator::contractive_affine(m(&[&[0.0]]), v(&[0.0]), v(&[1.0])).unwrap();
        assert_eq!(zero_map.eval(&v(&[3.0])).unwrap()[0], -3.0);
    }

    #[test]
    fn eval_reports_overflow() {
        let op = DriftOperator::exp_square(1).unwrap();
        assert!(matches!(op.eval(&v(&[40.0])), Err(Error::DriftOverflow)));
    }

    #[test]
    fn root_check_rejects_wrong_root() {
        let field: VectorField = Arc::new(|x, out| out[0] = 1.0 - x[0]);
        assert!(DriftOperator::custom(field.clone(), v(&[0.0]), None).is_err());
        assert!(DriftOperator::custom(field, v(&[1.0]), None).is_ok());
    }

    #[test]
    fn catalog_roots_are_zeros_of_f() {
        for op in catalog() {
            let r = op.eval(op.root()).unwrap().norm();
            assert!(r <= 1e-12, "{}: {r}", op.name());
        }
    }

    #[test]
    fn derivative_examples() {
        let quad = DriftOperator::grad_quadratic(m(&[&[1.0]]), v(&[0.0])).unwrap();
        assert_eq!(quad.derivative_at_root(false).unwrap()[(0, 0)], -1.0);
        let a = m(&[&[-1.0, 2.0], &[0.0, -3.0]]);
        let lin = DriftOperator::linear(a.clone(), v(&[0.0, 0.0])).unwrap();
        assert_eq!(lin.derivative_at_root(false).unwrap(), a);
        let qs = DriftOperator::quartic_sine(1).unwrap();
        assert_eq!(qs.derivative_at_root(false).unwrap()[(0, 0)], -1.0);
        let fd = finite_difference_jacobian(&qs, qs.root(), FD_STEP).unwrap();
        assert!(close(fd[(0, 0)], -1.0, 1e-6));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for op in catalog() {
            let analytic = op.derivative_at_root(false).unwrap();
            let fd = finite_difference_jacobian(&op, op.root(), FD_STEP).unwrap();
            let err = (&analytic - &fd).amax();
            assert!(err <= 1e-6, "{}: {err}", op.name());
        }
    }

    #[test]
    fn finite_difference_fallback_and_kink_detection() {
        let smooth: VectorField = Arc::new(|x, out| out[0] = -(2.0 * x[0]).sin());
        let op = DriftOperator::custom(smooth, v(&[0.0]), None).unwrap();
        assert!(op.derivative_at_root(false).is_err());
        let jac = op.derivative_at_root(true).unwrap();
        assert!(close(jac[(0, 0)], -2.0, 1e-6));

        let kink: VectorField = Arc::new(|x, out| out[0] = -x[0] - x[0].abs());
        let op = DriftOperator::custom(kink, v(&[0.0]), None).unwrap();
        assert!(matches!(
            op.derivative_at_root(true),
            Err(Error::NonDifferentiable(_))
        ));
    }

    #[test]
    fn hurwitz_examples() {
        let r = check_hurwitz(&m(&[&[-1.0]])).unwrap();
        assert!(r.hurwitz && r.max_real_part == -1.0);
        let r = check_hurwitz(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        assert!(!r.hurwitz && r.max_real_part.abs() < 1e-14);
        let r = check_hurwitz(&m(&[&[-1.0, 2.0], &[0.0, -3.0]])).unwrap();
        assert!(r.hurwitz && close(r.max_real_part, -1.0, 1e-12));
        assert!(check_hurwitz(&m(&[&[f64::NAN]])).is_err());
    }

    #[test]
    fn contraction_examples() {
        let mut rng = seed_rng(3, 0);
        let half = DriftOperator::contractive_affine(m(&[&[0.5]]), v(&[0.0]), v(&[1.0])).unwrap();
        let r = half.check_contraction(200, 2.0, &mut rng).unwrap();
        assert!(close(r.gamma_hat, 0.5, 1e-12) && r.contractive);

        let shift = ContractiveMap::Affine {
            matrix: m(&[&[1.0]]),
            offset: v(&[1.0]),
        };
        let r = shift
            .probe_contraction(&v(&[1.0]), 200, 2.0, &mut rng)
            .unwrap();
        assert!(close(r.gamma_hat, 1.0, 1e-12) && !r.contractive);

        let tanh = DriftOperator::contractive_tanh(0.9, 1).unwrap();
        let r = tanh.check_contraction(2000, 2.0, &mut rng).unwrap();
        assert!(r.gamma_hat <= 0.9 && r.contractive);

        assert!(DriftOperator::quartic(1)
            .unwrap()
            .check_contraction(10, 1.0, &mut rng)
            .is_err());
    }

    #[test]
    fn sandwich_bound_for_strongly_convex_quadratic() {
        let op =
            DriftOperator::grad_quadratic(m(&[&[3.0, 1.0], &[1.0, 2.0]]), v(&[0.5, 0.0])).unwrap();
        let cert = op.certificate().unwrap();
        let mut rng = seed_rng(11, 0);
        for _ in 0..1000 {
            let x = uniform_in_ball(2, 5.0, &mut rng) + op.root();
            let dist = (&x - op.root()).norm();
            let f = op.eval(&x).unwrap().norm();
            assert!(cert.sigma * dist <= f * (1.0 + 1e-12));
            assert!(f <= cert.l * dist * (1.0 + 1e-12));
        }
    }

    #[test]
    fn default_thresholds() {
        let quad = DriftOperator::grad_quadratic(m(&[&[1.0]]), v(&[0.0])).unwrap();
        assert!(close(quad.default_stepsize_threshold(), 0.1, 1e-15));
        let tanh = DriftOperator::contractive_tanh(0.9, 1).unwrap();
        assert!(close(
            tanh.default_stepsize_threshold(),
            0.1 * 0.1 / 3.61,
            1e-12
        ));
        let lin = DriftOperator::linear(m(&[&[-1.0]]), v(&[0.0])).unwrap();
        assert!(close(lin.default_stepsize_threshold(), 0.1, 1e-15));
    }
}
