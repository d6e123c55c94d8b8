//! Euler–Maruyama discretization of `dX = F(X) dt + dB` and its comparison
//! with the constant-stepsize SA chain.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::drift::DriftOperator;
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseShape};
use crate::rng::{seed_rng, RngState, EM_STREAM_OFFSET, PROBE_STREAM_OFFSET};
use crate::scaling::{find_scaling_exponent, scaled_sa_step, DEFAULT_EXPONENT_GRID};
use crate::simulate::{auto_burn_in, auto_thin, moments_of, EnsembleSpec};
use crate::stats::{batch_means, DEFAULT_BATCHES};
use crate::types::{Matrix, Samples, ScalingFn, StepSize, Vector};

/// `x + Δt F(x) + √Δt z` with `z` standard normal.
pub fn em_step(op: &DriftOperator, delta_t: f64, x: &Vector, rng: &mut RngState) -> Result<Vector> {
    let z = Vector::from_fn(x.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    em_step_with(op, delta_t, x, &z)
}

/// Euler–Maruyama step with an explicit normal draw `z`.
pub fn em_step_with(op: &DriftOperator, delta_t: f64, x: &Vector, z: &Vector) -> Result<Vector> {
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(Error::InvalidArgument("delta_t must be positive".into()));
    }
    if x.len() != op.dim() || z.len() != op.dim() {
        return Err(Error::InvalidArgument(
            "state or draw has the wrong dimension".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("state must be finite".into()));
    }
    let mut f = Vector::zeros(x.len());
    op.eval_into(x.as_slice(), f.as_mut_slice());
    let next = x + f * delta_t + z * delta_t.sqrt();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Diverged)
    }
}

/// Ensemble settings shared by the SA and EM sides of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub n_chains: usize,
    pub samples_per_chain: usize,
    /// Burn-in and thinning multipliers in relaxation times of each chain.
    pub burn_in_relaxations: f64,
    pub thin_relaxations: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_chains: 32,
            samples_per_chain: 512,
            burn_in_relaxations: 10.0,
            thin_relaxations: 1.0,
            seed: 0,
        }
    }
}

/// Stationary samples of the Euler–Maruyama chain at stepsize `delta_t`.
///
/// An EM step is an SA step with `α = Δt` and noise covariance `I / Δt`,
/// so the SA ensemble engine runs it on streams disjoint from SA chains.
pub fn em_ensemble(op: &DriftOperator, delta_t: f64, cfg: &EmConfig) -> Result<Samples> {
    let dt = StepSize::new(delta_t)?;
    let noise = NoiseModel::new(
        NoiseShape::Gaussian,
        Matrix::identity(op.dim(), op.dim()) / delta_t,
    )?;
    let relax = auto_thin(delta_t, 0.5) as f64;
    let spec = EnsembleSpec {
        n_chains: cfg.n_chains,
        burn_in: (cfg.burn_in_relaxations * relax).ceil() as u64,
        thin: (cfg.thin_relaxations * relax).ceil().max(1.0) as u64,
        samples_per_chain: cfg.samples_per_chain,
        seed: cfg.seed,
        stream_offset: EM_STREAM_OFFSET,
        ..EnsembleSpec::new(op, &noise)
    };
    Ok(spec.run(dt, ScalingFn::unit())?.samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmComparison {
    pub alpha: f64,
    /// Scaling exponent used for the SA side.
    pub p_star: f64,
    /// Covariance of the SA scaled iterate `Y = (X - x*) / α^{p*}`.
    pub sa_cov: Matrix,
    /// Covariance of the EM iterate `X̂ - x*` at `Δt = α`.
    pub em_cov: Matrix,
    /// `‖sa_cov - em_cov‖_F / ‖em_cov‖_F`.
    pub rel_err: f64,
    /// Batch-means standard errors of the covariance entries.
    pub sa_se: Matrix,
    pub em_se: Matrix,
}

impl EmComparison {
    /// Largest `|sa - em| / sqrt(se_sa² + se_em²)` over covariance entries.
    pub fn max_z(&self) -> f64 {
        let d = self.sa_cov.nrows();
        let mut z: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let se = self.sa_se[(i, j)].hypot(self.em_se[(i, j)]);
                z = z.max((self.sa_cov[(i, j)] - self.em_cov[(i, j)]).abs() / se);
            }
        }
        z
    }
}

fn covariance_with_se(samples: &Samples) -> Result<(Matrix, Matrix)> {
    let m = moments_of(samples)?;
    let d = samples.dim();
    let mut se = Matrix::zeros(d, d);
    let mut prod = vec![0.0; samples.len()];
    for i in 0..d {
        for j in 0..=i {
            for (p, y) in prod.iter_mut().zip(samples.rows()) {
                *p = (y[i] - m.mean[i]) * (y[j] - m.mean[j]);
            }
            let s = batch_means(&prod, DEFAULT_BATCHES).se;
            se[(i, j)] = s;
            se[(j, i)] = s;
        }
    }
    Ok((m.covariance, se))
}

/// Compares the stationary covariance of the SA chain (gaussian noise,
/// `Σ = I`) with that of Euler–Maruyama at `Δt = α`.
///
/// The SA side is reported in the scaled variable `Y` with the discovered
/// exponent `p*`; the EM side is the unscaled `X̂ - x*`. For linear drift
/// and `p* = 1/2` the two recursions coincide.
pub fn em_vs_sa_compare(op: &DriftOperator, alpha: f64, cfg: &EmConfig) -> Result<EmComparison> {
    let step = StepSize::new(alpha)?;
    let mut probe_rng = seed_rng(cfg.seed, PROBE_STREAM_OFFSET);
    if op.vanishes_identically(&mut probe_rng) {
        return Err(Error::NoStationaryLaw);
    }
    let p_star = find_scaling_exponent(op, &DEFAULT_EXPONENT_GRID)?.p_star;
    let g = ScalingFn::power(p_star)?;
    let d = op.dim();
    let noise = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(d, d))?;
    let relax = auto_thin(alpha, p_star) as f64;
    let spec = EnsembleSpec {
        n_chains: cfg.n_chains,
        burn_in: (cfg.burn_in_relaxations / 10.0 * auto_burn_in(alpha, p_star) as f64).ceil()
            as u64,
        thin: (cfg.thin_relaxations * relax).ceil().max(1.0) as u64,
        samples_per_chain: cfg.samples_per_chain,
        seed: cfg.seed,
        ..EnsembleSpec::new(op, &noise)
    };
    let sa = spec.run(step, g)?;
    let em = em_ensemble(op, alpha, cfg)?;
    let (sa_cov, sa_se) = covariance_with_se(&sa.samples)?;
    let (em_cov, em_se) = covariance_with_se(&em)?;
    let rel_err = (&sa_cov - &em_cov).norm() / em_cov.norm();
    Ok(EmComparison {
        alpha,
        p_star,
        sa_cov,
        em_cov,
        rel_err,
        sa_se,
        em_se,
    })
}

/// `u ↦ φ u + c + gain · w` read off a one-step map of a scalar linear recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Coefficients {
    pub phi: f64,
    pub intercept: f64,
    pub noise_gain: f64,
}

impl Ar1Coefficients {
    /// Stationary variance `gain² / (1 - φ²)` for unit-variance noise.
    pub fn stationary_variance(&self) -> f64 {
        self.noise_gain * self.noise_gain / (1.0 - self.phi * self.phi)
    }
}

fn ar1_from_map(map: impl Fn(f64, f64) -> Result<f64>) -> Result<Ar1Coefficients> {
    let intercept = map(0.0, 0.0)?;
    Ok(Ar1Coefficients {
        phi: map(1.0, 0.0)? - intercept,
        intercept,
        noise_gain: map(0.0, 1.0)? - intercept,
    })
}

/// AR(1) form of the scaled SA recursion in `Y`; meaningful for scalar linear drift.
pub fn sa_scaled_ar1(op: &DriftOperator, alpha: StepSize, g: ScalingFn) -> Result<Ar1Coefficients> {
    if op.dim() != 1 {
        return Err(Error::Unsupported("a scalar drift"));
    }
    ar1_from_map(|y, w| {
        Ok(scaled_sa_step(
            op,
            alpha,
            g,
            &Vector::from_element(1, y),
            &Vector::from_element(1, w),
        )?[0])
    })
}

/// AR(1) form of the EM recursion in `X̂ - x*`; meaningful for scalar linear drift.
pub fn em_ar1(op: &DriftOperator, delta_t: f64) -> Result<Ar1Coefficients> {
    if op.dim() != 1 {
        return Err(Error::Unsupported("a scalar drift"));
    }
    let root = op.root()[0];
    ar1_from_map(|u, z| {
        let x = Vector::from_element(1, u + root);
        Ok(em_step_with(op, delta_t, &x, &Vector::from_element(1, z))?[0] - root)
    })
}

/// Exact stationary variance of EM for `F(x) = -θ x`: `Δt / (1 - (1 - θΔt)²)`.
pub fn em_stationary_variance_linear(theta: f64, delta_t: f64) -> f64 {
    let phi = 1.0 - theta * delta_t;
    delta_t / (1.0 - phi * phi)
}
