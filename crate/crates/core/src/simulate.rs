//! Ensembles of independent constant-stepsize SA chains.

use rayon::prelude::*;

use crate::config::{Steps, ValidatedConfig};
use crate::drift::{DriftKind, DriftOperator};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseShape};
use crate::rng::{seed_rng, RngState};
use crate::types::{Matrix, Samples, ScalingFn, StepSize, Vector};

/// Fraction of chains allowed to diverge before a run is rejected.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

/// One SA step `x + α (F(x) + w)` with `w` drawn from `nm`.
pub fn step_chain(
    op: &DriftOperator,
    nm: &NoiseModel,
    alpha: StepSize,
    x: &Vector,
    rng: &mut RngState,
) -> Result<Vector> {
    let w = nm.sample(rng);
    step_with_noise(op, alpha, x, &w)
}

/// One SA step with an explicit noise draw.
pub fn step_with_noise(
    op: &DriftOperator,
    alpha: StepSize,
    x: &Vector,
    w: &Vector,
) -> Result<Vector> {
    if x.len() != op.dim() || w.len() != op.dim() {
        return Err(Error::InvalidArgument(
            "state or noise has the wrong dimension".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("state must be finite".into()));
    }
    let mut f = Vector::zeros(x.len());
    op.eval_into(x.as_slice(), f.as_mut_slice());
    let next = x + (f + w) * alpha.get();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Diverged)
    }
}

/// Steps between retained samples: `⌈g(α)² / α²⌉` for `g = α^p`.
///
/// The scaled recursion moves on the time scale `α² / g(α)²` per step, so
/// this is one relaxation time; it equals `⌈1/α⌉` for `p = 1/2`.
pub fn auto_thin(alpha: f64, mixing_exponent: f64) -> u64 {
    alpha.powf(2.0 * mixing_exponent - 2.0).ceil().max(1.0) as u64
}

/// Ten relaxation times, `⌈10/α⌉` for `p = 1/2`.
pub fn auto_burn_in(alpha: f64, mixing_exponent: f64) -> u64 {
    (10.0 * alpha.powf(2.0 * mixing_exponent - 2.0)).ceil() as u64
}

/// Parameters of a parallel run of independent chains.
#[derive(Debug, Clone)]
pub struct EnsembleSpec<'a> {
    pub drift: &'a DriftOperator,
    pub noise: &'a NoiseModel,
    pub n_chains: usize,
    pub burn_in: u64,
    pub thin: u64,
    pub samples_per_chain: usize,
    pub seed: u64,
    /// Chain `c` draws from stream `stream_offset + c`.
    pub stream_offset: u64,
    /// Start of every chain; the root `x*` when `None`.
    pub initial: Option<Vector>,
}

impl<'a> EnsembleSpec<'a> {
    pub fn new(drift: &'a DriftOperator, noise: &'a NoiseModel) -> Self {
        Self {
            drift,
            noise,
            n_chains: crate::config::DEFAULT_N_CHAINS,
            burn_in: 0,
            thin: 1,
            samples_per_chain: crate::config::DEFAULT_SAMPLES_PER_CHAIN,
            seed: 0,
            stream_offset: 0,
            initial: None,
        }
    }

    fn check(&self) -> Result<()> {
        let d = self.drift.dim();
        if self.noise.dim() != d {
            return Err(Error::InvalidArgument(format!(
                "noise dimension {} does not match drift dimension {d}",
                self.noise.dim()
            )));
        }
        if self.n_chains == 0 || self.samples_per_chain == 0 || self.thin == 0 {
            return Err(Error::InvalidArgument(
                "n_chains, samples_per_chain and thin must be positive".into(),
            ));
        }
        if let Some(x0) = &self.initial {
            if x0.len() != d || x0.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "initial state must be finite and of drift dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// Runs every chain and collects `Y = (X - x*) / g(α)`.
    pub fn run(&self, alpha: StepSize, g: ScalingFn) -> Result<ChainEnsemble> {
        self.check()?;
        let a = alpha.get();
        let inv_g = 1.0 / g.eval(a);
        let outputs: Vec<ChainOutput> = (0..self.n_chains)
            .into_par_iter()
            .map(|c| self.run_chain(c, a, inv_g))
            .collect();

        let d = self.drift.dim();
        let mut samples = Samples::with_capacity(d, self.n_chains * self.samples_per_chain);
        let mut chain_ids = Vec::with_capacity(samples.len());
        let mut final_states = Vec::with_capacity(self.n_chains);
        let mut diverged = 0;
        for (c, out) in outputs.into_iter().enumerate() {
            match out {
                ChainOutput::Finished { ys, final_state } => {
                    samples.extend(&Samples::from_flat(d, ys));
                    chain_ids.extend(std::iter::repeat_n(c, self.samples_per_chain));
                    final_states.push(Some(final_state));
                }
                ChainOutput::Diverged => {
                    diverged += 1;
                    final_states.push(None);
                }
            }
        }
        if diverged as f64 > MAX_DIVERGED_FRACTION * self.n_chains as f64 {
            return Err(Error::Unstable {
                diverged,
                chains: self.n_chains,
            });
        }
        Ok(ChainEnsemble {
            alpha,
            scaling: g,
            n_chains: self.n_chains,
            burn_in: self.burn_in,
            thin: self.thin,
            samples_per_chain: self.samples_per_chain,
            samples,
            chain_ids,
            final_states,
            divergences: diverged,
        })
    }

    fn run_chain(&self, chain: usize, alpha: f64, inv_g: f64) -> ChainOutput {
        let d = self.drift.dim();
        let root = self.drift.root().as_slice();
        let mut rng = seed_rng(self.seed, self.stream_offset + chain as u64);
        let mut x: Vec<f64> = match &self.initial {
            Some(x0) => x0.as_slice().to_vec(),
            None => root.to_vec(),
        };
        if d == 1 {
            return self.run_scalar_chain(rng, x[0], root[0], alpha, inv_g);
        }
        let mut f = vec![0.0; d];
        let mut w = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        let mut advance = |x: &mut [f64], steps: u64| {
            for _ in 0..steps {
                self.drift.eval_into(x, &mut f);
                self.noise.sample_into(&mut rng, &mut scratch, &mut w);
                for i in 0..d {
                    x[i] += alpha * (f[i] + w[i]);
                }
            }
            x.iter().all(|v| v.is_finite())
        };
        if !advance(&mut x, self.burn_in) {
            return ChainOutput::Diverged;
        }
        let mut ys = Vec::with_capacity(self.samples_per_chain * d);
        for _ in 0..self.samples_per_chain {
            if !advance(&mut x, self.thin) {
                return ChainOutput::Diverged;
            }
            ys.extend(x.iter().zip(root).map(|(xi, ri)| (xi - ri) * inv_g));
        }
        ChainOutput::Finished {
            ys,
            final_state: Vector::from_vec(x),
        }
    }
}

impl EnsembleSpec<'_> {
    fn run_scalar_chain(
        &self,
        mut rng: RngState,
        x0: f64,
        root: f64,
        alpha: f64,
        inv_g: f64,
    ) -> ChainOutput {
        let mut x = x0;
        let mut ys = Vec::with_capacity(self.samples_per_chain);
        let mut advance = |x: &mut f64, steps: u64| {
            *x = advance_scalar(self.drift, self.noise, &mut rng, *x, steps, alpha);
            x.is_finite()
        };
        if !advance(&mut x, self.burn_in) {
            return ChainOutput::Diverged;
        }
        for _ in 0..self.samples_per_chain {
            if !advance(&mut x, self.thin) {
                return ChainOutput::Diverged;
            }
            ys.push((x - root) * inv_g);
        }
        ChainOutput::Finished {
            ys,
            final_state: Vector::from_element(1, x),
        }
    }
}

/// Scalar chains dominate the workload; resolving the drift and noise kinds
/// once per call lets the step loop inline both.
fn advance_scalar(
    op: &DriftOperator,
    nm: &NoiseModel,
    rng: &mut RngState,
    x: f64,
    steps: u64,
    alpha: f64,
) -> f64 {
    if nm.is_noiseless() {
        return with_drift(op, rng, x, steps, alpha, |_| 0.0);
    }
    let l = nm.cholesky_factor()[(0, 0)];
    match nm.shape() {
        NoiseShape::Gaussian => with_drift(op, rng, x, steps, alpha, |r| {
            l * NoiseShape::Gaussian.draw(r)
        }),
        NoiseShape::Uniform => with_drift(op, rng, x, steps, alpha, |r| {
            l * NoiseShape::Uniform.draw(r)
        }),
        NoiseShape::Rademacher => with_drift(op, rng, x, steps, alpha, |r| {
            l * NoiseShape::Rademacher.draw(r)
        }),
    }
}

#[inline(always)]
fn with_drift<W: Fn(&mut RngState) -> f64>(
    op: &DriftOperator,
    rng: &mut RngState,
    x: f64,
    steps: u64,
    alpha: f64,
    w: W,
) -> f64 {
    let root = op.root()[0];
    match op.kind() {
        DriftKind::Quartic => iterate(rng, x, steps, alpha, |x| -x * x * x, w),
        DriftKind::ExpSquare => iterate(rng, x, steps, alpha, |x| -2.0 * x * (x * x).exp(), w),
        DriftKind::QuarticSine => iterate(
            rng,
            x,
            steps,
            alpha,
            |x| {
                let (s, c) = x.sin_cos();
                -(x * x * x + s * c)
            },
            w,
        ),
        DriftKind::GradQuadratic { hessian } => {
            let h = hessian[(0, 0)];
            iterate(rng, x, steps, alpha, |x| -(h * (x - root)), w)
        }
        DriftKind::Linear { a, b } => {
            let (a, b) = (a[(0, 0)], b[0]);
            iterate(rng, x, steps, alpha, |x| b + a * x, w)
        }
        _ => iterate(
            rng,
            x,
            steps,
            alpha,
            |x| {
                let mut out = [0.0];
                op.eval_into(&[x], &mut out);
                out[0]
            },
            w,
        ),
    }
}

#[inline(always)]
fn iterate<F: Fn(f64) -> f64, W: Fn(&mut RngState) -> f64>(
    rng: &mut RngState,
    mut x: f64,
    steps: u64,
    alpha: f64,
    f: F,
    w: W,
) -> f64 {
    for _ in 0..steps {
        let fx = f(x);
        x += alpha * (fx + w(rng));
    }
    x
}

enum ChainOutput {
    Finished { ys: Vec<f64>, final_state: Vector },
    Diverged,
}

/// Post-burn-in samples of the centered scaled iterate from many chains.
///
/// Samples are ordered by chain id, then by step. Diverged chains are
/// dropped whole, so `samples.len() = (n_chains - divergences) · samples_per_chain`.
#[derive(Debug, Clone)]
pub struct ChainEnsemble {
    pub alpha: StepSize,
    pub scaling: ScalingFn,
    pub n_chains: usize,
    pub burn_in: u64,
    pub thin: u64,
    pub samples_per_chain: usize,
    pub samples: Samples,
    /// Chain id of each sample row.
    pub chain_ids: Vec<usize>,
    /// Final `X` per chain; `None` for diverged chains.
    pub final_states: Vec<Option<Vector>>,
    pub divergences: usize,
}

impl ChainEnsemble {
    /// Step index (counted from the start of the chain) of sample `i`.
    pub fn step_of(&self, i: usize) -> u64 {
        let k = (i % self.samples_per_chain) as u64;
        self.burn_in + (k + 1) * self.thin
    }

    /// The same chains under a different scaling function.
    pub fn rescaled(&self, g: ScalingFn) -> ChainEnsemble {
        let a = self.alpha.get();
        let factor = self.scaling.eval(a) / g.eval(a);
        let data = self.samples.as_flat().iter().map(|v| v * factor).collect();
        ChainEnsemble {
            scaling: g,
            samples: Samples::from_flat(self.samples.dim(), data),
            ..self.clone()
        }
    }
}

/// Runs the ensemble described by a validated configuration.
///
/// `Steps::Auto` burn-in and thinning follow [`auto_burn_in`] and
/// [`auto_thin`] with the exponent of `g`.
pub fn run_ensemble(cfg: &ValidatedConfig, alpha: StepSize, g: ScalingFn) -> Result<ChainEnsemble> {
    let a = alpha.get();
    if a > cfg.alpha_max {
        return Err(Error::InvalidArgument(format!(
            "alpha {a} above stability threshold {}",
            cfg.alpha_max
        )));
    }
    let p = g.exponent();
    let spec = EnsembleSpec {
        n_chains: cfg.n_chains,
        burn_in: match cfg.burn_in {
            Steps::Auto => auto_burn_in(a, p),
            Steps::Fixed(n) => n,
        },
        thin: match cfg.thin {
            Steps::Auto => auto_thin(a, p),
            Steps::Fixed(n) => n,
        },
        samples_per_chain: cfg.samples_per_chain,
        seed: cfg.seed,
        ..EnsembleSpec::new(&cfg.drift, &cfg.noise)
    };
    spec.run(alpha, g)
}

/// `Y_k` from `n` independent chains started at `x0` and run `k` steps.
#[allow(clippy::too_many_arguments)]
pub fn transient_samples(
    op: &DriftOperator,
    nm: &NoiseModel,
    alpha: StepSize,
    g: ScalingFn,
    x0: &Vector,
    k: u64,
    n: usize,
    seed: u64,
) -> Result<Samples> {
    let spec = EnsembleSpec {
        n_chains: n,
        burn_in: k.saturating_sub(1),
        thin: 1,
        samples_per_chain: 1,
        seed,
        initial: Some(x0.clone()),
        ..EnsembleSpec::new(op, nm)
    };
    if k == 0 {
        let y = (x0 - op.root()) / g.eval(alpha.get());
        let mut s = Samples::with_capacity(op.dim(), n);
        for _ in 0..n {
            s.push(y.as_slice());
        }
        return Ok(s);
    }
    Ok(spec.run(alpha, g)?.samples)
}

/// Sample mean and unbiased covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: Vector,
    pub covariance: Matrix,
    /// `(1/n) Σ ‖y‖²`.
    pub second_moment_trace: f64,
    pub count: usize,
}

pub fn moment_summary(ens: &ChainEnsemble) -> Result<MomentSummary> {
    moments_of(&ens.samples)
}

pub fn moments_of(samples: &Samples) -> Result<MomentSummary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let d = samples.dim();
    let mut mean = Vector::zeros(d);
    let mut second = 0.0;
    for y in samples.rows() {
        for (m, v) in mean.iter_mut().zip(y) {
            *m += v;
        }
        second += y.iter().map(|v| v * v).sum::<f64>();
    }
    mean /= n as f64;
    let mut cov = Matrix::zeros(d, d);
    for y in samples.rows() {
        for i in 0..d {
            let di = y[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (y[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(MomentSummary {
        mean,
        covariance: cov,
        second_moment_trace: second / n as f64,
        count: n,
    })
}
