//! Built-in experiments behind the density figures.
//!
//! Every figure draws raw `X - x*` ensembles (gaussian noise, `Σ = 1`) at
//! `α ∈ {1e-1, 1e-2, 1e-3, 1e-4}` and rescales them by the figure's
//! scaling function. A [`FigureSession`] caches the raw ensembles so that
//! figures sharing a drift share the simulation work.

use std::collections::HashMap;

use salab_core::drift::DriftOperator;
use salab_core::noise::{NoiseModel, NoiseShape};
use salab_core::simulate::{auto_thin, ChainEnsemble, EnsembleSpec};
use salab_core::stats::{
    batch_means, estimate_density_with_bandwidth, ks_two_sample, log_density_fit,
    silverman_bandwidth_effective, DensityEstimate, FitReport, DEFAULT_BATCHES, DEFAULT_TAIL_TRIM,
    KS_CRITICAL,
};
use salab_core::{Matrix, ScalingFn, StepSize};

use crate::commands::{density_grid, write_density};
use crate::error::{CliError, Result};
use crate::output::{header, num, Output};

pub const FIGURE_NAMES: [&str; 8] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig10", "fig11", "fig12",
];
pub const FIGURE_ALPHAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Stepsize of the ensemble used for log-density fits.
pub const FIT_ALPHA: f64 = 1e-3;
/// The trend check allows the small-α curves to differ by at most this
/// multiple of the large-α difference.
pub const TREND_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Quartic,
    ExpSquare,
    QuarticSine,
}

impl Family {
    pub fn drift(self) -> salab_core::Result<DriftOperator> {
        match self {
            Family::Quartic => DriftOperator::quartic(1),
            Family::ExpSquare => DriftOperator::exp_square(1),
            Family::QuarticSine => DriftOperator::quartic_sine(1),
        }
    }

    /// Exponent of the true scaling; sets the relaxation time of the chain.
    pub fn mixing_exponent(self) -> f64 {
        match self {
            Family::Quartic => 0.25,
            Family::ExpSquare | Family::QuarticSine => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Panel {
    /// Density curves across α plus the convergence-trend check.
    Densities,
    /// `log p(y)` regressed on `|y|^q`, with a rival exponent for contrast.
    LogFit { q: f64, rival: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureSpec {
    pub name: &'static str,
    pub family: Family,
    pub scaling_exponent: f64,
    pub panel: Panel,
}

pub fn figure_spec(name: &str) -> Option<FigureSpec> {
    let (family, p, panel) = match name {
        "fig1" => (Family::Quartic, 0.5, Panel::Densities),
        "fig2" => (Family::Quartic, 0.25, Panel::Densities),
        "fig3" => (Family::Quartic, 0.25, Panel::LogFit { q: 4.0, rival: 2.0 }),
        "fig4" => (Family::ExpSquare, 0.5, Panel::Densities),
        "fig5" => (Family::ExpSquare, 0.5, Panel::LogFit { q: 2.0, rival: 4.0 }),
        "fig10" => (Family::QuarticSine, 0.5, Panel::Densities),
        "fig11" => (Family::QuarticSine, 0.25, Panel::Densities),
        "fig12" => (
            Family::QuarticSine,
            0.5,
            Panel::LogFit { q: 2.0, rival: 4.0 },
        ),
        _ => return None,
    };
    let name = FIGURE_NAMES.iter().find(|n| **n == name)?;
    Some(FigureSpec {
        name,
        family,
        scaling_exponent: p,
        panel,
    })
}

/// Per-chain work limits, in relaxation times of the scaled chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub n_chains: usize,
    pub burn_in_relaxations: u64,
    pub sample_relaxations: u64,
    pub samples_per_relaxation: u64,
    /// Hard cap on steps per chain; sampling shrinks to fit.
    pub max_steps_per_chain: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            n_chains: 64,
            burn_in_relaxations: 6,
            sample_relaxations: 400,
            samples_per_relaxation: 8,
            max_steps_per_chain: 70_000_000,
        }
    }
}

/// Cache of raw ensembles keyed by drift family and stepsize.
#[derive(Debug)]
pub struct FigureSession {
    pub seed: u64,
    pub budget: Budget,
    cache: HashMap<(Family, u64), ChainEnsemble>,
}

impl FigureSession {
    pub fn new(seed: u64) -> Self {
        Self::with_budget(seed, Budget::default())
    }

    pub fn with_budget(seed: u64, budget: Budget) -> Self {
        Self {
            seed,
            budget,
            cache: HashMap::new(),
        }
    }

    /// Unscaled `X - x*` ensemble for `family` at `FIGURE_ALPHAS[index]`.
    pub fn raw(&mut self, family: Family, index: usize) -> Result<&ChainEnsemble> {
        let alpha = FIGURE_ALPHAS[index];
        let key = (family, alpha.to_bits());
        if !self.cache.contains_key(&key) {
            let ens = self.simulate(family, index)?;
            self.cache.insert(key, ens);
        }
        Ok(&self.cache[&key])
    }

    fn simulate(&self, family: Family, index: usize) -> Result<ChainEnsemble> {
        let alpha = FIGURE_ALPHAS[index];
        let b = self.budget;
        let relax = auto_thin(alpha, family.mixing_exponent());
        let burn_in = b.burn_in_relaxations * relax;
        let room = b.max_steps_per_chain.saturating_sub(burn_in) / relax;
        let sample_relax = b.sample_relaxations.min(room).max(1);
        let thin = (relax / b.samples_per_relaxation).max(1);
        let samples_per_chain = (sample_relax * relax / thin) as usize;
        let op = family.drift()?;
        let noise = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(1, 1))?;
        let spec = EnsembleSpec {
            n_chains: b.n_chains,
            burn_in,
            thin,
            samples_per_chain,
            seed: self.seed,
            stream_offset: (index as u64 + 1) << 32,
            ..EnsembleSpec::new(&op, &noise)
        };
        Ok(spec.run(StepSize::new(alpha)?, ScalingFn::unit())?)
    }

    pub fn scaled(&mut self, family: Family, index: usize, p: f64) -> Result<ChainEnsemble> {
        let g = ScalingFn::power(p)?;
        Ok(self.raw(family, index)?.rescaled(g))
    }
}

/// Convergence of density curves as α decreases.
///
/// Two complementary readings. The curve distance `D_small` between the two
/// smallest-α densities must not exceed `TREND_FACTOR · D_large` (the two
/// largest α) plus the sampling noise of `D_small` itself, measured by
/// splitting each small-α ensemble into even and odd chains. A two-sample KS
/// test between the two smallest-α ensembles, with threshold
/// `KS_CRITICAL · √(1/n₁ + 1/n₂)` on batch-means effective sizes, must also
/// pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub d_small: f64,
    pub d_large: f64,
    pub noise_allowance: f64,
    pub curve_pass: bool,
    pub ks_small: f64,
    pub ks_threshold: f64,
    pub ks_pass: bool,
    pub n_eff: Vec<f64>,
    pub pass: bool,
}

/// One ensemble's scaled samples with their chain labels.
#[derive(Debug, Clone)]
pub struct TrendInput<'a> {
    pub values: &'a [f64],
    pub chain_ids: &'a [usize],
    pub density: &'a DensityEstimate,
}

/// Kernel estimate with Silverman's rule evaluated at the batch-means
/// effective sample size: chain samples are autocorrelated, and the raw count
/// would undersmooth.
pub fn figure_density(samples: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    let n_eff = batch_means(samples, DEFAULT_BATCHES).ess;
    let h = silverman_bandwidth_effective(samples, n_eff);
    Ok(estimate_density_with_bandwidth(samples, grid, Some(h))?)
}

fn max_abs_diff(a: &DensityEstimate, b: &DensityEstimate) -> f64 {
    a.density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sup distance between the densities of even and odd chains, both at the
/// bandwidth of the full estimate. Its pointwise spread is twice that of the
/// full estimate's noise.
pub fn split_half_distance(input: &TrendInput<'_>) -> Result<f64> {
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for (v, c) in input.values.iter().zip(input.chain_ids) {
        if c % 2 == 0 {
            even.push(*v)
        } else {
            odd.push(*v)
        }
    }
    let h = Some(input.density.bandwidth);
    let grid = &input.density.grid;
    let a = estimate_density_with_bandwidth(&even, grid, h)?;
    let b = estimate_density_with_bandwidth(&odd, grid, h)?;
    Ok(max_abs_diff(&a, &b))
}

/// Trend check over ensembles ordered by decreasing α.
pub fn trend_check(inputs: &[TrendInput<'_>]) -> Result<TrendReport> {
    let k = inputs.len();
    if k < 3 {
        return Err(CliError::Config(
            "trend check needs at least three curves".into(),
        ));
    }
    let d_small = max_abs_diff(inputs[k - 2].density, inputs[k - 1].density);
    let d_large = max_abs_diff(inputs[0].density, inputs[1].density);
    let split_a = split_half_distance(&inputs[k - 2])?;
    let split_b = split_half_distance(&inputs[k - 1])?;
    let noise_allowance = 0.5 * split_a.hypot(split_b);
    let curve_pass = d_small <= TREND_FACTOR * d_large + noise_allowance;
    let n_eff: Vec<f64> = inputs
        .iter()
        .map(|t| batch_means(t.values, DEFAULT_BATCHES).ess)
        .collect();
    let ks_small = ks_two_sample(inputs[k - 2].values, inputs[k - 1].values);
    let ks_threshold = KS_CRITICAL * (1.0 / n_eff[k - 2] + 1.0 / n_eff[k - 1]).sqrt();
    let ks_pass = ks_small <= ks_threshold;
    Ok(TrendReport {
        d_small,
        d_large,
        noise_allowance,
        curve_pass,
        ks_small,
        ks_threshold,
        ks_pass,
        n_eff,
        pass: curve_pass && ks_pass,
    })
}

#[derive(Debug, Clone)]
pub struct FigureOutcome {
    pub spec: FigureSpec,
    pub densities: Vec<(f64, DensityEstimate)>,
    pub trend: Option<TrendReport>,
    /// Primary fit first, then the rival exponent.
    pub fits: Vec<FitReport>,
}

pub fn run_figure(
    name: &str,
    session: &mut FigureSession,
    out: &mut Output,
) -> Result<FigureOutcome> {
    let spec = figure_spec(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown figure `{name}`; expected one of {}",
            FIGURE_NAMES.join(", ")
        ))
    })?;
    if out.dry_run() {
        out.note(format!(
            "would simulate `{}` at alpha {:?} and plot under g = alpha^{}",
            spec.family.drift()?.name(),
            FIGURE_ALPHAS,
            num(spec.scaling_exponent)
        ));
        return Ok(FigureOutcome {
            spec,
            densities: Vec::new(),
            trend: None,
            fits: Vec::new(),
        });
    }
    match spec.panel {
        Panel::Densities => densities_panel(spec, session, out),
        Panel::LogFit { q, rival } => fit_panel(spec, q, rival, session, out),
    }
}

fn densities_panel(
    spec: FigureSpec,
    session: &mut FigureSession,
    out: &mut Output,
) -> Result<FigureOutcome> {
    let mut ensembles = Vec::new();
    let mut columns = Vec::new();
    for i in 0..FIGURE_ALPHAS.len() {
        let ens = out.timed("simulate", |_| {
            session.scaled(spec.family, i, spec.scaling_exponent)
        })?;
        columns.push(ens.samples.column(0));
        ensembles.push(ens);
    }
    let grid = density_grid(columns.iter().map(|c| c.as_slice()));
    let mut densities = Vec::new();
    for (alpha, col) in FIGURE_ALPHAS.iter().zip(&columns) {
        let est = out.timed("density", |_| figure_density(col, &grid))?;
        write_density(out, &format!("density_{}.csv", num(*alpha)), &est)?;
        densities.push((*alpha, est));
    }
    let inputs: Vec<TrendInput<'_>> = columns
        .iter()
        .zip(&ensembles)
        .zip(&densities)
        .map(|((values, ens), (_, density))| TrendInput {
            values,
            chain_ids: &ens.chain_ids,
            density,
        })
        .collect();
    let t = out.timed("trend", |_| trend_check(&inputs))?;
    let n_eff: Vec<String> = t.n_eff.iter().map(|v| num(*v)).collect();
    out.csv(
        "trend.csv",
        &header(&[
            "figure",
            "scaling_exponent",
            "d_small",
            "d_large",
            "noise_allowance",
            "curve_pass",
            "ks_small",
            "ks_threshold",
            "ks_pass",
            "n_eff",
            "pass",
        ]),
        [vec![
            spec.name.to_string(),
            num(spec.scaling_exponent),
            num(t.d_small),
            num(t.d_large),
            num(t.noise_allowance),
            t.curve_pass.to_string(),
            num(t.ks_small),
            num(t.ks_threshold),
            t.ks_pass.to_string(),
            n_eff.join(";"),
            t.pass.to_string(),
        ]],
    )?;
    out.note(format!(
        "{}: convergence trend {}",
        spec.name,
        if t.pass { "holds" } else { "fails" }
    ));
    Ok(FigureOutcome {
        spec,
        densities,
        trend: Some(t),
        fits: Vec::new(),
    })
}

fn fit_panel(
    spec: FigureSpec,
    q: f64,
    rival: f64,
    session: &mut FigureSession,
    out: &mut Output,
) -> Result<FigureOutcome> {
    let index = FIGURE_ALPHAS
        .iter()
        .position(|a| *a == FIT_ALPHA)
        .expect("fit alpha is on the figure grid");
    let ens = out.timed("simulate", |_| {
        session.scaled(spec.family, index, spec.scaling_exponent)
    })?;
    let col = ens.samples.column(0);
    let grid = density_grid([col.as_slice()]);
    let est = out.timed("density", |_| figure_density(&col, &grid))?;
    let a = num(FIT_ALPHA);
    write_density(out, &format!("density_{a}.csv"), &est)?;
    let rows = est
        .grid
        .iter()
        .zip(&est.density)
        .filter(|(_, p)| **p > 0.0)
        .map(|(y, p)| vec![num(*y), num(y.abs().powf(q)), num(p.ln())]);
    out.csv(
        &format!("logdensity_{a}.csv"),
        &header(&["y", "abs_y_pow_q", "log_p_hat"]),
        rows,
    )?;
    let fits = vec![
        log_density_fit(&est, q, DEFAULT_TAIL_TRIM)?,
        log_density_fit(&est, rival, DEFAULT_TAIL_TRIM)?,
    ];
    let rows = fits.iter().map(|f| {
        vec![
            a.clone(),
            num(f.q),
            num(f.slope),
            num(f.intercept),
            num(f.r_squared),
            f.n_points.to_string(),
        ]
    });
    out.csv(
        "logfit.csv",
        &header(&["alpha", "q", "slope", "intercept", "r_squared", "n_points"]),
        rows,
    )?;
    Ok(FigureOutcome {
        spec,
        densities: vec![(FIT_ALPHA, est)],
        trend: None,
        fits,
    })
}
