use salab_core::config::ValidatedConfig;
use salab_core::lyapunov::{predict_stationary, LyapunovSolution};
use salab_core::rng::{seed_rng, PROBE_STREAM_OFFSET};
use salab_core::scaling::{find_scaling_exponent, ScalingReport, DEFAULT_EXPONENT_GRID};
use salab_core::sde::{em_vs_sa_compare, EmConfig};
use salab_core::simulate::{moment_summary, run_ensemble, ChainEnsemble};
use salab_core::stats::{
    cf_residual, default_t_grid, estimate_density, gaussian_gof, log_density_fit, DensityEstimate,
    DEFAULT_TAIL_TRIM, MIN_DENSITY_SAMPLES,
};
use salab_core::{Error, Matrix, ScalingFn};

use crate::error::{CliError, Result};
use crate::output::{header, indexed, num, Output};

/// Grid points of every density curve.
pub const DENSITY_GRID_POINTS: usize = 801;

/// Symmetric grid covering 1.5 times the largest 99.9% quantile of `|y|`.
pub fn density_grid<'a>(sets: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut half: f64 = 0.0;
    for s in sets {
        let mut abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
        if abs.is_empty() {
            continue;
        }
        abs.sort_by(f64::total_cmp);
        let k = ((abs.len() as f64 * 0.999) as usize).min(abs.len() - 1);
        half = half.max(abs[k]);
    }
    let half = if half > 0.0 { 1.5 * half } else { 1.0 };
    let n = DENSITY_GRID_POINTS - 1;
    (0..=n)
        .map(|i| -half + 2.0 * half * i as f64 / n as f64)
        .collect()
}

pub fn write_samples(out: &mut Output, ens: &ChainEnsemble) -> Result<()> {
    let d = ens.samples.dim();
    let mut cols = header(&["chain", "step"]);
    cols.extend(indexed("y", d));
    let rows = ens.samples.rows().enumerate().map(|(i, y)| {
        let mut r = vec![ens.chain_ids[i].to_string(), ens.step_of(i).to_string()];
        r.extend(y.iter().map(|v| num(*v)));
        r
    });
    let name = format!("samples_{}.csv", num(ens.alpha.get()));
    out.csv(&name, &cols, rows)
}

fn matrix_rows(label: &str, m: &Matrix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            rows.push(vec![
                label.into(),
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(m[(i, j)]),
            ]);
        }
    }
    rows
}

fn scalar_row(label: &str, v: String) -> Vec<String> {
    vec![label.into(), String::new(), String::new(), v]
}

pub fn write_moments(out: &mut Output, ens: &ChainEnsemble) -> Result<()> {
    let m = moment_summary(ens)?;
    let mut rows: Vec<Vec<String>> = m
        .mean
        .iter()
        .enumerate()
        .map(|(i, v)| vec!["mean".into(), (i + 1).to_string(), String::new(), num(*v)])
        .collect();
    rows.extend(matrix_rows("covariance", &m.covariance));
    rows.push(scalar_row(
        "second_moment_trace",
        num(m.second_moment_trace),
    ));
    rows.push(scalar_row("count", m.count.to_string()));
    rows.push(scalar_row("diverged_chains", ens.divergences.to_string()));
    let name = format!("moments_{}.csv", num(ens.alpha.get()));
    out.csv(&name, &header(&["quantity", "i", "j", "value"]), rows)
}

pub fn write_scaling_report(out: &mut Output, report: &ScalingReport) -> Result<()> {
    let mut rows = Vec::new();
    for e in &report.evidence {
        for probe in &e.probes {
            let p: Vec<String> = probe.probe.iter().map(|v| num(*v)).collect();
            for (a, m) in e.alphas.iter().zip(&probe.magnitudes) {
                rows.push(vec![
                    num(e.p),
                    p.join(";"),
                    num(*a),
                    num(*m),
                    e.class.to_string(),
                ]);
            }
        }
    }
    rows.push(vec![
        num(report.p_star),
        String::new(),
        String::new(),
        String::new(),
        "p_star".into(),
    ]);
    out.csv(
        "scaling_report.csv",
        &header(&["p", "probe", "alpha", "magnitude", "classification"]),
        rows,
    )?;
    let d = report.ftilde_samples.first().map_or(1, |(y, _)| y.len());
    let mut cols = indexed("y", d);
    cols.extend(indexed("ftilde", d));
    let rows = report.ftilde_samples.iter().map(|(y, f)| {
        y.iter()
            .chain(f.iter())
            .map(|v| num(*v))
            .collect::<Vec<_>>()
    });
    out.csv("ftilde.csv", &cols, rows)
}

/// The configured scaling, or the discovered one when set to `auto`.
pub fn resolve_scaling(
    cfg: &ValidatedConfig,
    out: &mut Output,
) -> Result<(ScalingFn, Option<ScalingReport>)> {
    if let Some(g) = cfg.fixed_scaling() {
        return Ok((g, None));
    }
    let report = out.timed("find_scaling", |_| {
        Ok(find_scaling_exponent(&cfg.drift, &DEFAULT_EXPONENT_GRID)?)
    })?;
    out.note(format!(
        "discovered scaling exponent p* = {}",
        num(report.p_star)
    ));
    Ok((report.scaling_fn(), Some(report)))
}

fn simulate_all(
    cfg: &ValidatedConfig,
    g: ScalingFn,
    out: &mut Output,
    write: bool,
) -> Result<Vec<ChainEnsemble>> {
    let mut ensembles = Vec::new();
    for alpha in &cfg.alphas {
        let ens = out.timed("simulate", |_| Ok(run_ensemble(cfg, *alpha, g)?))?;
        if ens.divergences > 0 {
            out.note(format!(
                "alpha {}: {} chains diverged and were dropped",
                num(alpha.get()),
                ens.divergences
            ));
        }
        if write {
            write_samples(out, &ens)?;
            write_moments(out, &ens)?;
        }
        ensembles.push(ens);
    }
    Ok(ensembles)
}

pub fn cmd_simulate(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    let (g, report) = resolve_scaling(cfg, out)?;
    if let Some(r) = &report {
        write_scaling_report(out, r)?;
    }
    if out.dry_run() {
        out.note(plan(cfg, g));
        return Ok(());
    }
    simulate_all(cfg, g, out, true)?;
    Ok(())
}

fn plan(cfg: &ValidatedConfig, g: ScalingFn) -> String {
    let alphas: Vec<String> = cfg.alphas.iter().map(|a| num(a.get())).collect();
    format!(
        "would run {} chains x {} samples of `{}` at alpha [{}] with g = alpha^{}",
        cfg.n_chains,
        cfg.samples_per_chain,
        cfg.drift.name(),
        alphas.join(", "),
        num(g.exponent())
    )
}

fn write_prediction(out: &mut Output, sol: &LyapunovSolution) -> Result<()> {
    let mut rows = matrix_rows("sigma_y", &sol.sigma_y);
    rows.push(scalar_row("residual_norm", num(sol.residual_norm)));
    rows.push(scalar_row("min_eigenvalue", num(sol.min_eigenvalue)));
    out.csv(
        "prediction.csv",
        &header(&["quantity", "i", "j", "value"]),
        rows,
    )
}

pub fn cmd_predict(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    let sol = out.timed("predict", |_| {
        Ok(predict_stationary(&cfg.drift, &cfg.noise)?)
    })?;
    write_prediction(out, &sol)
}

pub fn cmd_find_scaling(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    let report = out.timed("find_scaling", |_| {
        Ok(find_scaling_exponent(&cfg.drift, &DEFAULT_EXPONENT_GRID)?)
    })?;
    write_scaling_report(out, &report)
}

/// Gaussian limit for scaling `g`, when the theory provides one.
fn gaussian_prediction(
    cfg: &ValidatedConfig,
    g: ScalingFn,
    out: &mut Output,
) -> Result<Option<(Matrix, LyapunovSolution)>> {
    if (g.exponent() - 0.5).abs() > 1e-9 {
        out.note(format!(
            "no Gaussian prediction available: scaling exponent {} differs from 1/2",
            num(g.exponent())
        ));
        return Ok(None);
    }
    if cfg.noise.is_noiseless() {
        out.note("no Gaussian prediction available: noiseless run");
        return Ok(None);
    }
    let m = match cfg.drift.derivative_at_root(true) {
        Ok(m) => m,
        Err(e) => {
            out.note(format!("no Gaussian prediction available: {e}"));
            return Ok(None);
        }
    };
    match predict_stationary(&cfg.drift, &cfg.noise) {
        Ok(sol) => {
            write_prediction(out, &sol)?;
            Ok(Some((m, sol)))
        }
        Err(e @ Error::NotHurwitz { .. }) => {
            out.note(format!("no Gaussian prediction available: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn analyze(
    cfg: &ValidatedConfig,
    ensembles: &[ChainEnsemble],
    prediction: Option<&(Matrix, LyapunovSolution)>,
    out: &mut Output,
) -> Result<()> {
    let d = cfg.drift.dim();
    if let Some((m, sol)) = prediction {
        let grid = default_t_grid(d, &mut seed_rng(cfg.seed, PROBE_STREAM_OFFSET));
        let mut gof_rows = Vec::new();
        let mut cf_rows = Vec::new();
        for ens in ensembles {
            let a = num(ens.alpha.get());
            let gof = out.timed("gof", |_| Ok(gaussian_gof(&ens.samples, &sol.sigma_y)?))?;
            let max_z = gof.mean_z.iter().fold(0.0f64, |acc, z| acc.max(z.abs()));
            gof_rows.push(vec![
                a.clone(),
                gof.ks_distance.map(num).unwrap_or_default(),
                gof.ks_threshold.map(num).unwrap_or_default(),
                num(max_z),
                num(gof.cov_rel_err),
                num(gof.cov_threshold),
                num(gof.n_eff),
                gof.pass.to_string(),
            ]);
            let cf = out.timed("cf_residual", |_| {
                Ok(cf_residual(&ens.samples, m, cfg.noise.sigma(), &grid)?)
            })?;
            let z = cf.z_scores();
            for (k, t) in cf.t_grid.iter().enumerate() {
                let mut r = vec![a.clone()];
                r.extend(t.iter().map(|v| num(*v)));
                r.extend([
                    num(cf.residual_re[k]),
                    num(cf.residual_im[k]),
                    num(cf.monte_carlo_se[k]),
                    num(z[k]),
                ]);
                cf_rows.push(r);
            }
        }
        out.csv(
            "gof.csv",
            &header(&[
                "alpha",
                "ks_distance",
                "ks_threshold",
                "max_abs_mean_z",
                "cov_rel_err",
                "cov_threshold",
                "n_eff",
                "pass",
            ]),
            gof_rows,
        )?;
        let mut cols = header(&["alpha"]);
        cols.extend(indexed("t", d));
        cols.extend(header(&["re", "im", "se", "z"]));
        out.csv("cf_residual.csv", &cols, cf_rows)?;
    }
    if d != 1 {
        return Ok(());
    }
    let columns: Vec<Vec<f64>> = ensembles.iter().map(|e| e.samples.column(0)).collect();
    let grid = density_grid(columns.iter().map(|c| c.as_slice()));
    let mut fit_rows = Vec::new();
    for (ens, col) in ensembles.iter().zip(&columns) {
        let a = num(ens.alpha.get());
        if col.len() < MIN_DENSITY_SAMPLES {
            out.note(format!(
                "alpha {a}: fewer than {MIN_DENSITY_SAMPLES} samples, density skipped"
            ));
            continue;
        }
        let est = out.timed("density", |_| Ok(estimate_density(col, &grid)?))?;
        write_density(out, &format!("density_{a}.csv"), &est)?;
        for q in [2.0, 4.0] {
            match log_density_fit(&est, q, DEFAULT_TAIL_TRIM) {
                Ok(f) => fit_rows.push(vec![
                    a.clone(),
                    num(q),
                    num(f.slope),
                    num(f.intercept),
                    num(f.r_squared),
                    f.n_points.to_string(),
                ]),
                Err(e) => out.note(format!("alpha {a}: q = {q} fit skipped: {e}")),
            }
        }
    }
    out.csv(
        "logfit.csv",
        &header(&["alpha", "q", "slope", "intercept", "r_squared", "n_points"]),
        fit_rows,
    )
}

pub fn write_density(out: &mut Output, name: &str, est: &DensityEstimate) -> Result<()> {
    let rows = est
        .grid
        .iter()
        .zip(&est.density)
        .map(|(y, p)| vec![num(*y), num(*p)]);
    out.csv(name, &header(&["y", "p_hat"]), rows)
}

pub fn cmd_test(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    let (g, _) = resolve_scaling(cfg, out)?;
    if out.dry_run() {
        out.note(plan(cfg, g));
        return Ok(());
    }
    let prediction = gaussian_prediction(cfg, g, out)?;
    let ensembles = simulate_all(cfg, g, out, false)?;
    analyze(cfg, &ensembles, prediction.as_ref(), out)
}

pub fn cmd_em_compare(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    if out.dry_run() {
        return Ok(());
    }
    let em_cfg = EmConfig {
        n_chains: cfg.n_chains,
        samples_per_chain: cfg.samples_per_chain,
        seed: cfg.seed,
        ..EmConfig::default()
    };
    let mut rows = Vec::new();
    for alpha in &cfg.alphas {
        let r = out.timed("em_compare", |_| {
            Ok(em_vs_sa_compare(&cfg.drift, alpha.get(), &em_cfg)?)
        })?;
        let d = r.sa_cov.nrows();
        for i in 0..d {
            for j in 0..d {
                rows.push(vec![
                    num(r.alpha),
                    num(r.p_star),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    num(r.sa_cov[(i, j)]),
                    num(r.em_cov[(i, j)]),
                    num(r.sa_se[(i, j)]),
                    num(r.em_se[(i, j)]),
                    num(r.rel_err),
                ]);
            }
        }
    }
    out.csv(
        "em_compare.csv",
        &header(&[
            "alpha", "p_star", "i", "j", "sa_cov", "em_cov", "sa_se", "em_se", "rel_err",
        ]),
        rows,
    )
}

pub fn cmd_pipeline(cfg: &ValidatedConfig, out: &mut Output) -> Result<()> {
    if cfg.fixed_scaling().is_some() {
        return Err(CliError::Config(
            "pipeline requires `scaling = auto`".into(),
        ));
    }
    let report = out.timed("find_scaling", |_| {
        Ok(find_scaling_exponent(&cfg.drift, &DEFAULT_EXPONENT_GRID)?)
    })?;
    write_scaling_report(out, &report)?;
    let g = report.scaling_fn();
    out.note(format!(
        "discovered scaling exponent p* = {}",
        num(report.p_star)
    ));
    if out.dry_run() {
        out.note(plan(cfg, g));
        return Ok(());
    }
    let ensembles = simulate_all(cfg, g, out, true)?;
    let prediction = gaussian_prediction(cfg, g, out)?;
    analyze(cfg, &ensembles, prediction.as_ref(), out)
}
