//! Experiment configuration.
//!
//! The on-disk format is UTF-8 text with one `key = value` pair per line;
//! `#` starts a comment. Keys mirror the [`ExperimentConfig`] fields:
//!
//! ```text
//! drift = grad_quadratic
//! drift.hessian = [[1]]
//! noise.shape = gaussian
//! noise.sigma = [[1]]
//! alphas = 0.1, 0.01
//! scaling = 0.5            # or `auto`
//! n_chains = 64
//! burn_in = auto           # or a step count
//! samples_per_chain = 4096
//! thin = auto
//! seed = 42
//! output_dir = out
//! alpha_max = 0.1          # optional stability threshold override
//! ```
//!
//! Matrix and vector literals use nested brackets (`[[2, 0], [0, 2]]`,
//! `[1, -1]`); a bare number is a scalar (or a 1×1 matrix).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use crate::drift::DriftOperator;
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseShape};
use crate::types::{Matrix, ScalingFn, StepSize, Vector};

pub const DEFAULT_N_CHAINS: usize = 64;
pub const DEFAULT_SAMPLES_PER_CHAIN: usize = 4096;

/// Drift identifiers accepted in configuration files.
pub const DRIFT_IDS: [&str; 7] = [
    "grad_quadratic",
    "linear",
    "contractive_tanh",
    "quartic",
    "exp_square",
    "quartic_sine",
    "custom",
];

/// A parsed right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Word(String),
}

impl Literal {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text.is_empty() {
            return Err("empty value".into());
        }
        if text.starts_with('[')
            || text.starts_with('-')
            || text.starts_with(|c: char| c.is_ascii_digit())
        {
            return parse_numeric_literal(text);
        }
        if text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'))
        {
            return Ok(Literal::Word(text.to_string()));
        }
        Err(format!("cannot parse value `{text}`"))
    }

    /// Interprets the literal as a square matrix (a scalar is 1×1).
    pub fn as_matrix(&self) -> std::result::Result<Matrix, String> {
        match self {
            Literal::Scalar(v) => Ok(Matrix::from_element(1, 1, *v)),
            Literal::Matrix(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err("matrix literal must be square".into());
                }
                Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => Err("expected a matrix literal like [[1, 0], [0, 1]]".into()),
        }
    }

    pub fn as_vector(&self) -> std::result::Result<Vector, String> {
        match self {
            Literal::Scalar(v) => Ok(Vector::from_element(1, *v)),
            Literal::Vector(v) => Ok(Vector::from_column_slice(v)),
            _ => Err("expected a vector literal like [1, 0]".into()),
        }
    }

    pub fn as_scalar(&self) -> std::result::Result<f64, String> {
        match self {
            Literal::Scalar(v) => Ok(*v),
            _ => Err("expected a number".into()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(v: &[f64]) -> String {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", parts.join(", "))
        }
        match self {
            Literal::Scalar(v) => write!(f, "{v:?}"),
            Literal::Vector(v) => f.write_str(&list(v)),
            Literal::Matrix(rows) => {
                let parts: Vec<String> = rows.iter().map(|r| list(r)).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Literal::Word(w) => f.write_str(w),
        }
    }
}

fn parse_numeric_literal(text: &str) -> std::result::Result<Literal, String> {
    use serde_json::Value;
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("bad literal `{text}`: {e}"))?;
    fn num(v: &Value) -> std::result::Result<f64, String> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("expected a finite number, got `{v}`"))
    }
    match &value {
        Value::Number(_) => Ok(Literal::Scalar(num(&value)?)),
        Value::Array(items) if items.is_empty() => Err("empty list".into()),
        Value::Array(items) if items.iter().all(Value::is_array) => {
            let rows = items
                .iter()
                .map(|row| row.as_array().unwrap().iter().map(num).collect())
                .collect::<std::result::Result<Vec<Vec<f64>>, String>>()?;
            Ok(Literal::Matrix(rows))
        }
        Value::Array(items) => Ok(Literal::Vector(
            items
                .iter()
                .map(num)
                .collect::<std::result::Result<_, _>>()?,
        )),
        _ => Err(format!("unsupported literal `{text}`")),
    }
}

/// Parse a row-major matrix literal such as `[[1, 2], [2, 1]]`.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    Literal::parse(text)
        .and_then(|l| l.as_matrix())
        .map_err(Error::InvalidArgument)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingChoice {
    Auto,
    Exponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Steps {
    Auto,
    Fixed(u64),
}

/// Raw experiment configuration, as read from text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub drift: String,
    /// Drift parameters, keyed without the `drift.` prefix.
    pub drift_params: BTreeMap<String, Literal>,
    pub noise_shape: String,
    pub noise_sigma: Option<Literal>,
    pub alphas: Vec<f64>,
    pub scaling: ScalingChoice,
    pub n_chains: usize,
    pub burn_in: Steps,
    pub samples_per_chain: usize,
    pub thin: Steps,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub alpha_max: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            drift: "grad_quadratic".into(),
            drift_params: BTreeMap::new(),
            noise_shape: "gaussian".into(),
            noise_sigma: None,
            alphas: vec![0.01],
            scaling: ScalingChoice::Exponent(0.5),
            n_chains: DEFAULT_N_CHAINS,
            burn_in: Steps::Auto,
            samples_per_chain: DEFAULT_SAMPLES_PER_CHAIN,
            thin: Steps::Auto,
            seed: 0,
            output_dir: PathBuf::from("out"),
            alpha_max: None,
        }
    }
}

/// A line-level parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

impl ExperimentConfig {
    /// Parses the `key = value` text format. Unknown or duplicate keys are errors.
    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| ParseError {
                line: line_no,
                message,
            };
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn word(value: &str) -> std::result::Result<String, String> {
            match Literal::parse(value)? {
                Literal::Word(w) => Ok(w),
                other => Err(format!("expected an identifier, got `{other}`")),
            }
        }
        fn count<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("`{key}` must be a non-negative integer"))
        }
        fn steps(key: &str, value: &str) -> std::result::Result<Steps, String> {
            if value == "auto" {
                Ok(Steps::Auto)
            } else {
                count(key, value).map(Steps::Fixed)
            }
        }
        match key {
            "drift" => self.drift = word(value)?,
            "noise.shape" => self.noise_shape = word(value)?,
            "noise.sigma" => self.noise_sigma = Some(Literal::parse(value)?),
            "alphas" => {
                let inner = value.trim_start_matches('[').trim_end_matches(']');
                self.alphas = inner
                    .split(',')
                    .map(|s| {
                        let s = s.trim();
                        s.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| format!("bad alpha `{s}`"))
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "scaling" => {
                self.scaling = if value == "auto" {
                    ScalingChoice::Auto
                } else {
                    ScalingChoice::Exponent(
                        value
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| {
                                format!("scaling must be `auto` or a number, got `{value}`")
                            })?,
                    )
                }
            }
            "n_chains" => self.n_chains = count(key, value)?,
            "samples_per_chain" => self.samples_per_chain = count(key, value)?,
            "burn_in" => self.burn_in = steps(key, value)?,
            "thin" => self.thin = steps(key, value)?,
            "seed" => self.seed = count(key, value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("output_dir must not be empty".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            "alpha_max" => {
                self.alpha_max = Some(
                    value
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| format!("bad alpha_max `{value}`"))?,
                )
            }
            _ => match key.strip_prefix("drift.") {
                Some(param) if !param.is_empty() => {
                    self.drift_params
                        .insert(param.to_string(), Literal::parse(value)?);
                }
                _ => return Err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    /// Renders the configuration back into the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("drift", self.drift.clone());
        for (k, v) in &self.drift_params {
            put(&format!("drift.{k}"), v.to_string());
        }
        put("noise.shape", self.noise_shape.clone());
        if let Some(s) = &self.noise_sigma {
            put("noise.sigma", s.to_string());
        }
        let alphas: Vec<String> = self.alphas.iter().map(|a| format!("{a:?}")).collect();
        put("alphas", alphas.join(", "));
        put(
            "scaling",
            match self.scaling {
                ScalingChoice::Auto => "auto".into(),
                ScalingChoice::Exponent(p) => format!("{p:?}"),
            },
        );
        put("n_chains", self.n_chains.to_string());
        let steps = |s: Steps| match s {
            Steps::Auto => "auto".to_string(),
            Steps::Fixed(n) => n.to_string(),
        };
        put("burn_in", steps(self.burn_in));
        put("samples_per_chain", self.samples_per_chain.to_string());
        put("thin", steps(self.thin));
        put("seed", self.seed.to_string());
        put("output_dir", self.output_dir.display().to_string());
        if let Some(a) = self.alpha_max {
            put("alpha_max", format!("{a:?}"));
        }
        out
    }
}

/// All problems found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

impl std::error::Error for ValidationErrors {}

/// Factory for a `custom` drift in the given dimension.
pub type CustomDriftFactory = Arc<dyn Fn(usize) -> Result<DriftOperator> + Send + Sync>;

/// Named custom drift evaluators, selected with `drift.name = <name>`.
#[derive(Clone, Default)]
pub struct DriftRegistry {
    entries: HashMap<String, CustomDriftFactory>,
}

impl DriftRegistry {
    pub fn register(&mut self, name: impl Into<String>, factory: CustomDriftFactory) {
        self.entries.insert(name.into(), factory);
    }

    fn get(&self, name: &str) -> Option<&CustomDriftFactory> {
        self.entries.get(name)
    }
}

/// A configuration whose invariants have all been checked.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub drift: DriftOperator,
    pub noise: NoiseModel,
    pub alphas: Vec<StepSize>,
    pub scaling: ScalingChoice,
    pub n_chains: usize,
    pub burn_in: Steps,
    pub samples_per_chain: usize,
    pub thin: Steps,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub alpha_max: f64,
    pub source: ExperimentConfig,
}

impl ValidatedConfig {
    /// The fixed scaling function, if one was configured.
    pub fn fixed_scaling(&self) -> Option<ScalingFn> {
        match self.scaling {
            ScalingChoice::Exponent(p) => ScalingFn::power(p).ok(),
            ScalingChoice::Auto => None,
        }
    }
}

pub fn validate_config(cfg: &ExperimentConfig) -> Result<ValidatedConfig> {
    validate_config_with(cfg, &DriftRegistry::default())
}

pub fn validate_config_with(
    cfg: &ExperimentConfig,
    registry: &DriftRegistry,
) -> Result<ValidatedConfig> {
    let mut errors = Vec::new();

    // Dimension comes from Σ when given, else from the drift parameters.
    let sigma = match &cfg.noise_sigma {
        Some(lit) => match lit.as_matrix() {
            Ok(m) if m.nrows() == 0 => {
                errors.push("noise.sigma must be non-empty".to_string());
                None
            }
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(format!("noise.sigma: {e}"));
                None
            }
        },
        None => None,
    };
    let dim = sigma
        .as_ref()
        .map(|m| m.nrows())
        .or_else(|| param_dim(cfg))
        .unwrap_or(1);

    let drift = build_drift(cfg, dim, registry)
        .map_err(|e| errors.push(e))
        .ok();

    let noise = if cfg.noise_shape == "noiseless" {
        Some(NoiseModel::noiseless(dim))
    } else {
        match cfg.noise_shape.parse::<NoiseShape>() {
            Ok(shape) => {
                let sigma = sigma.clone().unwrap_or_else(|| Matrix::identity(dim, dim));
                match NoiseModel::new(shape, sigma) {
                    Ok(nm) => Some(nm),
                    Err(e) => {
                        errors.push(e.to_string());
                        None
                    }
                }
            }
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    };
    if let (Some(d), Some(n)) = (&drift, &noise) {
        if d.dim() != n.dim() {
            errors.push(format!(
                "drift dimension {} does not match noise dimension {}",
                d.dim(),
                n.dim()
            ));
        }
    }

    if cfg.alphas.is_empty() {
        errors.push("alphas must not be empty".into());
    }
    let mut alphas = Vec::new();
    for &a in &cfg.alphas {
        match StepSize::new(a) {
            Ok(s) => alphas.push(s),
            Err(_) => errors.push("alpha must be positive".into()),
        }
    }
    if cfg.alphas.windows(2).any(|w| w[1] >= w[0]) {
        errors.push("alphas must be strictly decreasing".into());
    }
    let alpha_max = match (cfg.alpha_max, &drift) {
        (Some(m), _) if m > 0.0 => m,
        (Some(_), _) => {
            errors.push("alpha_max must be positive".into());
            0.0
        }
        (None, Some(d)) => d.default_stepsize_threshold(),
        (None, None) => f64::INFINITY,
    };
    if drift.is_some() {
        for a in cfg.alphas.iter().filter(|a| **a > alpha_max) {
            errors.push(format!("alpha {a} above stability threshold {alpha_max}"));
        }
    }

    if let ScalingChoice::Exponent(p) = cfg.scaling {
        if let Err(e) = ScalingFn::power(p) {
            errors.push(e.to_string());
        }
    }
    if cfg.n_chains == 0 {
        errors.push("n_chains must be at least 1".into());
    }
    if cfg.samples_per_chain == 0 {
        errors.push("samples_per_chain must be at least 1".into());
    }
    if cfg.thin == Steps::Fixed(0) {
        errors.push("thin must be at least 1".into());
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors).into());
    }
    Ok(ValidatedConfig {
        drift: drift.expect("checked"),
        noise: noise.expect("checked"),
        alphas,
        scaling: cfg.scaling,
        n_chains: cfg.n_chains,
        burn_in: cfg.burn_in,
        samples_per_chain: cfg.samples_per_chain,
        thin: cfg.thin,
        seed: cfg.seed,
        output_dir: cfg.output_dir.clone(),
        alpha_max,
        source: cfg.clone(),
    })
}

fn param_dim(cfg: &ExperimentConfig) -> Option<usize> {
    cfg.drift_params.values().find_map(|lit| match lit {
        Literal::Matrix(rows) => Some(rows.len()),
        Literal::Vector(v) => Some(v.len()),
        _ => None,
    })
}

fn build_drift(
    cfg: &ExperimentConfig,
    dim: usize,
    registry: &DriftRegistry,
) -> std::result::Result<DriftOperator, String> {
    let params = &cfg.drift_params;
    let allowed: &[&str] = match cfg.drift.as_str() {
        "grad_quadratic" => &["hessian", "minimizer"],
        "linear" => &["a", "b"],
        "contractive_tanh" => &["gain"],
        "quartic" | "exp_square" | "quartic_sine" => &[],
        "custom" => &["name"],
        other => return Err(format!("unknown drift id `{other}`")),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!("drift `{}` has no parameter `{k}`", cfg.drift));
    }
    let matrix = |key: &str, default: Matrix| -> std::result::Result<Matrix, String> {
        match params.get(key) {
            Some(lit) => lit.as_matrix().map_err(|e| format!("drift.{key}: {e}")),
            None => Ok(default),
        }
    };
    let vector = |key: &str, default: Vector| -> std::result::Result<Vector, String> {
        match params.get(key) {
            Some(lit) => lit.as_vector().map_err(|e| format!("drift.{key}: {e}")),
            None => Ok(default),
        }
    };
    let op = match cfg.drift.as_str() {
        "grad_quadratic" => DriftOperator::grad_quadratic(
            matrix("hessian", Matrix::identity(dim, dim))?,
            vector("minimizer", Vector::zeros(dim))?,
        ),
        "linear" => {
            let a = params
                .get("a")
                .ok_or("linear drift requires drift.a")?
                .as_matrix()
                .map_err(|e| format!("drift.a: {e}"))?;
            let n = a.nrows();
            DriftOperator::linear(a, vector("b", Vector::zeros(n))?)
        }
        "contractive_tanh" => {
            let gain = match params.get("gain") {
                Some(l) => l.as_scalar().map_err(|e| format!("drift.gain: {e}"))?,
                None => 0.9,
            };
            if !(gain.abs() < 1.0) {
                return Err(format!(
                    "contractive_tanh gain must satisfy |gain| < 1 (got {gain})"
                ));
            }
            DriftOperator::contractive_tanh(gain, dim)
        }
        "quartic" => DriftOperator::quartic(dim),
        "exp_square" => DriftOperator::exp_square(dim),
        "quartic_sine" => DriftOperator::quartic_sine(dim),
        "custom" => {
            let name = match params.get("name") {
                Some(Literal::Word(w)) => w.clone(),
                _ => return Err("custom drift requires drift.name".into()),
            };
            let factory = registry
                .get(&name)
                .ok_or_else(|| format!("no registered evaluator for custom drift `{name}`"))?;
            factory(dim)
        }
        _ => unreachable!(),
    };
    op.map_err(|e| e.to_string())
}
