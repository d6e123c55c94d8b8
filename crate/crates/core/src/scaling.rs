//! Discovery of the power-law scaling `g(α) = α^p` under which the scaled
//! drift `F̃(y) = lim g(α) F(y g(α) + x*) / α` is neither zero nor infinite.

use std::fmt;

use crate::drift::DriftOperator;
use crate::error::{Error, Result};
use crate::types::{ScalingFn, StepSize, Vector};

/// Log-log slopes within this band count as flat.
pub const SLOPE_THRESHOLD: f64 = 0.05;
/// Largest deviation of `ln m` from its fitted line for a clean power law.
pub const POWER_LAW_TOLERANCE: f64 = 0.25;
/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-3;
/// Stepsize at which `F̃` is sampled once `p*` is known.
pub const FTILDE_ALPHA: f64 = 1e-12;

pub const DEFAULT_EXPONENT_GRID: [f64; 7] =
    [1.0 / 8.0, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75];
pub const DEFAULT_PROBE_VALUES: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];

/// `α_j = 10^{-2 - j/2}` for `j = 0..8`.
pub fn default_alpha_sequence() -> Vec<f64> {
    (0..9).map(|j| 10f64.powf(-2.0 - j as f64 / 2.0)).collect()
}

/// Probe points `s · e_i` and `s · 1` for every default magnitude `s`.
pub fn default_probes(dim: usize) -> Vec<Vector> {
    let mut probes = Vec::new();
    for &s in &DEFAULT_PROBE_VALUES {
        if dim == 1 {
            probes.push(Vector::from_element(1, s));
            continue;
        }
        for i in 0..dim {
            let mut v = Vector::zeros(dim);
            v[i] = s;
            probes.push(v);
        }
        probes.push(Vector::from_element(dim, s));
    }
    probes
}

/// `α^p F(y α^p + x*) / α`.
pub fn scaled_drift(op: &DriftOperator, p: f64, alpha: f64, y: &Vector) -> Result<Vector> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let g = alpha.powf(p);
    let x = y * g + op.root();
    Ok(op.eval(&x)? * (g / alpha))
}

/// One step of the recursion for `Y = (X - x*) / g(α)`:
/// `y + (α / g) (F(g y + x*) + w)`.
pub fn scaled_sa_step(
    op: &DriftOperator,
    alpha: StepSize,
    g: ScalingFn,
    y: &Vector,
    w: &Vector,
) -> Result<Vector> {
    let a = alpha.get();
    let gv = g.eval(a);
    let f = op.eval(&(y * gv + op.root()))?;
    Ok(y + (f + w) * (a / gv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitClass {
    Vanishes,
    Nontrivial,
    BlowsUp,
    Oscillates,
}

impl LimitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitClass::Vanishes => "vanishes",
            LimitClass::Nontrivial => "nontrivial",
            LimitClass::BlowsUp => "blows_up",
            LimitClass::Oscillates => "oscillates",
        }
    }
}

impl fmt::Display for LimitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Magnitudes `‖scaled_drift‖` along the α sequence for one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEvidence {
    pub probe: Vector,
    pub magnitudes: Vec<f64>,
    /// Slope of `ln m` against `ln α`; `None` when every magnitude is zero.
    pub slope: Option<f64>,
    pub class: LimitClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEvidence {
    pub p: f64,
    pub alphas: Vec<f64>,
    pub probes: Vec<ProbeEvidence>,
    pub class: LimitClass,
}

impl LimitEvidence {
    /// Median of the finite per-probe slopes.
    pub fn median_slope(&self) -> Option<f64> {
        let mut s: Vec<f64> = self
            .probes
            .iter()
            .filter_map(|e| e.slope)
            .filter(|v| v.is_finite())
            .collect();
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        let n = s.len();
        Some(if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        })
    }
}

fn check_alpha_sequence(alphas: &[f64]) -> Result<()> {
    if alphas.len() < 6 {
        return Err(Error::InvalidArgument(
            "alpha sequence needs at least 6 points".into(),
        ));
    }
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "alpha sequence must be strictly decreasing".into(),
        ));
    }
    if (alphas[0] / alphas[alphas.len() - 1]).log10() < 4.0 - 1e-9 {
        return Err(Error::InvalidArgument(
            "alpha sequence must span at least 4 decades".into(),
        ));
    }
    Ok(())
}

fn classify_probe(op: &DriftOperator, p: f64, y: &Vector, alphas: &[f64]) -> ProbeEvidence {
    let magnitudes: Vec<f64> = alphas
        .iter()
        .map(|&a| match scaled_drift(op, p, a, y) {
            Ok(v) => v.norm(),
            Err(_) => f64::INFINITY,
        })
        .collect();
    let evidence = |slope, class| ProbeEvidence {
        probe: y.clone(),
        magnitudes: magnitudes.clone(),
        slope,
        class,
    };
    if magnitudes.iter().all(|m| *m == 0.0) {
        return evidence(None, LimitClass::Vanishes);
    }
    if magnitudes.iter().any(|m| m.is_infinite()) {
        return evidence(Some(f64::NEG_INFINITY), LimitClass::BlowsUp);
    }
    if magnitudes.contains(&0.0) {
        return evidence(None, LimitClass::Oscillates);
    }
    let xs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let max_dev = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    let class = if max_dev > POWER_LAW_TOLERANCE {
        LimitClass::Oscillates
    } else if slope >= SLOPE_THRESHOLD {
        LimitClass::Vanishes
    } else if slope <= -SLOPE_THRESHOLD {
        LimitClass::BlowsUp
    } else {
        LimitClass::Nontrivial
    };
    evidence(Some(slope), class)
}

/// Classifies the small-α behavior of the scaled drift under `g = α^p`.
pub fn classify_limit(
    op: &DriftOperator,
    p: f64,
    probes: &[Vector],
    alphas: &[f64],
) -> Result<LimitEvidence> {
    check_alpha_sequence(alphas)?;
    if probes.is_empty() || probes.iter().any(|y| y.len() != op.dim()) {
        return Err(Error::InvalidArgument(
            "probes must be non-empty and match the drift dimension".into(),
        ));
    }
    let per_probe: Vec<ProbeEvidence> = probes
        .iter()
        .map(|y| classify_probe(op, p, y, alphas))
        .collect();
    let has = |c| per_probe.iter().any(|e| e.class == c);
    let class = if has(LimitClass::BlowsUp) {
        LimitClass::BlowsUp
    } else if has(LimitClass::Nontrivial) {
        LimitClass::Nontrivial
    } else if has(LimitClass::Oscillates) {
        LimitClass::Oscillates
    } else {
        LimitClass::Vanishes
    };
    Ok(LimitEvidence {
        p,
        alphas: alphas.to_vec(),
        probes: per_probe,
        class,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub exponent_grid: Vec<f64>,
    /// Evidence for each grid exponent, then for each bisection midpoint.
    pub evidence: Vec<LimitEvidence>,
    pub p_star: f64,
    /// `(y, F̃(y))` at `p*` over the default probes.
    pub ftilde_samples: Vec<(Vector, Vector)>,
}

impl ScalingReport {
    pub fn class_of(&self, p: f64) -> Option<LimitClass> {
        self.evidence.iter().find(|e| e.p == p).map(|e| e.class)
    }

    pub fn scaling_fn(&self) -> ScalingFn {
        ScalingFn::power(self.p_star).expect("p* lies in (0, 1)")
    }
}

/// Searches `grid` for the exponent giving a nontrivial scaled drift.
///
/// A unique nontrivial grid exponent is returned as is. Otherwise the
/// bracket between the last `blows_up` and the first `vanishes` exponent
/// is bisected on the sign of the median log-log slope.
pub fn find_scaling_exponent(op: &DriftOperator, grid: &[f64]) -> Result<ScalingReport> {
    if grid.is_empty() || grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::InvalidArgument(
            "exponent grid must be a non-empty subset of (0, 1)".into(),
        ));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let probes = default_probes(op.dim());
    let alphas = default_alpha_sequence();
    let classify = |p: f64| classify_limit(op, p, &probes, &alphas);

    let mut evidence: Vec<LimitEvidence> =
        grid.iter().map(|&p| classify(p)).collect::<Result<_>>()?;
    let nontrivial: Vec<usize> = (0..grid.len())
        .filter(|&i| evidence[i].class == LimitClass::Nontrivial)
        .collect();

    let p_star = match nontrivial.as_slice() {
        [i] => grid[*i],
        [i, j, ..] if j - i == 1 => {
            let mid = 0.5 * (grid[*i] + grid[*j]);
            let e = classify(mid)?;
            let pick = match e.class {
                LimitClass::Nontrivial => mid,
                LimitClass::Vanishes => grid[*i],
                _ => grid[*j],
            };
            evidence.push(e);
            pick
        }
        _ => {
            let bracket = (0..grid.len().saturating_sub(1)).find(|&i| {
                evidence[i].class == LimitClass::BlowsUp
                    && evidence[i + 1].class == LimitClass::Vanishes
            });
            let Some(i) = bracket else {
                return Err(Error::NoScaling);
            };
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            while hi - lo > BISECTION_WIDTH {
                let mid = 0.5 * (lo + hi);
                let e = classify(mid)?;
                match e.median_slope() {
                    Some(s) if s < 0.0 => lo = mid,
                    Some(_) => hi = mid,
                    None => hi = mid,
                }
                evidence.push(e);
            }
            0.5 * (lo + hi)
        }
    };
    if p_star >= 1.0 {
        return Err(Error::NoScaling);
    }
    let ftilde_samples = probes
        .iter()
        .map(|y| Ok((y.clone(), scaled_drift(op, p_star, FTILDE_ALPHA, y)?)))
        .collect::<Result<_>>()?;
    Ok(ScalingReport {
        exponent_grid: grid,
        evidence,
        p_star,
        ftilde_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    fn y(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    #[test]
    fn scaled_drift_examples() {
        let quartic = DriftOperator::quartic(1).unwrap();
        for a in [0.1, 1e-3, 1e-7] {
            let v = scaled_drift(&quartic, 0.25, a, &y(1.0)).unwrap()[0];
            assert!((v + 1.0).abs() < 1e-12, "{v}");
        }
        let v = scaled_drift(&quartic, 0.5, 1e-4, &y(1.0)).unwrap()[0];
        assert!((v + 1e-4).abs() < 1e-16);
        let lin = DriftOperator::grad_quadratic(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        assert!((scaled_drift(&lin, 0.5, 0.37, &y(1.0)).unwrap()[0] + 1.0).abs() < 1e-15);
        assert!(scaled_drift(&lin, 0.5, 0.0, &y(1.0)).is_err());
    }

    #[test]
    fn classify_examples() {
        let probes = default_probes(1);
        let alphas = default_alpha_sequence();
        let quartic = DriftOperator::quartic(1).unwrap();
        assert_eq!(
            classify_limit(&quartic, 0.25, &probes, &alphas)
                .unwrap()
                .class,
            LimitClass::Nontrivial
        );
        assert_eq!(
            classify_limit(&quartic, 0.5, &probes, &alphas)
                .unwrap()
                .class,
            LimitClass::Vanishes
        );
        assert_eq!(
            classify_limit(&quartic, 0.125, &probes, &alphas)
                .unwrap()
                .class,
            LimitClass::BlowsUp
        );
        let es = DriftOperator::exp_square(1).unwrap();
        assert_eq!(
            classify_limit(&es, 0.5, &probes, &alphas).unwrap().class,
            LimitClass::Nontrivial
        );
    }

    #[test]
    fn alpha_sequence_contract() {
        let quartic = DriftOperator::quartic(1).unwrap();
        let probes = default_probes(1);
        assert!(classify_limit(&quartic, 0.25, &probes, &[1e-2, 1e-3, 1e-4]).is_err());
        let short_span: Vec<f64> = (0..8).map(|j| 10f64.powf(-2.0 - j as f64 * 0.1)).collect();
        assert!(classify_limit(&quartic, 0.25, &probes, &short_span).is_err());
        let mut increasing = default_alpha_sequence();
        increasing.reverse();
        assert!(classify_limit(&quartic, 0.25, &probes, &increasing).is_err());
    }

    #[test]
    fn oscillating_drift_is_flagged() {
        use std::sync::Arc;
        // F(x) = -x (2 + sin(ln|x| · 5)) has no power-law limit.
        let field: crate::drift::VectorField = Arc::new(|x: &[f64], out: &mut [f64]| {
            out[0] = if x[0] == 0.0 {
                0.0
            } else {
                -x[0] * (2.0 + (5.0 * x[0].abs().ln()).sin())
            };
        });
        let op = DriftOperator::custom(field, Vector::zeros(1), None).unwrap();
        let e = classify_limit(&op, 0.5, &default_probes(1), &default_alpha_sequence()).unwrap();
        assert_eq!(e.class, LimitClass::Oscillates);
    }

    #[test]
    fn catalog_exponents_and_limits() {
        let grid = DEFAULT_EXPONENT_GRID;
        type Law = fn(f64) -> f64;
        let cases: [(DriftOperator, f64, Law); 4] = [
            (DriftOperator::quartic(1).unwrap(), 0.25, |y| -y * y * y),
            (
                DriftOperator::grad_quadratic(Matrix::identity(1, 1), Vector::zeros(1)).unwrap(),
                0.5,
                |y| -y,
            ),
            (DriftOperator::exp_square(1).unwrap(), 0.5, |y| -2.0 * y),
            (DriftOperator::quartic_sine(1).unwrap(), 0.5, |y| -y),
        ];
        for (op, p, limit) in cases {
            let r = find_scaling_exponent(&op, &grid).unwrap();
            assert!((r.p_star - p).abs() <= 1e-3, "{}: {}", op.name(), r.p_star);
            for (yv, f) in &r.ftilde_samples {
                assert!(
                    (f[0] - limit(yv[0])).abs() <= 1e-6,
                    "{} at {}",
                    op.name(),
                    yv[0]
                );
            }
        }
    }

    #[test]
    fn classes_are_monotone_in_p() {
        let quartic = DriftOperator::quartic(1).unwrap();
        let r = find_scaling_exponent(&quartic, &DEFAULT_EXPONENT_GRID).unwrap();
        for e in &r.evidence {
            if e.p < r.p_star - 0.02 {
                assert_eq!(e.class, LimitClass::BlowsUp, "p = {}", e.p);
            } else if e.p > r.p_star + 0.02 {
                assert_eq!(e.class, LimitClass::Vanishes, "p = {}", e.p);
            }
        }
    }

    #[test]
    fn bisection_locates_off_grid_exponent() {
        // Leading term -x^5 gives p* = 1/6; drop 1/6 from the grid.
        use std::sync::Arc;
        let field: crate::drift::VectorField =
            Arc::new(|x: &[f64], out: &mut [f64]| out[0] = -x[0].powi(5));
        let op = DriftOperator::custom(field, Vector::zeros(1), None).unwrap();
        let r = find_scaling_exponent(&op, &[0.125, 0.25, 0.5]).unwrap();
        assert!((r.p_star - 1.0 / 6.0).abs() <= 1e-3, "{}", r.p_star);
    }

    #[test]
    fn zero_drift_has_no_scaling() {
        use std::sync::Arc;
        let field: crate::drift::VectorField = Arc::new(|_: &[f64], out: &mut [f64]| out[0] = 0.0);
        let op = DriftOperator::custom(field, Vector::zeros(1), None).unwrap();
        assert!(matches!(
            find_scaling_exponent(&op, &DEFAULT_EXPONENT_GRID),
            Err(Error::NoScaling)
        ));
    }

    #[test]
    fn ftilde_is_odd_for_odd_drifts() {
        for op in [
            DriftOperator::quartic(1).unwrap(),
            DriftOperator::quartic_sine(1).unwrap(),
        ] {
            let r = find_scaling_exponent(&op, &DEFAULT_EXPONENT_GRID).unwrap();
            for (yv, f) in &r.ftilde_samples {
                let minus = scaled_drift(&op, r.p_star, FTILDE_ALPHA, &(-yv)).unwrap();
                assert!((f[0] + minus[0]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn multivariate_probes() {
        let op = DriftOperator::grad_quadratic(
            Matrix::from_diagonal_element(2, 2, 3.0),
            Vector::zeros(2),
        )
        .unwrap();
        let r = find_scaling_exponent(&op, &DEFAULT_EXPONENT_GRID).unwrap();
        assert_eq!(r.p_star, 0.5);
        assert_eq!(r.ftilde_samples.len(), 8 * 3);
    }
}
