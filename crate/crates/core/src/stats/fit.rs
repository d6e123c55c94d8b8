use super::density::DensityEstimate;
use crate::error::{Error, Result};

pub const DEFAULT_TAIL_TRIM: f64 = 0.01;
const MIN_FIT_POINTS: usize = 10;

/// Least-squares fit of `log p(y) ≈ intercept + slope · |y|^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub q: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Regresses the log density on `|y|^q`.
///
/// The density is first symmetrized, `(p(y) + p(-y)) / 2` for `y ≥ 0`, and
/// grid points below `tail_trim · max p` are dropped.
pub fn log_density_fit(est: &DensityEstimate, q: f64, tail_trim: f64) -> Result<FitReport> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "q must be positive (got {q})"
        )));
    }
    if !(tail_trim > 0.0 && tail_trim < 0.5) {
        return Err(Error::InvalidArgument(
            "tail_trim must lie in (0, 0.5)".into(),
        ));
    }
    let (lo, hi) = match (est.grid.first(), est.grid.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => {
            return Err(Error::InsufficientSamples {
                needed: MIN_FIT_POINTS,
                got: 0,
            })
        }
    };
    let cutoff = tail_trim * est.peak();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&y, &p) in est.grid.iter().zip(&est.density) {
        if y < 0.0 {
            continue;
        }
        let p = if -y >= lo && -y <= hi {
            0.5 * (p + est.at(-y))
        } else {
            p
        };
        if p > 0.0 && p >= cutoff {
            xs.push(y.powf(q));
            ys.push(p.ln());
        }
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("constant regressor"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FitReport {
        q,
        slope,
        intercept,
        r_squared,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(v: f64) -> DensityEstimate {
        let grid: Vec<f64> = (0..=800).map(|i| -4.0 + i as f64 * 0.01).collect();
        let density = grid
            .iter()
            .map(|y| (-y * y / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
            .collect();
        DensityEstimate {
            grid,
            density,
            bandwidth: 0.0,
            n_samples: 0,
        }
    }

    #[test]
    fn gaussian_log_density_is_linear_in_y_squared() {
        let v = 0.5;
        let fit = log_density_fit(&exact(v), 2.0, DEFAULT_TAIL_TRIM).unwrap();
        assert!((fit.slope + 1.0 / (2.0 * v)).abs() < 1e-10, "{}", fit.slope);
        assert!(fit.r_squared >= 0.999);
        let quartic = log_density_fit(&exact(v), 4.0, DEFAULT_TAIL_TRIM).unwrap();
        assert!(quartic.r_squared < fit.r_squared);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let mut est = exact(0.5);
        est.grid.truncate(5);
        est.density.truncate(5);
        assert!(log_density_fit(&est, 2.0, 0.01).is_err());
        assert!(log_density_fit(&exact(0.5), 2.0, 0.7).is_err());
    }
}
