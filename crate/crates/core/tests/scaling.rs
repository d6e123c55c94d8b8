use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;
use salab_core::drift::{DriftOperator, SmoothConvexCertificate, VectorField};
use salab_core::scaling::{
    classify_limit, default_alpha_sequence, default_probes, find_scaling_exponent, LimitClass,
    DEFAULT_EXPONENT_GRID,
};
use salab_core::Matrix;

fn odd_power_drift(m: i32, c: f64) -> DriftOperator {
    // Leading term -c x^{2m-1} plus a higher-order correction.
    let field: VectorField = Arc::new(move |x: &[f64], out: &mut [f64]| {
        out[0] = -c * x[0].powi(2 * m - 1) - x[0].powi(2 * m + 1);
    });
    DriftOperator::custom(field, DVector::zeros(1), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leading_odd_power_sets_the_exponent(m in 1i32..=3, c in 0.2..5.0f64) {
        let r = find_scaling_exponent(&odd_power_drift(m, c), &DEFAULT_EXPONENT_GRID).unwrap();
        prop_assert!((r.p_star - 1.0 / (2.0 * m as f64)).abs() <= 1e-3, "m={} p*={}", m, r.p_star);
        prop_assert!(r.p_star < 1.0);
    }

    #[test]
    fn strongly_convex_drifts_force_one_half(a in 0.2..3.0f64, b in -1.0..1.0f64, c in 0.2..3.0f64) {
        let h = Matrix::from_row_slice(2, 2, &[a + b * b, b, b, c + b * b]);
        let quad = DriftOperator::grad_quadratic(h, DVector::zeros(2)).unwrap();
        // f(x) = ½‖x‖² + Σ log cosh x_i, with σ = 1 and L = 2.
        let grad: VectorField = Arc::new(|x: &[f64], out: &mut [f64]| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = xi + xi.tanh();
            }
        });
        let cert = SmoothConvexCertificate::new(2.0, 1.0).unwrap();
        let smooth = DriftOperator::grad_generic(grad, DVector::zeros(2), Some(Matrix::identity(2, 2) * 2.0), Some(cert)).unwrap();
        let probes = default_probes(2);
        let alphas = default_alpha_sequence();
        for op in [&quad, &smooth] {
            for p in DEFAULT_EXPONENT_GRID {
                let class = classify_limit(op, p, &probes, &alphas).unwrap().class;
                let expected = if p < 0.5 {
                    LimitClass::BlowsUp
                } else if p > 0.5 {
                    LimitClass::Vanishes
                } else {
                    LimitClass::Nontrivial
                };
                prop_assert_eq!(class, expected, "p = {}", p);
            }
        }
    }
}

#[test]
fn at_most_one_grid_exponent_is_nontrivial() {
    let ops = [
        DriftOperator::quartic(1).unwrap(),
        DriftOperator::exp_square(1).unwrap(),
        DriftOperator::quartic_sine(1).unwrap(),
        DriftOperator::contractive_tanh(0.9, 1).unwrap(),
    ];
    for op in &ops {
        let r = find_scaling_exponent(op, &DEFAULT_EXPONENT_GRID).unwrap();
        let n = r
            .evidence
            .iter()
            .filter(|e| DEFAULT_EXPONENT_GRID.contains(&e.p) && e.class == LimitClass::Nontrivial)
            .count();
        assert_eq!(n, 1, "{}", op.name());
    }
}
