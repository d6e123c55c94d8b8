use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use salab_core::drift::{check_hurwitz, DriftOperator};
use salab_core::lyapunov::{predict_stationary, solve_lyapunov, solve_lyapunov_integral};
use salab_core::noise::{NoiseModel, NoiseShape};
use salab_core::Matrix;

/// Entries in [-1, 1]; shifted left past the max row sum, so Hurwitz.
fn hurwitz(d: usize, entries: &[f64], margin: f64) -> Matrix {
    let q = DMatrix::from_iterator(d, d, entries.iter().copied());
    let bound = (0..d).map(|i| q.row(i).abs().sum()).fold(0.0, f64::max);
    q - Matrix::identity(d, d) * (bound + margin)
}

fn spd(d: usize, entries: &[f64]) -> Matrix {
    let b = DMatrix::from_iterator(d, d, entries.iter().copied());
    &b * b.transpose() + Matrix::identity(d, d) * 0.5
}

fn instance() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..=10).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0..1.0f64, d * d),
            prop::collection::vec(-1.0..1.0f64, d * d),
            0.1..2.0f64,
        )
            .prop_map(move |(q, b, margin)| (hurwitz(d, &q, margin), spd(d, &b)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn residual_certificate_on_random_instances((m, sigma) in instance()) {
        let sol = solve_lyapunov(&m, &sigma).unwrap();
        prop_assert!(sol.residual_norm <= 1e-10 * sigma.norm(), "residual {}", sol.residual_norm);
        prop_assert!((&sol.sigma_y - sol.sigma_y.transpose()).amax() <= 1e-12);
        prop_assert!(sol.min_eigenvalue > 0.0);
    }

    #[test]
    fn kronecker_and_integral_agree((m, sigma) in instance()) {
        let a = solve_lyapunov(&m, &sigma).unwrap();
        let b = solve_lyapunov_integral(&m, &sigma, 32).unwrap();
        prop_assert!((&a.sigma_y - &b.sigma_y).norm() <= 1e-7, "{}", (&a.sigma_y - &b.sigma_y).norm());
    }

    #[test]
    fn solution_is_linear_in_sigma((m, sigma) in instance(), c in 0.01..100.0f64) {
        let a = solve_lyapunov(&m, &sigma).unwrap().sigma_y;
        let b = solve_lyapunov(&m, &(&sigma * c)).unwrap().sigma_y;
        prop_assert!((b - a * c).norm() <= 1e-9 * c * sigma.norm());
    }

    #[test]
    fn hurwitz_is_similarity_invariant((m, _s) in instance(), angles in prop::collection::vec(0.0..6.3f64, 10)) {
        let d = m.nrows();
        // Orthogonal Q from QR of a deterministic full-rank matrix.
        let seed = DMatrix::from_fn(d, d, |i, j| angles[(i + 3 * j) % angles.len()].sin() + if i == j { 2.0 } else { 0.0 });
        let q = seed.qr().q();
        let rotated = q.transpose() * &m * &q;
        let a = check_hurwitz(&m).unwrap();
        let b = check_hurwitz(&rotated).unwrap();
        prop_assert_eq!(a.hurwitz, b.hurwitz);
        prop_assert!((a.max_real_part - b.max_real_part).abs() <= 1e-8 * (1.0 + a.max_real_part.abs()));
    }
}

#[test]
fn unit_hessian_gives_exactly_one_half() {
    let sol = solve_lyapunov(
        &Matrix::from_element(1, 1, -1.0),
        &Matrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    assert!((sol.sigma_y[(0, 0)] - 0.5).abs() <= 1e-12);
}

#[test]
fn catalog_predictions() {
    let unit = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(1, 1)).unwrap();
    let quad = DriftOperator::grad_quadratic(Matrix::identity(1, 1), DVector::zeros(1)).unwrap();
    assert!((predict_stationary(&quad, &unit).unwrap().sigma_y[(0, 0)] - 0.5).abs() <= 1e-12);

    let zero_map = DriftOperator::contractive_tanh(0.0, 1).unwrap();
    assert!((predict_stationary(&zero_map, &unit).unwrap().sigma_y[(0, 0)] - 0.5).abs() <= 1e-12);

    let tanh = DriftOperator::contractive_tanh(0.9, 1).unwrap();
    assert!((predict_stationary(&tanh, &unit).unwrap().sigma_y[(0, 0)] - 5.0).abs() <= 1e-10);

    let a = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
    let lin = DriftOperator::linear(a, DVector::zeros(2)).unwrap();
    let nm = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(2, 2)).unwrap();
    let sol = predict_stationary(&lin, &nm).unwrap();
    assert!(sol.residual_norm <= 1e-10);

    let es = DriftOperator::exp_square(1).unwrap();
    assert!((predict_stationary(&es, &unit).unwrap().sigma_y[(0, 0)] - 0.25).abs() <= 1e-12);

    let quartic = DriftOperator::quartic(1).unwrap();
    assert!(predict_stationary(&quartic, &unit).is_err());
}
