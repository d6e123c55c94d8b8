use nalgebra::DVector;
use salab_core::drift::DriftOperator;
use salab_core::noise::{NoiseModel, NoiseShape};
use salab_core::simulate::{
    auto_burn_in, auto_thin, moment_summary, transient_samples, ChainEnsemble, EnsembleSpec,
};
use salab_core::stats::batch_means;
use salab_core::{Matrix, ScalingFn, StepSize, Vector};

fn unit_noise(shape: NoiseShape) -> NoiseModel {
    NoiseModel::new(shape, Matrix::identity(1, 1)).unwrap()
}

fn neg_identity() -> DriftOperator {
    DriftOperator::grad_quadratic(Matrix::identity(1, 1), DVector::zeros(1)).unwrap()
}

fn stationary(
    op: &DriftOperator,
    nm: &NoiseModel,
    alpha: f64,
    chains: usize,
    per_chain: usize,
    seed: u64,
) -> ChainEnsemble {
    let spec = EnsembleSpec {
        n_chains: chains,
        burn_in: auto_burn_in(alpha, 0.5),
        thin: auto_thin(alpha, 0.5),
        samples_per_chain: per_chain,
        seed,
        ..EnsembleSpec::new(op, nm)
    };
    spec.run(StepSize::new(alpha).unwrap(), ScalingFn::sqrt())
        .unwrap()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn finite_k_law_of_the_linear_chain() {
    let op = neg_identity();
    let nm = unit_noise(NoiseShape::Gaussian);
    let alpha = 0.01;
    let a = StepSize::new(alpha).unwrap();
    let g = ScalingFn::sqrt();
    let x0 = Vector::from_element(1, 1.0);
    let y0 = 1.0 / alpha.sqrt();
    for k in [10u64, 100, auto_burn_in(alpha, 0.5)] {
        let s = transient_samples(&op, &nm, a, g, &x0, k, 20_000, 7).unwrap();
        let y = s.column(0);
        let decay = (1.0 - alpha).powi(k as i32);
        let mean_exact = decay * y0;
        let var_exact = (1.0 - decay * decay) / (2.0 - alpha);
        let (m, se_m) = mean_and_se(&y);
        assert!(
            (m - mean_exact).abs() <= 4.0 * se_m,
            "k={k}: mean {m} vs {mean_exact}"
        );
        let sq: Vec<f64> = y.iter().map(|v| (v - mean_exact).powi(2)).collect();
        let (v, se_v) = mean_and_se(&sq);
        assert!(
            (v - var_exact).abs() <= 4.0 * se_v,
            "k={k}: var {v} vs {var_exact}"
        );
    }
}

#[test]
fn second_moment_respects_tightness_bound() {
    let cases = [
        (vec![1.0, 3.0], 0.05),
        (vec![2.0, 2.5, 4.0], 0.05),
        (vec![1.0], 0.5),
    ];
    for (eigs, alpha) in cases {
        let d = eigs.len();
        let h = Matrix::from_diagonal(&DVector::from_vec(eigs.clone()));
        let op = DriftOperator::grad_quadratic(h, DVector::zeros(d)).unwrap();
        let cert = op.certificate().unwrap();
        assert!(alpha <= cert.sigma / (cert.l * cert.l));
        let nm = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(d, d)).unwrap();
        let ens = stationary(&op, &nm, alpha, 32, 512, 3);
        let sq: Vec<f64> = ens
            .samples
            .rows()
            .map(|y| y.iter().map(|v| v * v).sum())
            .collect();
        let bm = batch_means(&sq, 20);
        let bound = d as f64 / (2.0 * cert.sigma - cert.l * cert.l * alpha);
        assert!(
            bm.mean <= bound + 4.0 * bm.se,
            "{eigs:?}: {} > {bound}",
            bm.mean
        );
    }
}

#[test]
fn trace_bound_for_the_illustrative_example() {
    let ens = stationary(
        &neg_identity(),
        &unit_noise(NoiseShape::Gaussian),
        0.01,
        64,
        512,
        1,
    );
    let m = moment_summary(&ens).unwrap();
    assert!(
        m.second_moment_trace <= 1.0 + 0.05,
        "{}",
        m.second_moment_trace
    );
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let op = DriftOperator::quartic(2).unwrap();
    let nm = NoiseModel::new(
        NoiseShape::Uniform,
        Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
    )
    .unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let spec = EnsembleSpec {
                n_chains: 9,
                burn_in: 100,
                thin: 5,
                samples_per_chain: 50,
                seed: 42,
                ..EnsembleSpec::new(&op, &nm)
            };
            spec.run(
                StepSize::new(0.05).unwrap(),
                ScalingFn::power(0.25).unwrap(),
            )
            .unwrap()
        })
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.samples, four.samples);
    assert_eq!(one.chain_ids, four.chain_ids);
    assert_eq!(one.final_states, four.final_states);
}

#[test]
fn covariance_is_universal_across_noise_shapes() {
    let op = neg_identity();
    let alpha = 0.005;
    let stats: Vec<(f64, f64)> = NoiseShape::ALL
        .iter()
        .enumerate()
        .map(|(i, shape)| {
            let ens = stationary(&op, &unit_noise(*shape), alpha, 64, 256, 100 + i as u64);
            let y = ens.samples.column(0);
            let m = y.iter().sum::<f64>() / y.len() as f64;
            let prod: Vec<f64> = y.iter().map(|v| (v - m).powi(2)).collect();
            let bm = batch_means(&prod, 20);
            (bm.mean, bm.se)
        })
        .collect();
    for i in 0..stats.len() {
        for j in 0..i {
            let (a, sa) = stats[i];
            let (b, sb) = stats[j];
            assert!((a - b).abs() <= 6.0 * sa.hypot(sb), "{stats:?}");
        }
    }
}
