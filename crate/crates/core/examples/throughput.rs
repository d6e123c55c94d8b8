//! Measures raw step throughput of the scalar fast path.
//!
//! `cargo run --release -p salab-core --example throughput`

use std::time::Instant;

use salab_core::drift::DriftOperator;
use salab_core::noise::{NoiseModel, NoiseShape};
use salab_core::simulate::EnsembleSpec;
use salab_core::{Matrix, ScalingFn, StepSize};

fn main() -> salab_core::Result<()> {
    let op = DriftOperator::quartic(1)?;
    let nm = NoiseModel::new(NoiseShape::Gaussian, Matrix::identity(1, 1))?;
    let spec = EnsembleSpec {
        n_chains: 10,
        burn_in: 10_000_000,
        thin: 1,
        samples_per_chain: 1,
        ..EnsembleSpec::new(&op, &nm)
    };
    let start = Instant::now();
    spec.run(StepSize::new(1e-3)?, ScalingFn::power(0.25)?)?;
    let secs = start.elapsed().as_secs_f64();
    let steps = 10.0 * 10_000_001.0;
    println!(
        "{steps:.0} steps in {secs:.2} s ({:.1} ns/step)",
        secs * 1e9 / steps
    );
    Ok(())
}
