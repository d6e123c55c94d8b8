//! Statistical verification toolkit.

mod batch;
mod cf;
mod density;
mod fit;
mod gof;

pub use batch::{batch_means, BatchMeans, DEFAULT_BATCHES};
pub use cf::{
    cf_residual, default_t_grid, empirical_cf, gaussian_cf, scalar_ode_cf, CfResidualReport,
};
pub use density::{
    estimate_density, estimate_density_with_bandwidth, silverman_bandwidth,
    silverman_bandwidth_effective, trapezoid, DensityEstimate, MIN_DENSITY_SAMPLES,
};
pub use fit::{log_density_fit, FitReport, DEFAULT_TAIL_TRIM};
pub use gof::{
    gaussian_gof, ks_distance, ks_two_sample, normal_cdf, GofReport, COV_Z_THRESHOLD, KS_CRITICAL,
    MEAN_Z_THRESHOLD,
};
