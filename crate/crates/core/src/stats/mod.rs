//! Estimators that check the limit theorems numerically.

pub mod covariance;
pub mod functional;
pub mod growth;
pub mod martingale;
pub mod moments;

pub use covariance::{
    empirical_sigma, expected_a, expected_a_product, interaction_matrices, sample_a, schur_average,
    sigma_via_series, InteractionReport, SeriesReport, SigmaEstimate,
};
pub use functional::{functional_tests, FunctionalReport};
pub use growth::{almost_martingale_constant, growth_function, GrowthReport};
pub use martingale::{
    martingale_error, martingale_schedule, MartingaleErrorReport, MartingaleSchedule,
};
pub use moments::{
    empirical_moment_tensors, fourth_moment_ratio, gaussian_moment_tensor, EmpiricalMoments,
    MomentTensor,
};
