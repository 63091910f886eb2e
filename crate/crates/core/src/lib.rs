//! Security analysis of multicarrier continuous-variable QKD.
//!
//! The crate evaluates the secret key rates of the eight protocol variants
//! (one-way/two-way x homodyne/heterodyne x direct/reverse reconciliation)
//! of a multicarrier CVQKD link under an optimal Gaussian collective attack,
//! the private classical capacities of its Gaussian sub-channels, the
//! multiuser capacity and private-capacity regions, and the security
//! thresholds (tolerable excess noise, maximum eavesdropper variance). A
//! Monte Carlo simulator of the multicarrier Gaussian channel cross-checks
//! the analytic statistics.
//!
//! Everything is expressed in shot-noise units; all computations are pure
//! functions of their inputs (the samplers are pure given their seeds) and
//! safe to run concurrently.

// `!(x > 0.0)` is the NaN-rejecting validation form; `x <= 0.0` lets NaN through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod channel;
pub mod error;
pub mod gaussian;
pub mod mqa;
pub mod oneway;
pub mod protocol;
pub mod sim;
pub mod threshold;
pub mod twoway;

pub use error::{Error, Result};

pub use attack::{
    conditional_variance, conditional_variances_oneway, estimator_coefficient,
    eve_covariance_oneway, het_estimator_variances, holevo_from_conditionals,
    hom_estimator_variances, EstimatorConfig, EveCovarianceOneWay, QuadraturePairStats,
};
pub use channel::{
    averaged_fourier_gain, excess_noise, multicarrier_dominates, private_capacity_directional,
    private_capacity_subchannel, private_noise_variance, select_good_subchannels, ChannelEnsemble,
    DirectionalStats, QuadratureConvention, SubChannel,
};
pub use gaussian::{
    differential_entropy_gaussian, entropy_g, sample_circular_symmetric, spectrum_entropy,
    unitary_fft, unitary_ifft, ComplexGaussianVector, SymplecticSpectrum, UnitaryFft,
};
pub use mqa::{
    capacity_region, corner_points, private_region, sum_capacity, svd_gain, svd_private_capacities,
    svd_transformed_eve_gain, symmetric_capacity, Allocation, CapacityRegion, RegionPoint,
};
pub use oneway::{keyrate_oneway, keyrate_per_quadrature, spectra_oneway, PerQuadratureInputs};
pub use protocol::{
    Direction, GammaSplitPolicy, KeyRateResult, Measurement, ProtocolConfig, Reconciliation,
};
pub use sim::{
    empirical_mutual_information, simulate_block, verify_fft_noise_invariance,
    verify_fft_noise_invariance_with, InvarianceReport, NoiseModel, SimulationReport,
};
pub use threshold::{
    asymptotic_rate, improvement_ratio_kappa, max_eve_variance, measured_threshold_ratio,
    solve_excess_noise_at, svd_threshold_boost, tolerable_excess_noise_closed_form,
    tolerable_excess_noise_multicarrier, EveVarianceSweep, MulticarrierThreshold,
    SingleCarrierVariant, SolveMethod, ThresholdOutcome, ThresholdQuantity, ThresholdResult,
};
pub use twoway::{
    keyrate_twoway, twoway_covariances, twoway_spectra, TwoWayCovariances, TwoWaySpectra,
};

/// Asymptotic secret key rate of any of the eight protocol variants, routed
/// by the configured direction.
pub fn keyrate(config: &ProtocolConfig) -> Result<KeyRateResult> {
    match config.direction {
        Direction::OneWay => oneway::keyrate_oneway(config),
        Direction::TwoWay => twoway::keyrate_twoway(config),
    }
}
