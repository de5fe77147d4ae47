//! Subgroup analysis for balanced three-level cluster randomized trials.
//!
//! Randomization is assigned at the top level of a three-level hierarchy
//! (e.g. schools / classes / students), and the treatment effect is allowed to
//! differ between two subgroups defined at level one or at level two. This
//! crate provides:
//!
//! - design parameterization via raw variance components or intra-class
//!   correlations ([`design`]);
//! - seeded simulation of balanced trial datasets from the mixed model
//!   ([`sim`]);
//! - closed-form maximum likelihood estimation of the differential treatment
//!   effect `delta = delta_1 - delta_2`, of all variance components, and of
//!   the plug-in variance of `delta_hat` ([`estimator`]);
//! - the standardized test of `H0: delta = 0` ([`inference`]);
//! - analytic power lower bounds and sample-size formulas ([`power`]);
//! - a dense-covariance verification oracle (exact Gaussian likelihood, GLS,
//!   closed-form inverse covariance, numeric ML) used to certify the
//!   closed-form estimators ([`oracle`]);
//! - a Monte Carlo harness for empirical size/power studies ([`montecarlo`]).

pub mod design;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod montecarlo;
pub mod oracle;
pub mod power;
pub mod sim;

pub use design::{components_to_icc, icc_to_components};
pub use design::{Design, FixedEffects, IccProfile, SubgroupLevel, VarianceComponents};
pub use error::Error;
pub use estimator::{
    analyze_trial, estimate_delta, sums_of_squares, sums_of_squares_with,
    variance_components_mle, ComponentEstimates, DeltaEstimate, SsZeroForm, SumsOfSquares,
    TrialAnalysis,
};
pub use inference::{normal_cdf, normal_quantile, test_delta, TestResult};
pub use montecarlo::{reproduce_table, run_mc, McConfig, McResult, ReproducedCell, TableId};
pub use oracle::{
    build_covariance, gls_fixed_effects, inverse_covariance_closed_form, log_likelihood,
    numeric_ml, DenseCovariance, LambdaAggregates,
};
pub use power::{
    power_curve, power_lower_bound, required_n1_level2, required_n_level1,
    required_subgroup_n_level1, required_subgroup_n_level2, var_delta_formula, DesignSweep,
    PowerCurvePoint, PowerSpec, SampleSize, SubgroupPowerSpec, SweepAxis,
};
pub use sim::{simulate, substream_seed, Seed, TrialData};

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
