//! Change-plane Cox regression fitted by maximum smoothed partial likelihood.
//!
//! The hazard of a subject with covariates `(Z, U, V, X)` is
//!
//! ```text
//! λ(t | W) = λ0(t) exp{ Z'β + U'γ 1{V + X'ψ ≥ 0} }
//! ```
//!
//! so `U` has an extra effect `γ` inside the subgroup cut out by the
//! hyperplane `V + X'ψ = 0`. The indicator is replaced by a kernel
//! distribution function at bandwidth `h` to obtain a smooth objective, which
//! is maximized by alternating Newton steps in `ξ = (β, γ)` with gradient
//! ascent in `ψ` from several starting points.
//!
//! Modules:
//!
//! - [`model`]: data, parameters, linear predictors and the kernel
//! - [`likelihood`]: partial likelihoods, analytic derivatives, Breslow estimator
//! - [`optimizer`]: alternating multi-start maximization
//! - [`inference`]: plug-in covariance, confidence intervals, subgroup metrics
//! - [`simulation`]: Monte Carlo design and coverage studies
//! - [`cli_io`]: CSV and config ingestion, reports, the `cpcox` commands

pub mod cli_io;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod model;
pub mod optimizer;
pub mod simulation;

pub use error::{Error, ErrorKind, Result};
pub use likelihood::{
    breslow_cumulative_hazard, breslow_estimator, evaluate, hessian_xi_psi, hessian_xi_xi,
    log_partial_likelihood, risk_set_aggregates, score_psi, score_xi,
    smoothed_log_partial_likelihood, CumulativeHazard, Derivatives, Evaluation, RiskSetAggregates,
};
pub use model::{
    default_bandwidth, eta, eta_smoothed, kernel_cdf, kernel_pdf, subgroup_indicator, Dataset,
    Dims, KernelKind, KernelSpec, Observation, ThetaParams,
};
pub use optimizer::{
    alternate_fit, maximize_psi_given_xi, maximize_xi_given_psi, multistart_fit, FitOptions,
    FitResult, StartSpec,
};
