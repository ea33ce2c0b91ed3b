//! Plug-in covariance for `ξ̂`, Wald intervals and subgroup readouts.
//!
//! `√n (ξ̂ − ξ0)` is asymptotically normal with covariance `I⁻¹`, estimated by
//! `(−∇_{ξξ'} l*_n(θ̂))⁻¹`. No standard errors are produced for `ψ̂`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::hessian_xi_xi;
use crate::model::{plane_index, standard_normal_cdf, standard_normal_pdf, Dataset, Dims, KernelSpec, ThetaParams};

/// Information matrices whose smallest eigenvalue falls below this fraction of
/// the largest are treated as singular.
pub const RELATIVE_EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Estimate of `I⁻¹`, the covariance of `√n (ξ̂ − ξ0)`.
    pub information_inverse: DMatrix<f64>,
    pub n: usize,
    /// `sqrt(diag(I⁻¹) / n)`
    pub std_errors: Vec<f64>,
    pub condition_number: f64,
}

impl CovarianceEstimate {
    /// Covariance of `ξ̂` itself, `I⁻¹ / n`.
    pub fn covariance_of_estimate(&self) -> DMatrix<f64> {
        &self.information_inverse / self.n as f64
    }
}

/// Inverts an information matrix by symmetric eigendecomposition.
pub fn covariance_from_information(info: &DMatrix<f64>, n: usize) -> Result<CovarianceEstimate> {
    if !info.is_square() || info.nrows() == 0 {
        return Err(Error::InvalidArgument("information must be a non-empty square matrix".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if info.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonInvertibleInformation {
            condition: f64::INFINITY,
        });
    }
    let sym = (info + info.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min < RELATIVE_EIGEN_FLOOR * max {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::NonInvertibleInformation { condition });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inverse = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let inverse = (&inverse + inverse.transpose()) * 0.5;
    let std_errors = (0..inverse.nrows())
        .map(|k| (inverse[(k, k)] / n as f64).sqrt())
        .collect();
    Ok(CovarianceEstimate {
        information_inverse: inverse,
        n,
        std_errors,
        condition_number: max / min,
    })
}

/// `(−∇_{ξξ'} l*_n(θ̂))⁻¹` together with per-coordinate standard errors.
pub fn covariance_xi(
    ds: &Dataset,
    theta_hat: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<CovarianceEstimate> {
    let info = -hessian_xi_xi(ds, theta_hat, kernel)?;
    covariance_from_information(&info, ds.n())
}

/// Inverse of the standard normal distribution function, by bisection
/// followed by Newton polishing.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must lie in (0, 1), got {p}")));
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if standard_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = standard_normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        let next = x - (standard_normal_cdf(x) - p) / d;
        if !next.is_finite() || (next - x).abs() > 1e-9 {
            break;
        }
        x = next;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub parameter: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Names of the `ξ` coordinates: `beta`, `gamma` when scalar, otherwise
/// `beta1, beta2, ...`.
pub fn xi_names(dims: Dims) -> Vec<String> {
    let block = |prefix: &str, len: usize| -> Vec<String> {
        if len == 1 {
            vec![prefix.to_string()]
        } else {
            (1..=len).map(|k| format!("{prefix}{k}")).collect()
        }
    };
    let mut names = block("beta", dims.p1);
    names.extend(block("gamma", dims.p2));
    names
}

pub fn psi_names(q: usize) -> Vec<String> {
    (1..=q).map(|k| format!("psi{k}")).collect()
}

/// Wald intervals `estimate ± z_{1−α/2} sqrt(cov_kk / n)` where `cov` is on
/// the `I⁻¹` scale.
pub fn confidence_interval(
    estimate: &[f64],
    cov: &DMatrix<f64>,
    n: usize,
    level: f64,
) -> Result<Vec<ConfidenceInterval>> {
    let names: Vec<String> = (1..=estimate.len()).map(|k| format!("xi{k}")).collect();
    confidence_intervals_named(&names, estimate, cov, n, level)
}

pub fn confidence_intervals_named(
    names: &[String],
    estimate: &[f64],
    cov: &DMatrix<f64>,
    n: usize,
    level: f64,
) -> Result<Vec<ConfidenceInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {level}")));
    }
    if cov.nrows() != estimate.len() || cov.ncols() != estimate.len() || names.len() != estimate.len() {
        return Err(Error::InvalidArgument("estimate, names and covariance sizes disagree".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    estimate
        .iter()
        .enumerate()
        .map(|(k, &est)| {
            let var = cov[(k, k)];
            if !(var >= 0.0 && var.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "variance of {} must be finite and nonnegative, got {var}",
                    names[k]
                )));
            }
            let se = (var / n as f64).sqrt();
            Ok(ConfidenceInterval {
                parameter: names[k].clone(),
                estimate: est,
                std_error: se,
                lower: est - z * se,
                upper: est + z * se,
                level,
            })
        })
        .collect()
}

fn check_q(ds: &Dataset, psi: &[f64]) -> Result<()> {
    if psi.len() != ds.dims().q {
        return Err(Error::InvalidArgument(format!(
            "psi has length {}, dataset has q = {}",
            psi.len(),
            ds.dims().q
        )));
    }
    Ok(())
}

/// Fitted subgroup membership `1{V_i + X_i'ψ̂ ≥ 0}` in dataset order.
pub fn predict_subgroup(ds: &Dataset, psi_hat: &[f64]) -> Result<Vec<bool>> {
    check_q(ds, psi_hat)?;
    Ok(ds
        .observations()
        .iter()
        .map(|o| plane_index(o.v, &o.x, psi_hat) >= 0.0)
        .collect())
}

/// Fraction of subjects whose membership under `psi_hat` differs from that
/// under `psi_true`.
pub fn classification_error(ds: &Dataset, psi_hat: &[f64], psi_true: &[f64]) -> Result<f64> {
    let a = predict_subgroup(ds, psi_hat)?;
    let b = predict_subgroup(ds, psi_true)?;
    let disagree = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    Ok(disagree as f64 / ds.n() as f64)
}
