//! Partial likelihoods, their analytic derivatives and the Breslow estimator.
//!
//! All quantities are computed in one sweep over subjects in decreasing time
//! order. Running sums over the risk set `{j : T_j >= t}` are kept relative to
//! the running maximum of the at-risk linear predictors, so `exp` never
//! overflows. Subjects sharing a time all enter the risk set before any of
//! their events is scored (Breslow handling of ties).
//!
//! Notation for subject `j` at `θ = (β, γ, ψ)` and bandwidth `h`:
//!
//! * `s_j = (V_j + X_j'ψ) / h`, `K_j = K(s_j)`, `k_j = K'(s_j) / h`
//! * `η_j = Z_j'β + (U_j'γ) K_j`
//! * `φ_j = (Z_j, U_j K_j)`, the gradient of `η_j` in `ξ = (β, γ)`
//! * `ϕ_j = (U_j'γ) k_j X_j`, the gradient of `η_j` in `ψ`
//! * `Υ_j = [0; U_j X_j' k_j]`, the cross derivative of `η_j` in `(ξ, ψ)`

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, Dataset, KernelSpec, ThetaParams};

/// Which derivative blocks to compute alongside the log likelihood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Derivatives {
    pub score_xi: bool,
    pub score_psi: bool,
    pub hessian_xi_xi: bool,
    pub hessian_xi_psi: bool,
}

impl Derivatives {
    pub const NONE: Derivatives = Derivatives {
        score_xi: false,
        score_psi: false,
        hessian_xi_xi: false,
        hessian_xi_psi: false,
    };
    pub const ALL: Derivatives = Derivatives {
        score_xi: true,
        score_psi: true,
        hessian_xi_xi: true,
        hessian_xi_psi: true,
    };
    pub const XI_NEWTON: Derivatives = Derivatives {
        score_xi: true,
        score_psi: false,
        hessian_xi_xi: true,
        hessian_xi_psi: false,
    };
    pub const PSI_GRADIENT: Derivatives = Derivatives {
        score_xi: false,
        score_psi: true,
        hessian_xi_xi: false,
        hessian_xi_psi: false,
    };
}

/// Log partial likelihood (scaled by `1/n`) with the requested derivatives.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loglik: f64,
    pub score_xi: Option<DVector<f64>>,
    pub score_psi: Option<DVector<f64>>,
    pub hessian_xi_xi: Option<DMatrix<f64>>,
    pub hessian_xi_psi: Option<DMatrix<f64>>,
}

/// How the change-plane indicator enters the linear predictor.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Predictor {
    Indicator,
    Smoothed(KernelSpec),
}

/// Per-subject quantities in time-sorted order.
struct Linear {
    eta: Vec<f64>,
    kern: Vec<f64>,
    /// `K'(s_j)/h`
    kern_deriv: Vec<f64>,
    /// `U_j'γ`
    u_gamma: Vec<f64>,
}

fn linear_terms(ds: &Dataset, theta: &ThetaParams, predictor: Predictor) -> Linear {
    let cols = ds.sorted();
    let dims = ds.dims();
    let n = ds.n();
    let mut lin = Linear {
        eta: Vec::with_capacity(n),
        kern: Vec::with_capacity(n),
        kern_deriv: Vec::with_capacity(n),
        u_gamma: Vec::with_capacity(n),
    };
    for j in 0..n {
        let z = &cols.z[j * dims.p1..(j + 1) * dims.p1];
        let u = &cols.u[j * dims.p2..(j + 1) * dims.p2];
        let x = &cols.x[j * dims.q..(j + 1) * dims.q];
        let index = cols.v[j] + dot(x, &theta.psi);
        let (k, kd) = match predictor {
            Predictor::Indicator => (if index >= 0.0 { 1.0 } else { 0.0 }, 0.0),
            Predictor::Smoothed(kernel) => {
                let h = kernel.bandwidth;
                let s = index / h;
                (kernel.kind.cdf(s), kernel.kind.pdf(s) / h)
            }
        };
        let ug = dot(u, &theta.gamma);
        lin.eta.push(dot(z, &theta.beta) + ug * k);
        lin.kern.push(k);
        lin.kern_deriv.push(kd);
        lin.u_gamma.push(ug);
    }
    lin
}

/// Risk-set sums, stored relative to `exp(shift)`.
struct RiskSums {
    shift: f64,
    s0: f64,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s_psi: Vec<f64>,
    s_cross: Vec<f64>,
}

impl RiskSums {
    fn new(d: usize, q: usize, want: Derivatives) -> Self {
        let need_s1 = want.score_xi || want.hessian_xi_xi || want.hessian_xi_psi;
        let need_psi = want.score_psi || want.hessian_xi_psi;
        Self {
            shift: f64::NEG_INFINITY,
            s0: 0.0,
            s1: vec![0.0; if need_s1 { d } else { 0 }],
            s2: vec![0.0; if want.hessian_xi_xi { d * d } else { 0 }],
            s_psi: vec![0.0; if need_psi { q } else { 0 }],
            s_cross: vec![0.0; if want.hessian_xi_psi { d * q } else { 0 }],
        }
    }

    /// Moves the reference point up to `eta` when it exceeds the current one.
    fn raise_shift(&mut self, eta: f64) {
        if eta <= self.shift {
            return;
        }
        let factor = (self.shift - eta).exp();
        self.shift = eta;
        self.s0 *= factor;
        for a in self
            .s1
            .iter_mut()
            .chain(self.s2.iter_mut())
            .chain(self.s_psi.iter_mut())
            .chain(self.s_cross.iter_mut())
        {
            *a *= factor;
        }
    }
}

/// The covariate vectors `φ_j`, `ϕ_j` for one sorted row.
fn fill_row(
    ds: &Dataset,
    lin: &Linear,
    j: usize,
    phi: &mut [f64],
    varphi: &mut [f64],
) {
    let cols = ds.sorted();
    let dims = ds.dims();
    let (p1, p2, q) = (dims.p1, dims.p2, dims.q);
    if !phi.is_empty() {
        phi[..p1].copy_from_slice(&cols.z[j * p1..(j + 1) * p1]);
        for (dst, &u) in phi[p1..].iter_mut().zip(&cols.u[j * p2..(j + 1) * p2]) {
            *dst = u * lin.kern[j];
        }
    }
    if !varphi.is_empty() {
        let c = lin.u_gamma[j] * lin.kern_deriv[j];
        for (dst, &x) in varphi.iter_mut().zip(&cols.x[j * q..(j + 1) * q]) {
            *dst = c * x;
        }
    }
}

pub(crate) fn evaluate_with(
    ds: &Dataset,
    theta: &ThetaParams,
    predictor: Predictor,
    want: Derivatives,
) -> Result<Evaluation> {
    theta.check_dims(ds.dims())?;
    if let Predictor::Smoothed(k) = predictor {
        if !(k.bandwidth.is_finite() && k.bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {}",
                k.bandwidth
            )));
        }
    }
    let dims = ds.dims();
    let (p1, d, q) = (dims.p1, dims.xi_len(), dims.q);
    let n = ds.n();
    let cols = ds.sorted();
    let lin = linear_terms(ds, theta, predictor);

    let need_phi = want.score_xi || want.hessian_xi_xi || want.hessian_xi_psi;
    let need_varphi = want.score_psi || want.hessian_xi_psi;
    let mut phi = vec![0.0; if need_phi { d } else { 0 }];
    let mut varphi = vec![0.0; if need_varphi { q } else { 0 }];

    let mut sums = RiskSums::new(d, q, want);
    let mut loglik = 0.0;
    let mut g_xi = vec![0.0; if want.score_xi { d } else { 0 }];
    let mut g_psi = vec![0.0; if want.score_psi { q } else { 0 }];
    let mut h_xx = vec![0.0; if want.hessian_xi_xi { d * d } else { 0 }];
    let mut h_xp = vec![0.0; if want.hessian_xi_psi { d * q } else { 0 }];
    let ln_n = (n as f64).ln();

    for &(start, end) in cols.tie_groups.iter().rev() {
        // enter the whole tie group into the risk set
        for j in start..end {
            sums.raise_shift(lin.eta[j]);
            let w = (lin.eta[j] - sums.shift).exp();
            sums.s0 += w;
            fill_row(ds, &lin, j, &mut phi, &mut varphi);
            for a in 0..sums.s1.len() {
                sums.s1[a] += w * phi[a];
            }
            if want.hessian_xi_xi {
                for a in 0..d {
                    let wa = w * phi[a];
                    for b in a..d {
                        sums.s2[a * d + b] += wa * phi[b];
                    }
                }
            }
            for c in 0..sums.s_psi.len() {
                sums.s_psi[c] += w * varphi[c];
            }
            if want.hessian_xi_psi {
                let u = &cols.u[j * dims.p2..(j + 1) * dims.p2];
                let x = &cols.x[j * q..(j + 1) * q];
                let kd = lin.kern_deriv[j];
                for a in 0..d {
                    let ups_a = if a < p1 { 0.0 } else { u[a - p1] * kd };
                    for c in 0..q {
                        sums.s_cross[a * q + c] += w * (ups_a * x[c] + phi[a] * varphi[c]);
                    }
                }
            }
        }

        let events = (start..end).filter(|&j| cols.status[j]).count();
        if events == 0 {
            continue;
        }
        let m = events as f64;
        let inv_s0 = 1.0 / sums.s0;
        let log_risk = sums.shift + sums.s0.ln() - ln_n;
        for j in start..end {
            if !cols.status[j] {
                continue;
            }
            loglik += lin.eta[j] - log_risk;
            if need_phi || need_varphi {
                fill_row(ds, &lin, j, &mut phi, &mut varphi);
            }
            for a in 0..g_xi.len() {
                g_xi[a] += phi[a];
            }
            for c in 0..g_psi.len() {
                g_psi[c] += varphi[c];
            }
            if want.hessian_xi_psi {
                let u = &cols.u[j * dims.p2..(j + 1) * dims.p2];
                let x = &cols.x[j * q..(j + 1) * q];
                let kd = lin.kern_deriv[j];
                for a in p1..d {
                    for c in 0..q {
                        h_xp[a * q + c] += u[a - p1] * kd * x[c];
                    }
                }
            }
        }
        for a in 0..g_xi.len() {
            g_xi[a] -= m * sums.s1[a] * inv_s0;
        }
        for c in 0..g_psi.len() {
            g_psi[c] -= m * sums.s_psi[c] * inv_s0;
        }
        if want.hessian_xi_xi {
            for a in 0..d {
                let ma = sums.s1[a] * inv_s0;
                for b in a..d {
                    let mb = sums.s1[b] * inv_s0;
                    h_xx[a * d + b] += m * (ma * mb - sums.s2[a * d + b] * inv_s0);
                }
            }
        }
        if want.hessian_xi_psi {
            for a in 0..d {
                let ma = sums.s1[a] * inv_s0;
                for c in 0..q {
                    let mc = sums.s_psi[c] * inv_s0;
                    h_xp[a * q + c] += m * (ma * mc - sums.s_cross[a * q + c] * inv_s0);
                }
            }
        }
    }

    let scale = 1.0 / n as f64;
    let hessian_xi_xi = want.hessian_xi_xi.then(|| {
        DMatrix::from_fn(d, d, |a, b| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            h_xx[lo * d + hi] * scale
        })
    });
    Ok(Evaluation {
        loglik: loglik * scale,
        score_xi: want
            .score_xi
            .then(|| DVector::from_iterator(d, g_xi.iter().map(|g| g * scale))),
        score_psi: want
            .score_psi
            .then(|| DVector::from_iterator(q, g_psi.iter().map(|g| g * scale))),
        hessian_xi_xi,
        hessian_xi_psi: want
            .hessian_xi_psi
            .then(|| DMatrix::from_fn(d, q, |a, c| h_xp[a * q + c] * scale)),
    })
}

/// Smoothed log partial likelihood plus the requested derivative blocks.
pub fn evaluate(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
    want: Derivatives,
) -> Result<Evaluation> {
    evaluate_with(ds, theta, Predictor::Smoothed(*kernel), want)
}

/// `l_n(θ)`: log partial likelihood with the exact indicator, scaled by `1/n`.
pub fn log_partial_likelihood(ds: &Dataset, theta: &ThetaParams) -> Result<f64> {
    Ok(evaluate_with(ds, theta, Predictor::Indicator, Derivatives::NONE)?.loglik)
}

/// `l*_n(θ)`: the smoothed log partial likelihood.
pub fn smoothed_log_partial_likelihood(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<f64> {
    Ok(evaluate(ds, theta, kernel, Derivatives::NONE)?.loglik)
}

/// `∇_ξ l*_n(θ)`.
pub fn score_xi(ds: &Dataset, theta: &ThetaParams, kernel: &KernelSpec) -> Result<DVector<f64>> {
    let want = Derivatives {
        score_xi: true,
        ..Derivatives::NONE
    };
    Ok(evaluate(ds, theta, kernel, want)?.score_xi.expect("requested"))
}

/// `∇_ψ l*_n(θ)`.
pub fn score_psi(ds: &Dataset, theta: &ThetaParams, kernel: &KernelSpec) -> Result<DVector<f64>> {
    Ok(evaluate(ds, theta, kernel, Derivatives::PSI_GRADIENT)?
        .score_psi
        .expect("requested"))
}

/// `∇_{ξξ'} l*_n(θ)`; negative semidefinite.
pub fn hessian_xi_xi(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<DMatrix<f64>> {
    let want = Derivatives {
        hessian_xi_xi: true,
        ..Derivatives::NONE
    };
    Ok(evaluate(ds, theta, kernel, want)?
        .hessian_xi_xi
        .expect("requested"))
}

/// `∇_{ξψ'} l*_n(θ)`, a `(p1 + p2) × q` matrix.
pub fn hessian_xi_psi(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<DMatrix<f64>> {
    let want = Derivatives {
        hessian_xi_psi: true,
        ..Derivatives::NONE
    };
    Ok(evaluate(ds, theta, kernel, want)?
        .hessian_xi_psi
        .expect("requested"))
}

/// Risk-set averages at each distinct event time, on their natural scale
/// (`S0(t) = n⁻¹ Σ_j Y_j(t) exp(η_j)` and so on).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSetAggregates {
    pub event_times: Vec<f64>,
    /// Number of events at each time.
    pub event_counts: Vec<usize>,
    pub s0: Vec<f64>,
    pub s1: Vec<Vec<f64>>,
    /// Row-major `(p1 + p2)²` matrices.
    pub s2: Vec<Vec<f64>>,
    pub s_psi: Vec<Vec<f64>>,
}

pub fn risk_set_aggregates(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<RiskSetAggregates> {
    theta.check_dims(ds.dims())?;
    let dims = ds.dims();
    let (d, q) = (dims.xi_len(), dims.q);
    let n = ds.n() as f64;
    let cols = ds.sorted();
    let lin = linear_terms(ds, theta, Predictor::Smoothed(*kernel));
    let mut phi = vec![0.0; d];
    let mut varphi = vec![0.0; q];
    let mut sums = RiskSums::new(d, q, Derivatives::ALL);
    let mut out = RiskSetAggregates {
        event_times: vec![],
        event_counts: vec![],
        s0: vec![],
        s1: vec![],
        s2: vec![],
        s_psi: vec![],
    };
    for &(start, end) in cols.tie_groups.iter().rev() {
        for j in start..end {
            sums.raise_shift(lin.eta[j]);
            let w = (lin.eta[j] - sums.shift).exp();
            fill_row(ds, &lin, j, &mut phi, &mut varphi);
            sums.s0 += w;
            for a in 0..d {
                sums.s1[a] += w * phi[a];
                for b in 0..d {
                    sums.s2[a * d + b] += w * phi[a] * phi[b];
                }
            }
            for c in 0..q {
                sums.s_psi[c] += w * varphi[c];
            }
        }
        let events = (start..end).filter(|&j| cols.status[j]).count();
        if events > 0 {
            let scale = sums.shift.exp() / n;
            out.event_times.push(cols.time[start]);
            out.event_counts.push(events);
            out.s0.push(sums.s0 * scale);
            out.s1.push(sums.s1.iter().map(|v| v * scale).collect());
            out.s2.push(sums.s2.iter().map(|v| v * scale).collect());
            out.s_psi.push(sums.s_psi.iter().map(|v| v * scale).collect());
        }
    }
    out.event_times.reverse();
    out.event_counts.reverse();
    out.s0.reverse();
    out.s1.reverse();
    out.s2.reverse();
    out.s_psi.reverse();
    Ok(out)
}

/// Breslow-type cumulative baseline hazard: a right-continuous step function
/// jumping by `(n S0(T_i))⁻¹` at each event time `T_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeHazard {
    /// Distinct event times, ascending.
    pub times: Vec<f64>,
    /// Cumulative hazard just after each time.
    pub values: Vec<f64>,
}

impl CumulativeHazard {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

pub fn breslow_estimator(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
) -> Result<CumulativeHazard> {
    theta.check_dims(ds.dims())?;
    let cols = ds.sorted();
    let lin = linear_terms(ds, theta, Predictor::Smoothed(*kernel));
    let mut sums = RiskSums::new(0, 0, Derivatives::NONE);
    let mut jumps = Vec::new();
    for &(start, end) in cols.tie_groups.iter().rev() {
        for j in start..end {
            sums.raise_shift(lin.eta[j]);
            sums.s0 += (lin.eta[j] - sums.shift).exp();
        }
        let events = (start..end).filter(|&j| cols.status[j]).count();
        if events > 0 {
            // (n S0)⁻¹ = exp(-shift) / s0
            let jump = events as f64 * (-sums.shift).exp() / sums.s0;
            jumps.push((cols.time[start], jump));
        }
    }
    jumps.reverse();
    let mut acc = 0.0;
    let (times, values) = jumps
        .into_iter()
        .map(|(t, dj)| {
            acc += dj;
            (t, acc)
        })
        .unzip();
    Ok(CumulativeHazard { times, values })
}

pub fn breslow_cumulative_hazard(
    ds: &Dataset,
    theta: &ThetaParams,
    kernel: &KernelSpec,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    Ok(breslow_estimator(ds, theta, kernel)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dims, Observation};

    fn single() -> Dataset {
        Dataset::new(
            vec![Observation::new(
                2.0,
                true,
                vec![0.3],
                vec![1.0],
                0.2,
                vec![1.0, -0.5],
            )],
            Dims::new(1, 1, 2),
        )
        .unwrap()
    }

    fn theta() -> ThetaParams {
        ThetaParams::new(vec![0.8], vec![0.5], vec![0.4, 0.3])
    }

    #[test]
    fn single_subject_vanishes() {
        let ds = single();
        let k = KernelSpec::gaussian(0.2).unwrap();
        let e = evaluate(&ds, &theta(), &k, Derivatives::ALL).unwrap();
        assert!(e.loglik.abs() < 1e-15);
        assert!(e.score_xi.unwrap().amax() < 1e-15);
        assert!(e.score_psi.unwrap().amax() < 1e-15);
        assert!(e.hessian_xi_xi.unwrap().amax() < 1e-15);
        assert!(e.hessian_xi_psi.unwrap().amax() < 1e-15);
        assert!(log_partial_likelihood(&ds, &theta()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn two_subjects_hand_value() {
        let mk = |t| Observation::new(t, true, vec![0.0], vec![0.0], 0.0, vec![0.0]);
        let ds = Dataset::new(vec![mk(1.0), mk(2.0)], Dims::new(1, 1, 1)).unwrap();
        let th = ThetaParams::new(vec![0.0], vec![0.0], vec![0.0]);
        let expected = 0.5 * (0.0 - 0.5f64.ln());
        assert!((log_partial_likelihood(&ds, &th).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.3466).abs() < 1e-4);
    }

    #[test]
    fn identical_covariates_give_zero_score() {
        let obs: Vec<_> = (0..6)
            .map(|i| Observation::new(i as f64, true, vec![1.0], vec![2.0], 0.1, vec![0.5]))
            .collect();
        let ds = Dataset::new(obs, Dims::new(1, 1, 1)).unwrap();
        let k = KernelSpec::gaussian(0.3).unwrap();
        let th = ThetaParams::new(vec![0.4], vec![-0.7], vec![0.2]);
        assert!(score_xi(&ds, &th, &k).unwrap().amax() < 1e-14);
    }

    #[test]
    fn gamma_zero_kills_psi_score() {
        let obs: Vec<_> = (0..8)
            .map(|i| {
                let f = i as f64;
                Observation::new(f.sin().abs(), i % 3 != 0, vec![f], vec![1.0 - f], 0.3 * f - 1.0, vec![f.cos()])
            })
            .collect();
        let ds = Dataset::new(obs, Dims::new(1, 1, 1)).unwrap();
        let k = KernelSpec::gaussian(0.25).unwrap();
        let th = ThetaParams::new(vec![0.4], vec![0.0], vec![0.7]);
        assert_eq!(score_psi(&ds, &th, &k).unwrap().amax(), 0.0);
        let l = smoothed_log_partial_likelihood(&ds, &th, &k).unwrap();
        assert_eq!(l, log_partial_likelihood(&ds, &th).unwrap());
    }

    #[test]
    fn large_predictors_do_not_overflow() {
        let obs: Vec<_> = (0..5)
            .map(|i| Observation::new(i as f64, true, vec![400.0 * i as f64], vec![], 0.0, vec![]))
            .collect();
        let ds = Dataset::new(obs, Dims::new(1, 0, 0)).unwrap();
        let th = ThetaParams::new(vec![2.0], vec![], vec![]);
        let k = KernelSpec::gaussian(1.0).unwrap();
        let e = evaluate(&ds, &th, &k, Derivatives::ALL).unwrap();
        assert!(e.loglik.is_finite());
        assert!(e.score_xi.unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn breslow_single_subject() {
        let ds = single();
        let k = KernelSpec::gaussian(0.2).unwrap();
        let th = theta();
        let eta = crate::model::eta_smoothed(&ds.observations()[0], &th, &k).unwrap();
        assert_eq!(breslow_cumulative_hazard(&ds, &th, &k, 1.0).unwrap(), 0.0);
        let v = breslow_cumulative_hazard(&ds, &th, &k, 2.0).unwrap();
        assert!((v - (-eta).exp()).abs() < 1e-14);
        assert!(breslow_cumulative_hazard(&ds, &th, &k, -1.0).is_err());
    }

    #[test]
    fn aggregates_match_definitions() {
        let obs = vec![
            Observation::new(1.0, true, vec![0.5], vec![1.0], -0.1, vec![1.0]),
            Observation::new(1.0, false, vec![-0.2], vec![0.0], 0.4, vec![-1.0]),
            Observation::new(3.0, true, vec![1.5], vec![1.0], 0.2, vec![0.5]),
        ];
        let ds = Dataset::new(obs.clone(), Dims::new(1, 1, 1)).unwrap();
        let k = KernelSpec::gaussian(0.3).unwrap();
        let th = ThetaParams::new(vec![0.3], vec![0.9], vec![0.1]);
        let agg = risk_set_aggregates(&ds, &th, &k).unwrap();
        assert_eq!(agg.event_times, vec![1.0, 3.0]);
        let e: Vec<f64> = obs
            .iter()
            .map(|o| crate::model::eta_smoothed(o, &th, &k).unwrap().exp())
            .collect();
        assert!((agg.s0[0] - e.iter().sum::<f64>() / 3.0).abs() < 1e-14);
        assert!((agg.s0[1] - e[2] / 3.0).abs() < 1e-14);
        assert!(agg.s0[0] >= agg.s0[1]);
    }
}
