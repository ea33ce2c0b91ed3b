//! Alternating multi-start maximization of the smoothed partial likelihood.
//!
//! For a fixed `ψ` the objective is concave in `ξ = (β, γ)` and is maximized
//! by safeguarded Newton–Raphson. For fixed `ξ` it is generally multimodal in
//! `ψ`; gradient ascent with an Armijo line search climbs to a nearby local
//! maximum. The two steps alternate until the objective stops moving, and the
//! whole procedure is repeated from several `ψ` starting points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StartFailure};
use crate::inference::{self, CovarianceEstimate};
use crate::likelihood::{evaluate, Derivatives, Evaluation};
use crate::model::{default_bandwidth, Dataset, KernelSpec, ThetaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum BandwidthChoice {
    /// `(ln n)^2 / n`
    #[default]
    Auto,
    Fixed(f64),
}

/// Starting values for `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartSpec {
    /// Uniform grid with `points_per_dim` points per coordinate over
    /// `[low, high]^q`. For `q > 3` a Halton point set of `quasi_random_count`
    /// points over the same box is used instead.
    Grid {
        points_per_dim: usize,
        low: f64,
        high: f64,
        quasi_random_count: usize,
    },
    Explicit(Vec<Vec<f64>>),
    /// Independent uniform draws over `[low, high]^q`.
    Random {
        count: usize,
        low: f64,
        high: f64,
        seed: u64,
    },
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::Grid {
            points_per_dim: 5,
            low: -1.0,
            high: 1.0,
            quasi_random_count: 64,
        }
    }
}

const HALTON_BASES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

fn check_box(low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite() && low <= high) {
        return Err(Error::InvalidArgument(format!(
            "start box [{low}, {high}] must be finite and ordered"
        )));
    }
    Ok(())
}

impl StartSpec {
    /// Materializes the start set for a `q`-dimensional `ψ`.
    pub fn points(&self, q: usize) -> Result<Vec<Vec<f64>>> {
        if q == 0 {
            return match self {
                StartSpec::Explicit(v) if v.iter().any(|s| !s.is_empty()) => Err(
                    Error::InvalidArgument("explicit starts must be empty when q = 0".into()),
                ),
                _ => Ok(vec![vec![]]),
            };
        }
        let pts = match self {
            StartSpec::Grid {
                points_per_dim,
                low,
                high,
                quasi_random_count,
            } => {
                check_box(*low, *high)?;
                if q <= 3 {
                    if *points_per_dim == 0 {
                        return Err(Error::InvalidArgument("grid needs at least one point per dimension".into()));
                    }
                    let axis: Vec<f64> = if *points_per_dim == 1 {
                        vec![0.5 * (low + high)]
                    } else {
                        (0..*points_per_dim)
                            .map(|i| low + (high - low) * i as f64 / (*points_per_dim - 1) as f64)
                            .collect()
                    };
                    let mut pts = vec![vec![]];
                    for _ in 0..q {
                        pts = pts
                            .into_iter()
                            .flat_map(|p: Vec<f64>| {
                                axis.iter().map(move |&a| {
                                    let mut p = p.clone();
                                    p.push(a);
                                    p
                                })
                            })
                            .collect();
                    }
                    pts
                } else {
                    if q > HALTON_BASES.len() {
                        return Err(Error::InvalidArgument(format!(
                            "quasi-random starts support q <= {}, use explicit or random starts",
                            HALTON_BASES.len()
                        )));
                    }
                    (1..=*quasi_random_count as u64)
                        .map(|i| {
                            HALTON_BASES[..q]
                                .iter()
                                .map(|&b| low + (high - low) * radical_inverse(i, b))
                                .collect()
                        })
                        .collect()
                }
            }
            StartSpec::Explicit(starts) => {
                if let Some(bad) = starts.iter().find(|s| s.len() != q) {
                    return Err(Error::InvalidArgument(format!(
                        "explicit start has length {}, expected {q}",
                        bad.len()
                    )));
                }
                starts.clone()
            }
            StartSpec::Random {
                count,
                low,
                high,
                seed,
            } => {
                check_box(*low, *high)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| (0..q).map(|_| low + (high - low) * rng.random::<f64>()).collect())
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(Error::InvalidArgument("start set is empty".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bandwidth: BandwidthChoice,
    pub psi_starts: StartSpec,
    /// Outer loop stops when `|Δ l*_n|` falls below this.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub newton_max_iter: usize,
    /// On `‖∇_ξ l*_n‖∞`.
    pub newton_tol: f64,
    pub ascent_max_iter: usize,
    /// On `h ‖∇_ψ l*_n‖∞`.
    pub ascent_tol: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub armijo_max_halvings: usize,
    /// Relative eigenvalue floor for the negative Hessian in Newton steps.
    pub ridge_floor: f64,
    /// First-order condition required of a converged fit, applied to
    /// `‖∇_ξ l*_n‖∞` and `h ‖∇_ψ l*_n‖∞`.
    pub stationarity_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bandwidth: BandwidthChoice::Auto,
            psi_starts: StartSpec::default(),
            outer_tol: 1e-8,
            outer_max_iter: 100,
            newton_max_iter: 50,
            newton_tol: 1e-10,
            ascent_max_iter: 500,
            ascent_tol: 1e-8,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            armijo_max_halvings: 40,
            ridge_floor: 1e-10,
            stationarity_tol: 1e-6,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("outer_tol", self.outer_tol),
            ("newton_tol", self.newton_tol),
            ("ascent_tol", self.ascent_tol),
            ("armijo_c", self.armijo_c),
            ("ridge_floor", self.ridge_floor),
            ("stationarity_tol", self.stationarity_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::InvalidArgument("armijo_shrink must lie in (0, 1)".into()));
        }
        if self.outer_max_iter == 0 {
            return Err(Error::InvalidArgument("outer_max_iter must be positive".into()));
        }
        if let BandwidthChoice::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }

    /// Gaussian kernel at the configured bandwidth for a sample of size `n`.
    pub fn kernel(&self, n: usize) -> Result<KernelSpec> {
        let h = match self.bandwidth {
            BandwidthChoice::Auto => default_bandwidth(n)?,
            BandwidthChoice::Fixed(h) => h,
        };
        KernelSpec::gaussian(h)
    }
}

/// Outcome of one inner maximization (over `ξ` or over `ψ`).
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub params: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub loglik: f64,
    /// `‖∇_ξ l*_n‖∞`
    pub score_xi_norm: f64,
    /// `‖∇_ψ l*_n‖∞` (unscaled)
    pub score_psi_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub psi_start: Vec<f64>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: ThetaParams,
    pub loglik: f64,
    /// `(−∇_{ξξ'} l*_n(θ̂))⁻¹`, or `None` when the information is singular.
    pub covariance_xi: Option<CovarianceEstimate>,
    /// Why `covariance_xi` is absent, when it is.
    pub covariance_error: Option<String>,
    pub converged: bool,
    pub n_starts: usize,
    pub best_start: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub bandwidth_used: f64,
    pub start_summaries: Vec<StartSummary>,
}

impl FitResult {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }
}

fn theta_at(ds: &Dataset, xi: &[f64], psi: &[f64]) -> Result<ThetaParams> {
    ThetaParams::from_xi(xi, psi, ds.dims())
}

/// Eigenvalue floor below which the information is treated as singular.
fn eig_floor(opts: &FitOptions, max_eig: f64) -> f64 {
    opts.ridge_floor * max_eig.max(1.0)
}

/// Safeguarded Newton ascent over the first `active` coordinates of `ξ`;
/// the remaining coordinates stay at their starting values.
fn newton_ascent(
    ds: &Dataset,
    xi0: &[f64],
    psi: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
    active: usize,
) -> Result<InnerResult> {
    let mut xi = xi0.to_vec();
    let mut current = evaluate(ds, &theta_at(ds, &xi, psi)?, kernel, Derivatives::XI_NEWTON)?;
    if !current.loglik.is_finite() {
        return Err(Error::InvalidStart);
    }
    if active == 0 {
        return Ok(InnerResult {
            params: xi,
            loglik: current.loglik,
            converged: true,
            iterations: 0,
        });
    }

    let block = |e: &Evaluation| {
        let g = e.score_xi.as_ref().expect("score").rows(0, active).into_owned();
        let info = -e
            .hessian_xi_xi
            .as_ref()
            .expect("hessian")
            .view((0, 0), (active, active))
            .into_owned();
        (g, info)
    };

    // (info + ridge I)⁻¹ g, with the ridge only when info is near singular
    let newton_step = |g: &DVector<f64>, info: DMatrix<f64>| {
        let eig = SymmetricEigen::new(info);
        let max_eig = eig.eigenvalues.max();
        let min_eig = eig.eigenvalues.min();
        let floor = eig_floor(opts, max_eig);
        let ridge = if min_eig < floor { floor - min_eig } else { 0.0 };
        let proj = eig.eigenvectors.transpose() * g;
        let scaled = DVector::from_iterator(
            active,
            proj.iter()
                .zip(eig.eigenvalues.iter())
                .map(|(p, l)| p / (l + ridge)),
        );
        &eig.eigenvectors * scaled
    };

    // Near the maximum the gain of a good step falls below one ulp of l*,
    // so a step that keeps l* within rounding is judged by the score instead.
    let accept = |e: &Evaluation, cur: &Evaluation, g_norm: f64| {
        let slack = 8.0 * f64::EPSILON * cur.loglik.abs().max(1.0);
        e.loglik.is_finite()
            && (e.loglik > cur.loglik
                || (e.loglik >= cur.loglik - slack && block(e).0.amax() < g_norm))
    };

    let mut converged = false;
    let mut iterations = 0;
    loop {
        let (g, info) = block(&current);
        if g.amax() < opts.newton_tol {
            converged = true;
            // the score test alone leaves an error of about info⁻¹ g in ξ;
            // one more full step squares it
            let step = newton_step(&g, info);
            let mut cand = xi.clone();
            for (c, s) in cand.iter_mut().zip(step.iter()) {
                *c += s;
            }
            if cand != xi {
                let e = evaluate(ds, &theta_at(ds, &cand, psi)?, kernel, Derivatives::XI_NEWTON)?;
                if accept(&e, &current, g.amax()) {
                    xi = cand;
                    current = e;
                }
            }
            break;
        }
        if iterations >= opts.newton_max_iter {
            break;
        }
        iterations += 1;

        let step = newton_step(&g, info);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.armijo_max_halvings {
            let mut cand = xi.clone();
            for (c, s) in cand.iter_mut().zip(step.iter()) {
                *c += t * s;
            }
            let e = evaluate(ds, &theta_at(ds, &cand, psi)?, kernel, Derivatives::XI_NEWTON)?;
            if accept(&e, &current, g.amax()) {
                accepted = Some((cand, e));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, e)) => {
                let unchanged = cand == xi;
                xi = cand;
                current = e;
                if unchanged {
                    break;
                }
            }
            None => break,
        }
    }

    let (g, info) = block(&current);
    let eig = SymmetricEigen::new(info);
    let max_eig = eig.eigenvalues.max();
    if eig.eigenvalues.min() <= eig_floor(opts, max_eig) {
        return Err(Error::DegenerateFit(format!(
            "information in xi is singular (eigenvalues in [{:.3e}, {:.3e}])",
            eig.eigenvalues.min(),
            max_eig
        )));
    }
    Ok(InnerResult {
        params: xi,
        loglik: current.loglik,
        converged: converged || g.amax() < opts.newton_tol,
        iterations,
    })
}

/// Step 2: Newton–Raphson in `ξ` with `ψ` held fixed.
pub fn maximize_xi_given_psi(
    ds: &Dataset,
    xi0: &[f64],
    psi: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<InnerResult> {
    newton_ascent(ds, xi0, psi, kernel, opts, ds.dims().xi_len())
}

/// Step 3: gradient ascent in `ψ` with `ξ` held fixed.
///
/// Trial steps start at 1 and are backtracked until the Armijo condition
/// holds, so the objective never decreases. After an accepted step of length
/// `t` the next trial is `min(2t, 1)`.
pub fn maximize_psi_given_xi(
    ds: &Dataset,
    xi: &[f64],
    psi0: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<InnerResult> {
    let h = kernel.bandwidth;
    let eval = |psi: &[f64]| -> Result<(f64, DVector<f64>)> {
        let e = evaluate(ds, &theta_at(ds, xi, psi)?, kernel, Derivatives::PSI_GRADIENT)?;
        Ok((e.loglik, e.score_psi.expect("score_psi")))
    };
    let mut psi = psi0.to_vec();
    let (mut loglik, mut grad) = eval(&psi)?;
    if !loglik.is_finite() {
        return Err(Error::InvalidStart);
    }
    if opts.ascent_max_iter == 0 {
        return Ok(InnerResult {
            params: psi,
            loglik,
            converged: false,
            iterations: 0,
        });
    }

    let mut converged = false;
    let mut iterations = 0;
    let mut trial = 1.0;
    loop {
        if h * grad.amax() < opts.ascent_tol {
            converged = true;
            break;
        }
        if iterations >= opts.ascent_max_iter {
            break;
        }
        iterations += 1;

        let g2 = grad.norm_squared();
        let mut t = trial;
        let mut accepted = None;
        for _ in 0..=opts.armijo_max_halvings {
            let cand: Vec<f64> = psi.iter().zip(grad.iter()).map(|(p, g)| p + t * g).collect();
            let (l, g) = eval(&cand)?;
            if l.is_finite() && l >= loglik + opts.armijo_c * t * g2 {
                accepted = Some((cand, l, g));
                break;
            }
            t *= opts.armijo_shrink;
        }
        match accepted {
            Some((cand, l, g)) => {
                psi = cand;
                grad = g;
                loglik = l;
                trial = (2.0 * t).min(1.0);
            }
            None => {
                // the line search collapsed: we are at a numerical maximum
                converged = h * grad.amax() < opts.stationarity_tol;
                break;
            }
        }
    }
    Ok(InnerResult {
        params: psi,
        loglik,
        converged,
        iterations,
    })
}

/// `ξ` start shared by all `ψ` starts: `β` from a plain Cox fit on `Z` with
/// `γ = 0`, and `γ = 0`.
pub fn initial_xi(ds: &Dataset, kernel: &KernelSpec, opts: &FitOptions) -> Result<Vec<f64>> {
    let dims = ds.dims();
    let xi0 = vec![0.0; dims.xi_len()];
    let psi0 = vec![0.0; dims.q];
    Ok(newton_ascent(ds, &xi0, &psi0, kernel, opts, dims.p1)?.params)
}

fn stationarity(ds: &Dataset, xi: &[f64], psi: &[f64], kernel: &KernelSpec) -> Result<TraceRecord> {
    let want = Derivatives {
        score_xi: true,
        score_psi: true,
        ..Derivatives::NONE
    };
    let e = evaluate(ds, &theta_at(ds, xi, psi)?, kernel, want)?;
    Ok(TraceRecord {
        loglik: e.loglik,
        score_xi_norm: e.score_xi.map_or(0.0, |g| g.amax()),
        score_psi_norm: e.score_psi.map_or(0.0, |g| g.amax()),
    })
}

/// Alternating maximization from an explicit `(ξ, ψ)` start. Covariance is
/// not computed here.
pub fn alternate_fit_from(
    ds: &Dataset,
    xi0: &[f64],
    psi_start: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let mut xi = xi0.to_vec();
    let mut psi = psi_start.to_vec();
    theta_at(ds, &xi, &psi)?.check_dims(ds.dims())?;

    let mut previous = crate::likelihood::smoothed_log_partial_likelihood(
        ds,
        &theta_at(ds, &xi, &psi)?,
        kernel,
    )?;
    if !previous.is_finite() {
        return Err(Error::InvalidStart);
    }
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.outer_max_iter {
        let step_xi = maximize_xi_given_psi(ds, &xi, &psi, kernel, opts)?;
        xi = step_xi.params;
        let step_psi = maximize_psi_given_xi(ds, &xi, &psi, kernel, opts)?;
        psi = step_psi.params;

        let mut record = stationarity(ds, &xi, &psi, kernel)?;
        if (record.loglik - previous).abs() < opts.outer_tol {
            // the ψ step moved last; re-solve ξ at the final ψ
            xi = maximize_xi_given_psi(ds, &xi, &psi, kernel, opts)?.params;
            record = stationarity(ds, &xi, &psi, kernel)?;
            trace.push(record);
            converged = record.score_xi_norm < opts.stationarity_tol
                && kernel.bandwidth * record.score_psi_norm < opts.stationarity_tol;
            break;
        }
        trace.push(record);
        previous = record.loglik;
    }

    let loglik = trace.last().map_or(previous, |r| r.loglik);
    Ok(FitResult {
        theta_hat: theta_at(ds, &xi, &psi)?,
        loglik,
        covariance_xi: None,
        covariance_error: None,
        converged,
        n_starts: 1,
        best_start: psi_start.to_vec(),
        trace,
        bandwidth_used: kernel.bandwidth,
        start_summaries: vec![],
    })
}

fn attach_covariance(ds: &Dataset, kernel: &KernelSpec, fit: &mut FitResult) {
    match inference::covariance_xi(ds, &fit.theta_hat, kernel) {
        Ok(cov) => fit.covariance_xi = Some(cov),
        Err(e) => fit.covariance_error = Some(e.to_string()),
    }
}

/// Alternating maximization from a single `ψ` start.
pub fn alternate_fit(
    ds: &Dataset,
    psi_start: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    let xi0 = initial_xi(ds, kernel, opts)?;
    let mut fit = alternate_fit_from(ds, &xi0, psi_start, kernel, opts)?;
    fit.start_summaries = vec![summary(psi_start, &Ok(fit.clone()))];
    attach_covariance(ds, kernel, &mut fit);
    Ok(fit)
}

fn summary(start: &[f64], r: &Result<FitResult>) -> StartSummary {
    match r {
        Ok(f) => StartSummary {
            psi_start: start.to_vec(),
            loglik: Some(f.loglik),
            converged: f.converged,
            error: None,
        },
        Err(e) => StartSummary {
            psi_start: start.to_vec(),
            loglik: None,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Runs [`alternate_fit`] from every start in `opts.psi_starts` and keeps the
/// fit with the largest smoothed log partial likelihood. Ties go to the
/// smaller `‖ψ̂‖`, then to the earlier start.
pub fn multistart_fit(ds: &Dataset, kernel: &KernelSpec, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let starts = opts.psi_starts.points(ds.dims().q)?;
    let xi0 = initial_xi(ds, kernel, opts)?;
    let results: Vec<Result<FitResult>> = starts
        .par_iter()
        .map(|s| alternate_fit_from(ds, &xi0, s, kernel, opts))
        .collect();
    let summaries: Vec<StartSummary> = starts
        .iter()
        .zip(&results)
        .map(|(s, r)| summary(s, r))
        .collect();

    let mut best: Option<&FitResult> = None;
    for fit in results.iter().flatten() {
        let better = match best {
            None => true,
            Some(b) => {
                fit.loglik > b.loglik
                    || (fit.loglik == b.loglik && norm(&fit.theta_hat.psi) < norm(&b.theta_hat.psi))
            }
        };
        if better {
            best = Some(fit);
        }
    }
    let Some(best) = best else {
        let failures = starts
            .iter()
            .zip(results)
            .enumerate()
            .map(|(i, (s, r))| StartFailure {
                start_index: i,
                psi_start: s.clone(),
                cause: r.err().map(|e| e.to_string()).unwrap_or_default(),
            })
            .collect();
        return Err(Error::AllStartsFailed(failures));
    };

    let mut fit = best.clone();
    fit.n_starts = starts.len();
    fit.start_summaries = summaries;
    attach_covariance(ds, kernel, &mut fit);
    Ok(fit)
}

/// `ξ̂` with `ψ` treated as known: Newton in `ξ` at a fixed `ψ`, started from
/// the plain Cox fit.
pub fn fit_xi_known_psi(
    ds: &Dataset,
    psi: &[f64],
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let xi0 = initial_xi(ds, kernel, opts)?;
    let step = maximize_xi_given_psi(ds, &xi0, psi, kernel, opts)?;
    let record = stationarity(ds, &step.params, psi, kernel)?;
    let mut fit = FitResult {
        theta_hat: theta_at(ds, &step.params, psi)?,
        loglik: step.loglik,
        covariance_xi: None,
        covariance_error: None,
        converged: step.converged,
        n_starts: 1,
        best_start: psi.to_vec(),
        trace: vec![record],
        bandwidth_used: kernel.bandwidth,
        start_summaries: vec![],
    };
    attach_covariance(ds, kernel, &mut fit);
    Ok(fit)
}

/// Dense `(p1 + p2)²` helper used by reports.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dims, Observation};

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = (0..n)
            .map(|_| {
                let z: f64 = if rng.random::<bool>() { 1.0 } else { 0.0 };
                let v: f64 = rng.random::<f64>() * 2.0 - 1.0;
                let x: f64 = rng.random::<f64>() - 0.5;
                let on = v + 0.2 * x >= 0.0;
                let eta = 0.5 * z + if on { z } else { 0.0 };
                let t = -rng.random::<f64>().ln() / eta.exp();
                Observation::new(t, rng.random::<f64>() < 0.9, vec![z], vec![z], v, vec![x])
            })
            .collect();
        Dataset::new(obs, Dims::new(1, 1, 1)).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = StartSpec::default().points(2).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], vec![-1.0, -1.0]);
        assert_eq!(g[1], vec![-1.0, -0.5]);
        assert_eq!(g[24], vec![1.0, 1.0]);
        assert_eq!(StartSpec::default().points(0).unwrap(), vec![Vec::<f64>::new()]);
        let h = StartSpec::default().points(4).unwrap();
        assert_eq!(h.len(), 64);
        assert!(h.iter().flatten().all(|c| (-1.0..=1.0).contains(c)));
        for (a, b) in h[0].iter().zip([0.0, -1.0 / 3.0, -0.6, -5.0 / 7.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = StartSpec::Random { count: 7, low: -2.0, high: 2.0, seed: 3 };
        assert_eq!(r.points(3).unwrap(), r.points(3).unwrap());
        assert!(StartSpec::Explicit(vec![vec![1.0]]).points(2).is_err());
        assert!(StartSpec::Explicit(vec![]).points(2).is_err());
    }

    #[test]
    fn newton_at_stationary_point_returns_start() {
        let ds = toy(60, 1);
        let k = KernelSpec::gaussian(0.3).unwrap();
        let opts = FitOptions::default();
        let first = maximize_xi_given_psi(&ds, &[0.0, 0.0], &[0.2], &k, &opts).unwrap();
        assert!(first.converged);
        let again = maximize_xi_given_psi(&ds, &first.params, &[0.2], &k, &opts).unwrap();
        assert!(again.converged);
        assert_eq!(again.iterations, 0);
        // only the closing full step can move it, and only at roundoff level
        for (a, b) in again.params.iter().zip(&first.params) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert!(again.loglik >= first.loglik);
    }

    #[test]
    fn zero_u_column_is_degenerate() {
        let base = toy(40, 2);
        let obs: Vec<_> = base
            .observations()
            .iter()
            .map(|o| Observation { u: vec![0.0], ..o.clone() })
            .collect();
        let ds = Dataset::new(obs, base.dims()).unwrap();
        let k = KernelSpec::gaussian(0.3).unwrap();
        let r = maximize_xi_given_psi(&ds, &[0.0, 0.0], &[0.0], &k, &FitOptions::default());
        assert!(matches!(r, Err(Error::DegenerateFit(_))), "{r:?}");
    }

    #[test]
    fn psi_ascent_edge_cases() {
        let ds = toy(50, 3);
        let k = KernelSpec::gaussian(0.3).unwrap();
        let opts = FitOptions::default();
        let r = maximize_psi_given_xi(&ds, &[0.5, 0.0], &[0.3], &k, &opts).unwrap();
        assert_eq!(r.params, vec![0.3]);
        assert!(r.converged);

        let zero = FitOptions { ascent_max_iter: 0, ..opts.clone() };
        let r = maximize_psi_given_xi(&ds, &[0.5, 1.0], &[0.3], &k, &zero).unwrap();
        assert_eq!(r.params, vec![0.3]);
        assert!(!r.converged);

        let start = crate::likelihood::smoothed_log_partial_likelihood(
            &ds,
            &ThetaParams::new(vec![0.5], vec![1.0], vec![0.3]),
            &k,
        )
        .unwrap();
        let r = maximize_psi_given_xi(&ds, &[0.5, 1.0], &[0.3], &k, &opts).unwrap();
        assert!(r.loglik >= start);
    }

    #[test]
    fn single_start_matches_alternate_fit() {
        let ds = toy(80, 4);
        let k = KernelSpec::gaussian(0.2).unwrap();
        let opts = FitOptions {
            psi_starts: StartSpec::Explicit(vec![vec![0.1]]),
            ..FitOptions::default()
        };
        let multi = multistart_fit(&ds, &k, &opts).unwrap();
        let single = alternate_fit(&ds, &[0.1], &k, &opts).unwrap();
        assert_eq!(multi.theta_hat, single.theta_hat);
        assert_eq!(multi.loglik, single.loglik);
        assert_eq!(multi.n_starts, 1);

        let dup = FitOptions {
            psi_starts: StartSpec::Explicit(vec![vec![0.1], vec![0.1], vec![0.1]]),
            ..FitOptions::default()
        };
        let d = multistart_fit(&ds, &k, &dup).unwrap();
        assert_eq!(d.theta_hat, single.theta_hat);
        assert_eq!(d.n_starts, 3);
    }

    #[test]
    fn restart_at_optimum_takes_one_outer_iteration() {
        let ds = toy(100, 5);
        let k = KernelSpec::gaussian(0.2).unwrap();
        let opts = FitOptions::default();
        let fit = alternate_fit(&ds, &[0.0], &k, &opts).unwrap();
        assert!(fit.converged);
        let again =
            alternate_fit_from(&ds, &fit.theta_hat.xi(), &fit.theta_hat.psi, &k, &opts).unwrap();
        assert_eq!(again.outer_iterations(), 1);
        for (a, b) in again.theta_hat.xi().iter().zip(fit.theta_hat.xi()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((again.theta_hat.psi[0] - fit.theta_hat.psi[0]).abs() < 1e-4);
    }

    #[test]
    fn invalid_options_rejected() {
        let ds = toy(20, 6);
        let k = KernelSpec::gaussian(0.2).unwrap();
        let opts = FitOptions { outer_tol: 0.0, ..FitOptions::default() };
        assert!(multistart_fit(&ds, &k, &opts).is_err());
    }
}
