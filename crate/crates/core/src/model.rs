//! Data and parameter types, the linear predictors and the smoothing kernel.
//!
//! The hazard of a subject with covariates `W = (Z, U, V, X)` is
//! `λ(t) exp{Z'β + U'γ 1{V + X'ψ ≥ 0}}`. The coefficient of `V` is fixed at
//! one, so `ψ` only carries the coefficients of `X`. Smoothed estimation
//! replaces the indicator with `K((V + X'ψ)/h)` for a distribution-function
//! kernel `K` and bandwidth `h`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariate block sizes: `p1 = dim Z`, `p2 = dim U`, `q = dim X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub p1: usize,
    pub p2: usize,
    pub q: usize,
}

impl Dims {
    pub fn new(p1: usize, p2: usize, q: usize) -> Self {
        Self { p1, p2, q }
    }

    /// Dimension of the regression parameter `ξ = (β, γ)`.
    pub fn xi_len(&self) -> usize {
        self.p1 + self.p2
    }
}

/// One subject's censored survival record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub status: bool,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: f64,
    pub x: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, status: bool, z: Vec<f64>, u: Vec<f64>, v: f64, x: Vec<f64>) -> Self {
        Self {
            time,
            status,
            z,
            u,
            v,
            x,
        }
    }

    fn check_dims(&self, dims: &Dims) -> Result<()> {
        if self.z.len() != dims.p1 || self.u.len() != dims.p2 || self.x.len() != dims.q {
            return Err(Error::InvalidArgument(format!(
                "observation has dims ({}, {}, {}), expected ({}, {}, {})",
                self.z.len(),
                self.u.len(),
                self.x.len(),
                dims.p1,
                dims.p2,
                dims.q
            )));
        }
        Ok(())
    }
}

/// Time-sorted, row-major copies of the covariates used by the likelihood
/// sweeps. Rows are ordered by nondecreasing time.
#[derive(Debug, Clone)]
pub(crate) struct SortedColumns {
    pub time: Vec<f64>,
    pub status: Vec<bool>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    /// Half-open row ranges of equal times, in ascending time order.
    pub tie_groups: Vec<(usize, usize)>,
}

/// An immutable sample of observations sharing one set of dimensions.
#[derive(Debug, Clone)]
pub struct Dataset {
    observations: Vec<Observation>,
    dims: Dims,
    sort_index: Vec<usize>,
    n_events: usize,
    sorted: SortedColumns,
}

impl Dataset {
    /// Validates and indexes a sample. Rejects empty samples, samples without
    /// events, inconsistent dimensions and non-finite values.
    pub fn new(observations: Vec<Observation>, dims: Dims) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidData("dataset has no observations".into()));
        }
        if dims.xi_len() == 0 {
            return Err(Error::InvalidArgument(
                "at least one of Z or U must be non-empty".into(),
            ));
        }
        for (i, obs) in observations.iter().enumerate() {
            obs.check_dims(&dims)
                .map_err(|e| Error::InvalidData(format!("observation {i}: {e}")))?;
            if !(obs.time.is_finite() && obs.time >= 0.0) {
                return Err(Error::InvalidData(format!(
                    "observation {i}: time must be finite and nonnegative, got {}",
                    obs.time
                )));
            }
            let finite = obs.v.is_finite()
                && obs.z.iter().chain(&obs.u).chain(&obs.x).all(|c| c.is_finite());
            if !finite {
                return Err(Error::InvalidData(format!(
                    "observation {i}: covariates must be finite"
                )));
            }
        }
        let n_events = observations.iter().filter(|o| o.status).count();
        if n_events == 0 {
            return Err(Error::NoEvents);
        }

        let mut sort_index: Vec<usize> = (0..observations.len()).collect();
        sort_index.sort_by(|&a, &b| observations[a].time.total_cmp(&observations[b].time));
        let sorted = SortedColumns::build(&observations, &sort_index, &dims);

        Ok(Self {
            observations,
            dims,
            sort_index,
            n_events,
            sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Permutation putting observations in nondecreasing time order.
    pub fn sort_index(&self) -> &[usize] {
        &self.sort_index
    }

    pub(crate) fn sorted(&self) -> &SortedColumns {
        &self.sorted
    }
}

impl SortedColumns {
    fn build(observations: &[Observation], order: &[usize], dims: &Dims) -> Self {
        let n = order.len();
        let mut cols = SortedColumns {
            time: Vec::with_capacity(n),
            status: Vec::with_capacity(n),
            z: Vec::with_capacity(n * dims.p1),
            u: Vec::with_capacity(n * dims.p2),
            v: Vec::with_capacity(n),
            x: Vec::with_capacity(n * dims.q),
            tie_groups: Vec::new(),
        };
        for &i in order {
            let o = &observations[i];
            cols.time.push(o.time);
            cols.status.push(o.status);
            cols.z.extend_from_slice(&o.z);
            cols.u.extend_from_slice(&o.u);
            cols.v.push(o.v);
            cols.x.extend_from_slice(&o.x);
        }
        let mut start = 0;
        for k in 1..=n {
            if k == n || cols.time[k] != cols.time[start] {
                cols.tie_groups.push((start, k));
                start = k;
            }
        }
        cols
    }
}

/// The parameter `θ = (β, γ, ψ)`. The coefficient of `V` is implicitly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ThetaParams {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>, psi: Vec<f64>) -> Self {
        Self { beta, gamma, psi }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::new(vec![0.0; dims.p1], vec![0.0; dims.p2], vec![0.0; dims.q])
    }

    /// Splits a stacked `ξ = (β, γ)` and attaches `ψ`.
    pub fn from_xi(xi: &[f64], psi: &[f64], dims: Dims) -> Result<Self> {
        if xi.len() != dims.xi_len() || psi.len() != dims.q {
            return Err(Error::InvalidArgument(format!(
                "expected xi of length {} and psi of length {}, got {} and {}",
                dims.xi_len(),
                dims.q,
                xi.len(),
                psi.len()
            )));
        }
        Ok(Self::new(
            xi[..dims.p1].to_vec(),
            xi[dims.p1..].to_vec(),
            psi.to_vec(),
        ))
    }

    pub fn xi(&self) -> Vec<f64> {
        let mut xi = self.beta.clone();
        xi.extend_from_slice(&self.gamma);
        xi
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        if self.beta.len() != dims.p1 || self.gamma.len() != dims.p2 || self.psi.len() != dims.q {
            return Err(Error::InvalidArgument(format!(
                "theta has dims ({}, {}, {}), dataset has ({}, {}, {})",
                self.beta.len(),
                self.gamma.len(),
                self.psi.len(),
                dims.p1,
                dims.p2,
                dims.q
            )));
        }
        if !self
            .beta
            .iter()
            .chain(&self.gamma)
            .chain(&self.psi)
            .all(|c| c.is_finite())
        {
            return Err(Error::InvalidArgument("theta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum KernelKind {
    /// Standard normal distribution function.
    #[default]
    #[serde(rename = "standard-normal-cdf")]
    GaussianCdf,
}

impl KernelKind {
    pub fn cdf(self, s: f64) -> f64 {
        match self {
            KernelKind::GaussianCdf => standard_normal_cdf(s),
        }
    }

    pub fn pdf(self, s: f64) -> f64 {
        match self {
            KernelKind::GaussianCdf => standard_normal_pdf(s),
        }
    }
}

/// Smoothing kernel together with its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { kind, bandwidth })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelKind::GaussianCdf, bandwidth)
    }

    /// Gaussian kernel with the default `(ln n)^2 / n` bandwidth.
    pub fn auto(n: usize) -> Result<Self> {
        Self::gaussian(default_bandwidth(n)?)
    }
}

/// `Φ(s)` through the complementary error function; accurate in both tails.
pub fn standard_normal_cdf(s: f64) -> f64 {
    0.5 * libm::erfc(-s * FRAC_1_SQRT_2)
}

pub fn standard_normal_pdf(s: f64) -> f64 {
    (-0.5 * s * s).exp() / (2.0 * PI).sqrt()
}

pub fn kernel_cdf(s: f64, kernel: &KernelSpec) -> f64 {
    kernel.kind.cdf(s)
}

pub fn kernel_pdf(s: f64, kernel: &KernelSpec) -> f64 {
    kernel.kind.pdf(s)
}

/// `(ln n)^2 / n`.
pub fn default_bandwidth(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "bandwidth rule needs n >= 2, got {n}"
        )));
    }
    let n = n as f64;
    Ok(n.ln().powi(2) / n)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The change-plane index `V + X'ψ`.
pub fn plane_index(v: f64, x: &[f64], psi: &[f64]) -> f64 {
    v + dot(x, psi)
}

fn check_psi(obs: &Observation, psi: &[f64]) -> Result<()> {
    if obs.x.len() != psi.len() {
        return Err(Error::InvalidArgument(format!(
            "x has length {}, psi has length {}",
            obs.x.len(),
            psi.len()
        )));
    }
    Ok(())
}

fn check_theta(obs: &Observation, theta: &ThetaParams) -> Result<()> {
    if obs.z.len() != theta.beta.len() || obs.u.len() != theta.gamma.len() {
        return Err(Error::InvalidArgument(format!(
            "observation has p1={}, p2={}; theta has {}, {}",
            obs.z.len(),
            obs.u.len(),
            theta.beta.len(),
            theta.gamma.len()
        )));
    }
    check_psi(obs, &theta.psi)
}

/// Membership in the subgroup `{V + X'ψ ≥ 0}` (closed half-space).
pub fn subgroup_indicator(obs: &Observation, psi: &[f64]) -> Result<bool> {
    check_psi(obs, psi)?;
    Ok(plane_index(obs.v, &obs.x, psi) >= 0.0)
}

/// `Z'β + U'γ 1{V + X'ψ ≥ 0}`.
pub fn eta(obs: &Observation, theta: &ThetaParams) -> Result<f64> {
    check_theta(obs, theta)?;
    let on = plane_index(obs.v, &obs.x, &theta.psi) >= 0.0;
    let shift = if on { dot(&obs.u, &theta.gamma) } else { 0.0 };
    Ok(dot(&obs.z, &theta.beta) + shift)
}

/// `Z'β + U'γ K((V + X'ψ)/h)`.
pub fn eta_smoothed(obs: &Observation, theta: &ThetaParams, kernel: &KernelSpec) -> Result<f64> {
    check_theta(obs, theta)?;
    if !(kernel.bandwidth.is_finite() && kernel.bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {}",
            kernel.bandwidth
        )));
    }
    let s = plane_index(obs.v, &obs.x, &theta.psi) / kernel.bandwidth;
    Ok(dot(&obs.z, &theta.beta) + dot(&obs.u, &theta.gamma) * kernel.kind.cdf(s))
}
