//! Monte Carlo design: data generation, per-replication fits and coverage
//! aggregation.
//!
//! Subjects are drawn with `Z ~ Bernoulli(p)`, `V ~ N(μ, σ²)`,
//! `X ~ U(a, b)` independently, and a survival time from the constant
//! baseline hazard `λ exp{Zβ + Zγ 1{V + ψ1 + Xψ2 ≥ 0}}`, administratively
//! censored at `C`. The estimator sees `U = Z` and `X = (1, X)`, so the true
//! plane coefficients are `ψ0 = (ψ1, ψ2)`.
//!
//! Each replication owns a ChaCha stream selected by `(seed, rep_id)`, so a
//! study gives identical records regardless of thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{classification_error, confidence_intervals_named, xi_names};
use crate::model::{Dataset, Dims, Observation, ThetaParams};
use crate::optimizer::{fit_xi_known_psi, multistart_fit, FitOptions, FitResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub reps: usize,
    pub beta: f64,
    pub gamma: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub baseline_lambda: f64,
    pub censor_time: f64,
    pub z_prob: f64,
    pub v_mean: f64,
    /// Variance (not standard deviation) of `V`.
    pub v_var: f64,
    pub x_low: f64,
    pub x_high: f64,
    pub seed: u64,
    pub level: f64,
    /// Fit `ξ` with `ψ` fixed at the truth instead of estimating it.
    pub psi_known: bool,
    pub fit: FitOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            reps: 1000,
            beta: 0.8,
            gamma: 1.0,
            psi1: 0.4,
            psi2: 0.3,
            baseline_lambda: 1.0,
            censor_time: 15.0,
            z_prob: 0.5,
            v_mean: -2.0,
            v_var: 4.0,
            x_low: -0.5,
            x_high: 0.5,
            seed: 20220209,
            level: 0.95,
            psi_known: false,
            fit: FitOptions::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.baseline_lambda.is_finite() && self.baseline_lambda > 0.0) {
            return bad(format!("baseline_lambda must be positive, got {}", self.baseline_lambda));
        }
        if !(self.censor_time > 0.0) {
            return bad(format!("censor_time must be positive, got {}", self.censor_time));
        }
        if !(0.0..=1.0).contains(&self.z_prob) {
            return bad(format!("z_prob must lie in [0, 1], got {}", self.z_prob));
        }
        if !(self.v_var.is_finite() && self.v_var > 0.0) {
            return bad(format!("v_var must be positive, got {}", self.v_var));
        }
        if !(self.x_low.is_finite() && self.x_high.is_finite() && self.x_low <= self.x_high) {
            return bad(format!("x range [{}, {}] is invalid", self.x_low, self.x_high));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        let finite = [self.beta, self.gamma, self.psi1, self.psi2, self.v_mean];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("model coefficients must be finite".into());
        }
        self.fit.validate()
    }

    pub fn psi_true(&self) -> Vec<f64> {
        vec![self.psi1, self.psi2]
    }

    pub fn xi_true(&self) -> Vec<f64> {
        vec![self.beta, self.gamma]
    }
}

/// A generated sample with its true subgroup memberships.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub dataset: Dataset,
    pub psi_true: Vec<f64>,
    pub membership: Vec<bool>,
}

/// RNG for one replication: ChaCha8 keyed by `seed`, stream `rep_id`.
pub fn replication_rng(seed: u64, rep_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep_id);
    rng
}

pub fn generate_dataset(cfg: &SimConfig, rep_id: u64) -> Result<SimulatedSample> {
    cfg.validate()?;
    let mut rng = replication_rng(cfg.seed, rep_id);
    let z_dist = Bernoulli::new(cfg.z_prob).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let v_dist = Normal::new(cfg.v_mean, cfg.v_var.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let x_dist = Uniform::new_inclusive(cfg.x_low, cfg.x_high)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut observations = Vec::with_capacity(cfg.n);
    let mut membership = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let z = if z_dist.sample(&mut rng) { 1.0 } else { 0.0 };
        let v = v_dist.sample(&mut rng);
        let x = x_dist.sample(&mut rng);
        let u: f64 = rng.random();
        let inside = v + cfg.psi1 + x * cfg.psi2 >= 0.0;
        let eta = z * cfg.beta + if inside { z * cfg.gamma } else { 0.0 };
        let latent = -(1.0 - u).ln() / (cfg.baseline_lambda * eta.exp());
        let status = latent <= cfg.censor_time;
        let time = latent.min(cfg.censor_time);
        observations.push(Observation::new(time, status, vec![z], vec![z], v, vec![1.0, x]));
        membership.push(inside);
    }
    let dataset = Dataset::new(observations, Dims::new(1, 1, 2))?;
    Ok(SimulatedSample {
        dataset,
        psi_true: cfg.psi_true(),
        membership,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep_id: u64,
    pub n_events: usize,
    pub converged: bool,
    /// Set when the fit or its covariance failed; such records carry no CI.
    pub error: Option<String>,
    pub theta_hat: Option<ThetaParams>,
    pub loglik: Option<f64>,
    /// Standard errors of `(β̂, γ̂)`.
    pub se: Option<Vec<f64>>,
    pub ci_lower: Option<Vec<f64>>,
    pub ci_upper: Option<Vec<f64>>,
    pub beta_covered: Option<bool>,
    pub gamma_covered: Option<bool>,
    pub mce: Option<f64>,
    /// `‖ψ̂ − ψ0‖`
    pub psi_error: Option<f64>,
}

impl ReplicationRecord {
    pub fn has_ci(&self) -> bool {
        self.ci_lower.is_some()
    }
}

fn fit_sample(cfg: &SimConfig, sample: &SimulatedSample) -> Result<FitResult> {
    let ds = &sample.dataset;
    let kernel = cfg.fit.kernel(ds.n())?;
    if cfg.psi_known {
        fit_xi_known_psi(ds, &sample.psi_true, &kernel, &cfg.fit)
    } else {
        multistart_fit(ds, &kernel, &cfg.fit)
    }
}

/// Generate, fit, and score one replication. Failures are recorded, never
/// propagated.
pub fn run_replication(cfg: &SimConfig, rep_id: u64) -> ReplicationRecord {
    let mut record = ReplicationRecord {
        rep_id,
        n_events: 0,
        converged: false,
        error: None,
        theta_hat: None,
        loglik: None,
        se: None,
        ci_lower: None,
        ci_upper: None,
        beta_covered: None,
        gamma_covered: None,
        mce: None,
        psi_error: None,
    };
    let sample = match generate_dataset(cfg, rep_id) {
        Ok(s) => s,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let ds = &sample.dataset;
    record.n_events = ds.n_events();
    let fit = match fit_sample(cfg, &sample) {
        Ok(f) => f,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.converged = fit.converged;
    record.loglik = Some(fit.loglik);
    let psi_hat = fit.theta_hat.psi.clone();
    record.mce = classification_error(ds, &psi_hat, &sample.psi_true).ok();
    record.psi_error = Some(
        psi_hat
            .iter()
            .zip(&sample.psi_true)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt(),
    );
    let xi_hat = fit.theta_hat.xi();
    record.theta_hat = Some(fit.theta_hat);

    let Some(cov) = fit.covariance_xi else {
        record.error = fit.covariance_error.or(Some("covariance unavailable".into()));
        return record;
    };
    let names = xi_names(ds.dims());
    match confidence_intervals_named(&names, &xi_hat, &cov.information_inverse, ds.n(), cfg.level) {
        Ok(cis) => {
            let truth = cfg.xi_true();
            record.se = Some(cis.iter().map(|c| c.std_error).collect());
            record.ci_lower = Some(cis.iter().map(|c| c.lower).collect());
            record.ci_upper = Some(cis.iter().map(|c| c.upper).collect());
            record.beta_covered = Some(cis[0].contains(truth[0]));
            record.gamma_covered = Some(cis[1].contains(truth[1]));
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Summary statistics over a subset of replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Records with a confidence interval in this subset.
    pub replications: usize,
    pub coverage_beta: Option<f64>,
    pub coverage_gamma: Option<f64>,
    pub mean_mce: Option<f64>,
    pub mean_beta: Option<f64>,
    pub sd_beta: Option<f64>,
    pub mean_gamma: Option<f64>,
    pub sd_gamma: Option<f64>,
    pub mean_se_beta: Option<f64>,
    pub mean_se_gamma: Option<f64>,
    pub mean_psi: Option<Vec<f64>>,
    pub sd_psi: Option<Vec<f64>>,
    pub median_psi_error: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

fn fraction(flags: &[bool]) -> Option<f64> {
    (!flags.is_empty()).then(|| flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

/// Aggregates over records that carry a confidence interval.
pub fn aggregate<'a>(records: impl IntoIterator<Item = &'a ReplicationRecord>) -> Aggregates {
    let recs: Vec<&ReplicationRecord> = records.into_iter().filter(|r| r.has_ci()).collect();
    let col = |f: &dyn Fn(&ReplicationRecord) -> Option<f64>| -> Vec<f64> {
        recs.iter().filter_map(|r| f(r)).collect()
    };
    let betas = col(&|r| r.theta_hat.as_ref().map(|t| t.beta[0]));
    let gammas = col(&|r| r.theta_hat.as_ref().map(|t| t.gamma[0]));
    let q = recs
        .first()
        .and_then(|r| r.theta_hat.as_ref())
        .map_or(0, |t| t.psi.len());
    let psi_cols: Vec<Vec<f64>> = (0..q)
        .map(|k| col(&|r| r.theta_hat.as_ref().map(|t| t.psi[k])))
        .collect();
    let beta_hits: Vec<bool> = recs.iter().filter_map(|r| r.beta_covered).collect();
    let gamma_hits: Vec<bool> = recs.iter().filter_map(|r| r.gamma_covered).collect();
    Aggregates {
        replications: recs.len(),
        coverage_beta: fraction(&beta_hits),
        coverage_gamma: fraction(&gamma_hits),
        mean_mce: mean(&col(&|r| r.mce)),
        mean_beta: mean(&betas),
        sd_beta: sd(&betas),
        mean_gamma: mean(&gammas),
        sd_gamma: sd(&gammas),
        mean_se_beta: mean(&col(&|r| r.se.as_ref().map(|s| s[0]))),
        mean_se_gamma: mean(&col(&|r| r.se.as_ref().map(|s| s[1]))),
        mean_psi: (!recs.is_empty() && q > 0)
            .then(|| psi_cols.iter().map(|c| mean(c).unwrap_or(f64::NAN)).collect()),
        sd_psi: (recs.len() >= 2 && q > 0)
            .then(|| psi_cols.iter().map(|c| sd(c).unwrap_or(f64::NAN)).collect()),
        median_psi_error: median(&col(&|r| r.psi_error)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub records: Vec<ReplicationRecord>,
    /// Over converged replications only.
    pub converged_only: Aggregates,
    /// Over every replication that produced an interval, converged or not.
    pub inclusive: Aggregates,
    pub convergence_rate: f64,
    pub failures: usize,
}

impl SimReport {
    pub fn from_records(config: SimConfig, records: Vec<ReplicationRecord>) -> Self {
        let converged_only = aggregate(records.iter().filter(|r| r.converged));
        let inclusive = aggregate(&records);
        let convergence_rate =
            records.iter().filter(|r| r.converged).count() as f64 / records.len().max(1) as f64;
        let failures = records.iter().filter(|r| !r.has_ci()).count();
        Self {
            config,
            records,
            converged_only,
            inclusive,
            convergence_rate,
            failures,
        }
    }

    /// Headline aggregates: converged replications.
    pub fn aggregates(&self) -> &Aggregates {
        &self.converged_only
    }
}

/// Runs `cfg.reps` replications on the current rayon pool.
pub fn run_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let records: Vec<ReplicationRecord> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep))
        .collect();
    Ok(SimReport::from_records(cfg.clone(), records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_shaped() {
        let cfg = SimConfig { n: 50, ..SimConfig::default() };
        let a = generate_dataset(&cfg, 3).unwrap();
        let b = generate_dataset(&cfg, 3).unwrap();
        let c = generate_dataset(&cfg, 4).unwrap();
        assert_eq!(a.dataset.observations(), b.dataset.observations());
        assert_ne!(a.dataset.observations(), c.dataset.observations());
        assert_eq!(a.dataset.dims(), Dims::new(1, 1, 2));
        for (o, &m) in a.dataset.observations().iter().zip(&a.membership) {
            assert_eq!(o.z, o.u);
            assert_eq!(o.x[0], 1.0);
            assert!((-0.5..=0.5).contains(&o.x[1]));
            assert_eq!(m, o.v + 0.4 + 0.3 * o.x[1] >= 0.0);
            assert!(o.time <= 15.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { n: 1, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { reps: 0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { baseline_lambda: 0.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { v_var: -1.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn summary_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(sd(&[1.0]), None);
        assert!((sd(&[1.0, 3.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fraction(&[true, false, true, true]), Some(0.75));
    }
}
