//! Run reports: JSON for machines, fixed-width tables for people.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::model::{Dims, ThetaParams};
use crate::optimizer::StartSummary;
use crate::simulation::SimReport;

/// Significant digits used by the text renderers.
pub const TEXT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ReportError>,
    /// Only present when `--timing` was given, so that reports of the same
    /// run compare equal byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            inputs: vec![],
            warnings: vec![],
            error: None,
            timing_seconds: None,
            payload: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.payload {
            Some(Payload::Fit(fit)) => out.push_str(&render_fit(fit)),
            Some(Payload::Simulate(sim)) => out.push_str(&render_simulate(sim)),
            None => {}
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error [{}]: {}", e.code, e.message);
        }
        if let Some(t) = self.timing_seconds {
            let _ = writeln!(out, "elapsed: {} s", format_sig(t, 4));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &str, bytes: &[u8]) -> Self {
        Self {
            role: role.to_string(),
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportError {
    pub code: String,
    pub message: String,
}

impl From<&Error> for ReportError {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Fit(FitPayload),
    Simulate(SimulatePayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterNames {
    pub beta: Vec<String>,
    pub gamma: Vec<String>,
    pub psi: Vec<String>,
}

/// Intervals for `ξ = (β, γ)`, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBlock {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    /// The fitted rule written as `V + a'X ≥ b`.
    pub rule: String,
    pub inside: usize,
    pub outside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPayload {
    pub n: usize,
    pub n_events: usize,
    pub dims: Dims,
    pub names: ParameterNames,
    pub bandwidth: f64,
    pub theta_hat: ThetaParams,
    /// Standard errors of `ξ̂`; absent when the information is singular.
    pub se: Option<Vec<f64>>,
    pub ci: Option<IntervalBlock>,
    /// Estimated covariance of `ξ̂`.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub loglik: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub n_starts: usize,
    pub best_start: Vec<f64>,
    pub psi_norm: f64,
    pub score_xi_norm: f64,
    /// `h ‖∇_ψ l*_n‖∞` at the estimate.
    pub scaled_score_psi_norm: f64,
    pub subgroup: Subgroup,
    pub starts: Vec<StartSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatePayload {
    pub scenarios: Vec<SimReport>,
}

/// `x` rounded to `digits` significant digits, in plain notation when the
/// decimal exponent is in `[-5, digits)` and scientific notation otherwise.
/// Trailing zeros are dropped.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn num(x: f64) -> String {
    format_sig(x, TEXT_DIGITS)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), num)
}

/// `V + a'X ≥ b` with the intercept moved to the right-hand side.
pub fn rule_text(v_label: &str, x_names: &[String], psi: &[f64], intercept: bool) -> String {
    let mut lhs = v_label.to_string();
    let mut rhs = 0.0;
    for (k, (name, &c)) in x_names.iter().zip(psi).enumerate() {
        if intercept && k == 0 {
            rhs = -c;
            continue;
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(lhs, " {sign} {}*{name}", num(c.abs()));
    }
    format!("{lhs} >= {}", num(rhs))
}

fn render_fit(fit: &FitPayload) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n = {}, events = {}, bandwidth = {}",
        fit.n,
        fit.n_events,
        num(fit.bandwidth)
    );
    let pct = fit.ci.as_ref().map_or(95.0, |c| 100.0 * c.level);
    let _ = writeln!(
        out,
        "{:<24} {:>20} {:>20} {:>20} {:>20}",
        "parameter",
        "estimate",
        "se",
        format!("{}% lower", format_sig(pct, 4)),
        format!("{}% upper", format_sig(pct, 4))
    );
    let xi = fit.theta_hat.xi();
    let xi_names = fit
        .names
        .beta
        .iter()
        .map(|s| format!("beta[{s}]"))
        .chain(fit.names.gamma.iter().map(|s| format!("gamma[{s}]")));
    for (k, name) in xi_names.enumerate() {
        let se = fit.se.as_ref().map(|s| s[k]);
        let lo = fit.ci.as_ref().map(|c| c.lower[k]);
        let hi = fit.ci.as_ref().map(|c| c.upper[k]);
        let _ = writeln!(
            out,
            "{:<24} {:>20} {:>20} {:>20} {:>20}",
            name,
            num(xi[k]),
            opt(se),
            opt(lo),
            opt(hi)
        );
    }
    for (name, &p) in fit.names.psi.iter().zip(&fit.theta_hat.psi) {
        let _ = writeln!(out, "{:<24} {:>20}", format!("psi[{name}]"), num(p));
    }
    let _ = writeln!(out, "note: psi has no standard errors; the interval theory covers beta and gamma only");
    let _ = writeln!(out, "loglik = {}", num(fit.loglik));
    let _ = writeln!(
        out,
        "converged = {}, outer iterations = {}, starts = {}, |psi| = {}",
        fit.converged,
        fit.outer_iterations,
        fit.n_starts,
        num(fit.psi_norm)
    );
    let _ = writeln!(out, "subgroup rule: {}", fit.subgroup.rule);
    let _ = writeln!(
        out,
        "subgroup size: {} inside, {} outside",
        fit.subgroup.inside, fit.subgroup.outside
    );
    out
}

fn render_simulate(sim: &SimulatePayload) -> String {
    let mut out = String::new();
    let mut gammas: Vec<f64> = Vec::new();
    let mut ns: Vec<usize> = Vec::new();
    for s in &sim.scenarios {
        if !gammas.contains(&s.config.gamma) {
            gammas.push(s.config.gamma);
        }
        if !ns.contains(&s.config.n) {
            ns.push(s.config.n);
        }
    }
    if let Some(first) = sim.scenarios.first() {
        let _ = writeln!(
            out,
            "replications = {}, seed = {}, level = {}",
            first.config.reps,
            first.config.seed,
            num(first.config.level)
        );
    }
    for &g in &gammas {
        let _ = writeln!(out, "gamma = {}", num(g));
        let _ = writeln!(
            out,
            "{:>8} {:>16} {:>16} {:>16} {:>16} {:>12}",
            "n", "cover beta", "cover gamma", "mce", "median psi err", "converged"
        );
        for &n in &ns {
            let Some(s) = sim
                .scenarios
                .iter()
                .find(|s| s.config.n == n && s.config.gamma == g)
            else {
                continue;
            };
            let a = s.aggregates();
            let _ = writeln!(
                out,
                "{:>8} {:>16} {:>16} {:>16} {:>16} {:>12}",
                n,
                opt(a.coverage_beta),
                opt(a.coverage_gamma),
                opt(a.mean_mce),
                opt(a.median_psi_error),
                num(s.convergence_rate)
            );
        }
    }
    out
}
