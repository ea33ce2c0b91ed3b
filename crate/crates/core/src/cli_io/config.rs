//! Flat `key = value` configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{BandwidthChoice, StartSpec};
use crate::simulation::SimConfig;

/// Splits `text` into `(line number, key, value)` triples. Blank lines and
/// everything after `#` are ignored.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config {
                line,
                message: "empty key".into(),
            });
        }
        if out.iter().any(|(_, k, _): &(usize, String, String)| k == key) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.push((line, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found `{value}`")),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("cannot parse `{value}` as a number"))
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_num)
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

/// `auto` or a positive number.
pub fn parse_bandwidth(value: &str) -> std::result::Result<BandwidthChoice, String> {
    if value.eq_ignore_ascii_case("auto") {
        return Ok(BandwidthChoice::Auto);
    }
    let h: f64 = parse_num(value)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(format!("bandwidth must be positive, found `{value}`"));
    }
    Ok(BandwidthChoice::Fixed(h))
}

/// Start specifications:
///
/// - `grid:K` or `grid:K:LO:HI`: `K` points per dimension over `[LO, HI]`
/// - `random:COUNT` or `random:COUNT:LO:HI`: uniform draws, seeded by `seed`
/// - `explicit:a,b;c,d`: the listed `ψ` vectors
pub fn parse_starts(value: &str, seed: u64) -> std::result::Result<StartSpec, String> {
    let (kind, rest) = value.split_once(':').unwrap_or((value, ""));
    let parts: Vec<&str> = if rest.is_empty() { vec![] } else { rest.split(':').collect() };
    let bounds = |p: &[&str]| -> std::result::Result<(f64, f64), String> {
        match p {
            [] => Ok((-1.0, 1.0)),
            [lo, hi] => {
                let (lo, hi) = (parse_num::<f64>(lo)?, parse_num::<f64>(hi)?);
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(format!("invalid start box [{lo}, {hi}]"));
                }
                Ok((lo, hi))
            }
            _ => Err(format!("expected `{kind}:N` or `{kind}:N:LO:HI`")),
        }
    };
    match kind {
        "grid" => {
            let k: usize = parse_num(parts.first().ok_or("grid needs a point count")?)?;
            let (low, high) = bounds(&parts[1..])?;
            Ok(StartSpec::Grid {
                points_per_dim: k,
                low,
                high,
                quasi_random_count: 64,
            })
        }
        "random" => {
            let count: usize = parse_num(parts.first().ok_or("random needs a count")?)?;
            let (low, high) = bounds(&parts[1..])?;
            Ok(StartSpec::Random {
                count,
                low,
                high,
                seed,
            })
        }
        "explicit" => {
            let points = rest
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|p| {
                    p.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(parse_num::<f64>)
                        .collect::<std::result::Result<Vec<f64>, String>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if points.is_empty() {
                return Err("explicit needs at least one start".into());
            }
            Ok(StartSpec::Explicit(points))
        }
        _ => Err(format!("unknown start kind `{kind}` (grid, random or explicit)")),
    }
}

/// A simulation configuration, with `n` and `gamma` allowed to list several
/// values. Each `(n, gamma)` pair is one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub base: SimConfig,
    pub n_values: Vec<usize>,
    pub gamma_values: Vec<f64>,
}

impl Default for StudyPlan {
    fn default() -> Self {
        let base = SimConfig::default();
        Self {
            n_values: vec![base.n],
            gamma_values: vec![base.gamma],
            base,
        }
    }
}

impl StudyPlan {
    /// Scenarios ordered by `gamma`, then `n`.
    pub fn scenarios(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &gamma in &self.gamma_values {
            for &n in &self.n_values {
                out.push(SimConfig {
                    n,
                    gamma,
                    ..self.base.clone()
                });
            }
        }
        out
    }

    /// Recognised keys are the [`SimConfig`] fields, `starts`, `bandwidth`
    /// and the [`FitOptions`](crate::optimizer::FitOptions) tolerances.
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = StudyPlan::default();
        let mut starts: Option<(usize, String)> = None;
        let cfg = &mut plan.base;
        for (line, key, value) in parse_key_values(text)? {
            let bad = |message: String| Error::Config { line, message };
            let v = value.as_str();
            match key.as_str() {
                "n" => plan.n_values = parse_list(v).map_err(bad)?,
                "gamma" => plan.gamma_values = parse_list(v).map_err(bad)?,
                "reps" => cfg.reps = parse_num(v).map_err(bad)?,
                "beta" => cfg.beta = parse_num(v).map_err(bad)?,
                "psi1" => cfg.psi1 = parse_num(v).map_err(bad)?,
                "psi2" => cfg.psi2 = parse_num(v).map_err(bad)?,
                "baseline_lambda" => cfg.baseline_lambda = parse_num(v).map_err(bad)?,
                "censor_time" => cfg.censor_time = parse_num(v).map_err(bad)?,
                "z_prob" => cfg.z_prob = parse_num(v).map_err(bad)?,
                "v_mean" => cfg.v_mean = parse_num(v).map_err(bad)?,
                "v_var" => cfg.v_var = parse_num(v).map_err(bad)?,
                "x_low" => cfg.x_low = parse_num(v).map_err(bad)?,
                "x_high" => cfg.x_high = parse_num(v).map_err(bad)?,
                "seed" => cfg.seed = parse_num(v).map_err(bad)?,
                "level" => cfg.level = parse_num(v).map_err(bad)?,
                "psi_known" => cfg.psi_known = parse_bool(v).map_err(bad)?,
                "bandwidth" => cfg.fit.bandwidth = parse_bandwidth(v).map_err(bad)?,
                "starts" => starts = Some((line, value.clone())),
                "outer_tol" => cfg.fit.outer_tol = parse_num(v).map_err(bad)?,
                "outer_max_iter" => cfg.fit.outer_max_iter = parse_num(v).map_err(bad)?,
                "newton_max_iter" => cfg.fit.newton_max_iter = parse_num(v).map_err(bad)?,
                "newton_tol" => cfg.fit.newton_tol = parse_num(v).map_err(bad)?,
                "ascent_max_iter" => cfg.fit.ascent_max_iter = parse_num(v).map_err(bad)?,
                "ascent_tol" => cfg.fit.ascent_tol = parse_num(v).map_err(bad)?,
                "armijo_c" => cfg.fit.armijo_c = parse_num(v).map_err(bad)?,
                "armijo_shrink" => cfg.fit.armijo_shrink = parse_num(v).map_err(bad)?,
                "armijo_max_halvings" => cfg.fit.armijo_max_halvings = parse_num(v).map_err(bad)?,
                "ridge_floor" => cfg.fit.ridge_floor = parse_num(v).map_err(bad)?,
                "stationarity_tol" => cfg.fit.stationarity_tol = parse_num(v).map_err(bad)?,
                _ => return Err(Error::UnknownConfigKey(key)),
            }
        }
        // random starts take the study seed, whatever order the keys came in
        if let Some((line, value)) = starts {
            plan.base.fit.psi_starts =
                parse_starts(&value, plan.base.seed).map_err(|message| Error::Config { line, message })?;
        }
        plan.base.n = plan.n_values[0];
        plan.base.gamma = plan.gamma_values[0];
        for cfg in plan.scenarios() {
            cfg.validate()?;
        }
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}
