//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use cpcox::{kernel_cdf, Dataset, Dims, KernelSpec, Observation, ThetaParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random dataset with `x = [1, x2, ...]`. With `ties`, times are drawn
/// from a handful of values so that tie groups are common.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, dims: Dims, ties: bool) -> Dataset {
    loop {
        let obs: Vec<Observation> = (0..n)
            .map(|_| {
                let time = if ties {
                    f64::from(rng.random_range(1..=6u8))
                } else {
                    rng.random_range(0.01..10.0)
                };
                let status = rng.random_bool(0.7);
                let z = (0..dims.p1).map(|_| normal(rng)).collect();
                let u = (0..dims.p2).map(|_| rng.random_range(0.0..1.5)).collect();
                let v = normal(rng);
                let mut x: Vec<f64> = (0..dims.q).map(|_| rng.random_range(-1.0..1.0)).collect();
                if let Some(first) = x.first_mut() {
                    *first = 1.0;
                }
                Observation::new(time, status, z, u, v, x)
            })
            .collect();
        if obs.iter().any(|o| o.status) {
            return Dataset::new(obs, dims).unwrap();
        }
    }
}

pub fn random_theta(rng: &mut ChaCha8Rng, dims: Dims) -> ThetaParams {
    ThetaParams::new(
        (0..dims.p1).map(|_| rng.random_range(-1.0..1.0)).collect(),
        (0..dims.p2).map(|_| rng.random_range(-1.5..1.5)).collect(),
        (0..dims.q).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear predictor by direct substitution; `h = None` uses the indicator.
pub fn naive_eta(o: &Observation, th: &ThetaParams, h: Option<f64>) -> f64 {
    let s = o.v + dot(&o.x, &th.psi);
    let w = match h {
        Some(h) => kernel_cdf(s / h, &KernelSpec::gaussian(h).unwrap()),
        None => f64::from(u8::from(s >= 0.0)),
    };
    dot(&o.z, &th.beta) + dot(&o.u, &th.gamma) * w
}

/// `n⁻¹ Σ_i δ_i [η_i − log(n⁻¹ Σ_j 1{T_j ≥ T_i} e^{η_j})]` by double loop.
pub fn naive_loglik(ds: &Dataset, th: &ThetaParams, h: Option<f64>) -> f64 {
    let obs = ds.observations();
    let n = obs.len() as f64;
    let eta: Vec<f64> = obs.iter().map(|o| naive_eta(o, th, h)).collect();
    let mut total = 0.0;
    for (i, oi) in obs.iter().enumerate() {
        if !oi.status {
            continue;
        }
        let risk: f64 = obs
            .iter()
            .zip(&eta)
            .filter(|(oj, _)| oj.time >= oi.time)
            .map(|(_, e)| e.exp())
            .sum();
        total += eta[i] - (risk / n).ln();
    }
    total / n
}

pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

pub const FD_STEP: f64 = 1e-6;

/// Central difference of `f` along each coordinate of `at`.
pub fn fd_gradient(at: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let mut p = at.to_vec();
            let mut m = at.to_vec();
            p[k] += FD_STEP;
            m[k] -= FD_STEP;
            (f(&p) - f(&m)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Central-difference Jacobian: column `k` is the derivative along `at[k]`.
pub fn fd_jacobian(at: &[f64], rows: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(rows, at.len());
    for k in 0..at.len() {
        let mut p = at.to_vec();
        let mut m = at.to_vec();
        p[k] += FD_STEP;
        m[k] -= FD_STEP;
        let (fp, fm) = (f(&p), f(&m));
        for r in 0..rows {
            j[(r, k)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    j
}

pub fn with_xi(th: &ThetaParams, xi: &[f64]) -> ThetaParams {
    let p1 = th.beta.len();
    ThetaParams::new(xi[..p1].to_vec(), xi[p1..].to_vec(), th.psi.clone())
}

pub fn with_psi(th: &ThetaParams, psi: &[f64]) -> ThetaParams {
    ThetaParams::new(th.beta.clone(), th.gamma.clone(), psi.to_vec())
}

/// Plain Cox regression on `Z` by Newton's method with O(n²) risk sums and
/// Breslow ties, written without the library's sweep.
pub fn naive_cox_beta(ds: &Dataset) -> Vec<f64> {
    let obs = ds.observations();
    let p = ds.dims().p1;
    let mut beta = DVector::<f64>::zeros(p);
    for _ in 0..100 {
        let mut g = DVector::<f64>::zeros(p);
        let mut info = DMatrix::<f64>::zeros(p, p);
        for oi in obs.iter().filter(|o| o.status) {
            let mut s0 = 0.0;
            let mut s1 = DVector::<f64>::zeros(p);
            let mut s2 = DMatrix::<f64>::zeros(p, p);
            for oj in obs.iter().filter(|o| o.time >= oi.time) {
                let z = DVector::from_column_slice(&oj.z);
                let w = z.dot(&beta).exp();
                s0 += w;
                s1 += &z * w;
                s2 += &z * z.transpose() * w;
            }
            let zi = DVector::from_column_slice(&oi.z);
            let mean = &s1 / s0;
            g += zi - &mean;
            info += s2 / s0 - &mean * mean.transpose();
        }
        let step = info.cholesky().expect("positive definite information").solve(&g);
        beta += &step;
        if step.amax() < 1e-15 {
            break;
        }
    }
    beta.as_slice().to_vec()
}

/// The fixed five-subject fixture: `Z = U`, `X = [1, x]`, one tie.
pub fn five_subjects() -> Dataset {
    let rows = [
        (2.0, true, 1.0, -0.3, 0.2),
        (3.5, false, 0.0, 0.6, -0.4),
        (1.2, true, 1.0, -1.1, 0.5),
        (3.5, true, 0.0, 0.1, 0.1),
        (0.7, true, 1.0, 0.4, -0.2),
    ];
    let obs = rows
        .iter()
        .map(|&(t, d, z, v, x)| Observation::new(t, d, vec![z], vec![z], v, vec![1.0, x]))
        .collect();
    Dataset::new(obs, Dims::new(1, 1, 2)).unwrap()
}
