//! Jointly Gaussian evaluation of the action channel `S = A + W`,
//! `Y = X + S + Z`, with the linear family
//! `X = αA + gW + G` and `U = δX + A + βW`, where `A ~ N(0, P_A)`,
//! `G ~ N(0, P_X − α²P_A − g²σ_W²)` and `(A, W, G, Z)` are independent.
//!
//! Mutual informations come from conditional variances of the covariance of
//! `(U, Y, S, A)`. The state estimate is the MMSE estimate of `S` from
//! `(U, A)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nelder_mead::{self, NmOptions};
use crate::search::restart_rng;
use rand::Rng;

/// Conditional variances below this are floored before taking logs.
pub const VAR_FLOOR: f64 = 1e-12;
/// Box bound on every parameter during optimization.
pub const PARAM_BOX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("{name} must be finite and > 0, got {value}")]
    InvalidPower { name: &'static str, value: f64 },
    #[error("infeasible parameters: P_G = {p_g} < 0")]
    Infeasible { p_g: f64 },
    #[error("distortion budget must be finite and >= 0, got {0}")]
    InvalidDistortion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussPowers {
    pub p_a: f64,
    pub p_x: f64,
    pub var_w: f64,
    pub var_z: f64,
}

impl GaussPowers {
    pub fn new(p_a: f64, p_x: f64, var_w: f64, var_z: f64) -> Result<Self, GaussError> {
        for (name, value) in [("P_A", p_a), ("P_X", p_x), ("var_W", var_w), ("var_Z", var_z)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GaussError::InvalidPower { name, value });
            }
        }
        Ok(GaussPowers { p_a, p_x, var_w, var_z })
    }

    pub fn unit() -> Self {
        GaussPowers { p_a: 1.0, p_x: 1.0, var_w: 1.0, var_z: 1.0 }
    }
}

/// `g` is the coefficient of `W` in `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub g: f64,
}

impl GaussParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, g: f64) -> Self {
        GaussParams { alpha, beta, delta, g }
    }

    fn to_vec(self) -> [f64; 4] {
        [self.alpha, self.beta, self.delta, self.g]
    }

    fn from_slice(v: &[f64]) -> Self {
        GaussParams { alpha: v[0], beta: v[1], delta: v[2], g: v[3] }
    }
}

/// Variance of `G`. Values within `1e-12` below zero count as the boundary.
pub fn p_g(params: &GaussParams, powers: &GaussPowers) -> Result<f64, GaussError> {
    let v = powers.p_x - (params.alpha * params.alpha * powers.p_a + params.g * params.g * powers.var_w);
    if v < -1e-12 {
        Err(GaussError::Infeasible { p_g: v })
    } else {
        Ok(v.max(0.0))
    }
}

/// Coefficients of `U, Y, S, A` on the independent sources `(A, W, G, Z)`.
fn loadings(p: &GaussParams) -> [[f64; 4]; 4] {
    [
        [p.delta * p.alpha + 1.0, p.delta * p.g + p.beta, p.delta, 0.0],
        [p.alpha + 1.0, p.g + 1.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ]
}

/// Index of each variable in [`gauss_covariance`].
pub mod var {
    pub const U: usize = 0;
    pub const Y: usize = 1;
    pub const S: usize = 2;
    pub const A: usize = 3;
}

fn covariance_from_sources(params: &GaussParams, src: [f64; 4]) -> [[f64; 4]; 4] {
    let l = loadings(params);
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| l[i][k] * l[j][k] * src[k]).sum();
        }
    }
    c
}

/// Covariance of `(U, Y, S, A)`.
pub fn gauss_covariance(params: &GaussParams, powers: &GaussPowers) -> Result<[[f64; 4]; 4], GaussError> {
    let pg = p_g(params, powers)?;
    Ok(covariance_from_sources(params, [powers.p_a, powers.var_w, pg, powers.var_z]))
}

/// Covariance of `(U, Y, S, A)` given `A`. Since `A` is one of the
/// independent sources, conditioning on it drops its column exactly.
pub fn gauss_covariance_given_a(params: &GaussParams, powers: &GaussPowers) -> Result<[[f64; 4]; 4], GaussError> {
    let pg = p_g(params, powers)?;
    Ok(covariance_from_sources(params, [0.0, powers.var_w, pg, powers.var_z]))
}

/// `Var(target | given)` by successive Schur complements; given variables
/// whose residual variance is below the floor carry no extra information and
/// are skipped.
pub fn conditional_variance(cov: &[[f64; 4]; 4], target: usize, given: &[usize]) -> f64 {
    let mut c = *cov;
    for &g in given {
        let vg = c[g][g];
        if vg < VAR_FLOOR {
            continue;
        }
        let col: [f64; 4] = std::array::from_fn(|i| c[i][g]);
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] -= col[i] * col[j] / vg;
            }
        }
    }
    c[target][target]
}

fn half_log_ratio(num: f64, den: f64) -> f64 {
    0.5 * (num.max(VAR_FLOOR) / den.max(VAR_FLOOR)).log2()
}

/// Mutual-information terms of one parameter point, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussTerms {
    pub i_uy: f64,
    pub i_uy_given_a: f64,
    pub i_us_given_a: f64,
}

pub fn gauss_terms(params: &GaussParams, powers: &GaussPowers) -> Result<GaussTerms, GaussError> {
    let c = gauss_covariance(params, powers)?;
    let ca = gauss_covariance_given_a(params, powers)?;
    let mi = |c: &[[f64; 4]; 4], t: usize, x: usize| {
        if c[x][x] < VAR_FLOOR {
            return 0.0;
        }
        half_log_ratio(c[t][t], conditional_variance(c, t, &[x])).max(0.0)
    };
    // Var(S|U,A) is the distortion; its closed form avoids the cancellation
    // of the generic Schur complement
    let i_us_given_a = if ca[var::U][var::U] < VAR_FLOOR {
        0.0
    } else {
        half_log_ratio(powers.var_w, gauss_distortion(params, powers)?).max(0.0)
    };
    Ok(GaussTerms { i_uy: mi(&c, var::Y, var::U), i_uy_given_a: mi(&ca, var::Y, var::U), i_us_given_a })
}

/// `I(U;Y) − I(U;S|A)`, unclamped.
pub fn gauss_rate(params: &GaussParams, powers: &GaussPowers) -> Result<f64, GaussError> {
    let t = gauss_terms(params, powers)?;
    Ok(t.i_uy - t.i_us_given_a)
}

/// `I(U;Y|A) − I(U;S|A)`, unclamped.
pub fn gauss_rate_action_independent(params: &GaussParams, powers: &GaussPowers) -> Result<f64, GaussError> {
    let t = gauss_terms(params, powers)?;
    Ok(t.i_uy_given_a - t.i_us_given_a)
}

/// `Var(S | U, A) = σ_W² − (c σ_W²)² / (δ² P_G + c² σ_W²)` with `c = δg + β`;
/// `σ_W²` when the denominator is below the variance floor.
pub fn gauss_distortion(params: &GaussParams, powers: &GaussPowers) -> Result<f64, GaussError> {
    let pg = p_g(params, powers)?;
    let c = params.delta * params.g + params.beta;
    let vw = powers.var_w;
    let e_ua2 = params.delta * params.delta * pg + c * c * vw;
    if e_ua2 < VAR_FLOOR {
        return Ok(vw);
    }
    // algebraically equal to vw − c² vw² / e_ua2, without the cancellation
    Ok((vw * params.delta * params.delta * pg / e_ua2).clamp(0.0, vw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussMode {
    Joint,
    MessageOnly,
    ActionIndependent,
}

impl GaussMode {
    pub fn name(self) -> &'static str {
        match self {
            GaussMode::Joint => "joint",
            GaussMode::MessageOnly => "message_only",
            GaussMode::ActionIndependent => "action_independent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "joint" => Some(GaussMode::Joint),
            "message_only" => Some(GaussMode::MessageOnly),
            "action_independent" => Some(GaussMode::ActionIndependent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussPoint {
    /// Objective of the mode at `params`, clamped at zero.
    pub rate: f64,
    pub raw_rate: f64,
    pub distortion: f64,
    pub params: GaussParams,
    /// Whether `distortion` meets the budget. Always true for the
    /// constrained modes.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for GaussOptions {
    fn default() -> Self {
        GaussOptions { starts: 50, seed: 0, max_iter: 4000 }
    }
}

/// Clamps to the box, then scales `(α, g)` so that `P_G ≥ 0`.
pub fn project(v: &mut [f64], powers: &GaussPowers) {
    for x in v.iter_mut() {
        *x = if x.is_finite() { x.clamp(-PARAM_BOX, PARAM_BOX) } else { 0.0 };
    }
    let load = v[0] * v[0] * powers.p_a + v[3] * v[3] * powers.var_w;
    if load > powers.p_x {
        let s = (powers.p_x / load).sqrt() * (1.0 - 1e-15);
        v[0] *= s;
        v[3] *= s;
    }
}

fn mode_value(mode: GaussMode, p: &GaussParams, powers: &GaussPowers) -> f64 {
    let r = match mode {
        GaussMode::ActionIndependent => gauss_rate_action_independent(p, powers),
        _ => gauss_rate(p, powers),
    };
    r.unwrap_or(f64::NEG_INFINITY)
}

/// Evaluates `params` under `mode` and budget `d`, with no optimization.
pub fn evaluate_point(
    params: GaussParams,
    powers: &GaussPowers,
    d: f64,
    mode: GaussMode,
) -> Result<GaussPoint, GaussError> {
    let distortion = gauss_distortion(&params, powers)?;
    let raw_rate = match mode {
        GaussMode::ActionIndependent => gauss_rate_action_independent(&params, powers)?,
        _ => gauss_rate(&params, powers)?,
    };
    Ok(GaussPoint { rate: raw_rate.max(0.0), raw_rate, distortion, params, feasible: distortion <= d + 1e-12 })
}

/// Maximizes the objective of `mode` over `(α, β, δ, g)`.
pub fn optimize_gauss(powers: &GaussPowers, d: f64, mode: GaussMode, opts: &GaussOptions) -> Result<GaussPoint, GaussError> {
    optimize_gauss_warm(powers, d, mode, opts, None)
}

/// [`optimize_gauss`] with an extra start at `warm`.
pub fn optimize_gauss_warm(
    powers: &GaussPowers,
    d: f64,
    mode: GaussMode,
    opts: &GaussOptions,
    warm: Option<GaussParams>,
) -> Result<GaussPoint, GaussError> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(GaussError::InvalidDistortion(d));
    }
    let constrained = mode != GaussMode::MessageOnly;
    let budget = d + 1e-12;
    let objective = |v: &[f64]| -> f64 {
        let p = GaussParams::from_slice(v);
        if constrained {
            match gauss_distortion(&p, powers) {
                Ok(dist) if dist <= budget => {}
                _ => return f64::INFINITY,
            }
        }
        -mode_value(mode, &p, powers)
    };
    // U = A + W has zero distortion and is admissible for every budget
    let fallback = [0.0, 1.0, 0.0, 0.0];
    let a_max = (powers.p_x / powers.p_a).sqrt();
    let g_max = (powers.p_x / powers.var_w).sqrt();

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts + 3);
    starts.push(vec![0.0, 0.0, 0.0, 0.0]);
    starts.push(fallback.to_vec());
    for r in 0..opts.starts {
        let mut rng = restart_rng(opts.seed, r as u64);
        starts.push(vec![
            rng.random_range(-a_max..=a_max),
            rng.random_range(-3.0..=3.0),
            rng.random_range(-3.0..=3.0),
            rng.random_range(-g_max..=g_max),
        ]);
    }
    if let Some(w) = warm {
        starts.push(w.to_vec().to_vec());
    }
    let nm = NmOptions { max_iter: opts.max_iter, ..Default::default() };
    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s0| {
            let mut s = s0.clone();
            project(&mut s, powers);
            if !objective(&s).is_finite() {
                // slide toward the zero-distortion point until admissible
                let mut t = 0.0;
                while !objective(&s).is_finite() && t < 1.0 {
                    t = (t + 0.05f64).min(1.0);
                    for i in 0..4 {
                        s[i] = (1.0 - t) * s0[i] + t * fallback[i];
                    }
                    project(&mut s, powers);
                }
            }
            let r = nelder_mead::minimize(&s, nm, objective, |v| project(v, powers));
            (r.x, r.f)
        })
        .collect();
    let mut best = &results[0];
    for r in &results[1..] {
        if r.1 < best.1 {
            best = r;
        }
    }
    evaluate_point(GaussParams::from_slice(&best.0), powers, d, mode)
}

/// One curve point: the optimum at `d` plus the value before the running
/// maximum was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSweepPoint {
    pub d: f64,
    pub mode: GaussMode,
    pub point: GaussPoint,
    /// Clamped rate of this point's own optimization.
    pub solved_rate: f64,
}

/// Sweeps an ascending distortion grid, warm-starting from the previous
/// optimum. For the constrained modes the reported curve is the running
/// maximum; when a point falls below its predecessor the earlier parameters
/// are reused (they stay feasible at the larger budget).
pub fn sweep_gauss(
    powers: &GaussPowers,
    d_grid: &[f64],
    mode: GaussMode,
    opts: &GaussOptions,
) -> Result<Vec<GaussSweepPoint>, GaussError> {
    let mut out: Vec<GaussSweepPoint> = Vec::with_capacity(d_grid.len());
    if mode == GaussMode::MessageOnly {
        let top = d_grid.iter().copied().fold(0.0, f64::max);
        let p = optimize_gauss(powers, top, mode, opts)?;
        for &d in d_grid {
            let point = evaluate_point(p.params, powers, d, mode)?;
            out.push(GaussSweepPoint { d, mode, point, solved_rate: point.rate });
        }
        return Ok(out);
    }
    let mut warm = None;
    for &d in d_grid {
        let mut p = optimize_gauss_warm(powers, d, mode, opts, warm)?;
        let solved_rate = p.rate;
        if let Some(prev) = out.last() {
            if p.rate + 1e-12 < prev.point.rate {
                log::warn!("gaussian sweep: {} rate {:.6} at D={d} below running max {:.6}", mode.name(), p.rate, prev.point.rate);
                if d >= prev.d {
                    p = evaluate_point(prev.point.params, powers, d, mode)?;
                }
            }
        }
        warm = Some(p.params);
        out.push(GaussSweepPoint { d, mode, point: p, solved_rate });
    }
    Ok(out)
}
