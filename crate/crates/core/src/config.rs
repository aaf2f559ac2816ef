//! TOML configuration files.
//!
//! Every file carries a root `kind` key: `ptp`, `bc`, `probing` or `gaussian`
//! for channel specs, and `cdc_vars` or `bc_vars` for decision-variable
//! files. Kernel tables are written as `rows`, one row per conditioning
//! tuple in row-major order (last conditioning variable fastest). Rows whose
//! sum is off by more than [`ROW_REJECT_TOL`] are rejected; rows off by more
//! than [`NORMALIZATION_TOL`] are renormalized with a warning.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bc::BcDecisionVars;
use crate::cdc::CdcDecisionVars;
use crate::channel::{BcActionSpec, CostMetric, DistortionMetric, ModelError, PtpActionSpec};
use crate::gaussian::GaussPowers;
use crate::prob::{CondPmf, Pmf, NORMALIZATION_TOL};
use crate::probing::ProbingSpec;

pub const ROW_REJECT_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.into(), msg: msg.into() }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RawDistortion {
    Named(String),
    Table(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PtpAlphabets {
    pub a: usize,
    pub s: usize,
    pub x: usize,
    pub y: usize,
    pub s_hat: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawPtp {
    pub alphabets: PtpAlphabets,
    pub state_channel: RawKernel,
    pub transmission_channel: RawKernel,
    pub cost: Option<Vec<Vec<f64>>>,
    pub distortion: RawDistortion,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BcAlphabets {
    pub a: usize,
    pub s: usize,
    pub x: usize,
    pub y1: usize,
    pub y2: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawBc {
    pub alphabets: BcAlphabets,
    pub state_channel: RawKernel,
    /// `p(y1 | x, s, a)`; give either this and `degrading_channel`, or
    /// `joint_channel`.
    pub channel1: Option<RawKernel>,
    pub degrading_channel: Option<RawKernel>,
    /// `p(y1, y2 | x, s, a)` with outputs indexed `y1 * |Y2| + y2`.
    pub joint_channel: Option<RawKernel>,
    pub cost: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProbingAlphabets {
    pub s: usize,
    pub x: usize,
    pub y1: usize,
    pub y2: usize,
    pub sd1: usize,
    pub sd2: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawProbing {
    pub alphabets: ProbingAlphabets,
    pub state_prior: Vec<f64>,
    /// `b_d1[s][a]`.
    pub b_d1: Vec<Vec<usize>>,
    pub b_d2: Vec<usize>,
    pub channel1: RawKernel,
    pub degrading_channel: RawKernel,
    pub cost: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawGaussian {
    pub p_a: f64,
    pub p_x: f64,
    pub var_w: f64,
    pub var_z: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawConfig {
    Ptp(RawPtp),
    Bc(RawBc),
    Probing(RawProbing),
    Gaussian(RawGaussian),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecConfig {
    Ptp(PtpActionSpec),
    Bc(BcActionSpec),
    Probing(ProbingSpec),
    Gaussian(GaussPowers),
}

impl SpecConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SpecConfig::Ptp(_) => "ptp",
            SpecConfig::Bc(_) => "bc",
            SpecConfig::Probing(_) => "probing",
            SpecConfig::Gaussian(_) => "gaussian",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
    /// sha256 of the canonical form of the file, see [`canonical_digest`].
    pub digest: String,
}

/// Checks one probability row and renormalizes it inside the tolerance band.
pub fn normalize_row(path: &str, row: &[f64], warnings: &mut Vec<String>) -> Result<Pmf, ConfigError> {
    if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(schema(format!("{path}[{i}]"), format!("probability {v} must be finite and >= 0")));
    }
    let sum: f64 = row.iter().sum();
    let off = (sum - 1.0).abs();
    if off > ROW_REJECT_TOL {
        return Err(schema(path, format!("row sums to {sum}, more than {ROW_REJECT_TOL} from 1")));
    }
    if off > NORMALIZATION_TOL {
        let msg = format!("{path}: row sums to {sum}; renormalized");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Pmf::from_weights(row.to_vec()).map_err(|e| schema(path, e.to_string()))
}

fn kernel(
    path: &str,
    raw: &RawKernel,
    given: Vec<usize>,
    outcomes: usize,
    warnings: &mut Vec<String>,
) -> Result<CondPmf, ConfigError> {
    let n_rows: usize = given.iter().product();
    if raw.rows.len() != n_rows {
        return Err(schema(format!("{path}.rows"), format!("expected {n_rows} rows for conditioning sizes {given:?}, got {}", raw.rows.len())));
    }
    let mut rows = Vec::with_capacity(n_rows);
    for (i, r) in raw.rows.iter().enumerate() {
        let p = format!("{path}.rows[{i}]");
        if r.len() != outcomes {
            return Err(schema(p, format!("expected {outcomes} entries, got {}", r.len())));
        }
        rows.push(normalize_row(&p, r, warnings)?);
    }
    CondPmf::from_rows(given, outcomes, rows).map_err(|e| schema(path, e.to_string()))
}

fn table_shape(path: &str, t: &[Vec<f64>], r: usize, c: usize) -> Result<(), ConfigError> {
    if t.len() != r || t.iter().any(|row| row.len() != c) {
        return Err(schema(path, format!("expected a {r} x {c} table")));
    }
    Ok(())
}

fn cost(path: &str, raw: &Option<Vec<Vec<f64>>>, a: usize, x: usize) -> Result<CostMetric, ConfigError> {
    let m = |e: ModelError| schema(path, e.to_string());
    match raw {
        None => CostMetric::zero(a, x).map_err(m),
        Some(t) => {
            table_shape(path, t, a, x)?;
            CostMetric::new(t).map_err(m)
        }
    }
}

fn nonzero(path: &str, v: usize) -> Result<usize, ConfigError> {
    if v == 0 {
        Err(schema(path, "alphabet size must be >= 1"))
    } else {
        Ok(v)
    }
}

pub fn build_ptp(raw: &RawPtp, warnings: &mut Vec<String>) -> Result<PtpActionSpec, ConfigError> {
    let al = &raw.alphabets;
    for (k, v) in [("a", al.a), ("s", al.s), ("x", al.x), ("y", al.y), ("s_hat", al.s_hat)] {
        nonzero(&format!("alphabets.{k}"), v)?;
    }
    let state = kernel("state_channel", &raw.state_channel, vec![al.a], al.s, warnings)?;
    let trans = kernel("transmission_channel", &raw.transmission_channel, vec![al.x, al.s, al.a], al.y, warnings)?;
    let distortion = match &raw.distortion {
        RawDistortion::Named(n) if n == "hamming" => {
            if al.s != al.s_hat {
                return Err(schema("distortion", "hamming needs |S| = |S_hat|"));
            }
            DistortionMetric::hamming(al.s)
        }
        RawDistortion::Named(n) => return Err(schema("distortion", format!("unknown metric {n:?}; use \"hamming\" or a table"))),
        RawDistortion::Table(t) => {
            table_shape("distortion", t, al.s, al.s_hat)?;
            DistortionMetric::new(t)
        }
    }
    .map_err(|e| schema("distortion", e.to_string()))?;
    PtpActionSpec::new(state, trans, cost("cost", &raw.cost, al.a, al.x)?, distortion).map_err(|e| schema("", e.to_string()))
}

pub fn build_bc(raw: &RawBc, warnings: &mut Vec<String>) -> Result<BcActionSpec, ConfigError> {
    let al = &raw.alphabets;
    for (k, v) in [("a", al.a), ("s", al.s), ("x", al.x), ("y1", al.y1), ("y2", al.y2)] {
        nonzero(&format!("alphabets.{k}"), v)?;
    }
    let state = kernel("state_channel", &raw.state_channel, vec![al.a], al.s, warnings)?;
    let c = cost("cost", &raw.cost, al.a, al.x)?;
    match (&raw.channel1, &raw.degrading_channel, &raw.joint_channel) {
        (Some(c1), Some(dg), None) => {
            let ch1 = kernel("channel1", c1, vec![al.x, al.s, al.a], al.y1, warnings)?;
            let deg = kernel("degrading_channel", dg, vec![al.y1], al.y2, warnings)?;
            BcActionSpec::new(state, ch1, deg, c).map_err(|e| schema("", e.to_string()))
        }
        (None, None, Some(jc)) => {
            let k = kernel("joint_channel", jc, vec![al.x, al.s, al.a], al.y1 * al.y2, warnings)?;
            BcActionSpec::from_joint_channel(state, &k, al.y1, al.y2, c).map_err(|e| schema("joint_channel", e.to_string()))
        }
        _ => Err(schema("", "give either channel1 with degrading_channel, or joint_channel")),
    }
}

pub fn build_probing(raw: &RawProbing, warnings: &mut Vec<String>) -> Result<ProbingSpec, ConfigError> {
    let al = &raw.alphabets;
    for (k, v) in [("s", al.s), ("x", al.x), ("y1", al.y1), ("y2", al.y2), ("sd1", al.sd1), ("sd2", al.sd2)] {
        nonzero(&format!("alphabets.{k}"), v)?;
    }
    if raw.state_prior.len() != al.s {
        return Err(schema("state_prior", format!("expected {} entries", al.s)));
    }
    let prior = normalize_row("state_prior", &raw.state_prior, warnings)?;
    if raw.b_d1.len() != al.s || raw.b_d1.iter().any(|r| r.len() != 2) {
        return Err(schema("b_d1", format!("expected {} rows of 2 entries (a = 0, a = 1)", al.s)));
    }
    let spec = ProbingSpec {
        x_size: al.x,
        y1_size: al.y1,
        y2_size: al.y2,
        sd1_size: al.sd1,
        sd2_size: al.sd2,
        state_prior: prior,
        b_d1: raw.b_d1.iter().flatten().copied().collect(),
        b_d2: raw.b_d2.clone(),
        channel1: kernel("channel1", &raw.channel1, vec![al.x, al.s, 2], al.y1, warnings)?,
        degrading_channel: kernel("degrading_channel", &raw.degrading_channel, vec![al.y1], al.y2, warnings)?,
        cost: cost("cost", &raw.cost, 2, al.x)?,
    };
    spec.validate().map_err(|e| schema("", e.to_string()))?;
    Ok(spec)
}

pub fn build_spec(raw: &RawConfig, warnings: &mut Vec<String>) -> Result<SpecConfig, ConfigError> {
    Ok(match raw {
        RawConfig::Ptp(r) => SpecConfig::Ptp(build_ptp(r, warnings)?),
        RawConfig::Bc(r) => SpecConfig::Bc(build_bc(r, warnings)?),
        RawConfig::Probing(r) => SpecConfig::Probing(build_probing(r, warnings)?),
        RawConfig::Gaussian(r) => SpecConfig::Gaussian(
            GaussPowers::new(r.p_a, r.p_x, r.var_w, r.var_z).map_err(|e| schema("", e.to_string()))?,
        ),
    })
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// sha256 over compact JSON with object keys sorted.
pub fn canonical_digest(text: &str) -> Result<String, ConfigError> {
    let v: toml::Value = parse_toml(text)?;
    let json = serde_json::to_value(&v).map_err(|e| ConfigError::Parse(e.to_string()))?;
    // serde_json's default map is ordered by key
    let s = serde_json::to_string(&json).map_err(|e| ConfigError::Parse(e.to_string()))?;
    Ok(hex(&Sha256::digest(s.as_bytes())))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_config_str(text: &str) -> Result<Loaded<SpecConfig>, ConfigError> {
    let raw: RawConfig = parse_toml(text)?;
    let mut warnings = Vec::new();
    let value = build_spec(&raw, &mut warnings)?;
    Ok(Loaded { value, warnings, digest: canonical_digest(text)? })
}

pub fn parse_config(path: &Path) -> Result<Loaded<SpecConfig>, ConfigError> {
    parse_config_str(&read(path)?)
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawCdcVars {
    pub u_size: usize,
    pub pa: Vec<f64>,
    /// Rows over `u`, conditioned on `(s, a)`.
    pub pu_given_sa: RawKernel,
    /// Rows over `x`, conditioned on `(u, s)`.
    pub px_given_us: RawKernel,
    pub phi: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawBcVars {
    pub u1_size: usize,
    pub u2_size: usize,
    /// `p(u1, u2)`, `u1`-major.
    pub pu: Vec<f64>,
    pub f_a: Vec<usize>,
    /// Indexed `(u1 * u2_size + u2) * |S| + s`.
    pub f_x: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawVars {
    CdcVars(RawCdcVars),
    BcVars(RawBcVars),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarsConfig {
    Cdc(CdcDecisionVars),
    Bc(BcDecisionVars),
}

/// Parses a vars file. `s_size`, `a_size` and `x_size` fix the kernel shapes
/// of `cdc_vars` files.
pub fn parse_vars_str(text: &str, a_size: usize, s_size: usize, x_size: usize) -> Result<Loaded<VarsConfig>, ConfigError> {
    let raw: RawVars = parse_toml(text)?;
    let mut warnings = Vec::new();
    let value = match raw {
        RawVars::CdcVars(r) => {
            let u = nonzero("u_size", r.u_size)?;
            if r.pa.len() != a_size {
                return Err(schema("pa", format!("expected {a_size} entries")));
            }
            VarsConfig::Cdc(CdcDecisionVars {
                u_size: u,
                pa: normalize_row("pa", &r.pa, &mut warnings)?,
                pu_given_sa: kernel("pu_given_sa", &r.pu_given_sa, vec![s_size, a_size], u, &mut warnings)?,
                px_given_us: kernel("px_given_us", &r.px_given_us, vec![u, s_size], x_size, &mut warnings)?,
                phi: r.phi,
            })
        }
        RawVars::BcVars(r) => {
            let cells = nonzero("u1_size", r.u1_size)? * nonzero("u2_size", r.u2_size)?;
            if r.pu.len() != cells {
                return Err(schema("pu", format!("expected {cells} entries")));
            }
            VarsConfig::Bc(BcDecisionVars {
                u1_size: r.u1_size,
                u2_size: r.u2_size,
                pu: normalize_row("pu", &r.pu, &mut warnings)?,
                f_a: r.f_a,
                f_x: r.f_x,
            })
        }
    };
    Ok(Loaded { value, warnings, digest: canonical_digest(text)? })
}

pub fn parse_vars(path: &Path, a_size: usize, s_size: usize, x_size: usize) -> Result<Loaded<VarsConfig>, ConfigError> {
    parse_vars_str(&read(path)?, a_size, s_size, x_size)
}

/// TOML text of a `cdc_vars` file.
pub fn cdc_vars_to_toml(v: &CdcDecisionVars) -> String {
    let raw = RawVars::CdcVars(RawCdcVars {
        u_size: v.u_size,
        pa: v.pa.probs().to_vec(),
        pu_given_sa: RawKernel { rows: v.pu_given_sa.rows().map(<[f64]>::to_vec).collect() },
        px_given_us: RawKernel { rows: v.px_given_us.rows().map(<[f64]>::to_vec).collect() },
        phi: v.phi.clone(),
    });
    toml::to_string(&raw).expect("vars serialize to TOML")
}

/// TOML text of a `bc_vars` file.
pub fn bc_vars_to_toml(v: &BcDecisionVars) -> String {
    let raw = RawVars::BcVars(RawBcVars {
        u1_size: v.u1_size,
        u2_size: v.u2_size,
        pu: v.pu.probs().to_vec(),
        f_a: v.f_a.clone(),
        f_x: v.f_x.clone(),
    });
    toml::to_string(&raw).expect("vars serialize to TOML")
}
