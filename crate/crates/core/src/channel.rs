//! Channel instances with action-dependent states and their constraint
//! evaluators.
//!
//! Kernel conventions used throughout the crate:
//!
//! * state channel `p(s | a)`: conditioned on `[a]`;
//! * transmission channel `p(y | x, s, a)`: conditioned on `[x, s, a]`;
//! * degrading channel `p(y2 | y1)`: conditioned on `[y1]`;
//! * a two-output kernel `p(y1, y2 | x, s, a)` has outcome index
//!   `y1 * |Y2| + y2`.

use serde::{Deserialize, Serialize};

use crate::prob::{CondPmf, JointPmf, ProbError};

/// Residual tolerance for accepting a physically degraded factorization.
pub const DEGRADED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("invalid cost metric: {0}")]
    InvalidCost(String),
    #[error("invalid distortion metric: {0}")]
    InvalidDistortion(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("channel is not physically degraded (factorization residual {residual:.3e})")]
    NotDegraded { residual: f64 },
}

fn check_table(name: &str, rows: usize, cols: usize, table: &[Vec<f64>]) -> Result<Vec<f64>, String> {
    if table.len() != rows || table.iter().any(|r| r.len() != cols) {
        return Err(format!("{name} must be a {rows}x{cols} table"));
    }
    let flat: Vec<f64> = table.iter().flatten().copied().collect();
    if let Some(v) = flat.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("{name} entries must be finite and non-negative, found {v}"));
    }
    Ok(flat)
}

/// Cost metric `γ(a, x) ≥ 0` as a dense `|A| x |X|` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMetric {
    n_a: usize,
    n_x: usize,
    table: Vec<f64>,
}

impl CostMetric {
    pub fn new(table: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n_a = table.len();
        let n_x = table.first().map_or(0, Vec::len);
        if n_a == 0 || n_x == 0 {
            return Err(ModelError::InvalidCost("empty table".into()));
        }
        let table = check_table("cost", n_a, n_x, table).map_err(ModelError::InvalidCost)?;
        Ok(CostMetric { n_a, n_x, table })
    }

    pub fn from_fn(n_a: usize, n_x: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, ModelError> {
        let t: Vec<Vec<f64>> = (0..n_a).map(|a| (0..n_x).map(|x| f(a, x)).collect()).collect();
        CostMetric::new(&t)
    }

    pub fn zero(n_a: usize, n_x: usize) -> Result<Self, ModelError> {
        CostMetric::from_fn(n_a, n_x, |_, _| 0.0)
    }

    pub fn get(&self, a: usize, x: usize) -> f64 {
        self.table[a * self.n_x + x]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_a, self.n_x)
    }

    pub fn max(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.n_x).map(<[f64]>::to_vec).collect()
    }
}

/// Distortion metric `d(s, ŝ) ∈ [0, D_max]` as a dense `|S| x |Ŝ|` table.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMetric {
    n_s: usize,
    n_shat: usize,
    table: Vec<f64>,
}

impl DistortionMetric {
    pub fn new(table: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n_s = table.len();
        let n_shat = table.first().map_or(0, Vec::len);
        if n_s == 0 || n_shat == 0 {
            return Err(ModelError::InvalidDistortion("empty table".into()));
        }
        let table = check_table("distortion", n_s, n_shat, table).map_err(ModelError::InvalidDistortion)?;
        if table.iter().all(|&v| v == 0.0) {
            return Err(ModelError::InvalidDistortion("D_max must be positive".into()));
        }
        Ok(DistortionMetric { n_s, n_shat, table })
    }

    /// Hamming distortion on a common alphabet of size `n`.
    pub fn hamming(n: usize) -> Result<Self, ModelError> {
        let t: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|h| f64::from(u8::from(s != h))).collect()).collect();
        DistortionMetric::new(&t)
    }

    pub fn get(&self, s: usize, s_hat: usize) -> f64 {
        self.table[s * self.n_shat + s_hat]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_s, self.n_shat)
    }

    pub fn d_max(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.n_shat).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PtpSizes {
    pub a: usize,
    pub s: usize,
    pub x: usize,
    pub y: usize,
    pub s_hat: usize,
}

/// Point-to-point action channel: `p(s|a)`, `p(y|x,s,a)`, cost `γ(a,x)` and
/// distortion `d(s,ŝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PtpActionSpec {
    pub sizes: PtpSizes,
    pub state_channel: CondPmf,
    pub transmission_channel: CondPmf,
    pub cost: CostMetric,
    pub distortion: DistortionMetric,
}

fn expect_kernel(name: &str, k: &CondPmf, given: &[usize], outcomes: usize) -> Result<(), ModelError> {
    if k.given() != given || k.outcomes() != outcomes {
        return Err(ModelError::AlphabetMismatch(format!(
            "{name} must be conditioned on {given:?} with {outcomes} outcomes, found {:?} -> {}",
            k.given(),
            k.outcomes()
        )));
    }
    Ok(())
}

impl PtpActionSpec {
    pub fn new(
        state_channel: CondPmf,
        transmission_channel: CondPmf,
        cost: CostMetric,
        distortion: DistortionMetric,
    ) -> Result<Self, ModelError> {
        let (n_a, n_x) = cost.shape();
        let (n_s, n_shat) = distortion.shape();
        let sizes = PtpSizes { a: n_a, s: n_s, x: n_x, y: transmission_channel.outcomes(), s_hat: n_shat };
        expect_kernel("state channel", &state_channel, &[n_a], n_s)?;
        expect_kernel("transmission channel", &transmission_channel, &[n_x, n_s, n_a], sizes.y)?;
        Ok(PtpActionSpec { sizes, state_channel, transmission_channel, cost, distortion })
    }

    /// Same channel with the action alphabet collapsed to one symbol, keeping
    /// the `a = 0` rows.
    pub fn without_action(&self) -> Result<Self, ModelError> {
        let s = self.sizes;
        let state = CondPmf::from_fn(vec![1], s.s, |_| self.state_channel.row(0).to_vec())?;
        let trans =
            CondPmf::from_fn(vec![s.x, s.s, 1], s.y, |t| self.transmission_channel.row_at(&[t[0], t[1], 0]).to_vec())?;
        let cost = CostMetric::from_fn(1, s.x, |_, x| self.cost.get(0, x))?;
        PtpActionSpec::new(state, trans, cost, self.distortion.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcSizes {
    pub a: usize,
    pub s: usize,
    pub x: usize,
    pub y1: usize,
    pub y2: usize,
}

/// Physically degraded broadcast action channel `p(s|a) p(y1|x,s,a) p(y2|y1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcActionSpec {
    pub sizes: BcSizes,
    pub state_channel: CondPmf,
    pub channel1: CondPmf,
    pub degrading_channel: CondPmf,
    pub cost: CostMetric,
}

impl BcActionSpec {
    pub fn new(
        state_channel: CondPmf,
        channel1: CondPmf,
        degrading_channel: CondPmf,
        cost: CostMetric,
    ) -> Result<Self, ModelError> {
        let (n_a, n_x) = cost.shape();
        let n_s = state_channel.outcomes();
        let sizes = BcSizes { a: n_a, s: n_s, x: n_x, y1: channel1.outcomes(), y2: degrading_channel.outcomes() };
        expect_kernel("state channel", &state_channel, &[n_a], n_s)?;
        expect_kernel("channel 1", &channel1, &[n_x, n_s, n_a], sizes.y1)?;
        expect_kernel("degrading channel", &degrading_channel, &[sizes.y1], sizes.y2)?;
        Ok(BcActionSpec { sizes, state_channel, channel1, degrading_channel, cost })
    }

    /// The two-output kernel `p(y1, y2 | x, s, a)` implied by the factors.
    pub fn joint_channel(&self) -> Result<CondPmf, ModelError> {
        let s = self.sizes;
        Ok(CondPmf::from_fn(vec![s.x, s.s, s.a], s.y1 * s.y2, |t| {
            let r1 = self.channel1.row_at(t);
            let mut out = Vec::with_capacity(s.y1 * s.y2);
            for (y1, &p1) in r1.iter().enumerate() {
                out.extend(self.degrading_channel.row(y1).iter().map(|&q| p1 * q));
            }
            out
        })?)
    }

    /// Builds a spec from a general two-output kernel, rejecting it unless it
    /// factors as `p(y1|x,s,a) p(y2|y1)`.
    pub fn from_joint_channel(
        state_channel: CondPmf,
        kernel: &CondPmf,
        y1: usize,
        y2: usize,
        cost: CostMetric,
    ) -> Result<Self, ModelError> {
        let check = check_degraded(kernel, y1, y2)?;
        match check.factors {
            Some((channel1, degrading)) if check.degraded => {
                BcActionSpec::new(state_channel, channel1, degrading, cost)
            }
            _ => Err(ModelError::NotDegraded { residual: check.residual }),
        }
    }
}

/// Cost and distortion budgets `(D, Γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPair {
    pub distortion: f64,
    pub cost: f64,
}

impl ConstraintPair {
    pub fn new(distortion: f64, cost: f64) -> Result<Self, ModelError> {
        for (name, v) in [("distortion budget", distortion), ("cost budget", cost)] {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidConstraint(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(ConstraintPair { distortion, cost })
    }
}

fn axis_size(j: &JointPmf, axis: usize) -> Result<usize, ModelError> {
    j.dims()
        .get(axis)
        .map(|d| d.size())
        .ok_or_else(|| ModelError::AlphabetMismatch(format!("joint has no axis {axis}")))
}

/// `E[γ(A, X)]` under the joint.
pub fn expected_cost(j: &JointPmf, a_axis: usize, x_axis: usize, cost: &CostMetric) -> Result<f64, ModelError> {
    let (n_a, n_x) = cost.shape();
    if axis_size(j, a_axis)? != n_a || axis_size(j, x_axis)? != n_x {
        return Err(ModelError::AlphabetMismatch("cost table does not match the A/X axes".into()));
    }
    let pax = j.marginal_probs(&[a_axis, x_axis])?;
    Ok(pax.iter().enumerate().map(|(i, p)| p * cost.get(i / n_x, i % n_x)).sum())
}

/// `E[d(S, φ(U))]` under the joint.
pub fn expected_distortion(
    j: &JointPmf,
    s_axis: usize,
    u_axis: usize,
    phi: &[usize],
    distortion: &DistortionMetric,
) -> Result<f64, ModelError> {
    let (n_s, n_shat) = distortion.shape();
    let n_u = axis_size(j, u_axis)?;
    if axis_size(j, s_axis)? != n_s {
        return Err(ModelError::AlphabetMismatch("distortion table does not match the S axis".into()));
    }
    if phi.len() != n_u || phi.iter().any(|&v| v >= n_shat) {
        return Err(ModelError::AlphabetMismatch(format!(
            "phi must map {n_u} auxiliary symbols into {n_shat} reconstructions"
        )));
    }
    let psu = j.marginal_probs(&[s_axis, u_axis])?;
    Ok(psu.iter().enumerate().map(|(i, p)| p * distortion.get(i / n_u, phi[i % n_u])).sum())
}

/// Outcome of a physical-degradedness test.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradedCheck {
    pub degraded: bool,
    /// Largest absolute deviation between the kernel and its best factorization.
    pub residual: f64,
    /// `(p(y1|x,s,a), p(y2|y1))` of the best factorization.
    pub factors: Option<(CondPmf, CondPmf)>,
}

/// Tests whether `p(y1, y2 | c)` factors as `p(y1 | c) p(y2 | y1)` for a single
/// degrading channel shared by every conditioning tuple `c`.
///
/// The degrading channel is the least-squares fit
/// `q(y2|y1) = Σ_c p(y1|c) p(y1,y2|c) / Σ_c p(y1|c)²`; unreachable `y1` get a
/// uniform row.
pub fn check_degraded(kernel: &CondPmf, y1: usize, y2: usize) -> Result<DegradedCheck, ModelError> {
    if kernel.outcomes() != y1 * y2 || y1 == 0 || y2 == 0 {
        return Err(ModelError::AlphabetMismatch(format!(
            "two-output kernel has {} outcomes, expected {y1} x {y2}",
            kernel.outcomes()
        )));
    }
    let marg1: Vec<Vec<f64>> = kernel.rows().map(|r| r.chunks(y2).map(|c| c.iter().sum()).collect()).collect();
    let mut num = vec![0.0; y1 * y2];
    let mut den = vec![0.0; y1];
    for (row, m) in kernel.rows().zip(&marg1) {
        for a in 0..y1 {
            den[a] += m[a] * m[a];
            for b in 0..y2 {
                num[a * y2 + b] += m[a] * row[a * y2 + b];
            }
        }
    }
    let degrading_rows: Vec<Vec<f64>> = (0..y1)
        .map(|a| {
            if den[a] > 0.0 {
                let r: Vec<f64> = (0..y2).map(|b| num[a * y2 + b] / den[a]).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| (v / s).max(0.0)).collect()
            } else {
                vec![1.0 / y2 as f64; y2]
            }
        })
        .collect();
    let mut residual: f64 = 0.0;
    for (row, m) in kernel.rows().zip(&marg1) {
        for a in 0..y1 {
            for b in 0..y2 {
                residual = residual.max((row[a * y2 + b] - m[a] * degrading_rows[a][b]).abs());
            }
        }
    }
    let channel1 = CondPmf::from_rows(
        kernel.given().to_vec(),
        y1,
        marg1.into_iter().map(crate::prob::Pmf::from_weights).collect::<Result<Vec<_>, _>>()?,
    )?;
    let degrading = CondPmf::from_rows(
        vec![y1],
        y2,
        degrading_rows.into_iter().map(crate::prob::Pmf::from_weights).collect::<Result<Vec<_>, _>>()?,
    )?;
    Ok(DegradedCheck { degraded: residual <= DEGRADED_TOL, residual, factors: Some((channel1, degrading)) })
}
