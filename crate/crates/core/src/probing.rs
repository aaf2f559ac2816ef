//! Broadcast channel with a probing encoder.
//!
//! The action `a ∈ {0, 1}` decides whether the encoder sees the state:
//! `S_e = S` when `a = 1` and `S_e = *` otherwise. Decoder `j` observes
//! `S_dj` besides `Y_j`, with `S_d1 = b_d1(S, A)` and `S_d2 = b_d2(S_d1)`.
//!
//! [`reduce_probing`] rewrites such an instance as an ordinary
//! [`BcActionSpec`] whose state is `S_e` and whose outputs are the pairs
//! `(Y1, S_d1)` and `(Y2, S_d2)`, so the broadcast solver applies unchanged.

use crate::bc::{solve_bc_region, BcError, BcOptions, RegionBoundary};
use crate::channel::{BcActionSpec, CostMetric, ModelError};
use crate::prob::{CondPmf, Pmf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] BcError),
    #[error("invalid probing spec: {0}")]
    Invalid(String),
}

impl From<crate::prob::ProbError> for ProbingError {
    fn from(e: crate::prob::ProbError) -> Self {
        ProbingError::Model(e.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbingSpec {
    pub x_size: usize,
    pub y1_size: usize,
    pub y2_size: usize,
    pub sd1_size: usize,
    pub sd2_size: usize,
    pub state_prior: Pmf,
    /// `b_d1[s * 2 + a]`.
    pub b_d1: Vec<usize>,
    /// `b_d2[sd1]`.
    pub b_d2: Vec<usize>,
    /// `p(y1 | x, s, a)`.
    pub channel1: CondPmf,
    /// `p(y2 | y1)`.
    pub degrading_channel: CondPmf,
    /// `γ(a, x)` over `{0, 1} × X`.
    pub cost: CostMetric,
}

impl ProbingSpec {
    pub fn s_size(&self) -> usize {
        self.state_prior.len()
    }

    pub fn validate(&self) -> Result<(), ProbingError> {
        let n_s = self.s_size();
        let bad = |m: String| Err(ProbingError::Invalid(m));
        if self.b_d1.len() != n_s * 2 || self.b_d1.iter().any(|&v| v >= self.sd1_size) {
            return bad(format!("b_d1 needs {} entries below {}", n_s * 2, self.sd1_size));
        }
        if self.b_d2.len() != self.sd1_size || self.b_d2.iter().any(|&v| v >= self.sd2_size) {
            return bad(format!("b_d2 needs {} entries below {}", self.sd1_size, self.sd2_size));
        }
        if self.channel1.given() != [self.x_size, n_s, 2] || self.channel1.outcomes() != self.y1_size {
            return bad(format!("channel1 must be conditioned on [{}, {n_s}, 2] over {} outputs", self.x_size, self.y1_size));
        }
        if self.degrading_channel.given() != [self.y1_size] || self.degrading_channel.outcomes() != self.y2_size {
            return bad(format!("degrading channel must map {} outputs to {}", self.y1_size, self.y2_size));
        }
        if self.cost.shape() != (2, self.x_size) {
            return bad(format!("cost must be 2 x {}", self.x_size));
        }
        Ok(())
    }

    pub fn b_d1(&self, s: usize, a: usize) -> usize {
        self.b_d1[s * 2 + a]
    }
}

/// Index of a composite output `(y, sd)`.
pub fn composite_index(y: usize, sd: usize, sd_size: usize) -> usize {
    y * sd_size + sd
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSpec {
    pub spec: BcActionSpec,
    /// Index of `*` in the encoder-state alphabet (always the last one).
    pub star: usize,
    pub sd1_size: usize,
    pub sd2_size: usize,
}

/// Rewrites a probing instance as a broadcast action channel.
pub fn reduce_probing(p: &ProbingSpec) -> Result<ReducedSpec, ProbingError> {
    p.validate()?;
    let n_s = p.s_size();
    let star = n_s;
    let prior = p.state_prior.probs();

    let state = CondPmf::from_fn(vec![2], n_s + 1, |t| {
        let mut row = vec![0.0; n_s + 1];
        if t[0] == 1 {
            row[..n_s].copy_from_slice(prior);
        } else {
            row[star] = 1.0;
        }
        row
    })?;

    let out1 = p.y1_size * p.sd1_size;
    // output row when the state is averaged out under action a
    let averaged = |x: usize, a: usize| {
        let mut row = vec![0.0; out1];
        for (s, &ps) in prior.iter().enumerate() {
            let sd = p.b_d1(s, a);
            for (y, &q) in p.channel1.row_at(&[x, s, a]).iter().enumerate() {
                row[composite_index(y, sd, p.sd1_size)] += ps * q;
            }
        }
        row
    };
    let channel1 = CondPmf::from_fn(vec![p.x_size, n_s + 1, 2], out1, |t| {
        let (x, se, a) = (t[0], t[1], t[2]);
        if a == 0 || se == star {
            // a = 0 leaves S_e = *; the row a = 1, S_e = * is unreachable
            return averaged(x, a);
        }
        let mut row = vec![0.0; out1];
        let sd = p.b_d1(se, 1);
        for (y, &q) in p.channel1.row_at(&[x, se, 1]).iter().enumerate() {
            row[composite_index(y, sd, p.sd1_size)] = q;
        }
        row
    })?;

    let out2 = p.y2_size * p.sd2_size;
    let degrading = CondPmf::from_fn(vec![out1], out2, |t| {
        let (y1, sd1) = (t[0] / p.sd1_size, t[0] % p.sd1_size);
        let mut row = vec![0.0; out2];
        for (y2, &q) in p.degrading_channel.row(y1).iter().enumerate() {
            row[composite_index(y2, p.b_d2[sd1], p.sd2_size)] = q;
        }
        row
    })?;

    let spec = BcActionSpec::new(state, channel1, degrading, p.cost.clone())?;
    Ok(ReducedSpec { spec, star, sd1_size: p.sd1_size, sd2_size: p.sd2_size })
}

/// Capacity-cost region of the probing instance at budget `gamma`.
pub fn probing_region(p: &ProbingSpec, gamma: f64, opts: &BcOptions) -> Result<RegionBoundary, ProbingError> {
    let reduced = reduce_probing(p)?;
    Ok(solve_bc_region(&reduced.spec, gamma, opts)?)
}
