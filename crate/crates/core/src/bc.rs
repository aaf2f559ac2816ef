//! Capacity-cost region of the physically degraded broadcast action channel.
//!
//! A rate pair is achievable when `R1 ≤ I(U1;Y1|U2)` and `R2 ≤ I(U2;Y2)` for
//! some `p(u1,u2)` and deterministic maps `a = f_a(u1,u2)`,
//! `x = f_x(u1,u2,s)`, with `E[γ(A,X)] ≤ Γ`.
//!
//! The rates depend on the maps only through the per-cell output rows
//! `p(y1 | u1, u2)`, so [`solve_bc_region`] enumerates one "option" per cell
//! (an action plus a state-to-input table), drops options whose output row
//! duplicates a cheaper one, and optimizes `p(u1,u2)` for every assignment
//! of options to cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{BcActionSpec, CostMetric, ModelError};
use crate::prob::{
    assemble_joint, binary_convolve, binary_entropy, conditional_mutual_information, entropy_of_slice,
    mutual_information, CondPmf, Factor, JointPmf, Pmf, ProbError,
};
use crate::search::{self, Eval, Segment, StepSchedule};

pub const FEASIBILITY_TOL: f64 = 1e-9;

pub mod axis {
    pub const U1: usize = 0;
    pub const U2: usize = 1;
    pub const A: usize = 2;
    pub const S: usize = 3;
    pub const X: usize = 4;
    pub const Y1: usize = 5;
    pub const Y2: usize = 6;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cost budget {gamma} is below the minimum achievable cost {min_cost}")]
    Infeasible { gamma: f64, min_cost: f64 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

impl From<ProbError> for BcError {
    fn from(e: ProbError) -> Self {
        BcError::Model(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcDecisionVars {
    pub u1_size: usize,
    pub u2_size: usize,
    /// `p(u1, u2)`, `u1`-major.
    pub pu: Pmf,
    /// `f_a[u1 * u2_size + u2]`.
    pub f_a: Vec<usize>,
    /// `f_x[(u1 * u2_size + u2) * |S| + s]`.
    pub f_x: Vec<usize>,
}

impl BcDecisionVars {
    pub fn validate(&self, spec: &BcActionSpec) -> Result<(), BcError> {
        let cells = self.u1_size * self.u2_size;
        let s = spec.sizes;
        let ok = cells > 0
            && self.pu.len() == cells
            && self.f_a.len() == cells
            && self.f_a.iter().all(|&a| a < s.a)
            && self.f_x.len() == cells * s.s
            && self.f_x.iter().all(|&x| x < s.x);
        if ok {
            Ok(())
        } else {
            Err(ModelError::AlphabetMismatch("broadcast decision variables do not match the channel".into()).into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcEvaluation {
    pub r1: f64,
    pub r2: f64,
    pub cost: f64,
}

/// Joint over `(U1, U2, A, S, X, Y1, Y2)`.
pub fn bc_joint(spec: &BcActionSpec, vars: &BcDecisionVars) -> Result<JointPmf, BcError> {
    vars.validate(spec)?;
    let (n1, n2) = (vars.u1_size, vars.u2_size);
    let p = vars.pu.probs();
    let p1: Vec<f64> = (0..n1).map(|i| p[i * n2..(i + 1) * n2].iter().sum()).collect();
    let u2_given_u1 = CondPmf::from_fn(vec![n1], n2, |t| {
        let m = p1[t[0]];
        if m > 0.0 {
            p[t[0] * n2..(t[0] + 1) * n2].iter().map(|v| v / m).collect()
        } else {
            vec![1.0 / n2 as f64; n2]
        }
    })?;
    let s = spec.sizes;
    Ok(assemble_joint(&[
        Factor::Root(Pmf::from_weights(p1)?),
        Factor::Kernel { parents: vec![axis::U1], kernel: u2_given_u1 },
        Factor::Map { parents: vec![axis::U1, axis::U2], outcomes: s.a, table: vars.f_a.clone() },
        Factor::Kernel { parents: vec![axis::A], kernel: spec.state_channel.clone() },
        Factor::Map { parents: vec![axis::U1, axis::U2, axis::S], outcomes: s.x, table: vars.f_x.clone() },
        Factor::Kernel { parents: vec![axis::X, axis::S, axis::A], kernel: spec.channel1.clone() },
        Factor::Kernel { parents: vec![axis::Y1], kernel: spec.degrading_channel.clone() },
    ])?)
}

/// `(I(U1;Y1|U2), I(U2;Y2), E[γ(A,X)])`.
pub fn bc_rates(spec: &BcActionSpec, vars: &BcDecisionVars) -> Result<BcEvaluation, BcError> {
    let j = bc_joint(spec, vars)?;
    Ok(BcEvaluation {
        r1: conditional_mutual_information(&j, &[axis::U1], &[axis::Y1], &[axis::U2])?,
        r2: mutual_information(&j, &[axis::U2], &[axis::Y2])?,
        cost: crate::channel::expected_cost(&j, axis::A, axis::X, &spec.cost)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    /// Scalarization weight on `R1`; `None` for closed-form points.
    pub mu: Option<f64>,
    pub rates: RatePair,
    pub cost: f64,
    pub vars: Option<BcDecisionVars>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub points: Vec<RegionPoint>,
    /// Vertices of the upper-right convex closure, `R1` ascending and `R2`
    /// descending, starting on the `R2` axis and ending on the `R1` axis.
    pub hull: Vec<RatePair>,
}

impl RegionBoundary {
    pub fn from_points(points: Vec<RegionPoint>) -> Self {
        let hull = upper_hull(&points.iter().map(|p| p.rates).collect::<Vec<_>>());
        RegionBoundary { points, hull }
    }

    /// Largest `μ R1 + (1 − μ) R2` over the hull.
    pub fn support(&self, mu: f64) -> f64 {
        self.hull.iter().map(|p| mu * p.r1 + (1.0 - mu) * p.r2).fold(0.0, f64::max)
    }

    /// Largest `R2` on the hull at `R1 = r1` (`None` past the `R1` intercept).
    pub fn r2_at(&self, r1: f64) -> Option<f64> {
        let h = &self.hull;
        if h.is_empty() || r1 > h[h.len() - 1].r1 + 1e-12 {
            return None;
        }
        if r1 <= h[0].r1 {
            return Some(h[0].r2);
        }
        for w in h.windows(2) {
            if r1 <= w[1].r1 {
                let span = w[1].r1 - w[0].r1;
                if span <= 0.0 {
                    return Some(w[0].r2.max(w[1].r2));
                }
                let t = (r1 - w[0].r1) / span;
                return Some(w[0].r2 + t * (w[1].r2 - w[0].r2));
            }
        }
        Some(h[h.len() - 1].r2)
    }

    /// Whether `p` lies in the closure, up to `tol` in `R2`.
    pub fn contains(&self, p: RatePair, tol: f64) -> bool {
        if p.r1 < -tol || p.r2 < -tol {
            return false;
        }
        match self.r2_at(p.r1.max(0.0)) {
            Some(r2) => p.r2 <= r2 + tol,
            None => p.r1 <= self.hull.last().map_or(0.0, |h| h.r1) + tol && p.r2 <= tol,
        }
    }
}

fn cross(o: RatePair, a: RatePair, b: RatePair) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

/// Upper-right convex closure of `pts` and their axis projections.
pub fn upper_hull(pts: &[RatePair]) -> Vec<RatePair> {
    if pts.is_empty() {
        return Vec::new();
    }
    let clean = |v: f64| if v.is_finite() { v.max(0.0) } else { 0.0 };
    let mut cand: Vec<RatePair> = pts.iter().map(|p| RatePair { r1: clean(p.r1), r2: clean(p.r2) }).collect();
    let max_r1 = cand.iter().map(|p| p.r1).fold(0.0, f64::max);
    let max_r2 = cand.iter().map(|p| p.r2).fold(0.0, f64::max);
    cand.push(RatePair { r1: 0.0, r2: max_r2 });
    cand.push(RatePair { r1: max_r1, r2: 0.0 });
    cand.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(b.r2.total_cmp(&a.r2)));
    // monotone chain, upper side, left to right
    let mut hull: Vec<RatePair> = Vec::new();
    for p in cand {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= -1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    // keep the non-increasing part from the R2 axis to the R1 axis
    let start = hull.iter().position(|p| p.r1 == 0.0 && p.r2 == max_r2).unwrap_or(0);
    let mut out: Vec<RatePair> = Vec::new();
    for p in hull.into_iter().skip(start) {
        if out.last().is_some_and(|q: &RatePair| p.r2 > q.r2) {
            continue;
        }
        out.push(p);
        if p.r2 == 0.0 {
            break;
        }
    }
    out.dedup_by(|a, b| a.r1 == b.r1 && a.r2 == b.r2);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcOptions {
    /// `None` picks `min(|A| |X|^|S|, 4)`.
    pub u1_size: Option<usize>,
    pub u2_size: Option<usize>,
    /// Number of equally spaced weights in `[0, 1]`.
    pub mu_grid: usize,
    /// Restarts of the `p(u1,u2)` ascent per assignment.
    pub restarts: usize,
    /// Random-restart local searches when the reduced map space exceeds
    /// `enum_cap`.
    pub local_restarts: usize,
    pub enum_cap: u64,
    pub seed: u64,
    pub initial_step: f64,
    pub step_floor: f64,
}

impl Default for BcOptions {
    fn default() -> Self {
        BcOptions {
            u1_size: None,
            u2_size: None,
            mu_grid: 33,
            restarts: 10,
            local_restarts: 4,
            enum_cap: 1_000_000,
            seed: 0,
            initial_step: 0.1,
            step_floor: 1e-4,
        }
    }
}

pub fn default_u_size(spec: &BcActionSpec) -> usize {
    let s = spec.sizes;
    let fx = (s.x as f64).powi(s.s as i32);
    ((s.a as f64) * fx).min(4.0) as usize
}

pub fn mu_grid(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
    }
}

/// A per-cell choice of action and state-to-input table.
#[derive(Debug, Clone, PartialEq)]
struct CellOption {
    a: usize,
    x_of_s: Vec<usize>,
    row1: Vec<f64>,
    row2: Vec<f64>,
    cost: f64,
}

/// Every `(a, x-table)` in lexicographic order, keeping the cheapest option
/// for each distinct output row (earliest on ties).
fn cell_options(spec: &BcActionSpec) -> Vec<CellOption> {
    let s = spec.sizes;
    let n_tables = s.x.pow(s.s as u32);
    let mut out: Vec<CellOption> = Vec::new();
    for a in 0..s.a {
        let ps = spec.state_channel.row(a);
        for t in 0..n_tables {
            let mut x_of_s = vec![0; s.s];
            let mut rem = t;
            for v in x_of_s.iter_mut().rev() {
                *v = rem % s.x;
                rem /= s.x;
            }
            let mut row1 = vec![0.0; s.y1];
            let mut cost = 0.0;
            for (st, &p) in ps.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let x = x_of_s[st];
                cost += p * spec.cost.get(a, x);
                for (y, &q) in spec.channel1.row_at(&[x, st, a]).iter().enumerate() {
                    row1[y] += p * q;
                }
            }
            let mut row2 = vec![0.0; s.y2];
            for (y1, &p) in row1.iter().enumerate() {
                for (y2, &q) in spec.degrading_channel.row(y1).iter().enumerate() {
                    row2[y2] += p * q;
                }
            }
            let same = out.iter().position(|o| o.row1.iter().zip(&row1).all(|(u, v)| (u - v).abs() <= 1e-14));
            let opt = CellOption { a, x_of_s, row1, row2, cost };
            match same {
                Some(i) if out[i].cost <= opt.cost => {}
                Some(i) => out[i] = opt,
                None => out.push(opt),
            }
        }
    }
    out
}

/// Rates of a cell assignment as a function of `p(u1,u2)`.
struct CellModel<'a> {
    n1: usize,
    n2: usize,
    rows1: Vec<&'a [f64]>,
    rows2: Vec<&'a [f64]>,
    costs: Vec<f64>,
    h1: Vec<f64>,
}

impl<'a> CellModel<'a> {
    fn new(options: &'a [CellOption], assign: &[usize], n1: usize, n2: usize) -> Self {
        CellModel {
            n1,
            n2,
            rows1: assign.iter().map(|&o| options[o].row1.as_slice()).collect(),
            rows2: assign.iter().map(|&o| options[o].row2.as_slice()).collect(),
            costs: assign.iter().map(|&o| options[o].cost).collect(),
            h1: assign.iter().map(|&o| entropy_of_slice(&options[o].row1)).collect(),
        }
    }

    fn cost(&self, pu: &[f64]) -> f64 {
        pu.iter().zip(&self.costs).map(|(p, c)| p * c).sum()
    }

    fn rates(&self, pu: &[f64]) -> (f64, f64) {
        let ny1 = self.rows1[0].len();
        let ny2 = self.rows2[0].len();
        let mut p_u2y1 = vec![0.0; self.n2 * ny1];
        let mut p_u2y2 = vec![0.0; self.n2 * ny2];
        let mut p_u2 = vec![0.0; self.n2];
        let mut h_y1_given_u = 0.0;
        for u1 in 0..self.n1 {
            for u2 in 0..self.n2 {
                let c = u1 * self.n2 + u2;
                let p = pu[c];
                if p == 0.0 {
                    continue;
                }
                p_u2[u2] += p;
                h_y1_given_u += p * self.h1[c];
                for (y, &q) in self.rows1[c].iter().enumerate() {
                    p_u2y1[u2 * ny1 + y] += p * q;
                }
                for (y, &q) in self.rows2[c].iter().enumerate() {
                    p_u2y2[u2 * ny2 + y] += p * q;
                }
            }
        }
        let h_u2 = entropy_of_slice(&p_u2);
        let r1 = entropy_of_slice(&p_u2y1) - h_u2 - h_y1_given_u;
        let mut p_y2 = vec![0.0; ny2];
        for u2 in 0..self.n2 {
            for y in 0..ny2 {
                p_y2[y] += p_u2y2[u2 * ny2 + y];
            }
        }
        let r2 = entropy_of_slice(&p_y2) + h_u2 - entropy_of_slice(&p_u2y2);
        (r1.max(0.0), r2.max(0.0))
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    assign: Vec<usize>,
    pu: Vec<f64>,
}

/// Best `p(u1,u2)` for one assignment and weight, from several feasible
/// starts.
fn optimize_pu(
    model: &CellModel,
    mu: f64,
    gamma: f64,
    opts: &BcOptions,
    stream: u64,
    warm: Option<&[f64]>,
) -> Option<(f64, Vec<f64>)> {
    let cells = model.costs.len();
    let (cmin_idx, cmin) = model.costs.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &c)| if c < b.1 { (i, c) } else { b });
    if cmin > gamma + FEASIBILITY_TOL {
        return None;
    }
    let seg = [Segment { offset: 0, len: cells }];
    let schedule = StepSchedule { initial_step: opts.initial_step, step_floor: opts.step_floor, ..Default::default() };
    let eval = |x: &[f64]| {
        let (r1, r2) = model.rates(x);
        Eval { value: mu * r1 + (1.0 - mu) * r2, feasible: model.cost(x) <= gamma + FEASIBILITY_TOL }
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut rng = search::restart_rng(opts.seed, stream);
    let tries = if warm.is_some() { opts.restarts + 1 } else { opts.restarts.max(1) };
    for r in 0..tries {
        let mut x = vec![0.0; cells];
        match (r, warm) {
            (0, Some(w)) => x.copy_from_slice(w),
            _ => search::random_simplex_point(&mut x, &seg, &mut rng),
        }
        let c = model.cost(&x);
        if c > gamma + FEASIBILITY_TOL {
            // mix toward the cheapest cell just enough to meet the budget
            let t = ((c - gamma) / (c - cmin)).clamp(0.0, 1.0);
            for (i, v) in x.iter_mut().enumerate() {
                *v *= 1.0 - t;
                if i == cmin_idx {
                    *v += t;
                }
            }
            if model.cost(&x) > gamma + FEASIBILITY_TOL {
                x.iter_mut().for_each(|v| *v = 0.0);
                x[cmin_idx] = 1.0;
            }
        }
        let start = eval(&x).value;
        let a = search::ascend(&mut x, start, &seg, schedule, None, eval);
        if best.as_ref().is_none_or(|b| a.value > b.0 + 1e-13) {
            best = Some((a.value, x));
        }
    }
    best
}

fn reduced_space(n_options: usize, cells: usize) -> u64 {
    let mut acc: u64 = 1;
    for _ in 0..cells {
        acc = acc.saturating_mul(n_options as u64);
    }
    acc
}

fn decode(mut idx: u64, n_options: usize, cells: usize) -> Vec<usize> {
    let mut a = vec![0; cells];
    for v in a.iter_mut().rev() {
        *v = (idx % n_options as u64) as usize;
        idx /= n_options as u64;
    }
    a
}

fn better(a: &Option<Candidate>, value: f64) -> bool {
    a.as_ref().is_none_or(|b| value > b.value + 1e-12)
}

/// Traces the region boundary at cost budget `gamma`.
pub fn solve_bc_region(spec: &BcActionSpec, gamma: f64, opts: &BcOptions) -> Result<RegionBoundary, BcError> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(ModelError::InvalidConstraint(format!("cost budget must be finite and >= 0, got {gamma}")).into());
    }
    let check = crate::channel::check_degraded(&spec.joint_channel()?, spec.sizes.y1, spec.sizes.y2)?;
    if !check.degraded {
        return Err(ModelError::NotDegraded { residual: check.residual }.into());
    }
    let n1 = opts.u1_size.unwrap_or_else(|| default_u_size(spec));
    let n2 = opts.u2_size.unwrap_or_else(|| default_u_size(spec));
    if n1 == 0 || n2 == 0 {
        return Err(BcError::InvalidOptions("auxiliary sizes must be >= 1".into()));
    }
    if opts.mu_grid == 0 {
        return Err(BcError::InvalidOptions("mu grid must have at least one point".into()));
    }
    let options = cell_options(spec);
    let min_cost = options.iter().map(|o| o.cost).fold(f64::INFINITY, f64::min);
    if min_cost > gamma + FEASIBILITY_TOL {
        return Err(BcError::Infeasible { gamma, min_cost });
    }
    let cells = n1 * n2;
    let space = reduced_space(options.len(), cells);
    let mus = mu_grid(opts.mu_grid);
    log::info!("broadcast solver: {} cell options, {cells} cells, {space} assignments", options.len());

    let best: Vec<Option<Candidate>> = if space <= opts.enum_cap {
        (0..space)
            .into_par_iter()
            .map(|idx| {
                let assign = decode(idx, options.len(), cells);
                let model = CellModel::new(&options, &assign, n1, n2);
                let mut out: Vec<Option<Candidate>> = vec![None; mus.len()];
                let mut warm: Option<Vec<f64>> = None;
                for (k, &mu) in mus.iter().enumerate() {
                    let stream = idx * mus.len() as u64 + k as u64;
                    if let Some((value, pu)) = optimize_pu(&model, mu, gamma, opts, stream, warm.as_deref()) {
                        warm = Some(pu.clone());
                        out[k] = Some(Candidate { value, assign: assign.clone(), pu });
                    }
                }
                out
            })
            .reduce(
                || vec![None; mus.len()],
                |mut acc, other| {
                    // lower assignment index wins ties; rayon keeps order of
                    // the halves so `acc` always holds the earlier indices
                    for (a, o) in acc.iter_mut().zip(other) {
                        if let Some(o) = o {
                            if better(a, o.value) {
                                *a = Some(o);
                            }
                        }
                    }
                    acc
                },
            )
    } else {
        local_search(&options, n1, n2, gamma, &mus, opts)
    };

    let mut points = Vec::new();
    for (k, cand) in best.into_iter().enumerate() {
        let Some(c) = cand else { continue };
        let vars = BcDecisionVars {
            u1_size: n1,
            u2_size: n2,
            pu: Pmf::from_weights(c.pu)?,
            f_a: c.assign.iter().map(|&o| options[o].a).collect(),
            f_x: c.assign.iter().flat_map(|&o| options[o].x_of_s.iter().copied()).collect(),
        };
        let ev = bc_rates(spec, &vars)?;
        points.push(RegionPoint { mu: Some(mus[k]), rates: RatePair { r1: ev.r1, r2: ev.r2 }, cost: ev.cost, vars: Some(vars) });
    }
    Ok(RegionBoundary::from_points(points))
}

/// Random-restart coordinate moves over cell assignments.
fn local_search(
    options: &[CellOption],
    n1: usize,
    n2: usize,
    gamma: f64,
    mus: &[f64],
    opts: &BcOptions,
) -> Vec<Option<Candidate>> {
    use rand::Rng;
    let cells = n1 * n2;
    let jobs: Vec<(usize, usize)> = (0..mus.len()).flat_map(|k| (0..opts.local_restarts.max(1)).map(move |r| (k, r))).collect();
    let found: Vec<(usize, Option<Candidate>)> = jobs
        .par_iter()
        .map(|&(k, r)| {
            let mu = mus[k];
            let stream = (1u64 << 40) + (k * opts.local_restarts.max(1) + r) as u64;
            let mut rng = search::restart_rng(opts.seed, stream);
            let mut assign: Vec<usize> = (0..cells).map(|_| rng.random_range(0..options.len())).collect();
            let mut evals = 0u64;
            // move trials only refine the incumbent pu; restarts are spent on
            // the start and the final assignment
            let quick = BcOptions { restarts: 0, ..opts.clone() };
            let mut solve = |assign: &[usize], warm: Option<&[f64]>| {
                evals += 1;
                let model = CellModel::new(options, assign, n1, n2);
                let o = if warm.is_some() { &quick } else { opts };
                optimize_pu(&model, mu, gamma, o, stream ^ (evals << 20), warm)
            };
            let mut cur = match solve(&assign, None) {
                Some((value, pu)) => Candidate { value, assign: assign.clone(), pu },
                None => {
                    // infeasible random start: begin from the cheapest option everywhere
                    let cheapest = (0..options.len()).fold(0, |b, i| if options[i].cost < options[b].cost { i } else { b });
                    assign = vec![cheapest; cells];
                    match solve(&assign, None) {
                        Some((value, pu)) => Candidate { value, assign: assign.clone(), pu },
                        None => return (k, None),
                    }
                }
            };
            loop {
                let mut improved = false;
                for c in 0..cells {
                    for o in 0..options.len() {
                        if o == cur.assign[c] {
                            continue;
                        }
                        let mut trial = cur.assign.clone();
                        trial[c] = o;
                        // screen at the incumbent pu, then refine accepted moves
                        let m = CellModel::new(options, &trial, n1, n2);
                        if m.cost(&cur.pu) > gamma + FEASIBILITY_TOL {
                            continue;
                        }
                        let (r1, r2) = m.rates(&cur.pu);
                        if mu * r1 + (1.0 - mu) * r2 <= cur.value + 1e-12 {
                            continue;
                        }
                        let warm = cur.pu.clone();
                        if let Some((value, pu)) = solve(&trial, Some(&warm)) {
                            if value > cur.value + 1e-12 {
                                cur = Candidate { value, assign: trial, pu };
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            let polish = CellModel::new(options, &cur.assign, n1, n2);
            if let Some((value, pu)) = optimize_pu(&polish, mu, gamma, opts, stream ^ 1, Some(&cur.pu)) {
                if value > cur.value {
                    cur.value = value;
                    cur.pu = pu;
                }
            }
            (k, Some(cur))
        })
        .collect();
    let mut best: Vec<Option<Candidate>> = vec![None; mus.len()];
    for (k, c) in found {
        if let Some(c) = c {
            if better(&best[k], c.value) {
                best[k] = Some(c);
            }
        }
    }
    best
}

/// `S = A ⊕ B` with `B ~ Ber(b)`, `Y1 = X ⊕ S ⊕ Z1` with `Z1 ~ Ber(N1)`,
/// `Y2 = Y1 ⊕ Z2'` with `Z2' ~ Ber(Ñ2)`, and cost `γ(a, x) = x`.
pub fn binary_example_spec(n1: f64, n2_tilde: f64, b: f64) -> Result<BcActionSpec, BcError> {
    for (name, v) in [("N1", n1), ("Ntilde2", n2_tilde), ("b", b)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(ProbError::OutOfRange { name, value: v }.into());
        }
    }
    let flip = |e: f64, bit: usize| if bit == 0 { vec![1.0 - e, e] } else { vec![e, 1.0 - e] };
    Ok(BcActionSpec::new(
        CondPmf::from_fn(vec![2], 2, |t| flip(b, t[0]))?,
        CondPmf::from_fn(vec![2, 2, 2], 2, |t| flip(n1, t[0] ^ t[1]))?,
        CondPmf::from_fn(vec![2], 2, |t| flip(n2_tilde, t[0]))?,
        CostMetric::from_fn(2, 2, |_, x| x as f64)?,
    )?)
}

/// Closed-form points `(H(α*N1) − H(N1), 1 − H(α*N2))` with `N2 = N1 * Ñ2`.
pub fn binary_example_region(n1: f64, n2_tilde: f64, alpha_grid: &[f64]) -> Result<RegionBoundary, BcError> {
    for (name, v) in [("N1", n1), ("Ntilde2", n2_tilde)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(ProbError::OutOfRange { name, value: v }.into());
        }
    }
    let n2 = binary_convolve(n1, n2_tilde)?;
    let mut points = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(ProbError::OutOfRange { name: "alpha", value: alpha }.into());
        }
        let r1 = binary_entropy(binary_convolve(alpha, n1)?)? - binary_entropy(n1)?;
        let r2 = 1.0 - binary_entropy(binary_convolve(alpha, n2)?)?;
        points.push(RegionPoint { mu: None, rates: RatePair { r1, r2 }, cost: f64::NAN, vars: None });
    }
    Ok(RegionBoundary::from_points(points))
}

/// `X = B`, `U2 ~ Ber(½)`, `U1 = U2 ⊕ Ũ1` with `Ũ1 ~ Ber(α)`, `A = U1`.
/// The input table is `x = s ⊕ u1`, which equals `B` because `S = A ⊕ B`.
pub fn binary_scheme_vars(b: f64, alpha: f64) -> Result<BcDecisionVars, BcError> {
    for (name, v) in [("b", b), ("alpha", alpha)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(ProbError::OutOfRange { name, value: v }.into());
        }
    }
    let mut pu = vec![0.0; 4];
    for u1 in 0..2 {
        for u2 in 0..2 {
            pu[u1 * 2 + u2] = 0.5 * if u1 == u2 { 1.0 - alpha } else { alpha };
        }
    }
    let f_a = vec![0, 0, 1, 1];
    let f_x = (0..4).flat_map(|c: usize| (0..2).map(move |s| s ^ (c / 2))).collect();
    Ok(BcDecisionVars { u1_size: 2, u2_size: 2, pu: Pmf::new(pu)?, f_a, f_x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::check_degraded;

    fn h(q: f64) -> f64 {
        binary_entropy(q).unwrap()
    }

    #[test]
    fn constant_u2_gives_zero_r2() {
        let spec = binary_example_spec(0.1, 0.2, 0.3).unwrap();
        let vars = BcDecisionVars {
            u1_size: 2,
            u2_size: 1,
            pu: Pmf::new(vec![0.4, 0.6]).unwrap(),
            f_a: vec![0, 1],
            f_x: vec![0, 1, 1, 1],
        };
        let ev = bc_rates(&spec, &vars).unwrap();
        assert!(ev.r2.abs() < 1e-15);
        let j = bc_joint(&spec, &vars).unwrap();
        assert!((ev.r1 - mutual_information(&j, &[axis::U1], &[axis::Y1]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scheme_matches_closed_form() {
        for b in [0.0, 0.1, 0.3] {
            let spec = binary_example_spec(0.1, 0.1, b).unwrap();
            for alpha in [0.0, 0.1, 0.25, 0.5] {
                let ev = bc_rates(&spec, &binary_scheme_vars(b, alpha).unwrap()).unwrap();
                let cf = binary_example_region(0.1, 0.1, &[alpha]).unwrap().points[0].rates;
                assert!((ev.r1 - cf.r1).abs() < 1e-9 && (ev.r2 - cf.r2).abs() < 1e-9, "b={b} α={alpha}");
                assert!((ev.cost - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let r = binary_example_region(0.1, 0.1, &[0.0, 0.25, 0.5]).unwrap();
        let p: Vec<RatePair> = r.points.iter().map(|p| p.rates).collect();
        assert!(p[0].r1.abs() < 1e-15 && (p[0].r2 - (1.0 - h(0.18))).abs() < 1e-15);
        assert!((p[1].r1 - (h(0.25 * 0.9 + 0.75 * 0.1) - h(0.1))).abs() < 1e-15);
        assert!((p[1].r2 - (1.0 - h(0.25 * 0.82 + 0.75 * 0.18))).abs() < 1e-15);
        assert!((p[2].r1 - (1.0 - h(0.1))).abs() < 1e-15 && p[2].r2.abs() < 1e-15);
        assert!(binary_example_region(0.6, 0.1, &[0.1]).is_err());
        assert!(binary_example_region(0.1, 0.1, &[0.7]).is_err());
    }

    #[test]
    fn hull_is_pareto_sorted_and_contains_points() {
        let pts = [
            RatePair { r1: 0.0, r2: 0.5 },
            RatePair { r1: 0.2, r2: 0.45 },
            RatePair { r1: 0.1, r2: 0.1 },
            RatePair { r1: 0.4, r2: 0.2 },
            RatePair { r1: 0.5, r2: 0.0 },
            RatePair { r1: 0.3, r2: 0.35 },
        ];
        let hull = upper_hull(&pts);
        for w in hull.windows(2) {
            assert!(w[0].r1 <= w[1].r1 && w[0].r2 >= w[1].r2);
        }
        assert_eq!(hull.first().unwrap().r1, 0.0);
        assert_eq!(hull.last().unwrap().r2, 0.0);
        let rb = RegionBoundary::from_points(
            pts.iter().map(|&r| RegionPoint { mu: None, rates: r, cost: 0.0, vars: None }).collect(),
        );
        for p in pts {
            assert!(rb.contains(p, 1e-12), "{p:?}");
        }
        assert!(!rb.contains(RatePair { r1: 0.3, r2: 0.5 }, 1e-12));
    }

    #[test]
    fn solver_recovers_r1_endpoint() {
        let spec = binary_example_spec(0.1, 0.1, 0.0).unwrap();
        let opts = BcOptions { u1_size: Some(2), u2_size: Some(2), mu_grid: 3, restarts: 3, ..Default::default() };
        let region = solve_bc_region(&spec, 0.5, &opts).unwrap();
        let top = region.points.iter().find(|p| p.mu == Some(1.0)).unwrap();
        assert!((top.rates.r1 - (1.0 - h(0.1))).abs() < 1e-6, "{:?}", top.rates);
        for p in &region.points {
            assert!(p.cost <= 0.5 + 1e-9);
            let ev = bc_rates(&spec, p.vars.as_ref().unwrap()).unwrap();
            assert!((ev.r1 - p.rates.r1).abs() < 1e-10 && (ev.r2 - p.rates.r2).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_below_min_cost_rejected() {
        let mut spec = binary_example_spec(0.1, 0.1, 0.2).unwrap();
        spec.cost = CostMetric::from_fn(2, 2, |_, _| 1.0).unwrap();
        assert!(matches!(solve_bc_region(&spec, 0.5, &BcOptions::default()), Err(BcError::Infeasible { .. })));
    }

    #[test]
    fn identity_degrading_channel() {
        let mut spec = binary_example_spec(0.1, 0.0, 0.2).unwrap();
        spec.degrading_channel = CondPmf::deterministic(vec![2], 2, &[0, 1]).unwrap();
        assert!(check_degraded(&spec.joint_channel().unwrap(), 2, 2).unwrap().degraded);
        let opts = BcOptions { u1_size: Some(2), u2_size: Some(2), mu_grid: 2, restarts: 2, ..Default::default() };
        let region = solve_bc_region(&spec, 1.0, &opts).unwrap();
        let p0 = region.points.iter().find(|p| p.mu == Some(0.0)).unwrap();
        let j = bc_joint(&spec, p0.vars.as_ref().unwrap()).unwrap();
        let direct = mutual_information(&j, &[axis::U2], &[axis::Y1]).unwrap();
        assert!((p0.rates.r2 - direct).abs() < 1e-12);
        assert!((p0.rates.r2 - (1.0 - h(0.1))).abs() < 1e-6);
    }

    #[test]
    fn option_dedup_for_binary_example() {
        let spec = binary_example_spec(0.1, 0.1, 0.0).unwrap();
        let opts = cell_options(&spec);
        assert_eq!(opts.len(), 2);
        assert!(opts.iter().all(|o| o.cost == 0.0));
        let spec = binary_example_spec(0.1, 0.1, 0.2).unwrap();
        // (a, x-table) pairs collapse onto four centred-bit rows
        assert_eq!(cell_options(&spec).len(), 4);
    }

    #[test]
    fn cell_model_matches_joint() {
        let spec = binary_example_spec(0.15, 0.2, 0.3).unwrap();
        let options = cell_options(&spec);
        let mut rng = search::restart_rng(1, 0);
        use rand::Rng;
        for _ in 0..20 {
            let assign: Vec<usize> = (0..6).map(|_| rng.random_range(0..options.len())).collect();
            let model = CellModel::new(&options, &assign, 2, 3);
            let mut pu = vec![0.0; 6];
            search::random_simplex_point(&mut pu, &[Segment { offset: 0, len: 6 }], &mut rng);
            let vars = BcDecisionVars {
                u1_size: 2,
                u2_size: 3,
                pu: Pmf::new(pu.clone()).unwrap(),
                f_a: assign.iter().map(|&o| options[o].a).collect(),
                f_x: assign.iter().flat_map(|&o| options[o].x_of_s.clone()).collect(),
            };
            let ev = bc_rates(&spec, &vars).unwrap();
            let (r1, r2) = model.rates(&pu);
            assert!((r1 - ev.r1).abs() < 1e-12 && (r2 - ev.r2).abs() < 1e-12);
            assert!((model.cost(&pu) - ev.cost).abs() < 1e-12);
        }
    }

    #[test]
    fn local_search_path_runs() {
        let spec = binary_example_spec(0.1, 0.1, 0.2).unwrap();
        let opts = BcOptions {
            u1_size: Some(2),
            u2_size: Some(2),
            mu_grid: 3,
            restarts: 2,
            local_restarts: 3,
            enum_cap: 10,
            ..Default::default()
        };
        let region = solve_bc_region(&spec, 0.3, &opts).unwrap();
        assert_eq!(region.points.len(), 3);
        let top = region.points.iter().find(|p| p.mu == Some(1.0)).unwrap();
        assert!((top.rates.r1 - (1.0 - h(0.1))).abs() < 1e-3, "{:?}", top.rates);
    }
}
