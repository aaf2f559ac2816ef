//! Capacity-distortion-cost function of the point-to-point action channel
//! under the common-reconstruction constraint.
//!
//! `C(D, Γ) = max I(U;Y) − I(U;S|A)` over `p(a)`, `p(u|s,a)`, `p(x|u,s)` and a
//! reconstruction map `φ: U → Ŝ`, with `E[d(S, φ(U))] ≤ D` and
//! `E[γ(A, X)] ≤ Γ`, evaluated on `p(a) p(s|a) p(u|s,a) p(x|u,s) p(y|x,s,a)`.
//!
//! The objective is nonconvex. [`solve_cdc`] runs independent restarts of an
//! alternating block ascent (action pmf, then `p(u|s,a)` rows, then
//! `p(x|u,s)` rows) with feasibility filtering and keeps the best feasible
//! point found.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{expected_cost, expected_distortion, ConstraintPair, DistortionMetric, ModelError, PtpActionSpec};
use crate::prob::{
    assemble_joint, conditional_mutual_information, entropy_of_slice, mutual_information, CondPmf, Factor, JointPmf,
    Pmf, ProbError,
};
use crate::search::{self, Eval, Segment, StepSchedule};

/// Slack allowed on the budgets when filtering candidates.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Axis order of the assembled joint.
pub mod axis {
    pub const A: usize = 0;
    pub const S: usize = 1;
    pub const U: usize = 2;
    pub const X: usize = 3;
    pub const Y: usize = 4;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CdcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no restart reached a point with distortion <= {distortion} and cost <= {cost}")]
    Infeasible { distortion: f64, cost: f64 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

impl From<ProbError> for CdcError {
    fn from(e: ProbError) -> Self {
        CdcError::Model(e.into())
    }
}

/// Decision variables of the capacity-distortion-cost program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdcDecisionVars {
    pub u_size: usize,
    pub pa: Pmf,
    /// `p(u | s, a)`, conditioned on `[s, a]`.
    pub pu_given_sa: CondPmf,
    /// `p(x | u, s)`, conditioned on `[u, s]`.
    pub px_given_us: CondPmf,
    pub phi: Vec<usize>,
}

impl CdcDecisionVars {
    pub fn validate(&self, spec: &PtpActionSpec) -> Result<(), CdcError> {
        let s = spec.sizes;
        let ok = self.pa.len() == s.a
            && self.pu_given_sa.given() == [s.s, s.a]
            && self.pu_given_sa.outcomes() == self.u_size
            && self.px_given_us.given() == [self.u_size, s.s]
            && self.px_given_us.outcomes() == s.x
            && self.phi.len() == self.u_size
            && self.phi.iter().all(|&v| v < s.s_hat);
        if ok {
            Ok(())
        } else {
            Err(ModelError::AlphabetMismatch("decision variables do not match the channel alphabets".into()).into())
        }
    }
}

/// Value of the program at a fixed set of decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdcEvaluation {
    /// `max(0, I(U;Y) − I(U;S|A))`.
    pub rate: f64,
    /// `I(U;Y) − I(U;S|A)` before clamping.
    pub raw_rate: f64,
    pub distortion: f64,
    pub cost: f64,
}

/// Assembles `p(a) p(s|a) p(u|s,a) p(x|u,s) p(y|x,s,a)` on axes
/// `(A, S, U, X, Y)`.
pub fn cdc_joint(spec: &PtpActionSpec, vars: &CdcDecisionVars) -> Result<JointPmf, CdcError> {
    vars.validate(spec)?;
    Ok(assemble_joint(&[
        Factor::Root(vars.pa.clone()),
        Factor::Kernel { parents: vec![axis::A], kernel: spec.state_channel.clone() },
        Factor::Kernel { parents: vec![axis::S, axis::A], kernel: vars.pu_given_sa.clone() },
        Factor::Kernel { parents: vec![axis::U, axis::S], kernel: vars.px_given_us.clone() },
        Factor::Kernel { parents: vec![axis::X, axis::S, axis::A], kernel: spec.transmission_channel.clone() },
    ])?)
}

pub fn cdc_objective(spec: &PtpActionSpec, vars: &CdcDecisionVars) -> Result<CdcEvaluation, CdcError> {
    let j = cdc_joint(spec, vars)?;
    let raw_rate = mutual_information(&j, &[axis::U], &[axis::Y])?
        - conditional_mutual_information(&j, &[axis::U], &[axis::S], &[axis::A])?;
    Ok(CdcEvaluation {
        rate: raw_rate.max(0.0),
        raw_rate,
        distortion: expected_distortion(&j, axis::S, axis::U, &vars.phi, &spec.distortion)?,
        cost: expected_cost(&j, axis::A, axis::X, &spec.cost)?,
    })
}

/// `φ(u) = argmin_ŝ Σ_s p(s, u) d(s, ŝ)`, lowest index on ties.
///
/// `p_su` is the `(S, U)` marginal, `s`-major.
pub fn optimal_phi_from_marginal(distortion: &DistortionMetric, p_su: &[f64], n_u: usize) -> Vec<usize> {
    let (n_s, n_shat) = distortion.shape();
    (0..n_u)
        .map(|u| {
            let mut best = (0usize, f64::INFINITY);
            for sh in 0..n_shat {
                let v: f64 = (0..n_s).map(|s| p_su[s * n_u + u] * distortion.get(s, sh)).sum();
                if v < best.1 - 1e-15 {
                    best = (sh, v);
                }
            }
            best.0
        })
        .collect()
}

/// Distortion-minimizing reconstruction map for the `(S, U)` axes of `j`.
pub fn optimal_phi(spec: &PtpActionSpec, j: &JointPmf, s_axis: usize, u_axis: usize) -> Result<Vec<usize>, CdcError> {
    if j.dims().get(s_axis).map(|d| d.size()) != Some(spec.sizes.s) {
        return Err(ModelError::AlphabetMismatch("joint S axis does not match the channel".into()).into());
    }
    let n_u = j.dims().get(u_axis).map(|d| d.size()).unwrap_or(0);
    let p_su = j.marginal_probs(&[s_axis, u_axis])?;
    Ok(optimal_phi_from_marginal(&spec.distortion, &p_su, n_u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdcOptions {
    /// Auxiliary alphabet size; `None` picks `min(|A||S||X| + 2, 6)`.
    pub u_size: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    /// Divisions of the action-pmf grid (20 gives step 0.05).
    pub grid_divisions: usize,
    pub initial_step: f64,
    pub step_floor: f64,
    pub max_cycles: usize,
    /// Restrict `p(x|u,s)` to deterministic maps.
    pub deterministic_x: bool,
}

impl Default for CdcOptions {
    fn default() -> Self {
        CdcOptions {
            u_size: None,
            restarts: 20,
            seed: 0,
            grid_divisions: 20,
            initial_step: 0.1,
            step_floor: 1e-4,
            max_cycles: 40,
            deterministic_x: false,
        }
    }
}

/// `|A| |S| |X| + 2`.
pub fn cardinality_bound(spec: &PtpActionSpec) -> usize {
    spec.sizes.a * spec.sizes.s * spec.sizes.x + 2
}

pub fn default_u_size(spec: &PtpActionSpec) -> usize {
    cardinality_bound(spec).min(6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub cycle: usize,
    pub raw_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdcResult {
    pub rate: f64,
    pub achieving_vars: CdcDecisionVars,
    pub achieved_distortion: f64,
    pub achieved_cost: f64,
    pub raw_rate: f64,
    pub restarts_used: usize,
    pub solver_trace: Vec<TraceEntry>,
}

/// Flat layout of the decision vector: `[pa | p(u|s,a) rows | p(x|u,s) rows]`.
#[derive(Debug, Clone)]
struct Layout {
    n_a: usize,
    n_s: usize,
    n_x: usize,
    n_y: usize,
    n_u: usize,
    pa: Segment,
    pu: Vec<Segment>,
    px: Vec<Segment>,
    len: usize,
}

impl Layout {
    fn new(spec: &PtpActionSpec, n_u: usize) -> Self {
        let s = spec.sizes;
        let pa = Segment { offset: 0, len: s.a };
        let mut off = s.a;
        let pu = (0..s.s * s.a)
            .map(|_| {
                let seg = Segment { offset: off, len: n_u };
                off += n_u;
                seg
            })
            .collect();
        let px = (0..n_u * s.s)
            .map(|_| {
                let seg = Segment { offset: off, len: s.x };
                off += s.x;
                seg
            })
            .collect();
        Layout { n_a: s.a, n_s: s.s, n_x: s.x, n_y: s.y, n_u, pa, pu, px, len: off }
    }

    fn pu_off(&self, s: usize, a: usize) -> usize {
        self.pu[s * self.n_a + a].offset
    }

    fn px_off(&self, u: usize, s: usize) -> usize {
        self.px[u * self.n_s + s].offset
    }

    fn to_vars(&self, spec: &PtpActionSpec, x: &[f64]) -> Result<CdcDecisionVars, CdcError> {
        let seg_pmf = |seg: &Segment| Pmf::from_weights(x[seg.offset..seg.offset + seg.len].to_vec());
        let pa = seg_pmf(&self.pa)?;
        let pu_rows = self.pu.iter().map(seg_pmf).collect::<Result<Vec<_>, _>>()?;
        let px_rows = self.px.iter().map(seg_pmf).collect::<Result<Vec<_>, _>>()?;
        let pu_given_sa = CondPmf::from_rows(vec![self.n_s, self.n_a], self.n_u, pu_rows)?;
        let px_given_us = CondPmf::from_rows(vec![self.n_u, self.n_s], self.n_x, px_rows)?;
        let mut vars = CdcDecisionVars { u_size: self.n_u, pa, pu_given_sa, px_given_us, phi: vec![0; self.n_u] };
        let j = cdc_joint(spec, &vars)?;
        vars.phi = optimal_phi(spec, &j, axis::S, axis::U)?;
        Ok(vars)
    }

    fn from_vars(&self, vars: &CdcDecisionVars) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        x[..self.n_a].copy_from_slice(vars.pa.probs());
        for (i, seg) in self.pu.iter().enumerate() {
            x[seg.offset..seg.offset + seg.len].copy_from_slice(vars.pu_given_sa.row(i));
        }
        for (i, seg) in self.px.iter().enumerate() {
            x[seg.offset..seg.offset + seg.len].copy_from_slice(vars.px_given_us.row(i));
        }
        x
    }
}

/// Allocation-light evaluator used inside the search loop. Reported results
/// are always re-evaluated through [`cdc_objective`].
struct FastObjective<'a> {
    spec: &'a PtpActionSpec,
    lay: Layout,
    p_asu: Vec<f64>,
    p_uy: Vec<f64>,
    p_su: Vec<f64>,
}

impl<'a> FastObjective<'a> {
    fn new(spec: &'a PtpActionSpec, lay: Layout) -> Self {
        let (a, s, u, y) = (lay.n_a, lay.n_s, lay.n_u, lay.n_y);
        FastObjective { spec, p_asu: vec![0.0; a * s * u], p_uy: vec![0.0; u * y], p_su: vec![0.0; s * u], lay }
    }

    /// `(raw rate, distortion under optimal φ, cost)`.
    fn eval(&mut self, x: &[f64]) -> (f64, f64, f64) {
        let l = &self.lay;
        let (na, ns, nu, nx, ny) = (l.n_a, l.n_s, l.n_u, l.n_x, l.n_y);
        self.p_uy.iter_mut().for_each(|v| *v = 0.0);
        self.p_su.iter_mut().for_each(|v| *v = 0.0);
        let mut cost = 0.0;
        for a in 0..na {
            let pa = x[a];
            for s in 0..ns {
                let pas = pa * self.spec.state_channel.row(a)[s];
                let pu_off = l.pu_off(s, a);
                for u in 0..nu {
                    let p = pas * x[pu_off + u];
                    self.p_asu[(a * ns + s) * nu + u] = p;
                    self.p_su[s * nu + u] += p;
                    if p == 0.0 {
                        continue;
                    }
                    let px_off = l.px_off(u, s);
                    for xi in 0..nx {
                        let q = p * x[px_off + xi];
                        if q == 0.0 {
                            continue;
                        }
                        cost += q * self.spec.cost.get(a, xi);
                        let row = self.spec.transmission_channel.row((xi * ns + s) * na + a);
                        for (yi, &py) in row.iter().enumerate() {
                            self.p_uy[u * ny + yi] += q * py;
                        }
                    }
                }
            }
        }
        // I(U;Y) = H(U) + H(Y) − H(U,Y)
        let mut pu = vec![0.0; nu];
        let mut py = vec![0.0; ny];
        for u in 0..nu {
            for yi in 0..ny {
                pu[u] += self.p_uy[u * ny + yi];
                py[yi] += self.p_uy[u * ny + yi];
            }
        }
        let i_uy = entropy_of_slice(&pu) + entropy_of_slice(&py) - entropy_of_slice(&self.p_uy);
        // I(U;S|A) = H(A,U) + H(A,S) − H(A,S,U) − H(A)
        let mut pau = vec![0.0; na * nu];
        let mut pas = vec![0.0; na * ns];
        let mut pa = vec![0.0; na];
        for a in 0..na {
            for s in 0..ns {
                for u in 0..nu {
                    let p = self.p_asu[(a * ns + s) * nu + u];
                    pau[a * nu + u] += p;
                    pas[a * ns + s] += p;
                    pa[a] += p;
                }
            }
        }
        let i_usa =
            entropy_of_slice(&pau) + entropy_of_slice(&pas) - entropy_of_slice(&self.p_asu) - entropy_of_slice(&pa);
        let phi = optimal_phi_from_marginal(&self.spec.distortion, &self.p_su, nu);
        let dist: f64 =
            (0..ns).flat_map(|s| (0..nu).map(move |u| (s, u))).map(|(s, u)| self.p_su[s * nu + u] * self.spec.distortion.get(s, phi[u])).sum();
        (i_uy - i_usa.max(0.0), dist, cost)
    }
}

struct RestartOutcome {
    x: Vec<f64>,
    raw_rate: f64,
    trace: Vec<TraceEntry>,
}

fn violation(dist: f64, cost: f64, c: &ConstraintPair) -> f64 {
    (dist - c.distortion - FEASIBILITY_TOL).max(0.0) + (cost - c.cost - FEASIBILITY_TOL).max(0.0)
}

fn run_restart(
    spec: &PtpActionSpec,
    constraints: &ConstraintPair,
    opts: &CdcOptions,
    lay: &Layout,
    restart: usize,
    warm: Option<&[f64]>,
) -> Option<RestartOutcome> {
    let mut obj = FastObjective::new(spec, lay.clone());
    let mut rng = search::restart_rng(opts.seed, restart as u64);
    let mut x = vec![0.0; lay.len];
    match warm {
        Some(w) => x.copy_from_slice(w),
        None => {
            search::random_simplex_point(&mut x, std::slice::from_ref(&lay.pa), &mut rng);
            search::random_simplex_point(&mut x, &lay.pu, &mut rng);
            if opts.deterministic_x {
                search::random_vertex(&mut x, &lay.px, &mut rng);
            } else {
                search::random_simplex_point(&mut x, &lay.px, &mut rng);
            }
        }
    }
    let schedule = StepSchedule { initial_step: opts.initial_step, step_floor: opts.step_floor, ..Default::default() };
    let all_segments: Vec<Segment> =
        std::iter::once(lay.pa).chain(lay.pu.iter().copied()).chain(lay.px.iter().copied()).collect();

    // phase one: reach the feasible set by minimizing the total violation
    let (_, d0, c0) = obj.eval(&x);
    let v0 = violation(d0, c0, constraints);
    if v0 > 0.0 {
        let r = search::ascend(&mut x, -v0, &all_segments, schedule, Some(0.0), |x| {
            let (_, d, c) = obj.eval(x);
            Eval { value: -violation(d, c, constraints), feasible: true }
        });
        if r.value < 0.0 {
            return None;
        }
        if opts.deterministic_x {
            // a stochastic row may have appeared; keep only feasible vertices
            let (_, d, c) = obj.eval(&x);
            if violation(d, c, constraints) > 0.0 {
                return None;
            }
        }
    }

    let mut eval = |x: &[f64]| {
        let (r, d, c) = obj.eval(x);
        Eval { value: r, feasible: violation(d, c, constraints) == 0.0 }
    };
    let mut best = eval(&x).value;
    let mut trace = vec![TraceEntry { restart, cycle: 0, raw_rate: best }];
    let grid = if search::simplex_grid_len(lay.n_a, opts.grid_divisions) <= 5000 && lay.n_a > 1 {
        search::simplex_grid(lay.n_a, opts.grid_divisions)
    } else {
        Vec::new()
    };
    for cycle in 1..=opts.max_cycles {
        let before = best;
        // action pmf: coarse grid, then local refinement
        let mut cand = x.clone();
        for g in &grid {
            cand[..lay.n_a].copy_from_slice(g);
            let e = eval(&cand);
            if e.feasible && e.value > best + 1e-13 {
                best = e.value;
                x.copy_from_slice(&cand);
            }
        }
        best = search::ascend(&mut x, best, std::slice::from_ref(&lay.pa), schedule, None, &mut eval).value;
        best = search::ascend(&mut x, best, &lay.pu, schedule, None, &mut eval).value;
        if opts.deterministic_x {
            for seg in &lay.px {
                let mut cand = x.clone();
                for k in 0..seg.len {
                    for i in 0..seg.len {
                        cand[seg.offset + i] = if i == k { 1.0 } else { 0.0 };
                    }
                    let e = eval(&cand);
                    if e.feasible && e.value > best + 1e-13 {
                        best = e.value;
                        x.copy_from_slice(&cand);
                    }
                }
            }
        } else {
            best = search::ascend(&mut x, best, &lay.px, schedule, None, &mut eval).value;
        }
        trace.push(TraceEntry { restart, cycle, raw_rate: best });
        if best - before < 1e-12 {
            break;
        }
    }
    Some(RestartOutcome { x, raw_rate: best, trace })
}

/// Solves the program at `(D, Γ)`.
pub fn solve_cdc(spec: &PtpActionSpec, constraints: &ConstraintPair, opts: &CdcOptions) -> Result<CdcResult, CdcError> {
    solve_cdc_warm(spec, constraints, opts, None)
}

/// [`solve_cdc`] with an extra start at `warm` (used by sweeps).
pub fn solve_cdc_warm(
    spec: &PtpActionSpec,
    constraints: &ConstraintPair,
    opts: &CdcOptions,
    warm: Option<&CdcDecisionVars>,
) -> Result<CdcResult, CdcError> {
    let n_u = opts.u_size.unwrap_or_else(|| default_u_size(spec));
    if n_u == 0 || n_u > cardinality_bound(spec) {
        return Err(CdcError::InvalidOptions(format!(
            "u_size must be in 1..={}, got {n_u}",
            cardinality_bound(spec)
        )));
    }
    if opts.restarts == 0 && warm.is_none() {
        return Err(CdcError::InvalidOptions("at least one restart is required".into()));
    }
    let lay = Layout::new(spec, n_u);
    let warm_x = match warm {
        Some(v) => {
            v.validate(spec)?;
            if v.u_size != n_u {
                return Err(CdcError::InvalidOptions("warm start has a different u_size".into()));
            }
            Some(lay.from_vars(v))
        }
        None => None,
    };
    // restart index `restarts` is reserved for the warm start
    let mut jobs: Vec<usize> = (0..opts.restarts).collect();
    if warm_x.is_some() {
        jobs.push(opts.restarts);
    }
    let outcomes: Vec<Option<RestartOutcome>> = jobs
        .par_iter()
        .map(|&r| {
            let w = if r == opts.restarts { warm_x.as_deref() } else { None };
            run_restart(spec, constraints, opts, &lay, r, w)
        })
        .collect();
    let mut trace = Vec::new();
    let mut best: Option<&RestartOutcome> = None;
    for o in outcomes.iter().flatten() {
        trace.extend_from_slice(&o.trace);
        if best.is_none_or(|b| o.raw_rate > b.raw_rate) {
            best = Some(o);
        }
    }
    let best = best.ok_or(CdcError::Infeasible { distortion: constraints.distortion, cost: constraints.cost })?;
    let vars = lay.to_vars(spec, &best.x)?;
    let ev = cdc_objective(spec, &vars)?;
    Ok(CdcResult {
        rate: ev.rate,
        raw_rate: ev.raw_rate,
        achieving_vars: vars,
        achieved_distortion: ev.distortion,
        achieved_cost: ev.cost,
        restarts_used: outcomes.iter().filter(|o| o.is_some()).count(),
        solver_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub distortion_budget: f64,
    /// Rate after the running-maximum pass.
    pub rate: f64,
    /// Rate of this point's own solve.
    pub solved_rate: f64,
    pub result: CdcResult,
}

/// Solves along an ascending distortion grid, warm-starting each point from
/// the previous optimum. The reported curve is the running maximum; any drop
/// of a solved point below its predecessor is logged.
pub fn sweep_cdc(
    spec: &PtpActionSpec,
    d_grid: &[f64],
    cost: f64,
    opts: &CdcOptions,
) -> Result<Vec<SweepPoint>, CdcError> {
    if d_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CdcError::InvalidOptions("distortion grid must be ascending".into()));
    }
    let mut out: Vec<SweepPoint> = Vec::with_capacity(d_grid.len());
    let mut warm: Option<CdcDecisionVars> = None;
    for &d in d_grid {
        let c = ConstraintPair::new(d, cost)?;
        let res = solve_cdc_warm(spec, &c, opts, warm.as_ref())?;
        let prev = out.last().map_or(0.0, |p| p.rate);
        if res.rate + 1e-12 < prev {
            log::warn!("sweep: rate {:.6} at D={d} below running max {:.6}", res.rate, prev);
        }
        warm = Some(res.achieving_vars.clone());
        out.push(SweepPoint { distortion_budget: d, rate: res.rate.max(prev), solved_rate: res.rate, result: res });
    }
    Ok(out)
}
