//! Projected local search over products of probability simplices.
//!
//! The decision vector is a flat `Vec<f64>` partitioned into segments, each of
//! which must stay on its simplex. A move shifts `step` mass (or whatever is
//! left) from one coordinate of a segment to another. The step starts at
//! `initial_step`, is halved whenever a full pass finds no improving feasible
//! move, and the search stops below `step_floor`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A segment of the decision vector living on one simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub len: usize,
}

/// Objective value of a candidate and whether it satisfies every constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub initial_step: f64,
    pub step_floor: f64,
    pub max_evals: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { initial_step: 0.1, step_floor: 1e-4, max_evals: 200_000 }
    }
}

const IMPROVE_EPS: f64 = 1e-13;
const REPAIR_CANDIDATES: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Move {
    seg: Segment,
    to: usize,
    from: usize,
}

fn apply(x: &mut [f64], m: Move, amount: f64) -> f64 {
    let a = amount.min(x[m.seg.offset + m.from]);
    x[m.seg.offset + m.from] -= a;
    x[m.seg.offset + m.to] += a;
    if x[m.seg.offset + m.from] < 1e-300 {
        x[m.seg.offset + m.from] = 0.0;
    }
    a
}

fn moves(segments: &[Segment]) -> Vec<Move> {
    let mut out = Vec::new();
    for &seg in segments {
        for to in 0..seg.len {
            for from in 0..seg.len {
                if to != from {
                    out.push(Move { seg, to, from });
                }
            }
        }
    }
    out
}

/// Outcome of a local ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ascent {
    pub value: f64,
    pub evals: usize,
}

/// Maximizes `eval` over the segments of `x`, starting from the feasible point
/// `x` with objective `start`. Only feasible candidates are accepted.
///
/// When a pass finds no feasible improvement, candidates that improve the
/// objective but violate a constraint are combined with a second move to try
/// to restore feasibility before the step is halved.
///
/// `stop_at` ends the search as soon as the objective reaches that value.
pub fn ascend<F>(
    x: &mut [f64],
    start: f64,
    segments: &[Segment],
    schedule: StepSchedule,
    stop_at: Option<f64>,
    mut eval: F,
) -> Ascent
where
    F: FnMut(&[f64]) -> Eval,
{
    let all = moves(segments);
    let mut best = start;
    let mut evals = 0usize;
    let mut step = schedule.initial_step;
    let mut cand = x.to_vec();
    let reached = |v: f64| stop_at.is_some_and(|s| v >= s);
    while step >= schedule.step_floor && evals < schedule.max_evals && !reached(best) {
        let mut improved = false;
        let mut blocked: Vec<(f64, Move)> = Vec::new();
        for &m in &all {
            if x[m.seg.offset + m.from] <= 0.0 {
                continue;
            }
            cand.copy_from_slice(x);
            apply(&mut cand, m, step);
            let e = eval(&cand);
            evals += 1;
            if e.value > best + IMPROVE_EPS {
                if e.feasible {
                    x.copy_from_slice(&cand);
                    best = e.value;
                    improved = true;
                    if reached(best) {
                        break;
                    }
                } else {
                    blocked.push((e.value, m));
                }
            }
        }
        if !improved && !blocked.is_empty() {
            blocked.sort_by(|a, b| b.0.total_cmp(&a.0));
            'repair: for &(_, m1) in blocked.iter().take(REPAIR_CANDIDATES) {
                for &m2 in &all {
                    if m2.seg == m1.seg && m2.to == m1.to && m2.from == m1.from {
                        continue;
                    }
                    for frac in [1.0, 0.5, 0.25] {
                        cand.copy_from_slice(x);
                        apply(&mut cand, m1, step);
                        if apply(&mut cand, m2, step * frac) <= 0.0 {
                            break;
                        }
                        let e = eval(&cand);
                        evals += 1;
                        if e.feasible && e.value > best + IMPROVE_EPS {
                            x.copy_from_slice(&cand);
                            best = e.value;
                            improved = true;
                            break 'repair;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ascent { value: best, evals }
}

/// Deterministic per-restart generator derived from a base seed.
pub fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    rng
}

/// Fills each segment with a flat-Dirichlet draw.
pub fn random_simplex_point<R: Rng>(x: &mut [f64], segments: &[Segment], rng: &mut R) {
    for seg in segments {
        let s = &mut x[seg.offset..seg.offset + seg.len];
        let mut total = 0.0;
        for v in s.iter_mut() {
            let u: f64 = rng.random::<f64>();
            *v = -(1.0 - u).ln();
            total += *v;
        }
        for v in s.iter_mut() {
            *v /= total;
        }
    }
}

/// Puts each segment on a uniformly chosen vertex.
pub fn random_vertex<R: Rng>(x: &mut [f64], segments: &[Segment], rng: &mut R) {
    for seg in segments {
        let k = rng.random_range(0..seg.len);
        for i in 0..seg.len {
            x[seg.offset + i] = if i == k { 1.0 } else { 0.0 };
        }
    }
}

/// All points of the simplex of dimension `len` whose coordinates are
/// multiples of `1 / divisions`, in lexicographic order.
pub fn simplex_grid(len: usize, divisions: usize) -> Vec<Vec<f64>> {
    fn rec(len: usize, left: usize, divisions: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == len {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / divisions as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(len, left - k, divisions, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if len > 0 {
        rec(len, divisions, divisions, &mut Vec::new(), &mut out);
    }
    out
}

/// Number of points [`simplex_grid`] would produce, saturating.
pub fn simplex_grid_len(len: usize, divisions: usize) -> usize {
    // C(divisions + len - 1, len - 1)
    let mut acc: u128 = 1;
    for i in 0..len.saturating_sub(1) {
        acc = acc * (divisions + i + 1) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(2, 20).len(), 21);
        assert_eq!(simplex_grid(3, 4).len(), simplex_grid_len(3, 4));
        assert_eq!(simplex_grid_len(4, 20), 1771);
        for p in simplex_grid(3, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ascent_finds_interior_maximum() {
        // maximize −(x0 − 0.3)² on the 2-simplex
        let seg = [Segment { offset: 0, len: 2 }];
        let mut x = vec![0.9, 0.1];
        let f = |x: &[f64]| Eval { value: -(x[0] - 0.3).powi(2), feasible: true };
        let start = f(&x).value;
        let r = ascend(&mut x, start, &seg, StepSchedule::default(), None, f);
        assert!((x[0] - 0.3).abs() < 2e-4, "{x:?}");
        assert!(r.value <= 0.0);
    }

    #[test]
    fn repair_moves_slide_along_constraint() {
        // maximize x0 + y0 subject to x0 + 2 y0 <= 1.2 on two 2-simplices;
        // optimum x0 = 1, y0 = 0.1
        let seg = [Segment { offset: 0, len: 2 }, Segment { offset: 2, len: 2 }];
        let mut x = vec![0.0, 1.0, 0.6, 0.4];
        let f = |x: &[f64]| Eval { value: x[0] + x[2] - 0.0 * x[3], feasible: x[0] + 2.0 * x[2] <= 1.2 + 1e-12 };
        let start = f(&x).value;
        let r = ascend(&mut x, start, &seg, StepSchedule::default(), None, f);
        assert!((r.value - 1.1).abs() < 1e-3, "{x:?} {}", r.value);
    }

    #[test]
    fn rng_streams_are_reproducible() {
        let mut a = restart_rng(7, 3);
        let mut b = restart_rng(7, 3);
        let mut c = restart_rng(7, 4);
        let va: u64 = a.random();
        assert_eq!(va, b.random::<u64>());
        assert_ne!(va, c.random::<u64>());
    }
}
