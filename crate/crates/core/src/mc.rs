//! Monte Carlo sampling from assembled joints and plug-in estimates.
//!
//! Draws use ChaCha20 seeded with `seed_from_u64(seed)`. The sample index
//! range is split into chunks of [`CHUNK`] draws and chunk `k` uses stream
//! `k` of that generator, so a batch does not depend on how chunks are
//! scheduled. Each draw takes `next_u64() >> 11` and looks it up in an
//! integer CDF scaled to `2^53`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::channel::{CostMetric, DistortionMetric};
use crate::prob::{conditional_mutual_information, JointPmf, ProbError};

pub const CHUNK: usize = 1 << 16;
const SCALE: f64 = (1u64 << 53) as f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("axis {axis} out of range for a batch with {axes} axes")]
    Axis { axis: usize, axes: usize },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// `n` i.i.d. draws, stored as flat cell indices of the source joint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    pub n: usize,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub cells: Vec<u32>,
}

impl SampleBatch {
    pub fn tuple(&self, i: usize) -> Vec<usize> {
        let mut flat = self.cells[i] as usize;
        let mut t = vec![0; self.sizes.len()];
        for (k, &s) in self.sizes.iter().enumerate().rev() {
            t[k] = flat % s;
            flat /= s;
        }
        t
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n).map(|i| self.tuple(i))
    }

    /// Count of each cell.
    pub fn counts(&self) -> Vec<u64> {
        let cells: usize = self.sizes.iter().product();
        let mut c = vec![0u64; cells];
        for &v in &self.cells {
            c[v as usize] += 1;
        }
        c
    }

    /// Empirical joint pmf over the same axes.
    pub fn empirical(&self) -> Result<JointPmf, McError> {
        let n = self.n as f64;
        Ok(JointPmf::from_sizes(&self.sizes, self.counts().iter().map(|&c| c as f64 / n).collect())?)
    }
}

fn integer_cdf(probs: &[f64]) -> Vec<u64> {
    let mut acc = 0.0;
    let mut cdf: Vec<u64> = probs
        .iter()
        .map(|&p| {
            acc += p;
            (acc.min(1.0) * SCALE).round() as u64
        })
        .collect();
    // the upper end must cover every draw
    if let Some(last) = cdf.iter().rposition(|_| true) {
        let top = 1u64 << 53;
        for v in cdf[..last].iter_mut() {
            *v = (*v).min(top);
        }
        cdf[last] = top;
    }
    cdf
}

/// Draws `n` samples from `j`.
pub fn sample_joint(j: &JointPmf, n: usize, seed: u64) -> Result<SampleBatch, McError> {
    if n == 0 {
        return Err(McError::NoSamples);
    }
    if j.probs().len() > u32::MAX as usize {
        return Err(McError::Shape("joint has too many cells to sample".into()));
    }
    let cdf = integer_cdf(j.probs());
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<u32>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let r = rng.next_u64() >> 11;
                    cdf.partition_point(|&c| c <= r) as u32
                })
                .collect()
        })
        .collect();
    Ok(SampleBatch { n, seed, sizes: j.sizes(), cells: parts.concat() })
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

impl Stat {
    pub fn from_values(values: impl Iterator<Item = f64>) -> Stat {
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for v in values {
            n += 1.0;
            let d = v - mean;
            mean += d / n;
            m2 += d * (v - mean);
        }
        let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
        Stat { mean, std_error: (var / n.max(1.0)).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiRequest {
    pub label: String,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

/// What to estimate from a batch. Axis numbers refer to the batch.
#[derive(Debug, Clone, Default)]
pub struct EstimateSpec {
    /// `(A axis, X axis, γ)`.
    pub cost: Option<(usize, usize, CostMetric)>,
    /// `(S axis, U axis, φ, d)`.
    pub distortion: Option<(usize, usize, Vec<usize>, DistortionMetric)>,
    pub mi: Vec<MiRequest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub cost: Option<Stat>,
    pub distortion: Option<Stat>,
    /// Plug-in estimates, in request order.
    pub mi: Vec<(String, f64)>,
}

fn check_axis(batch: &SampleBatch, axis: usize) -> Result<(), McError> {
    if axis < batch.sizes.len() {
        Ok(())
    } else {
        Err(McError::Axis { axis, axes: batch.sizes.len() })
    }
}

pub fn empirical_estimates(batch: &SampleBatch, spec: &EstimateSpec) -> Result<Estimates, McError> {
    let cost = match &spec.cost {
        Some((a, x, g)) => {
            check_axis(batch, *a)?;
            check_axis(batch, *x)?;
            if g.shape() != (batch.sizes[*a], batch.sizes[*x]) {
                return Err(McError::Shape("cost table does not match the batch axes".into()));
            }
            Some(Stat::from_values(batch.tuples().map(|t| g.get(t[*a], t[*x]))))
        }
        None => None,
    };
    let distortion = match &spec.distortion {
        Some((s, u, phi, d)) => {
            check_axis(batch, *s)?;
            check_axis(batch, *u)?;
            let (ns, nh) = d.shape();
            if ns != batch.sizes[*s] || phi.len() != batch.sizes[*u] || phi.iter().any(|&v| v >= nh) {
                return Err(McError::Shape("distortion table or reconstruction map does not match the batch".into()));
            }
            Some(Stat::from_values(batch.tuples().map(|t| d.get(t[*s], phi[t[*u]]))))
        }
        None => None,
    };
    let emp = if spec.mi.is_empty() { None } else { Some(batch.empirical()?) };
    let mut mi = Vec::with_capacity(spec.mi.len());
    for r in &spec.mi {
        let j = emp.as_ref().expect("built when requests exist");
        mi.push((r.label.clone(), conditional_mutual_information(j, &r.a, &r.b, &r.c)?));
    }
    Ok(Estimates { cost, distortion, mi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::mutual_information;

    #[test]
    fn point_mass_draws_are_constant() {
        let j = JointPmf::from_sizes(&[2, 3], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let b = sample_joint(&j, 1000, 3).unwrap();
        assert!(b.cells.iter().all(|&c| c == 4));
        assert_eq!(b.tuple(0), vec![1, 1]);
    }

    #[test]
    fn zero_samples_rejected() {
        let j = JointPmf::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_joint(&j, 0, 1), Err(McError::NoSamples));
    }

    #[test]
    fn fair_coin_frequency() {
        let j = JointPmf::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let n = 1_000_000;
        let b = sample_joint(&j, n, 11).unwrap();
        let f = b.counts()[0] as f64 / n as f64;
        assert!((f - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt(), "{f}");
    }

    #[test]
    fn same_seed_same_batch() {
        let j = JointPmf::from_sizes(&[3, 2], vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2]).unwrap();
        let a = sample_joint(&j, 200_000, 5).unwrap();
        let b = sample_joint(&j, 200_000, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.cells, sample_joint(&j, 200_000, 6).unwrap().cells);
        // a prefix of a longer batch is the shorter batch
        let c = sample_joint(&j, 70_000, 5).unwrap();
        assert_eq!(&a.cells[..70_000], &c.cells[..]);
    }

    #[test]
    fn exact_cost_under_point_mass() {
        let j = JointPmf::from_sizes(&[2, 2], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let b = sample_joint(&j, 100, 0).unwrap();
        let g = CostMetric::new(&[vec![0.0, 2.0], vec![3.5, 1.0]]).unwrap();
        let e = empirical_estimates(&b, &EstimateSpec { cost: Some((0, 1, g)), ..Default::default() }).unwrap();
        assert_eq!(e.cost.unwrap().mean, 3.5);
        assert_eq!(e.cost.unwrap().std_error, 0.0);
    }

    #[test]
    fn independent_axes_have_small_mi() {
        let j = JointPmf::from_sizes(&[2, 2], vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        assert!(mutual_information(&j, &[0], &[1]).unwrap() < 1e-15);
        let b = sample_joint(&j, 1_000_000, 2).unwrap();
        let req = MiRequest { label: "I".into(), a: vec![0], b: vec![1], c: vec![] };
        let e = empirical_estimates(&b, &EstimateSpec { mi: vec![req], ..Default::default() }).unwrap();
        assert!(e.mi[0].1 <= 5e-3);
    }

    #[test]
    fn axis_mismatch() {
        let j = JointPmf::from_sizes(&[2, 2], vec![0.25; 4]).unwrap();
        let b = sample_joint(&j, 10, 0).unwrap();
        let g = CostMetric::zero(2, 2).unwrap();
        let r = empirical_estimates(&b, &EstimateSpec { cost: Some((0, 2, g)), ..Default::default() });
        assert!(matches!(r, Err(McError::Axis { .. })));
    }
}
