use super::pmf::flat_index;
use super::{Alphabet, CondPmf, Pmf, ProbError, NORMALIZATION_TOL};

/// A dense joint pmf over an ordered product of alphabets.
///
/// Cells are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self, ProbError> {
        let cells: usize = dims.iter().map(Alphabet::size).product();
        if dims.is_empty() || probs.len() != cells {
            return Err(ProbError::DimensionMismatch(format!(
                "{} probabilities for a product space of {cells} cells",
                probs.len()
            )));
        }
        Ok(JointPmf { dims, probs: Pmf::new(probs)?.into() })
    }

    /// Builds a joint from plain sizes without labels.
    pub fn from_sizes(sizes: &[usize], probs: Vec<f64>) -> Result<Self, ProbError> {
        let dims = sizes.iter().map(|&s| Alphabet::new(s)).collect::<Result<Vec<_>, _>>()?;
        JointPmf::new(dims, probs)
    }

    pub fn dims(&self) -> &[Alphabet] {
        &self.dims
    }

    pub fn n_axes(&self) -> usize {
        self.dims.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.dims.iter().map(Alphabet::size).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, tuple: &[usize]) -> f64 {
        self.probs[flat_index(&self.sizes(), tuple)]
    }

    /// Unflattens a cell index into its coordinate tuple.
    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut t = vec![0; self.dims.len()];
        for (k, d) in self.dims.iter().enumerate().rev() {
            t[k] = flat % d.size();
            flat /= d.size();
        }
        t
    }

    pub(crate) fn check_axes(&self, axes: &[usize]) -> Result<(), ProbError> {
        let mut seen = vec![false; self.dims.len()];
        for &a in axes {
            if a >= self.dims.len() {
                return Err(ProbError::AxisOutOfRange { axis: a, dims: self.dims.len() });
            }
            if seen[a] {
                return Err(ProbError::OverlappingAxes(a));
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Marginal probabilities over `axes`, in the order given.
    pub fn marginal_probs(&self, axes: &[usize]) -> Result<Vec<f64>, ProbError> {
        self.check_axes(axes)?;
        let sizes = self.sizes();
        let n = sizes.len();
        // out stride contributed by each joint axis (0 when summed out)
        let mut contrib = vec![0usize; n];
        let mut stride = 1usize;
        for &a in axes.iter().rev() {
            contrib[a] = stride;
            stride *= sizes[a];
        }
        let mut out = vec![0.0; stride];
        let mut t = vec![0usize; n];
        let mut o = 0usize;
        for &p in &self.probs {
            out[o] += p;
            let mut k = n;
            while k > 0 {
                k -= 1;
                t[k] += 1;
                o += contrib[k];
                if t[k] < sizes[k] {
                    break;
                }
                o -= contrib[k] * sizes[k];
                t[k] = 0;
            }
        }
        Ok(out)
    }

    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf, ProbError> {
        if axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let probs = self.marginal_probs(axes)?;
        let dims = axes.iter().map(|&a| self.dims[a].clone()).collect();
        Ok(JointPmf { dims, probs })
    }

    /// Convex mixture `lambda * self + (1 - lambda) * other` on the same space.
    pub fn mix(&self, other: &JointPmf, lambda: f64) -> Result<JointPmf, ProbError> {
        if self.sizes() != other.sizes() {
            return Err(ProbError::DimensionMismatch("mixing joints over different spaces".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ProbError::OutOfRange { name: "lambda", value: lambda });
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(JointPmf { dims: self.dims.clone(), probs })
    }
}

/// One factor of a chain-rule product. Factor `i` introduces axis `i` of the
/// assembled joint; `parents` name earlier axes, in the order the factor's
/// conditioning tuple expects.
#[derive(Debug, Clone)]
pub enum Factor {
    /// An unconditioned pmf.
    Root(Pmf),
    /// A stochastic kernel `p(new | parents)`.
    Kernel { parents: Vec<usize>, kernel: CondPmf },
    /// A deterministic map `new = table[parents]`, contributing a Kronecker
    /// delta factor.
    Map { parents: Vec<usize>, outcomes: usize, table: Vec<usize> },
}

impl Factor {
    fn outcomes(&self) -> usize {
        match self {
            Factor::Root(p) => p.len(),
            Factor::Kernel { kernel, .. } => kernel.outcomes(),
            Factor::Map { outcomes, .. } => *outcomes,
        }
    }

    fn parents(&self) -> &[usize] {
        match self {
            Factor::Root(_) => &[],
            Factor::Kernel { parents, .. } | Factor::Map { parents, .. } => parents,
        }
    }
}

/// Multiplies a chain of factors into a dense joint pmf.
pub fn assemble_joint(factors: &[Factor]) -> Result<JointPmf, ProbError> {
    if factors.is_empty() {
        return Err(ProbError::EmptyAxisSet);
    }
    let mut sizes: Vec<usize> = Vec::with_capacity(factors.len());
    let mut probs = vec![1.0];
    for (i, f) in factors.iter().enumerate() {
        let parents = f.parents();
        for &p in parents {
            if p >= i {
                return Err(ProbError::CyclicWiring { factor: i, parent: p });
            }
        }
        let mut seen = vec![false; i];
        for &p in parents {
            if seen[p] {
                return Err(ProbError::OverlappingAxes(p));
            }
            seen[p] = true;
        }
        let parent_sizes: Vec<usize> = parents.iter().map(|&p| sizes[p]).collect();
        match f {
            Factor::Root(_) => {}
            Factor::Kernel { kernel, .. } => {
                if kernel.given() != parent_sizes.as_slice() {
                    return Err(ProbError::DimensionMismatch(format!(
                        "factor {i} kernel conditioned on sizes {:?}, parents have sizes {parent_sizes:?}",
                        kernel.given()
                    )));
                }
            }
            Factor::Map { outcomes, table, .. } => {
                let rows: usize = parent_sizes.iter().product();
                if table.len() != rows || table.iter().any(|&v| v >= *outcomes) || *outcomes == 0 {
                    return Err(ProbError::DimensionMismatch(format!(
                        "factor {i} map table has {} entries for {rows} parent tuples over {outcomes} outcomes",
                        table.len()
                    )));
                }
            }
        }

        let out = f.outcomes();
        // stride of each existing axis in the current (pre-extension) table
        let mut strides = vec![1usize; sizes.len()];
        for k in (0..sizes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * sizes[k + 1];
        }
        let mut next = vec![0.0; probs.len() * out];
        for (idx, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row = parents
                .iter()
                .zip(&parent_sizes)
                .fold(0usize, |acc, (&ax, &s)| acc * s + (idx / strides[ax]) % sizes[ax]);
            let base = idx * out;
            match f {
                Factor::Root(pmf) => {
                    for (k, &q) in pmf.probs().iter().enumerate() {
                        next[base + k] = p * q;
                    }
                }
                Factor::Kernel { kernel, .. } => {
                    for (k, &q) in kernel.row(row).iter().enumerate() {
                        next[base + k] = p * q;
                    }
                }
                Factor::Map { table, .. } => next[base + table[row]] = p,
            }
        }
        probs = next;
        sizes.push(out);
    }
    let sum: f64 = probs.iter().sum();
    debug_assert!((sum - 1.0).abs() < NORMALIZATION_TOL);
    let dims = sizes.iter().map(|&s| Alphabet::new(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(JointPmf { dims, probs })
}
