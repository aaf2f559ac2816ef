use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{ProbError, NORMALIZATION_TOL};

/// A finite alphabet `{0, .., size - 1}` with optional display labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAlphabet", into = "RawAlphabet")]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawAlphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<RawAlphabet> for Alphabet {
    type Error = ProbError;
    fn try_from(raw: RawAlphabet) -> Result<Self, Self::Error> {
        match raw.labels {
            Some(labels) => Alphabet::labeled(labels),
            None => Alphabet::new(raw.size),
        }
    }
}

impl From<Alphabet> for RawAlphabet {
    fn from(a: Alphabet) -> Self {
        RawAlphabet { size: a.size, labels: a.labels }
    }
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self, ProbError> {
        if size == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn labeled<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, ProbError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(ProbError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Alphabet { size: labels.len(), labels: Some(labels) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of symbol `i`: its label if present, else the index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }
}

/// A probability mass function over an indexed alphabet.
///
/// Construction checks non-negativity and that the mass is within
/// [`NORMALIZATION_TOL`] of one, then renormalizes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = ProbError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

impl Pmf {
    pub fn new(mut probs: Vec<f64>) -> Result<Self, ProbError> {
        if probs.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ProbError::InvalidProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ProbError::NotNormalized { sum });
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Pmf { probs })
    }

    /// Normalizes arbitrary non-negative weights with positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, ProbError> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(ProbError::NotNormalized { sum });
        }
        Pmf::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(size: usize) -> Result<Self, ProbError> {
        if size == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        Ok(Pmf { probs: vec![1.0 / size as f64; size] })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self, ProbError> {
        if at >= size {
            return Err(ProbError::DimensionMismatch(format!(
                "point mass at {at} on an alphabet of size {size}"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Ok(Pmf { probs })
    }

    /// Bernoulli pmf `(1 - q, q)`.
    pub fn bernoulli(q: f64) -> Result<Self, ProbError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(ProbError::OutOfRange { name: "q", value: q });
        }
        Ok(Pmf { probs: vec![1.0 - q, q] })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// Row-major flat index of `tuple` over a product of alphabets of the given
/// sizes (first coordinate varies slowest).
pub(crate) fn flat_index(sizes: &[usize], tuple: &[usize]) -> usize {
    tuple.iter().zip(sizes).fold(0, |acc, (&t, &s)| acc * s + t)
}

/// A conditional pmf `p(out | given)` where `given` ranges over a product of
/// alphabets. Rows are stored in row-major order of the conditioning tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCondPmf", into = "RawCondPmf")]
pub struct CondPmf {
    given: Vec<usize>,
    outcomes: usize,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCondPmf {
    given: Vec<usize>,
    outcomes: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawCondPmf> for CondPmf {
    type Error = ProbError;
    fn try_from(raw: RawCondPmf) -> Result<Self, Self::Error> {
        let rows = raw.rows.into_iter().map(Pmf::new).collect::<Result<Vec<_>, _>>()?;
        CondPmf::from_rows(raw.given, raw.outcomes, rows)
    }
}

impl From<CondPmf> for RawCondPmf {
    fn from(c: CondPmf) -> Self {
        let rows = c.table.chunks(c.outcomes).map(<[f64]>::to_vec).collect();
        RawCondPmf { given: c.given, outcomes: c.outcomes, rows }
    }
}

impl CondPmf {
    /// Builds a kernel from one [`Pmf`] per conditioning tuple.
    pub fn from_rows(given: Vec<usize>, outcomes: usize, rows: Vec<Pmf>) -> Result<Self, ProbError> {
        if outcomes == 0 || given.contains(&0) {
            return Err(ProbError::EmptyAlphabet);
        }
        let n_rows: usize = given.iter().product();
        if rows.len() != n_rows {
            return Err(ProbError::DimensionMismatch(format!(
                "kernel given {given:?} needs {n_rows} rows, found {}",
                rows.len()
            )));
        }
        let mut table = Vec::with_capacity(n_rows * outcomes);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outcomes {
                return Err(ProbError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {outcomes}",
                    row.len()
                )));
            }
            table.extend_from_slice(row.probs());
        }
        Ok(CondPmf { given, outcomes, table })
    }

    /// Builds a kernel by evaluating `row` on every conditioning tuple.
    pub fn from_fn<F>(given: Vec<usize>, outcomes: usize, mut row: F) -> Result<Self, ProbError>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let mut rows = Vec::new();
        for_each_tuple(&given, |t| rows.push(row(t)));
        let rows = rows.into_iter().map(Pmf::new).collect::<Result<Vec<_>, _>>()?;
        CondPmf::from_rows(given, outcomes, rows)
    }

    /// A kernel that ignores its conditioning and always emits `p`.
    pub fn constant(given: Vec<usize>, p: &Pmf) -> Result<Self, ProbError> {
        let outcomes = p.len();
        CondPmf::from_fn(given, outcomes, |_| p.probs().to_vec())
    }

    /// The kernel of a deterministic map, one point mass per row.
    pub fn deterministic(given: Vec<usize>, outcomes: usize, map: &[usize]) -> Result<Self, ProbError> {
        let n_rows: usize = given.iter().product();
        if map.len() != n_rows {
            return Err(ProbError::DimensionMismatch(format!(
                "map needs {n_rows} entries, found {}",
                map.len()
            )));
        }
        let rows = map.iter().map(|&m| Pmf::point_mass(outcomes, m)).collect::<Result<Vec<_>, _>>()?;
        CondPmf::from_rows(given, outcomes, rows)
    }

    pub fn given(&self) -> &[usize] {
        &self.given
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn n_rows(&self) -> usize {
        self.table.len() / self.outcomes
    }

    /// Row at a flat conditioning index.
    pub fn row(&self, flat: usize) -> &[f64] {
        &self.table[flat * self.outcomes..(flat + 1) * self.outcomes]
    }

    pub fn row_at(&self, tuple: &[usize]) -> &[f64] {
        self.row(flat_index(&self.given, tuple))
    }

    pub fn prob(&self, tuple: &[usize], out: usize) -> f64 {
        self.row_at(tuple)[out]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.outcomes)
    }

    pub fn row_pmf(&self, flat: usize) -> Pmf {
        Pmf { probs: self.row(flat).to_vec() }
    }
}

/// Calls `f` on every tuple of the product space, in row-major order.
pub(crate) fn for_each_tuple<F: FnMut(&[usize])>(sizes: &[usize], mut f: F) {
    if sizes.contains(&0) {
        return;
    }
    let mut t = vec![0usize; sizes.len()];
    loop {
        f(&t);
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            t[k] += 1;
            if t[k] < sizes[k] {
                break;
            }
            t[k] = 0;
        }
    }
}
