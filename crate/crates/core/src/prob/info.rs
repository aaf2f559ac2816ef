use super::{JointPmf, Pmf, ProbError, ZERO_FLOOR};

/// Shannon entropy in bits of a slice of probabilities, `0 log 0 = 0`.
pub fn entropy_of_slice(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > ZERO_FLOOR).map(|&v| -v * v.log2()).sum();
    h.max(0.0)
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of_slice(p.probs())
}

fn check_unit(name: &'static str, v: f64) -> Result<(), ProbError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ProbError::OutOfRange { name, value: v })
    }
}

/// Binary entropy function `H(q)` in bits.
pub fn binary_entropy(q: f64) -> Result<f64, ProbError> {
    check_unit("q", q)?;
    Ok(entropy_of_slice(&[q, 1.0 - q]))
}

/// Crossover probability `a(1-b) + b(1-a)` of two cascaded binary flips.
pub fn binary_convolve(a: f64, b: f64) -> Result<f64, ProbError> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok((a * (1.0 - b) + b * (1.0 - a)).clamp(0.0, 1.0))
}

fn joint_entropy(j: &JointPmf, axes: &[usize]) -> Result<f64, ProbError> {
    if axes.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy_of_slice(&j.marginal_probs(axes)?))
}

fn disjoint(j: &JointPmf, sets: &[&[usize]]) -> Result<Vec<usize>, ProbError> {
    let all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    j.check_axes(&all)?;
    Ok(all)
}

/// `I(A; B)` in bits between two disjoint, non-empty axis sets.
pub fn mutual_information(j: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64, ProbError> {
    conditional_mutual_information(j, a, b, &[])
}

/// `I(A; B | C)` in bits. `c` may be empty, in which case this is `I(A; B)`.
pub fn conditional_mutual_information(
    j: &JointPmf,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64, ProbError> {
    if a.is_empty() || b.is_empty() {
        return Err(ProbError::EmptyAxisSet);
    }
    disjoint(j, &[a, b, c])?;
    let ac: Vec<usize> = a.iter().chain(c).copied().collect();
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    let i = joint_entropy(j, &ac)? + joint_entropy(j, &bc)? - joint_entropy(j, &abc)? - joint_entropy(j, c)?;
    Ok(i.max(0.0))
}
