//! Adaptive Nelder–Mead minimizer.
//!
//! Coefficients scale with the dimension (reflection 1, expansion `1 + 2/n`,
//! contraction `0.75 − 1/(2n)`, shrink `1 − 1/n`). Objective values of
//! `+∞` act as a rejection barrier: such vertices are always the worst and
//! are contracted away.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    pub initial_step: f64,
    pub max_iter: usize,
    /// Stop when the spread of vertex values drops below this.
    pub f_tol: f64,
    /// and the simplex diameter drops below this.
    pub x_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { initial_step: 0.25, max_iter: 4000, f_tol: 1e-13, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `x0`. `project` maps any trial point back into the
/// admissible box before it is evaluated and stored.
pub fn minimize<F, P>(x0: &[f64], opts: NmOptions, mut f: F, project: P) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let nf = n as f64;
    let (rho, chi, psi, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut start = x0.to_vec();
    project(&mut start);
    let f0 = f(&start);
    let mut verts: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f0)];
    for i in 0..n {
        // pull infeasible initial vertices toward the start
        let mut step = if start[i].abs() > 1e-8 { opts.initial_step * start[i].abs().max(1.0) } else { opts.initial_step };
        let mut v = start.clone();
        let mut fv = f64::INFINITY;
        for _ in 0..20 {
            v.copy_from_slice(&start);
            v[i] += step;
            project(&mut v);
            fv = f(&v);
            if fv.is_finite() || !f0.is_finite() {
                break;
            }
            step *= 0.5;
        }
        verts.push((v, fv));
    }

    let mut iterations = 0;
    let order = |verts: &mut Vec<(Vec<f64>, f64)>| verts.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut verts);
    while iterations < opts.max_iter {
        let spread = verts[n].1 - verts[0].1;
        let diam = verts[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&verts[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_tol && diam <= opts.x_tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &verts[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let point = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&verts[n].0).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p);
            p
        };

        let xr = point(rho);
        let fr = f(&xr);
        if fr < verts[0].1 {
            let xe = point(rho * chi);
            let fe = f(&xe);
            verts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < verts[n - 1].1 {
            verts[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < verts[n].1 {
                let xc = point(rho * psi);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(-psi);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < verts[n].1.min(fr) || (fc.is_finite() && !verts[n].1.is_finite()) {
                verts[n] = (xc, fc);
            } else {
                let best = verts[0].0.clone();
                for (v, fv) in verts.iter_mut().skip(1) {
                    for (x, b) in v.iter_mut().zip(&best) {
                        *x = b + sigma * (*x - b);
                    }
                    project(v);
                    *fv = f(v);
                }
            }
        }
        order(&mut verts);
    }
    let (x, fbest) = verts.swap_remove(0);
    NmResult { x, f: fbest, iterations }
}
