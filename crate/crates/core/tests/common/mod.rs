//! Reference computations shared by the integration suites. Nothing here
//! calls into the solvers; they only read model tables.
#![allow(dead_code)]

use actstate::channel::{CostMetric, DistortionMetric, PtpActionSpec};
use actstate::prob::CondPmf;
use actstate::probing::ProbingSpec;
use nalgebra::{DMatrix, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn flip(e: f64, bit: usize) -> Vec<f64> {
    if bit == 0 {
        vec![1.0 - e, e]
    } else {
        vec![e, 1.0 - e]
    }
}

/// Action 1 makes the state likely stuck at 1; when S = 1 the output is
/// stuck at 1 regardless of X, otherwise it is a BSC(0.1) of X.
pub fn stuck_spec() -> PtpActionSpec {
    PtpActionSpec::new(
        CondPmf::from_fn(vec![2], 2, |t| if t[0] == 0 { vec![0.8, 0.2] } else { vec![0.3, 0.7] }).unwrap(),
        CondPmf::from_fn(vec![2, 2, 2], 2, |t| if t[1] == 1 { vec![0.05, 0.95] } else { flip(0.1, t[0]) }).unwrap(),
        CostMetric::from_fn(2, 2, |a, x| 0.5 * a as f64 + x as f64).unwrap(),
        DistortionMetric::hamming(2).unwrap(),
    )
    .unwrap()
}

/// `p(s|a) = p(s)`, and neither the channel nor the cost depends on `a`.
pub fn action_free_spec() -> PtpActionSpec {
    PtpActionSpec::new(
        CondPmf::from_fn(vec![2], 2, |_| vec![0.7, 0.3]).unwrap(),
        CondPmf::from_fn(vec![2, 2, 2], 2, |t| if t[1] == 1 { vec![0.2, 0.8] } else { flip(0.1, t[0]) }).unwrap(),
        CostMetric::from_fn(2, 2, |_, x| x as f64).unwrap(),
        DistortionMetric::hamming(2).unwrap(),
    )
    .unwrap()
}

pub fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.log2()
    } else {
        0.0
    }
}

pub fn h(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlogx(v)).sum::<f64>()
}

pub fn hb(q: f64) -> f64 {
    h(&[q, 1.0 - q])
}

/// Best `I(U;Y) - I(U;S|A)` for binary `A`, `S`, `U`, `X` over
/// `p(a)`, `p(u|s,a)` on a grid of the given step, and all deterministic
/// maps `x = f(u, s)`.
pub fn cdc_grid_oracle(spec: &PtpActionSpec, step: f64) -> f64 {
    let sz = spec.sizes;
    assert!(sz.a == 2 && sz.s == 2 && sz.x == 2, "oracle handles binary A, S, X");
    let ny = sz.y;
    let n = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let ps = |a: usize, s: usize| spec.state_channel.row(a)[s];
    let w = |y: usize, x: usize, s: usize, a: usize| spec.transmission_channel.row_at(&[x, s, a])[y];
    let mut best = f64::NEG_INFINITY;
    let m = grid.len();
    for &pa1 in &grid {
        let pa = [1.0 - pa1, pa1];
        for code in 0..m.pow(4) {
            // q[s][a] = p(u = 1 | s, a)
            let mut q = [[0.0; 2]; 2];
            let mut c = code;
            for s in 0..2 {
                for a in 0..2 {
                    q[s][a] = grid[c % m];
                    c /= m;
                }
            }
            // p(a, s, u)
            let mut pasu = [[[0.0; 2]; 2]; 2];
            for a in 0..2 {
                for s in 0..2 {
                    let base = pa[a] * ps(a, s);
                    pasu[a][s][1] = base * q[s][a];
                    pasu[a][s][0] = base * (1.0 - q[s][a]);
                }
            }
            // I(U;S|A) = H(U|A) - H(U|S,A)
            let mut i_us = 0.0;
            for a in 0..2 {
                let pa_u = [pasu[a][0][0] + pasu[a][1][0], pasu[a][0][1] + pasu[a][1][1]];
                let tot = pa_u[0] + pa_u[1];
                if tot <= 0.0 {
                    continue;
                }
                i_us += tot * hb(pa_u[1] / tot);
                for s in 0..2 {
                    let t = pasu[a][s][0] + pasu[a][s][1];
                    if t > 0.0 {
                        i_us -= t * hb(pasu[a][s][1] / t);
                    }
                }
            }
            let pu = [
                pasu.iter().flatten().map(|r| r[0]).sum::<f64>(),
                pasu.iter().flatten().map(|r| r[1]).sum::<f64>(),
            ];
            for map in 0..16usize {
                let f = |u: usize, s: usize| (map >> (u * 2 + s)) & 1;
                let mut puy = vec![0.0; 2 * ny];
                for a in 0..2 {
                    for s in 0..2 {
                        for u in 0..2 {
                            let p = pasu[a][s][u];
                            if p == 0.0 {
                                continue;
                            }
                            for y in 0..ny {
                                puy[u * ny + y] += p * w(y, f(u, s), s, a);
                            }
                        }
                    }
                }
                let py: Vec<f64> = (0..ny).map(|y| puy[y] + puy[ny + y]).collect();
                let i_uy = h(&pu) + h(&py) - h(&puy);
                best = best.max(i_uy - i_us);
            }
        }
    }
    best
}

/// Joint of `(U1, U2, A, S_e, X, (Y1, S_d1), (Y2, S_d2))` obtained by summing
/// the full probing model over the hidden state. Layout matches a broadcast
/// joint with encoder state `S_e` and composite outputs `y * |S_d| + sd`.
pub fn probing_joint_direct(
    p: &ProbingSpec,
    n1: usize,
    n2: usize,
    pu: &[f64],
    f_a: &[usize],
    f_x: &[usize],
) -> Vec<f64> {
    let ns = p.state_prior.len();
    let ne = ns + 1;
    let nx = p.x_size;
    let o1 = p.y1_size * p.sd1_size;
    let o2 = p.y2_size * p.sd2_size;
    let mut out = vec![0.0; n1 * n2 * 2 * ne * nx * o1 * o2];
    for u1 in 0..n1 {
        for u2 in 0..n2 {
            let cell = u1 * n2 + u2;
            let a = f_a[cell];
            for s in 0..ns {
                let se = if a == 1 { s } else { ns };
                let x = f_x[cell * ne + se];
                let sd1 = p.b_d1[s * 2 + a];
                let sd2 = p.b_d2[sd1];
                let base = pu[cell] * p.state_prior.probs()[s];
                for y1 in 0..p.y1_size {
                    let w1 = p.channel1.row_at(&[x, s, a])[y1];
                    for y2 in 0..p.y2_size {
                        let w2 = p.degrading_channel.row(y1)[y2];
                        let c1 = y1 * p.sd1_size + sd1;
                        let c2 = y2 * p.sd2_size + sd2;
                        let idx = (((((u1 * n2 + u2) * 2 + a) * ne + se) * nx + x) * o1 + c1) * o2 + c2;
                        out[idx] += base * w1 * w2;
                    }
                }
            }
        }
    }
    out
}

/// Coefficients of `(U, Y, S, A)` on the independent sources `(A, W, G, Z)`
/// for `X = αA + gW + G`, `S = A + W`, `Y = X + S + Z`, `U = δX + A + βW`.
pub fn gauss_mixing(alpha: f64, beta: f64, delta: f64, g: f64) -> Matrix4<f64> {
    Matrix4::new(
        delta * alpha + 1.0, delta * g + beta, delta, 0.0, //
        alpha + 1.0, g + 1.0, 1.0, 1.0, //
        1.0, 1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0,
    )
}

fn sub(c: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| c[(idx[i], idx[j])])
}

fn logdet(c: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    sub(c, idx).determinant().log2()
}

/// Gaussian `I(U;Y)` and `I(U;S|A)` in bits from a covariance of `(U, Y, S, A)`.
pub fn gauss_mi_from_cov(c: &DMatrix<f64>) -> (f64, f64) {
    let i_uy = 0.5 * (logdet(c, &[0]) + logdet(c, &[1]) - logdet(c, &[0, 1]));
    let i_us_a = 0.5 * (logdet(c, &[0, 3]) + logdet(c, &[2, 3]) - logdet(c, &[0, 2, 3]) - logdet(c, &[3]));
    (i_uy, i_us_a)
}

/// Exact covariance of `(U, Y, S, A)` for unit `P_A`, `σ_W²`, `σ_Z²` and `P_X`.
pub fn gauss_cov_unit(alpha: f64, beta: f64, delta: f64, g: f64) -> DMatrix<f64> {
    let pg = 1.0 - alpha * alpha - g * g;
    let m = gauss_mixing(alpha, beta, delta, g);
    let v = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, pg, 1.0));
    let c = m * v * m.transpose();
    DMatrix::from_fn(4, 4, |i, j| c[(i, j)])
}

/// Sample covariance of `(U, Y, S, A)` from `n` draws of the linear model with
/// unit powers.
pub fn gauss_cov_sampled(alpha: f64, beta: f64, delta: f64, g: f64, n: usize, seed: u64) -> DMatrix<f64> {
    let pg = (1.0 - alpha * alpha - g * g).max(0.0);
    let m = gauss_mixing(alpha, beta, delta, g);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sum = [0.0; 4];
    let mut prod = [[0.0; 4]; 4];
    for _ in 0..n {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let src = nalgebra::Vector4::new(z[0], z[1], pg.sqrt() * z[2], z[3]);
        let v = m * src;
        for i in 0..4 {
            sum[i] += v[i];
            for j in 0..4 {
                prod[i][j] += v[i] * v[j];
            }
        }
    }
    let nf = n as f64;
    DMatrix::from_fn(4, 4, |i, j| prod[i][j] / nf - sum[i] * sum[j] / (nf * nf))
}
