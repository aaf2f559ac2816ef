mod common;

use actstate::cdc::{cdc_objective, solve_cdc, CdcDecisionVars, CdcError, CdcOptions};
use actstate::channel::{ConstraintPair, CostMetric, DistortionMetric, PtpActionSpec};
use actstate::prob::{CondPmf, Pmf};
use common::{action_free_spec, cdc_grid_oracle, flip, h, stuck_spec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xor_spec() -> PtpActionSpec {
    PtpActionSpec::new(
        CondPmf::from_fn(vec![2], 2, |t| flip(0.1, t[0])).unwrap(),
        CondPmf::from_fn(vec![2, 2, 2], 2, |t| flip(0.1, t[0] ^ t[1])).unwrap(),
        CostMetric::zero(2, 2).unwrap(),
        DistortionMetric::hamming(2).unwrap(),
    )
    .unwrap()
}

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// `I(U;Y) - I(U;S|A)` by summing the product of the model tables.
fn objective_by_hand(spec: &PtpActionSpec, v: &CdcDecisionVars) -> (f64, f64, f64) {
    let z = spec.sizes;
    let nu = v.u_size;
    let mut p = vec![0.0; z.a * z.s * nu * z.x * z.y];
    let mut cost = 0.0;
    let mut dist = 0.0;
    for a in 0..z.a {
        for s in 0..z.s {
            for u in 0..nu {
                for x in 0..z.x {
                    let base = v.pa.probs()[a]
                        * spec.state_channel.row(a)[s]
                        * v.pu_given_sa.row_at(&[s, a])[u]
                        * v.px_given_us.row_at(&[u, s])[x];
                    cost += base * spec.cost.get(a, x);
                    dist += base * spec.distortion.get(s, v.phi[u]);
                    for y in 0..z.y {
                        p[(((a * z.s + s) * nu + u) * z.x + x) * z.y + y] += base * spec.transmission_channel.row_at(&[x, s, a])[y];
                    }
                }
            }
        }
    }
    let marg = |keep: &dyn Fn(usize, usize, usize, usize) -> usize, n: usize| {
        let mut m = vec![0.0; n];
        for a in 0..z.a {
            for s in 0..z.s {
                for u in 0..nu {
                    for x in 0..z.x {
                        for y in 0..z.y {
                            m[keep(a, s, u, y)] += p[(((a * z.s + s) * nu + u) * z.x + x) * z.y + y];
                        }
                    }
                }
            }
        }
        m
    };
    let hu = h(&marg(&|_, _, u, _| u, nu));
    let hy = h(&marg(&|_, _, _, y| y, z.y));
    let huy = h(&marg(&|_, _, u, y| u * z.y + y, nu * z.y));
    let hua = h(&marg(&|a, _, u, _| a * nu + u, z.a * nu));
    let hsa = h(&marg(&|a, s, _, _| a * z.s + s, z.a * z.s));
    let husa = h(&marg(&|a, s, u, _| (a * z.s + s) * nu + u, z.a * z.s * nu));
    let ha = h(&marg(&|a, _, _, _| a, z.a));
    ((hu + hy - huy) - (hua + hsa - husa - ha), dist, cost)
}

#[test]
fn objective_matches_hand_summation() {
    let spec = stuck_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let nu = rng.random_range(1..=4);
        let vars = CdcDecisionVars {
            u_size: nu,
            pa: Pmf::new(random_row(&mut rng, 2)).unwrap(),
            pu_given_sa: CondPmf::from_fn(vec![2, 2], nu, |_| random_row(&mut rng, nu)).unwrap(),
            px_given_us: CondPmf::from_fn(vec![nu, 2], 2, |_| random_row(&mut rng, 2)).unwrap(),
            phi: (0..nu).map(|_| rng.random_range(0..2)).collect(),
        };
        let ev = cdc_objective(&spec, &vars).unwrap();
        let (r, d, c) = objective_by_hand(&spec, &vars);
        assert!((ev.raw_rate - r).abs() < 1e-10, "{} vs {r}", ev.raw_rate);
        assert!((ev.cost - c).abs() < 1e-12);
        // reported φ is the best map, so it can only lower the distortion
        assert!(ev.distortion <= d + 1e-12);
    }
}

#[test]
fn unconstrained_solver_matches_grid_oracle() {
    let opts = CdcOptions { u_size: Some(2), ..Default::default() };
    for spec in [stuck_spec(), xor_spec()] {
        let oracle = cdc_grid_oracle(&spec, 0.05);
        let c = ConstraintPair::new(spec.distortion.d_max(), spec.cost.max()).unwrap();
        let got = solve_cdc(&spec, &c, &opts).unwrap();
        assert!(got.rate >= oracle - 1e-9, "solver {} below grid {oracle}", got.rate);
        assert!((got.rate - oracle).abs() <= 1e-3, "solver {} vs grid {oracle}", got.rate);
    }
}

#[test]
fn xor_channel_reaches_one_minus_h() {
    let spec = xor_spec();
    let c = ConstraintPair::new(1.0, 0.0).unwrap();
    let got = solve_cdc(&spec, &c, &CdcOptions::default()).unwrap();
    assert!((got.rate - (1.0 - h(&[0.1, 0.9]))).abs() < 1e-6, "{}", got.rate);
}

#[test]
fn action_free_state_recovers_the_actionless_solver() {
    let spec = action_free_spec();
    let bare = spec.without_action().unwrap();
    let opts = CdcOptions::default();
    for (d, g) in [(0.3, 1.0), (0.1, 0.5), (0.0, 0.4)] {
        let c = ConstraintPair::new(d, g).unwrap();
        let with = solve_cdc(&spec, &c, &opts).unwrap();
        let without = solve_cdc(&bare, &c, &opts).unwrap();
        assert!((with.rate - without.rate).abs() < 1e-6, "D={d} Γ={g}: {} vs {}", with.rate, without.rate);
    }
}

#[test]
fn budget_below_cheapest_symbol_is_infeasible() {
    let spec = PtpActionSpec::new(
        CondPmf::from_fn(vec![2], 2, |_| vec![0.5, 0.5]).unwrap(),
        CondPmf::from_fn(vec![2, 2, 2], 2, |t| flip(0.1, t[0])).unwrap(),
        CostMetric::from_fn(2, 2, |a, x| 1.0 + a as f64 + x as f64).unwrap(),
        DistortionMetric::hamming(2).unwrap(),
    )
    .unwrap();
    let err = solve_cdc(&spec, &ConstraintPair::new(1.0, 0.5).unwrap(), &CdcOptions::default()).unwrap_err();
    assert!(matches!(err, CdcError::Infeasible { .. }), "{err:?}");
}
