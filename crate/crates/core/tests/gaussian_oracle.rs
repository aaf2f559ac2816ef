mod common;

use actstate::gaussian::{
    evaluate_point, gauss_distortion, gauss_rate, optimize_gauss, GaussMode, GaussOptions, GaussParams, GaussPowers,
};
use common::{gauss_cov_sampled, gauss_cov_unit, gauss_mi_from_cov};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_feasible(rng: &mut ChaCha8Rng) -> GaussParams {
    loop {
        let alpha: f64 = rng.random_range(-1.0..1.0);
        let g: f64 = rng.random_range(-1.0..1.0);
        if alpha * alpha + g * g < 0.95 {
            return GaussParams::new(alpha, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), g);
        }
    }
}

#[test]
fn rate_matches_determinant_formula() {
    let unit = GaussPowers::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let p = random_feasible(&mut rng);
        let (i_uy, i_us) = gauss_mi_from_cov(&gauss_cov_unit(p.alpha, p.beta, p.delta, p.g));
        let r = gauss_rate(&p, &unit).unwrap();
        assert!((r - (i_uy - i_us)).abs() < 1e-9, "{p:?}: {r} vs {}", i_uy - i_us);
        let c = gauss_cov_unit(p.alpha, p.beta, p.delta, p.g);
        let sub = |idx: &[usize]| nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| c[(idx[i], idx[j])]).determinant();
        let mmse = sub(&[0, 2, 3]) / sub(&[0, 3]);
        assert!((gauss_distortion(&p, &unit).unwrap() - mmse).abs() < 1e-9);
    }
}

#[test]
fn reference_values() {
    let unit = GaussPowers::unit();
    let zero = GaussParams::new(0.0, 0.0, 0.0, 0.0);
    assert!((gauss_rate(&zero, &unit).unwrap() - 0.5 * (4.0f64 / 3.0).log2()).abs() < 1e-12);
    assert_eq!(gauss_distortion(&zero, &unit).unwrap(), 1.0);
    let d = gauss_distortion(&GaussParams::new(0.0, 1.0, 1.0, 0.0), &unit).unwrap();
    assert!((d - 0.5).abs() < 1e-12);
    assert!(gauss_rate(&GaussParams::new(1.0, 0.0, 1.0, 0.0), &unit).is_ok());
    assert_eq!(gauss_distortion(&GaussParams::new(0.3, 0.7, 0.0, 0.2), &unit).unwrap(), 0.0);
}

#[test]
fn monte_carlo_agrees_on_a_few_points() {
    let unit = GaussPowers::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..4 {
        let p = random_feasible(&mut rng);
        let (i_uy, i_us) = gauss_mi_from_cov(&gauss_cov_sampled(p.alpha, p.beta, p.delta, p.g, 200_000, k));
        let r = gauss_rate(&p, &unit).unwrap();
        assert!((r - (i_uy - i_us)).abs() < 2e-2, "{p:?}: {r} vs {}", i_uy - i_us);
    }
}

#[test]
fn optimizer_beats_dense_grid() {
    let unit = GaussPowers::unit();
    let d = 0.5;
    let ticks: Vec<f64> = (0..=40).map(|k| -1.0 + 0.05 * k as f64).collect();
    let mut grid_best = f64::NEG_INFINITY;
    for &alpha in &ticks {
        for &g in &ticks {
            if alpha * alpha + g * g > 1.0 {
                continue;
            }
            for &beta in &ticks {
                for &delta in &ticks {
                    let c = gauss_cov_unit(alpha, beta, delta, g);
                    let sub = |idx: &[usize]| {
                        nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| c[(idx[i], idx[j])]).determinant()
                    };
                    let (ua, sua) = (sub(&[0, 3]), sub(&[0, 2, 3]));
                    if ua < 1e-9 || sua < 1e-9 || sua / ua > d {
                        continue;
                    }
                    let (i_uy, i_us) = gauss_mi_from_cov(&c);
                    grid_best = grid_best.max(i_uy - i_us);
                }
            }
        }
    }
    let opt = optimize_gauss(&unit, d, GaussMode::Joint, &GaussOptions::default()).unwrap();
    assert!(opt.distortion <= d + 1e-12);
    assert!(opt.rate >= grid_best - 1e-9, "optimizer {} below grid {grid_best}", opt.rate);
}

#[test]
fn zero_distortion_gives_zero_rate() {
    let unit = GaussPowers::unit();
    let opt = optimize_gauss(&unit, 0.0, GaussMode::Joint, &GaussOptions::default()).unwrap();
    assert_eq!(opt.rate, 0.0);
    assert!(opt.distortion <= 1e-12);
}

#[test]
fn reported_points_reevaluate() {
    let unit = GaussPowers::unit();
    for mode in [GaussMode::Joint, GaussMode::MessageOnly, GaussMode::ActionIndependent] {
        let opt = optimize_gauss(&unit, 0.4, mode, &GaussOptions { starts: 10, ..Default::default() }).unwrap();
        let again = evaluate_point(opt.params, &unit, 0.4, mode).unwrap();
        assert!((again.rate - opt.rate).abs() < 1e-12);
        assert!((again.distortion - opt.distortion).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&opt.distortion));
    }
}
