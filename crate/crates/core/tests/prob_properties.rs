use actstate::prob::{
    assemble_joint, binary_convolve, binary_entropy, conditional_mutual_information, entropy_of_slice,
    mutual_information, CondPmf, Factor, JointPmf, Pmf,
};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

/// Weights in [0, 1) with roughly one in five entries forced to zero.
fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|mut w| {
        for v in w.iter_mut() {
            if *v < 0.2 {
                *v = 0.0;
            }
        }
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn joint3() -> impl Strategy<Value = JointPmf> {
    (1usize..=4, 1usize..=4, 1usize..=3)
        .prop_flat_map(|(a, b, c)| (Just([a, b, c]), weights(a * b * c)))
        .prop_map(|(sizes, p)| JointPmf::from_sizes(&sizes, p).unwrap())
}

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

/// Mutual information of a 2-D table straight from the definition.
fn mi_table(p: &[f64], na: usize, nb: usize) -> f64 {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for i in 0..na {
        for k in 0..nb {
            pa[i] += p[i * nb + k];
            pb[k] += p[i * nb + k];
        }
    }
    let mut s = 0.0;
    for i in 0..na {
        for k in 0..nb {
            let v = p[i * nb + k];
            if v > 0.0 {
                s += v * (v / (pa[i] * pb[k])).log2();
            }
        }
    }
    s
}

fn kernel(given: usize, out: usize) -> impl Strategy<Value = CondPmf> {
    prop::collection::vec(weights(out), given)
        .prop_map(move |rows| CondPmf::from_rows(vec![given], out, rows.into_iter().map(|r| Pmf::new(r).unwrap()).collect()).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn chain_rule_for_entropy(j in joint3()) {
        let hab = entropy_of_slice(&j.marginal_probs(&[0, 1]).unwrap());
        let ha = entropy_of_slice(&j.marginal_probs(&[0]).unwrap());
        let sizes = j.sizes();
        let pab = j.marginal_probs(&[0, 1]).unwrap();
        // H(B | A) from the conditional rows
        let mut hb_a = 0.0;
        for a in 0..sizes[0] {
            let row = &pab[a * sizes[1]..(a + 1) * sizes[1]];
            let m: f64 = row.iter().sum();
            if m > 0.0 {
                let cond: Vec<f64> = row.iter().map(|v| v / m).collect();
                hb_a += m * h(&cond);
            }
        }
        prop_assert!((hab - (ha + hb_a)).abs() < TOL);
    }

    #[test]
    fn chain_rule_for_mutual_information(j in joint3()) {
        let whole = mutual_information(&j, &[0], &[1, 2]).unwrap();
        let split = mutual_information(&j, &[0], &[1]).unwrap()
            + conditional_mutual_information(&j, &[0], &[2], &[1]).unwrap();
        prop_assert!((whole - split).abs() < TOL, "{whole} vs {split}");
    }

    #[test]
    fn mutual_information_is_symmetric(j in joint3()) {
        let ab = mutual_information(&j, &[0], &[1]).unwrap();
        let ba = mutual_information(&j, &[1], &[0]).unwrap();
        prop_assert!((ab - ba).abs() < TOL);
        let abc = conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap();
        let bac = conditional_mutual_information(&j, &[1], &[0], &[2]).unwrap();
        prop_assert!((abc - bac).abs() < TOL);
        let sizes = j.sizes();
        let direct = mi_table(&j.marginal_probs(&[0, 1]).unwrap(), sizes[0], sizes[1]);
        prop_assert!((ab - direct).abs() < TOL);
    }

    #[test]
    fn data_processing(
        (px, k1, k2) in (1usize..=4, 1usize..=4, 1usize..=4)
            .prop_flat_map(|(a, b, c)| (weights(a), kernel(a, b), kernel(b, c)))
    ) {
        let j = assemble_joint(&[
            Factor::Root(Pmf::new(px).unwrap()),
            Factor::Kernel { parents: vec![0], kernel: k1 },
            Factor::Kernel { parents: vec![1], kernel: k2 },
        ]).unwrap();
        let xy = mutual_information(&j, &[0], &[1]).unwrap();
        let xz = mutual_information(&j, &[0], &[2]).unwrap();
        let yz = mutual_information(&j, &[1], &[2]).unwrap();
        prop_assert!(xz <= xy + TOL, "I(X;Z) = {xz} > I(X;Y) = {xy}");
        prop_assert!(xz <= yz + TOL);
        prop_assert!(conditional_mutual_information(&j, &[0], &[2], &[1]).unwrap() < TOL);
    }

    #[test]
    fn binary_convolution_composes(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        let left = binary_convolve(binary_convolve(a, b).unwrap(), c).unwrap();
        let right = binary_convolve(a, binary_convolve(b, c).unwrap()).unwrap();
        prop_assert!((left - right).abs() < TOL);
        prop_assert!((binary_convolve(a, b).unwrap() - binary_convolve(b, a).unwrap()).abs() < TOL);
        prop_assert!((binary_convolve(a, 0.0).unwrap() - a).abs() < TOL);
        prop_assert!((binary_convolve(a, 0.5).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn binary_convolution_is_a_cascade(a in 0.0f64..=1.0, b in 0.0f64..=1.0, x0 in 0.0f64..=1.0) {
        let flip = |e: f64| CondPmf::from_fn(vec![2], 2, |t| if t[0] == 0 { vec![1.0 - e, e] } else { vec![e, 1.0 - e] }).unwrap();
        let j = assemble_joint(&[
            Factor::Root(Pmf::new(vec![x0, 1.0 - x0]).unwrap()),
            Factor::Kernel { parents: vec![0], kernel: flip(a) },
            Factor::Kernel { parents: vec![1], kernel: flip(b) },
        ]).unwrap();
        let pxz = j.marginal_probs(&[0, 2]).unwrap();
        let crossover = pxz[1] + pxz[2];
        prop_assert!((crossover - binary_convolve(a, b).unwrap()).abs() < TOL);
        let hb = binary_entropy(binary_convolve(a, b).unwrap()).unwrap();
        prop_assert!((hb - h(&[crossover, 1.0 - crossover])).abs() < TOL);
    }
}
