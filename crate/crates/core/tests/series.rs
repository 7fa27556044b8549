use lmpmime::{align, build_candidate_set, standardize, LaggedVariable, MultivariateSeries};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_series(rng: &mut ChaCha8Rng, k: usize, n: usize) -> MultivariateSeries {
    let cols = (0..k).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    MultivariateSeries::from_columns(cols).unwrap()
}

#[test]
fn align_matches_explicit_index_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_series(&mut rng, 4, 20);
    for (l, h) in [(1, 1), (3, 1), (3, 2), (5, 4)] {
        let cands = build_candidate_set(4, l);
        for target in 0..4 {
            let a = align(&s, target, &cands, h).unwrap();
            assert_eq!(a.n_eff(), 20 - l - (h - 1));
            for t in 0..a.n_eff() {
                assert_eq!(a.target[t], s.value(t + l + h - 1, target));
                for c in &cands {
                    assert_eq!(a.column(*c).unwrap()[t], s.value(t + l - c.lag, c.var));
                }
            }
        }
    }
}

#[test]
fn lagged_rows_refer_to_the_same_instant() {
    // A column holding its own time index makes the alignment readable.
    let t: Vec<f64> = (0..12).map(|v| v as f64).collect();
    let s = MultivariateSeries::from_columns(vec![t.clone(), t]).unwrap();
    let a = align(&s, 1, &build_candidate_set(2, 2), 1).unwrap();
    assert_eq!(a.n_eff(), 10);
    assert_eq!(a.column(LaggedVariable::new(0, 1)).unwrap()[0], 1.0);
    for row in 0..a.n_eff() {
        let now = a.target[row];
        assert_eq!(a.column(LaggedVariable::new(0, 1)).unwrap()[row], now - 1.0);
        assert_eq!(a.column(LaggedVariable::new(1, 2)).unwrap()[row], now - 2.0);
    }
}

#[test]
fn standardized_aligned_columns_stay_centred() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = standardize(&random_series(&mut rng, 3, 256)).unwrap();
    let a = align(&s, 0, &build_candidate_set(3, 6), 1).unwrap();
    for col in a.columns.iter().chain(std::iter::once(&a.target)) {
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 0.1);
    }
}

#[test]
fn candidate_set_sizes() {
    assert_eq!(build_candidate_set(5, 6).len(), 30);
    assert_eq!(
        build_candidate_set(3, 1),
        vec![LaggedVariable::new(0, 1), LaggedVariable::new(1, 1), LaggedVariable::new(2, 1)]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardize_gives_zero_mean_unit_sd(seed in any::<u64>(), k in 2usize..5, n in 3usize..300, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| scale * rng.random_range(-1.0..1.0) + 7.0).collect())
            .collect();
        let z = standardize(&MultivariateSeries::from_columns(cols).unwrap()).unwrap();
        prop_assert_eq!(z.n_samples(), n);
        for j in 0..k {
            let c = z.column(j);
            let mean = c.iter().sum::<f64>() / n as f64;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn candidate_set_is_pure(k in 2usize..8, l in 1usize..8) {
        let a = build_candidate_set(k, l);
        prop_assert_eq!(&a, &build_candidate_set(k, l));
        prop_assert_eq!(a.len(), k * l);
        let mut sorted = a.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k * l);
    }

    #[test]
    fn alignment_is_permutation_equivariant(seed in any::<u64>(), k in 2usize..5, l in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_series(&mut rng, k, 30);
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let p = s.permute_variables(&perm).unwrap();
        let cands = build_candidate_set(k, l);
        for new_target in 0..k {
            let a = align(&p, new_target, &cands, 1).unwrap();
            let b = align(&s, perm[new_target], &cands, 1).unwrap();
            prop_assert_eq!(&a.target, &b.target);
            for c in &cands {
                let moved = LaggedVariable::new(perm[c.var], c.lag);
                prop_assert_eq!(a.column(*c).unwrap(), b.column(moved).unwrap());
            }
        }
    }
}
