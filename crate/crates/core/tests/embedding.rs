use lmpmime::embedding::{
    chained_information, embed_aligned, greedy_step_cmi, joint_information, lowdim_score, prepare,
    select_first, stopping_check, traversal_step, Phase, StopReason,
};
use lmpmime::simulators::{gen_henon, gen_var5};
use lmpmime::{
    align, build_candidate_set, build_embedding, causality_index, causality_matrix,
    conditional_mutual_information, mutual_information, Coefficients, EmbeddingVector,
    EstimatorConfig, LaggedVariable, Method, MethodConfig, MultivariateSeries,
};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn lv(var: usize, lag: usize) -> LaggedVariable {
    LaggedVariable::new(var, lag)
}

/// Two noise drivers and a target built from their past; the candidates
/// are lags `1..=3` of the drivers only.
fn planted(seed: u64, n: usize, f: impl Fn(&[f64], &[f64], usize) -> f64) -> lmpmime::AlignedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..n)
        .map(|t| if t < 3 { 0.0 } else { f(&a, &b, t) } + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let s = MultivariateSeries::from_columns(vec![a, b, y]).unwrap();
    let cands = [lv(0, 1), lv(0, 2), lv(0, 3), lv(1, 1), lv(1, 2), lv(1, 3)];
    align(&s, 2, &cands, 1).unwrap()
}

fn est() -> EstimatorConfig {
    EstimatorConfig::default()
}

#[test]
fn first_selection_finds_the_planted_lag() {
    let hits = (0..100)
        .filter(|&seed| {
            let s = planted(seed, 400, |a, _, t| a[t - 2]);
            select_first(&s, &s.candidates, &est()).unwrap().0 == lv(0, 2)
        })
        .count();
    assert!(hits >= 95, "{hits}");
}

#[test]
fn first_selection_on_noise_finds_little() {
    let s = planted(1, 2000, |_, _, _| 0.0);
    let (_, mi) = select_first(&s, &s.candidates, &est()).unwrap();
    assert!(mi < 0.05, "{mi}");
    let single = [lv(1, 2)];
    assert_eq!(select_first(&s, &single, &est()).unwrap().0, lv(1, 2));
}

#[test]
fn greedy_step_finds_the_second_driver() {
    let hits = (0..100)
        .filter(|&seed| {
            let s = planted(100 + seed, 400, |a, b, t| a[t - 1] + b[t - 1]);
            let remaining: Vec<_> = s.candidates.iter().copied().filter(|c| *c != lv(0, 1)).collect();
            greedy_step_cmi(&s, &remaining, &[lv(0, 1)], &est()).unwrap().0 == lv(1, 1)
        })
        .count();
    assert!(hits >= 95, "{hits}");
}

#[test]
fn greedy_step_after_the_sole_driver_finds_little() {
    let s = planted(7, 2000, |a, _, t| a[t - 1]);
    let remaining: Vec<_> = s.candidates.iter().copied().filter(|c| *c != lv(0, 1)).collect();
    let (_, score) = greedy_step_cmi(&s, &remaining, &[lv(0, 1)], &est()).unwrap();
    assert!(score < 0.05, "{score}");
    let (w, _) = greedy_step_cmi(&s, &[lv(1, 3)], &[lv(0, 1)], &est()).unwrap();
    assert_eq!(w, lv(1, 3));
}

#[test]
fn traversal_finds_the_planted_pair() {
    let hits = (0..100)
        .filter(|&seed| {
            let s = planted(300 + seed, 1024, |a, b, t| a[t - 1] + b[t - 3]);
            let (best, _, scored) = traversal_step(&s, &s.candidates, 2, 1_000_000, &est()).unwrap();
            assert_eq!(scored, 15);
            best == vec![lv(0, 1), lv(1, 3)]
        })
        .count();
    assert!(hits >= 90, "{hits}");
}

#[test]
fn traversal_respects_the_budget() {
    let s = planted(2, 100, |a, _, t| a[t - 1]);
    assert!(matches!(
        traversal_step(&s, &s.candidates, 3, 19, &est()),
        Err(lmpmime::Error::CombinationBudgetExceeded { count: 20, .. })
    ));
    let (_, _, scored) = traversal_step(&s, &s.candidates[..4], 2, 6, &est()).unwrap();
    assert_eq!(scored, 6);
}

#[test]
fn lowdim_score_recomposes_from_its_terms() {
    let s = planted(3, 500, |a, b, t| a[t - 1] * b[t - 2]);
    let y: &[f64] = &s.target;
    let col = |v: LaggedVariable| s.column(v).unwrap();
    let w = lv(1, 3);
    let v = [lv(0, 1), lv(1, 2), lv(0, 3)];
    let e = est();
    let mut expected = mutual_information(&[col(w)], &[y], &e).unwrap();
    for &vi in &v {
        expected -= mutual_information(&[col(w)], &[col(vi)], &e).unwrap() / 3.0;
        expected += conditional_mutual_information(&[col(w)], &[col(vi)], &[y], &e).unwrap() / 3.0;
        for &vj in &v {
            if vi != vj {
                expected -= conditional_mutual_information(&[col(w)], &[col(vj)], &[col(vi)], &e).unwrap() / 6.0;
            }
        }
    }
    let got = lowdim_score(w, &s, &v, None, &e).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

    let relevance = mutual_information(&[col(w)], &[y], &e).unwrap();
    assert_eq!(lowdim_score(w, &s, &[], None, &e).unwrap(), relevance);
    assert_eq!(lowdim_score(w, &s, &v, Some(Coefficients::MIM), &e).unwrap(), relevance);
    // a single member: beta = gamma = 1 and no pair term
    let one = lowdim_score(w, &s, &v[..1], None, &e).unwrap();
    let cife = lowdim_score(w, &s, &v[..1], Some(Coefficients::CIFE), &e).unwrap();
    assert_eq!(one, cife);
}

#[test]
fn chained_information_of_one_member_is_plain_mi() {
    let s = planted(4, 300, |a, _, t| a[t - 1]);
    let e = est();
    assert_eq!(
        chained_information(&s, &[lv(0, 1)], &e).unwrap(),
        joint_information(&s, &[lv(0, 1)], &e).unwrap()
    );
    assert_eq!(chained_information(&s, &[], &e).unwrap(), 0.0);
}

fn check_log(e: &EmbeddingVector, sample: &lmpmime::AlignedSample, cfg: &MethodConfig) {
    let (last, earlier) = e.steps.split_last().expect("at least one step");
    for s in earlier {
        assert!(s.accepted);
        assert!(!stopping_check_ratio(s.ratio, cfg.threshold));
    }
    if e.stop == StopReason::Threshold {
        assert!(!last.accepted);
        assert!(stopping_check_ratio(last.ratio, cfg.threshold));
    } else {
        assert!(last.accepted);
    }
    let mut distinct = e.members.clone();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), e.members.len());
    // The recorded information is the chain-rule value of the final vector.
    let recomputed = chained_information(sample, &e.members, &cfg.estimator).unwrap();
    assert!((e.information - recomputed).abs() < 1e-12);
    for s in &e.steps {
        assert!(s.phase != Phase::Traversal || cfg.method != Method::Pmime);
    }
}

fn stopping_check_ratio(ratio: f64, a: f64) -> bool {
    ratio > a
}

#[test]
fn embedding_logs_are_consistent() {
    let (series, _) = gen_var5(512, 11).unwrap();
    for method in Method::ALL {
        let cfg = MethodConfig::new(method).with_lag(3).with_threshold(0.97).with_strategy_factor(2);
        let prepared = prepare(&series, &cfg.estimator).unwrap();
        let cands = build_candidate_set(5, 3);
        for target in 0..5 {
            let sample = align(&prepared, target, &cands, 1).unwrap();
            let e = embed_aligned(&sample, target, &cfg).unwrap();
            check_log(&e, &sample, &cfg);
            assert_eq!(e, build_embedding(&series, target, &cfg).unwrap());
        }
    }
}

#[test]
fn stopping_check_examples() {
    assert!(stopping_check(0.98, 1.0, 0.97));
    assert!(!stopping_check(0.90, 1.0, 0.95));
    assert!(stopping_check(0.3, 0.0, 0.95));
}

#[test]
fn m_pmime_with_unit_factor_is_pmime() {
    let (series, _) = gen_var5(400, 5).unwrap();
    let p = MethodConfig::new(Method::Pmime).with_lag(4).with_strategy_factor(1);
    let m = MethodConfig::new(Method::MPmime).with_lag(4).with_strategy_factor(1);
    let a = causality_matrix(&series, &p).unwrap();
    let b = causality_matrix(&series, &m).unwrap();
    assert_eq!(a, b);
}

#[test]
fn strong_henon_coupling_is_embedded() {
    let cfg = MethodConfig::new(Method::Pmime).with_lag(5).with_threshold(0.95);
    for seed in 0..5 {
        let (series, _) = gen_henon(3, 0.3, 1024, seed).unwrap();
        let e = build_embedding(&series, 1, &cfg).unwrap();
        assert!(e.contains_var(0), "seed {seed}: {:?}", e.members);
    }
}

#[test]
fn index_of_a_driver_only_embedding_is_one() {
    let s = planted(5, 500, |a, _, t| a[t - 1] + a[t - 2]);
    let e = EmbeddingVector {
        target: 2,
        members: vec![lv(0, 1), lv(0, 2)],
        information: 0.0,
        steps: Vec::new(),
        stop: StopReason::Threshold,
    };
    let r = causality_index(&e, 0, &s, &est()).unwrap();
    assert!((r - 1.0).abs() < 1e-9, "{r}");
    assert_eq!(causality_index(&e, 1, &s, &est()).unwrap(), 0.0);
}

#[test]
fn index_is_positive_exactly_for_embedded_drivers() {
    // Random member sets, including uninformative ones whose estimates clip to zero.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = planted(6, 300, |a, b, t| a[t - 1] + 0.2 * b[t - 3]);
    for _ in 0..200 {
        let size = rng.random_range(1..=4);
        let members: Vec<LaggedVariable> = s.candidates.choose_multiple(&mut rng, size).copied().collect();
        let e = EmbeddingVector {
            target: 2,
            members,
            information: 0.0,
            steps: Vec::new(),
            stop: StopReason::Threshold,
        };
        for driver in 0..2 {
            let r = causality_index(&e, driver, &s, &est()).unwrap();
            assert!(r >= 0.0 && r.is_finite());
            assert_eq!(r > 0.0, e.contains_var(driver));
        }
    }
}

#[test]
fn causality_matrix_diagonal_and_support() {
    let (series, _) = gen_henon(3, 0.3, 512, 9).unwrap();
    let res = causality_matrix(&series, &MethodConfig::new(Method::LmPmime)).unwrap();
    for t in 0..3 {
        assert_eq!(res.matrix.get(t, t), 0.0);
        for d in 0..3 {
            if d != t {
                assert_eq!(res.matrix.get(d, t) > 0.0, res.embeddings[t].contains_var(d));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn causality_matrix_is_permutation_equivariant(seed in 0u64..1000) {
        let (series, _) = gen_henon(3, 0.3, 256, seed).unwrap();
        let mut perm = vec![0, 1, 2];
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = MethodConfig::new(Method::LmPmime).with_lag(3);
        let a = causality_matrix(&series, &cfg).unwrap().matrix;
        let b = causality_matrix(&series.permute_variables(&perm).unwrap(), &cfg).unwrap().matrix;
        prop_assert_eq!(b, a.permuted(&perm));
    }

    #[test]
    fn runs_are_deterministic(seed in 0u64..1000) {
        let (series, _) = gen_var5(300, seed).unwrap();
        let cfg = MethodConfig::new(Method::MPmime).with_lag(3);
        prop_assert_eq!(causality_matrix(&series, &cfg).unwrap(), causality_matrix(&series, &cfg).unwrap());
    }
}
