use lmpmime::evaluation::write_metrics_csv;
use lmpmime::simulators::var5_truth;
use lmpmime::{
    causality_matrix, metrics, run_batch, score_matrix, CausalityMatrix, ConfusionCounts, GroundTruth, Method,
    MethodConfig, SystemKind, SystemSpec,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> CausalityMatrix {
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i != j && rng.random_bool(0.4) { rng.random_range(0.0..1.0) } else { 0.0 })
                .collect()
        })
        .collect();
    CausalityMatrix::from_rows(&rows).unwrap()
}

/// Per-pair tally kept deliberately separate from the library's match.
fn tally(r: &CausalityMatrix, truth: &GroundTruth) -> [u64; 4] {
    let mut out = [0u64; 4];
    for (i, row) in r.rows().iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            let idx = 2 * usize::from(!truth.adjacency[i][j]) + usize::from(*v <= 0.0);
            out[idx] += 1;
        }
    }
    out // [tp, fn, fp, tn]
}

#[test]
fn scoring_matches_a_pairwise_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = var5_truth();
    for _ in 0..200 {
        let r = random_matrix(&mut rng, 5);
        let c = score_matrix(&r, &truth).unwrap();
        assert_eq!([c.tp, c.fn_, c.fp, c.tn], tally(&r, &truth));
        assert_eq!(c.total(), 20);
    }
}

fn small_batch_spec() -> (SystemSpec, MethodConfig) {
    (
        SystemSpec::new(SystemKind::NlVar3, 256, 5),
        MethodConfig::new(Method::Pmime).with_lag(3).with_threshold(0.97),
    )
}

#[test]
fn single_realization_batch_is_that_realization() {
    let (spec, cfg) = small_batch_spec();
    let batch = run_batch(&spec, &cfg, 1).unwrap();
    let (series, truth) = spec.realization(0).generate().unwrap();
    let direct = causality_matrix(&series, &cfg).unwrap().matrix;
    assert_eq!(batch.mean_r, direct);
    assert_eq!(batch.pooled, score_matrix(&direct, &truth).unwrap());
}

#[test]
fn pooled_metrics_are_metrics_of_summed_counts() {
    let (spec, cfg) = small_batch_spec();
    let batch = run_batch(&spec, &cfg, 4).unwrap();
    let summed: ConfusionCounts = batch.per_realization.iter().map(|r| r.counts).sum();
    assert_eq!(batch.pooled, summed);
    let m = metrics(&summed);
    assert!((m.sensitivity - batch.metrics.sensitivity).abs() < 1e-12);
    assert!((m.specificity - batch.metrics.specificity).abs() < 1e-12);
    assert!((m.f1 - batch.metrics.f1).abs() < 1e-12);
    for r in &batch.per_realization {
        assert_eq!(r.counts.total(), 6);
    }
    for i in 0..3 {
        assert_eq!(batch.mean_r.get(i, i), 0.0);
        assert_eq!(batch.detection_rate.get(i, i), 0.0);
    }

    // Running the first two realizations on their own pools to the same prefix.
    let head = run_batch(&spec, &cfg, 2).unwrap();
    assert_eq!(head.per_realization[..], batch.per_realization[..2]);
}

#[test]
fn metrics_csv_has_one_row_per_summary() {
    let (spec, cfg) = small_batch_spec();
    let batch = run_batch(&spec, &cfg, 1).unwrap();
    let mut out = Vec::new();
    write_metrics_csv(&mut out, &[batch.clone(), batch]).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("system,vars,coupling,n,method"));
    assert!(lines[1].starts_with("nlvar3,3,,256,PMIME"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pooling_is_associative(seed in any::<u64>(), split in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = var5_truth();
        let counts: Vec<ConfusionCounts> =
            (0..10).map(|_| score_matrix(&random_matrix(&mut rng, 5), &truth).unwrap()).collect();
        let all: ConfusionCounts = counts.iter().copied().sum();
        let left: ConfusionCounts = counts[..split].iter().copied().sum();
        let right: ConfusionCounts = counts[split..].iter().copied().sum();
        prop_assert_eq!(metrics(&all), metrics(&(left + right)));
    }

    #[test]
    fn metrics_ignore_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = var5_truth();
        let r = random_matrix(&mut rng, 5);
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        prop_assert_eq!(
            score_matrix(&r, &truth).unwrap(),
            score_matrix(&r.permuted(&perm), &truth.permuted(&perm)).unwrap()
        );
    }

    #[test]
    fn metrics_lie_in_the_unit_interval(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
        let m = metrics(&ConfusionCounts { tp, fp, tn, fn_ });
        for v in [m.sensitivity, m.specificity, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
