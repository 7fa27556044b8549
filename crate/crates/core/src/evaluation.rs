//! Scoring of causality matrices against ground truth and Monte-Carlo
//! aggregation over simulated realizations.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{causality_matrix, CausalityMatrix, MethodConfig};
use crate::error::{Error, Result};
use crate::series::MultivariateSeries;
use crate::simulators::{GroundTruth, SystemSpec};

/// Confusion counts over ordered off-diagonal variable pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    // 0/0 is reported as 0.
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sensitivity `TP/(TP+FN)`, specificity `TN/(TN+FP)` and F1
/// `2TP/(2TP+FP+FN)`, each 0 when its denominator is 0.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    Metrics {
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

/// A pair `(i, j)`, `i != j`, is predicted coupled iff `R[i][j] > 0`.
pub fn score_matrix(r: &CausalityMatrix, truth: &GroundTruth) -> Result<ConfusionCounts> {
    if r.size != truth.size() {
        return Err(Error::ShapeMismatch {
            expected: truth.size(),
            actual: r.size,
        });
    }
    let mut c = ConfusionCounts::default();
    for i in 0..r.size {
        for j in 0..r.size {
            if i == j {
                continue;
            }
            match (r.get(i, j) > 0.0, truth.is_edge(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: u64,
    /// Seed the realization was finally generated from.
    pub seed: u64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Aggregate of one method over a batch of realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub system: SystemSpec,
    pub config: MethodConfig,
    pub realizations: usize,
    /// Element-wise mean of the causality matrices.
    pub mean_r: CausalityMatrix,
    /// Fraction of realizations in which each pair was detected.
    pub detection_rate: CausalityMatrix,
    /// Counts summed over realizations.
    pub pooled: ConfusionCounts,
    /// Metrics of the pooled counts.
    pub metrics: Metrics,
    pub per_realization: Vec<RealizationRecord>,
    /// Realizations that had to be regenerated after a divergent simulation.
    pub regenerated: Vec<u64>,
}

impl BatchSummary {
    /// Mean of the per-realization metrics, for comparison with the pooled ones.
    pub fn averaged_metrics(&self) -> Metrics {
        let n = self.per_realization.len().max(1) as f64;
        let mut m = Metrics::default();
        for r in &self.per_realization {
            m.sensitivity += r.metrics.sensitivity / n;
            m.specificity += r.metrics.specificity / n;
            m.f1 += r.metrics.f1 / n;
        }
        m
    }

    /// Mean fraction of off-diagonal pairs reported as coupled.
    pub fn positive_rate(&self) -> f64 {
        ratio(self.pooled.tp + self.pooled.fp, self.pooled.total())
    }
}

/// Attempts at regenerating a realization whose simulation diverged.
const REGENERATION_ATTEMPTS: u64 = 8;

fn generate_realization(
    spec: &SystemSpec,
    r: u64,
) -> Result<(SystemSpec, MultivariateSeries, GroundTruth, bool)> {
    let mut current = spec.realization(r);
    for attempt in 0..=REGENERATION_ATTEMPTS {
        match current.generate() {
            Ok((s, t)) => return Ok((current, s, t, attempt > 0)),
            Err(Error::DivergedAfterRetries { .. }) if attempt < REGENERATION_ATTEMPTS => {
                log::warn!("realization {r} diverged (seed {}), regenerating", current.seed);
                current = spec.realization(r ^ ((attempt + 1) << 32));
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the last attempt")
}

/// Simulates `n_realizations` independent runs, estimates the causality
/// matrix of each and aggregates them.
pub fn run_batch(spec: &SystemSpec, cfg: &MethodConfig, n_realizations: usize) -> Result<BatchSummary> {
    if n_realizations == 0 {
        return Err(Error::InvalidConfig("need at least one realization".into()));
    }
    spec.validate()?;
    cfg.validate()?;
    let outcomes: Vec<(RealizationRecord, CausalityMatrix, bool)> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let (used, series, truth, regenerated) = generate_realization(spec, r)?;
            let result = causality_matrix(&series, cfg)?;
            let counts = score_matrix(&result.matrix, &truth)?;
            let record = RealizationRecord {
                index: r,
                seed: used.seed,
                counts,
                metrics: metrics(&counts),
            };
            Ok((record, result.matrix, regenerated))
        })
        .collect::<Result<_>>()?;

    let k = spec.kind.n_vars();
    let mut mean_r = CausalityMatrix::zeros(k);
    let mut detection_rate = CausalityMatrix::zeros(k);
    let mut per_realization = Vec::with_capacity(n_realizations);
    let mut regenerated = Vec::new();
    let scale = 1.0 / n_realizations as f64;
    for (record, m, regen) in outcomes {
        for (acc, v) in mean_r.values.iter_mut().zip(&m.values) {
            *acc += v * scale;
        }
        for (acc, v) in detection_rate.values.iter_mut().zip(&m.values) {
            if *v > 0.0 {
                *acc += scale;
            }
        }
        if regen {
            regenerated.push(record.index);
        }
        per_realization.push(record);
    }
    let pooled: ConfusionCounts = per_realization.iter().map(|r| r.counts).sum();
    Ok(BatchSummary {
        system: *spec,
        config: cfg.clone(),
        realizations: n_realizations,
        mean_r,
        detection_rate,
        pooled,
        metrics: metrics(&pooled),
        per_realization,
        regenerated,
    })
}

/// Header of [`write_metrics_csv`].
pub const METRICS_CSV_HEADER: [&str; 16] = [
    "system", "vars", "coupling", "n", "method", "L", "A", "m", "realizations", "sensitivity",
    "specificity", "f1", "tp", "fp", "tn", "fn",
];

/// Writes one row per summary, mirroring the layout of the published tables.
pub fn write_metrics_csv<W: Write>(writer: W, summaries: &[BatchSummary]) -> Result<()> {
    use crate::simulators::SystemKind;
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(METRICS_CSV_HEADER).map_err(io)?;
    for s in summaries {
        let coupling = match s.system.kind {
            SystemKind::Henon { coupling, .. } | SystemKind::Lorenz3 { coupling } => coupling.to_string(),
            _ => String::new(),
        };
        w.write_record([
            s.system.kind.name().to_string(),
            s.system.kind.n_vars().to_string(),
            coupling,
            s.system.n.to_string(),
            s.config.method.display_name().to_string(),
            s.config.max_lag.to_string(),
            s.config.threshold.to_string(),
            s.config.strategy_factor.to_string(),
            s.realizations.to_string(),
            format!("{:.3}", s.metrics.sensitivity),
            format!("{:.3}", s.metrics.specificity),
            format!("{:.3}", s.metrics.f1),
            s.pooled.tp.to_string(),
            s.pooled.fp.to_string(),
            s.pooled.tn.to_string(),
            s.pooled.fn_.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
