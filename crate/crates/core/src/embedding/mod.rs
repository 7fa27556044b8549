//! Mixed embedding of a target variable and the causality index derived
//! from it.
//!
//! For a target `y`, the embedding is built from the lagged candidates
//! `W = {(j, l) : j < K, 1 <= l <= L}`:
//!
//! 1. `k = 1`: the candidate with the largest `I(y; w)`.
//! 2. `1 < k <= m` (M-PMIME and LM-PMIME only): the embedding is cleared and
//!    the `k`-subset of `W` with the largest `I(y; S)` takes its place.
//! 3. otherwise: greedy augmentation with the remaining candidate maximising
//!    `I(y; w | v)` (PMIME, M-PMIME) or its low-dimensional approximation
//!    (LM-PMIME).
//!
//! After every proposal the ratio `I(y; v^{k-1}) / I(y; v^k)` is compared to
//! the threshold `A`; once it exceeds `A` the previous vector is kept. By
//! default both informations are accumulated by the chain rule (see
//! [`chained_information`]) so that vectors of different sizes are compared
//! on the same footing; [`InformationEstimate::Joint`] estimates each one
//! directly instead.
//!
//! The causality index of driver `x` on target `y` is
//! `R = I(y; v^x | v \ v^x) / I(y; v)`, zero when no lag of `x` was embedded.

mod config;
mod search;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{add_tie_jitter, conditional_mutual_information, EstimatorConfig};
use crate::series::{align, build_candidate_set, standardize, AlignedSample, LaggedVariable, MultivariateSeries};

pub use config::{Coefficients, InformationEstimate, Method, MethodConfig};
pub use search::{
    binomial, chained_information, combinations, greedy_step_cmi, joint_information, lowdim_score, select_first,
    stopping_check, stopping_ratio, traversal_step, LowDimTerms,
};

use search::{column_of, columns_of, relevance_scores, LowDimAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    First,
    Traversal,
    Greedy,
}

/// One proposal of the embedding loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStep {
    pub iteration: usize,
    pub phase: Phase,
    /// The added member (first and greedy phases) or the whole subset (traversal).
    pub selected: Vec<LaggedVariable>,
    /// Value of the selection criterion for the winner.
    pub criterion: f64,
    /// `I(y; v^k)` of the proposed vector, accumulated by the chain rule.
    pub information: f64,
    /// `clip(I(y; v^{k-1})) / clip(I(y; v^k))`; infinite when the proposal has no information.
    pub ratio: f64,
    /// Whether the proposal was kept (the stopping rule did not fire).
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The stopping ratio exceeded the threshold.
    Threshold,
    /// Every candidate was embedded.
    CandidatesExhausted,
    /// The iteration cap was reached.
    IterationCap,
}

/// The mixed embedding vector of one target with its construction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub target: usize,
    pub members: Vec<LaggedVariable>,
    /// Chain-rule `I(y; v)` of the final vector (0 when empty).
    pub information: f64,
    pub steps: Vec<EmbeddingStep>,
    pub stop: StopReason,
}

impl EmbeddingVector {
    pub fn contains_var(&self, var: usize) -> bool {
        self.members.iter().any(|m| m.var == var)
    }
}

/// Standardizes the series and adds the tie-breaking jitter.
pub fn prepare(series: &MultivariateSeries, est: &EstimatorConfig) -> Result<MultivariateSeries> {
    Ok(add_tie_jitter(&standardize(series)?, est))
}

/// Builds the embedding of `target_index` on a raw series (it is
/// standardized and jittered first).
pub fn build_embedding(
    series: &MultivariateSeries,
    target_index: usize,
    cfg: &MethodConfig,
) -> Result<EmbeddingVector> {
    cfg.validate()?;
    let prepared = prepare(series, &cfg.estimator)?;
    let candidates = build_candidate_set(prepared.n_vars(), cfg.max_lag);
    let sample = align(&prepared, target_index, &candidates, cfg.horizon)?;
    embed_aligned(&sample, target_index, cfg)
}

/// Runs the embedding loop on an aligned sample whose candidates are the
/// full candidate set.
pub fn embed_aligned(sample: &AlignedSample, target: usize, cfg: &MethodConfig) -> Result<EmbeddingVector> {
    let est = &cfg.estimator;
    let all = &sample.candidates;
    let cap = all.len().min(cfg.max_iterations);

    let mut members: Vec<LaggedVariable> = Vec::new();
    let mut info_prev = 0.0;
    let mut steps = Vec::new();
    let mut relevance: Option<Vec<f64>> = None;
    let mut lowdim: Option<LowDimAccumulator> = None;
    let mut stop = StopReason::IterationCap;

    for k in 1..=cap {
        let (phase, proposal, criterion, info_curr) = if k == 1 {
            let scores = relevance_scores(sample, all, est)?;
            let (best, value) = best_of(all, &scores)?;
            relevance = Some(scores);
            (Phase::First, vec![best], value, value)
        } else if cfg.is_traversal(k) {
            let (mut subset, score, _) = traversal_step(sample, all, k, cfg.combination_budget, est)?;
            // Chain in order of decreasing relevance, which does not depend on variable labels.
            let rel = relevance.as_deref().expect("first iteration ran");
            let relevance_of = |w: &LaggedVariable| rel[all.iter().position(|c| c == w).expect("candidate")];
            subset.sort_by(|a, b| relevance_of(b).total_cmp(&relevance_of(a)));
            let info = match cfg.stop_information {
                InformationEstimate::ChainRule => chained_information(sample, &subset, est)?,
                InformationEstimate::Joint => score,
            };
            (Phase::Traversal, subset, score, info)
        } else {
            let (w, score) = match cfg.method {
                Method::LmPmime => {
                    let acc = match lowdim.take() {
                        Some(acc) if acc.members() == members.as_slice() => acc,
                        _ => {
                            let rel = relevance.as_deref().expect("first iteration ran");
                            let mut acc = LowDimAccumulator::new(rel);
                            for &m in &members {
                                acc.push(m, sample, est)?;
                            }
                            acc
                        }
                    };
                    let best = acc.best(sample, cfg.coefficients);
                    lowdim = Some(acc);
                    best.ok_or_else(|| Error::InvalidConfig("no candidates left to embed".into()))?
                }
                Method::Pmime | Method::MPmime => {
                    let remaining: Vec<LaggedVariable> =
                        all.iter().copied().filter(|c| !members.contains(c)).collect();
                    greedy_step_cmi(sample, &remaining, &members, est)?
                }
            };
            let mut proposal = members.clone();
            proposal.push(w);
            let info = match (cfg.stop_information, cfg.method) {
                // Chain rule: the new vector adds I(y; w | v) to what v already explains.
                (InformationEstimate::ChainRule, Method::Pmime | Method::MPmime) => info_prev + score,
                (InformationEstimate::ChainRule, Method::LmPmime) => {
                    info_prev
                        + conditional_mutual_information(
                            &[&sample.target],
                            &[column_of(sample, w)?],
                            &columns_of(sample, &members)?,
                            est,
                        )?
                }
                (InformationEstimate::Joint, _) => joint_information(sample, &proposal, est)?,
            };
            (Phase::Greedy, proposal, score, info)
        };

        let ratio = stopping_ratio(info_prev, info_curr);
        let accepted = !stopping_check(info_prev, info_curr, cfg.threshold);
        let selected = match phase {
            Phase::Traversal => proposal.clone(),
            _ => vec![*proposal.last().expect("non-empty proposal")],
        };
        steps.push(EmbeddingStep {
            iteration: k,
            phase,
            selected,
            criterion,
            information: info_curr,
            ratio,
            accepted,
        });
        if !accepted {
            stop = StopReason::Threshold;
            break;
        }
        if phase == Phase::Greedy {
            if let Some(acc) = lowdim.as_mut() {
                acc.push(*proposal.last().expect("non-empty"), sample, est)?;
            }
        }
        members = proposal;
        info_prev = info_curr;
        if members.len() == all.len() {
            stop = StopReason::CandidatesExhausted;
            break;
        }
    }
    if stop == StopReason::IterationCap {
        log::info!("embedding of target {target} hit the iteration cap of {cap}");
    }

    Ok(EmbeddingVector {
        target,
        members,
        information: info_prev,
        steps,
        stop,
    })
}

fn best_of(candidates: &[LaggedVariable], scores: &[f64]) -> Result<(LaggedVariable, f64)> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.is_nan() && best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    let b = best.ok_or_else(|| Error::InvalidConfig("empty candidate set".into()))?;
    Ok((candidates[b], scores[b]))
}

/// `R = I(y; v^x | v \ v^x) / I(y; v)` for driver `x`.
///
/// Returns exactly 0 when no lag of the driver is embedded. A driver that is
/// embedded always gets a strictly positive value: estimates that clip to
/// zero (non-positive numerator or denominator) are reported as
/// `f64::MIN_POSITIVE`, so positivity stays equivalent to membership.
pub fn causality_index(
    embedding: &EmbeddingVector,
    driver: usize,
    sample: &AlignedSample,
    est: &EstimatorConfig,
) -> Result<f64> {
    let (own, rest): (Vec<LaggedVariable>, Vec<LaggedVariable>) =
        embedding.members.iter().partition(|m| m.var == driver);
    if own.is_empty() {
        return Ok(0.0);
    }
    let x = columns_of(sample, &own)?;
    let z = columns_of(sample, &rest)?;
    let denom = joint_information(sample, &embedding.members, est)?;
    let num = conditional_mutual_information(&[&sample.target], &x, &z, est)?;
    let r = if denom > 0.0 { num.max(0.0) / denom } else { 0.0 };
    Ok(if r > 0.0 { r } else { f64::MIN_POSITIVE })
}

/// K x K matrix of causality indices, row = driver, column = target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityMatrix {
    pub size: usize,
    /// Row-major values.
    pub values: Vec<f64>,
}

impl CausalityMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut values = Vec::with_capacity(size * size);
        for r in rows {
            if r.len() != size {
                return Err(Error::ShapeMismatch {
                    expected: size,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { size, values })
    }

    pub fn get(&self, driver: usize, target: usize) -> f64 {
        self.values[driver * self.size + target]
    }

    pub fn set(&mut self, driver: usize, target: usize, v: f64) {
        self.values[driver * self.size + target] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.size.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Relabels variables so that new variable `i` is old variable `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                out.set(i, j, self.get(perm[i], perm[j]));
            }
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityResult {
    pub matrix: CausalityMatrix,
    /// One embedding per target, indexed by target.
    pub embeddings: Vec<EmbeddingVector>,
}

/// Embeds every variable and fills the causality matrix.
pub fn causality_matrix(series: &MultivariateSeries, cfg: &MethodConfig) -> Result<CausalityResult> {
    cfg.validate()?;
    let prepared = prepare(series, &cfg.estimator)?;
    let k = prepared.n_vars();
    let candidates = build_candidate_set(k, cfg.max_lag);
    let per_target: Vec<(EmbeddingVector, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|target| {
            let sample = align(&prepared, target, &candidates, cfg.horizon)?;
            let emb = embed_aligned(&sample, target, cfg)?;
            let column = (0..k)
                .map(|driver| {
                    if driver == target {
                        Ok(0.0)
                    } else {
                        causality_index(&emb, driver, &sample, &cfg.estimator)
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((emb, column))
        })
        .collect::<Result<_>>()?;

    let mut matrix = CausalityMatrix::zeros(k);
    let mut embeddings = Vec::with_capacity(k);
    for (target, (emb, column)) in per_target.into_iter().enumerate() {
        for (driver, v) in column.into_iter().enumerate() {
            matrix.set(driver, target, v);
        }
        embeddings.push(emb);
    }
    Ok(CausalityResult { matrix, embeddings })
}
