//! Single steps of the embedding search: first selection, greedy
//! augmentation, the low-dimensional criterion, subset traversal and the
//! stopping rule.

use rayon::prelude::*;

use crate::embedding::config::Coefficients;
use crate::error::{Error, Result};
use crate::knn::{conditional_mutual_information, mutual_information, EstimatorConfig};
use crate::series::{AlignedSample, LaggedVariable};

pub(crate) fn column_of(sample: &AlignedSample, lv: LaggedVariable) -> Result<&[f64]> {
    sample
        .column(lv)
        .ok_or_else(|| Error::InvalidConfig(format!("{lv} is not in the aligned sample")))
}

pub(crate) fn columns_of<'a>(
    sample: &'a AlignedSample,
    members: &[LaggedVariable],
) -> Result<Vec<&'a [f64]>> {
    members.iter().map(|&m| column_of(sample, m)).collect()
}

/// First index holding the maximum; NaN scores never win.
fn first_argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            _ if s.is_nan() => {}
            None => best = Some(i),
            Some(b) if s > scores[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// `I(y; v)` for a set of lagged variables; 0 for the empty set.
pub fn joint_information(
    sample: &AlignedSample,
    members: &[LaggedVariable],
    est: &EstimatorConfig,
) -> Result<f64> {
    if members.is_empty() {
        return Ok(0.0);
    }
    let cols = columns_of(sample, members)?;
    mutual_information(&[&sample.target], &cols, est)
}

/// `I(y; v)` accumulated by the chain rule in member order:
/// `I(y; v_1) + I(y; v_2 | v_1) + ... + I(y; v_k | v_1..v_{k-1})`.
///
/// Every increment is a conditional estimate whose bias largely cancels
/// between its terms, so values for vectors of different sizes stay
/// comparable. A direct joint estimate drifts downwards as the dimension of
/// `v` grows, which makes the stopping ratio fire on informative additions.
pub fn chained_information(
    sample: &AlignedSample,
    members: &[LaggedVariable],
    est: &EstimatorConfig,
) -> Result<f64> {
    let cols = columns_of(sample, members)?;
    let mut total = 0.0;
    for i in 0..cols.len() {
        total += conditional_mutual_information(&[&sample.target], &[cols[i]], &cols[..i], est)?;
    }
    Ok(total)
}

/// The candidate sharing the most information with the target, with that
/// information.
pub fn select_first(
    sample: &AlignedSample,
    candidates: &[LaggedVariable],
    est: &EstimatorConfig,
) -> Result<(LaggedVariable, f64)> {
    let scores = relevance_scores(sample, candidates, est)?;
    let best = first_argmax(&scores)
        .ok_or_else(|| Error::InvalidConfig("empty candidate set".into()))?;
    Ok((candidates[best], scores[best]))
}

pub(crate) fn relevance_scores(
    sample: &AlignedSample,
    candidates: &[LaggedVariable],
    est: &EstimatorConfig,
) -> Result<Vec<f64>> {
    candidates
        .par_iter()
        .map(|&w| mutual_information(&[&sample.target], &[column_of(sample, w)?], est))
        .collect()
}

/// The remaining candidate maximising `I(y; w | v)` for the current
/// embedding `v`, with its score.
pub fn greedy_step_cmi(
    sample: &AlignedSample,
    remaining: &[LaggedVariable],
    embedded: &[LaggedVariable],
    est: &EstimatorConfig,
) -> Result<(LaggedVariable, f64)> {
    if remaining.is_empty() {
        return Err(Error::InvalidConfig("no candidates left to embed".into()));
    }
    let z = columns_of(sample, embedded)?;
    let scores: Vec<f64> = remaining
        .par_iter()
        .map(|&w| {
            conditional_mutual_information(&[&sample.target], &[column_of(sample, w)?], &z, est)
        })
        .collect::<Result<_>>()?;
    let best = first_argmax(&scores).unwrap_or(0);
    Ok((remaining[best], scores[best]))
}

/// Low-dimensional approximation of `I(y; w | v)`:
///
/// `I(w;y) - beta*sum_i I(w;w_i) + gamma*sum_i I(w;w_i|y) - delta*sum_{i!=j} I(w;w_j|w_i)`
///
/// Every term involves at most three scalar columns.
pub fn lowdim_score(
    w: LaggedVariable,
    sample: &AlignedSample,
    embedded: &[LaggedVariable],
    coefficients: Option<Coefficients>,
    est: &EstimatorConfig,
) -> Result<f64> {
    let terms = LowDimTerms::compute(w, sample, embedded, est)?;
    Ok(terms.combine(coefficients.unwrap_or_else(|| Coefficients::adaptive(embedded.len()))))
}

/// The raw sums entering [`lowdim_score`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LowDimTerms {
    pub relevance: f64,
    pub redundancy: f64,
    pub conditional_redundancy: f64,
    pub pair_interaction: f64,
}

impl LowDimTerms {
    pub fn compute(
        w: LaggedVariable,
        sample: &AlignedSample,
        embedded: &[LaggedVariable],
        est: &EstimatorConfig,
    ) -> Result<Self> {
        let y: &[f64] = &sample.target;
        let wc = column_of(sample, w)?;
        let vc = columns_of(sample, embedded)?;
        let mut t = Self {
            relevance: mutual_information(&[wc], &[y], est)?,
            ..Self::default()
        };
        for (i, &ci) in vc.iter().enumerate() {
            t.redundancy += mutual_information(&[wc], &[ci], est)?;
            t.conditional_redundancy += conditional_mutual_information(&[wc], &[ci], &[y], est)?;
            for (j, &cj) in vc.iter().enumerate() {
                if i != j {
                    t.pair_interaction += conditional_mutual_information(&[wc], &[cj], &[ci], est)?;
                }
            }
        }
        Ok(t)
    }

    pub fn combine(&self, c: Coefficients) -> f64 {
        self.relevance - c.beta * self.redundancy + c.gamma * self.conditional_redundancy
            - c.delta * self.pair_interaction
    }
}

/// Running low-dimensional terms for every candidate against a growing
/// embedding, so that each greedy step only estimates the terms that involve
/// the newest member.
#[derive(Debug, Clone)]
pub(crate) struct LowDimAccumulator {
    members: Vec<LaggedVariable>,
    terms: Vec<LowDimTerms>,
}

impl LowDimAccumulator {
    /// `relevance[i]` must be `I(candidates[i]; y)`.
    pub fn new(relevance: &[f64]) -> Self {
        Self {
            members: Vec::new(),
            terms: relevance
                .iter()
                .map(|&r| LowDimTerms {
                    relevance: r,
                    ..LowDimTerms::default()
                })
                .collect(),
        }
    }

    pub fn members(&self) -> &[LaggedVariable] {
        &self.members
    }

    /// Adds `u` to the embedding, updating the terms of every candidate not
    /// yet embedded.
    pub fn push(
        &mut self,
        u: LaggedVariable,
        sample: &AlignedSample,
        est: &EstimatorConfig,
    ) -> Result<()> {
        let y: &[f64] = &sample.target;
        let uc = column_of(sample, u)?;
        let prev = columns_of(sample, &self.members)?;
        let mut after = self.members.clone();
        after.push(u);
        let deltas: Vec<Option<LowDimTerms>> = sample
            .candidates
            .par_iter()
            .map(|&w| {
                if after.contains(&w) {
                    return Ok(None);
                }
                let wc = column_of(sample, w)?;
                let mut d = LowDimTerms {
                    redundancy: mutual_information(&[wc], &[uc], est)?,
                    conditional_redundancy: conditional_mutual_information(&[wc], &[uc], &[y], est)?,
                    ..LowDimTerms::default()
                };
                for &ci in &prev {
                    d.pair_interaction += conditional_mutual_information(&[wc], &[uc], &[ci], est)?;
                    d.pair_interaction += conditional_mutual_information(&[wc], &[ci], &[uc], est)?;
                }
                Ok(Some(d))
            })
            .collect::<Result<_>>()?;
        for (t, d) in self.terms.iter_mut().zip(deltas) {
            if let Some(d) = d {
                t.redundancy += d.redundancy;
                t.conditional_redundancy += d.conditional_redundancy;
                t.pair_interaction += d.pair_interaction;
            }
        }
        self.members = after;
        Ok(())
    }

    /// Best candidate outside the embedding under the criterion, with its score.
    pub fn best(
        &self,
        sample: &AlignedSample,
        coefficients: Option<Coefficients>,
    ) -> Option<(LaggedVariable, f64)> {
        let c = coefficients.unwrap_or_else(|| Coefficients::adaptive(self.members.len()));
        let scores: Vec<f64> = sample
            .candidates
            .iter()
            .zip(&self.terms)
            .map(|(w, t)| {
                if self.members.contains(w) {
                    f64::NAN
                } else {
                    t.combine(c)
                }
            })
            .collect();
        first_argmax(&scores).map(|i| (sample.candidates[i], scores[i]))
    }
}

/// Number of `k`-subsets of `n` items, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` as index vectors, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Scores every `size`-subset of `candidates` by `I(y; S)` and returns the
/// best one (first in lexicographic order on ties), its information and the
/// number of subsets scored.
pub fn traversal_step(
    sample: &AlignedSample,
    candidates: &[LaggedVariable],
    size: usize,
    budget: u64,
    est: &EstimatorConfig,
) -> Result<(Vec<LaggedVariable>, f64, usize)> {
    if size == 0 || size > candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot draw subsets of size {size} from {} candidates",
            candidates.len()
        )));
    }
    let count = binomial(candidates.len(), size);
    if count > u128::from(budget) {
        return Err(Error::CombinationBudgetExceeded {
            candidates: candidates.len(),
            size,
            count,
            budget,
        });
    }
    let columns = columns_of(sample, candidates)?;
    let subsets = combinations(candidates.len(), size);
    let scores: Vec<f64> = subsets
        .par_iter()
        .map(|s| {
            let cols: Vec<&[f64]> = s.iter().map(|&i| columns[i]).collect();
            mutual_information(&[&sample.target], &cols, est)
        })
        .collect::<Result<_>>()?;
    let best = first_argmax(&scores).unwrap_or(0);
    let chosen = subsets[best].iter().map(|&i| candidates[i]).collect();
    Ok((chosen, scores[best], subsets.len()))
}

/// `clip(prev) / clip(curr)` with `clip(x) = max(x, 0)`; infinite when the
/// augmented vector carries no information.
pub fn stopping_ratio(prev: f64, curr: f64) -> f64 {
    let prev = prev.max(0.0);
    let curr = curr.max(0.0);
    if curr > 0.0 {
        prev / curr
    } else {
        f64::INFINITY
    }
}

/// Whether augmenting from information `prev` to `curr` is too small a gain,
/// i.e. the embedding should stop and keep the previous vector.
pub fn stopping_check(prev: f64, curr: f64, threshold: f64) -> bool {
    stopping_ratio(prev, curr) > threshold
}
