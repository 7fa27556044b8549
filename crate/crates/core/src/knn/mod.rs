//! k-nearest-neighbour estimators of mutual information and conditional
//! mutual information (Kraskov variant 1 and its Frenzel-Pompe conditional
//! form), all distances under the max-norm.

mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

pub use tree::{max_norm, KdTree, PointSet};

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of neighbours in the joint space.
    pub k_nn: usize,
    /// Amplitude of the uniform jitter added once to every coordinate to
    /// break exact distance ties.
    pub tie_jitter_scale: f64,
    pub jitter_seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k_nn: 5,
            tie_jitter_scale: 1e-10,
            jitter_seed: 0x5eed_1e55,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_nn == 0 {
            return Err(Error::InvalidConfig("k_nn must be >= 1".into()));
        }
        if !(self.tie_jitter_scale >= 0.0 && self.tie_jitter_scale.is_finite()) {
            return Err(Error::InvalidConfig("tie jitter scale must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Adds `U(-s, s)` jitter to every entry. Each variable draws from its own
/// stream keyed by its label, so reordering variables moves the jitter with
/// them.
pub fn add_tie_jitter(series: &MultivariateSeries, cfg: &EstimatorConfig) -> MultivariateSeries {
    let scale = cfg.tie_jitter_scale;
    if scale == 0.0 {
        return series.clone();
    }
    let mut streams: Vec<ChaCha8Rng> = series
        .labels()
        .iter()
        .map(|l| ChaCha8Rng::seed_from_u64(cfg.jitter_seed ^ fnv1a(l.as_bytes())))
        .collect();
    series.perturbed(|j, _| scale * streams[j].random_range(-1.0..1.0))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `psi(1..=n)` for integer arguments, index `i` holding `psi(i)`.
pub(crate) fn digamma_table(n: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut table = vec![0.0; n + 1];
    if n >= 1 {
        table[1] = -EULER_GAMMA;
    }
    for i in 2..=n {
        table[i] = table[i - 1] + 1.0 / (i - 1) as f64;
    }
    table
}

/// For every point, the number of other points strictly closer than its
/// radius under the max-norm.
pub fn neighbor_counts(points: &PointSet, radii: &[f64]) -> Vec<usize> {
    assert_eq!(points.len(), radii.len(), "one radius per point");
    let index = RangeIndex::new(points);
    let count = |i: usize| {
        let r = radii[i];
        // The query point sits at distance 0 and is inside any positive radius.
        let c = index.count_within(points.point(i), r);
        if r > 0.0 {
            c - 1
        } else {
            c
        }
    };
    let mut out = vec![0; points.len()];
    match &index {
        RangeIndex::Tree(t) => {
            for &i in t.slot_order() {
                out[i] = count(i);
            }
        }
        RangeIndex::Sorted(_) => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = count(i);
            }
        }
    }
    out
}

/// Strict range counting: sorted values for one coordinate, a k-d tree otherwise.
enum RangeIndex {
    Sorted(Vec<f64>),
    Tree(KdTree),
}

impl RangeIndex {
    fn new(points: &PointSet) -> Self {
        if points.dim() == 1 {
            let mut v: Vec<f64> = (0..points.len()).map(|i| points.point(i)[0]).collect();
            v.sort_unstable_by(f64::total_cmp);
            Self::Sorted(v)
        } else {
            Self::Tree(KdTree::new(points))
        }
    }

    fn count_within(&self, q: &[f64], r: f64) -> usize {
        match self {
            Self::Tree(t) => t.count_within(q, r),
            Self::Sorted(v) => {
                if !(r > 0.0) {
                    return 0;
                }
                let q = q[0];
                // |v - q| is monotone on each side of q, so the hits form a contiguous run.
                let lo = v.partition_point(|&x| x < q && (x - q).abs() >= r);
                let hi = v.partition_point(|&x| x <= q || (x - q).abs() < r);
                hi - lo
            }
        }
    }
}

/// Distance from every point to its `k`-th nearest other point.
pub fn kth_neighbor_distances(points: &PointSet, k: usize) -> Vec<f64> {
    let tree = KdTree::new(points);
    let mut out = vec![0.0; points.len()];
    for &i in tree.slot_order() {
        out[i] = tree.kth_distance(points.point(i), k + 1);
    }
    out
}

fn check_blocks(blocks: &[&[&[f64]]], k: usize) -> Result<usize> {
    let n = blocks
        .iter()
        .flat_map(|b| b.iter())
        .map(|c| c.len())
        .next()
        .unwrap_or(0);
    for b in blocks {
        for c in *b {
            if c.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    actual: c.len(),
                });
            }
        }
    }
    if n <= k {
        return Err(Error::TooFewSamples { samples: n, k });
    }
    Ok(n)
}

fn concat<'a>(blocks: &[&[&'a [f64]]]) -> Vec<&'a [f64]> {
    blocks.iter().flat_map(|b| b.iter().copied()).collect()
}

/// KSG estimate of `I(X; Y)` in nats. Each block is a list of columns.
pub fn mutual_information(x: &[&[f64]], y: &[&[f64]], cfg: &EstimatorConfig) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidConfig("MI blocks must have at least one column".into()));
    }
    let k = cfg.k_nn;
    let n = check_blocks(&[x, y], k)?;

    let joint = PointSet::from_columns(&concat(&[x, y]));
    let eps = kth_neighbor_distances(&joint, k);
    let nx = neighbor_counts(&PointSet::from_columns(x), &eps);
    let ny = neighbor_counts(&PointSet::from_columns(y), &eps);

    let psi = digamma_table(n);
    let mean = nx
        .iter()
        .zip(&ny)
        .map(|(&a, &b)| psi[a + 1] + psi[b + 1])
        .sum::<f64>()
        / n as f64;
    Ok(psi[k] + psi[n] - mean)
}

/// KSG estimate of `I(X; Y | Z)` in nats. An empty `z` reduces exactly to
/// [`mutual_information`].
pub fn conditional_mutual_information(
    x: &[&[f64]],
    y: &[&[f64]],
    z: &[&[f64]],
    cfg: &EstimatorConfig,
) -> Result<f64> {
    if z.is_empty() {
        return mutual_information(x, y, cfg);
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidConfig("CMI blocks must have at least one column".into()));
    }
    let k = cfg.k_nn;
    let n = check_blocks(&[x, y, z], k)?;

    let joint = PointSet::from_columns(&concat(&[x, y, z]));
    let eps = kth_neighbor_distances(&joint, k);
    let nxz = neighbor_counts(&PointSet::from_columns(&concat(&[x, z])), &eps);
    let nyz = neighbor_counts(&PointSet::from_columns(&concat(&[y, z])), &eps);
    let nz = neighbor_counts(&PointSet::from_columns(z), &eps);

    let psi = digamma_table(n);
    let mean = (0..n)
        .map(|i| (psi[nxz[i] + 1] + psi[nyz[i] + 1]) - psi[nz[i] + 1])
        .sum::<f64>()
        / n as f64;
    Ok(psi[k] - mean)
}
