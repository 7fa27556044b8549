//! Seeded benchmark systems with known coupling graphs: a linear VAR(4) in
//! five variables, a nonlinear VAR(1) in three, a chain of coupled Hénon
//! maps and three coupled Lorenz oscillators.

mod ode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

pub use ode::{DormandPrince, Tolerances};

/// Samples discarded before recording map and VAR trajectories.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Lorenz sampling interval in time units.
pub const LORENZ_DT: f64 = 0.05;
/// Lorenz transient in time units.
pub const LORENZ_BURN_IN_TIME: f64 = 100.0;
/// Re-draws of the initial conditions before a Hénon run is declared divergent.
pub const HENON_MAX_RETRIES: usize = 100;
const HENON_DIVERGENCE: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemKind {
    Var5,
    #[serde(rename = "nlvar3")]
    NlVar3,
    Henon { vars: usize, coupling: f64 },
    #[serde(rename = "lorenz3")]
    Lorenz3 { coupling: f64 },
}

impl SystemKind {
    pub fn n_vars(&self) -> usize {
        match self {
            SystemKind::Var5 => 5,
            SystemKind::NlVar3 | SystemKind::Lorenz3 { .. } => 3,
            SystemKind::Henon { vars, .. } => *vars,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Var5 => "var5",
            SystemKind::NlVar3 => "nlvar3",
            SystemKind::Henon { .. } => "henon",
            SystemKind::Lorenz3 { .. } => "lorenz3",
        }
    }
}

/// A reproducible request for one simulated realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub kind: SystemKind,
    /// Recorded samples.
    pub n: usize,
    pub seed: u64,
    /// Discarded samples; `None` uses the system default (1000 samples for
    /// maps and VARs, 100 time units for Lorenz).
    pub burn_in: Option<usize>,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            seed,
            burn_in: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 64 {
            return Err(Error::InvalidConfig(format!("series length must be >= 64, got {}", self.n)));
        }
        match self.kind {
            SystemKind::Henon { vars, coupling } => {
                if vars < 2 {
                    return Err(Error::InvalidConfig("Hénon chain needs K >= 2".into()));
                }
                if !(0.0..=1.0).contains(&coupling) {
                    return Err(Error::InvalidConfig(format!(
                        "Hénon coupling must lie in [0, 1], got {coupling}"
                    )));
                }
            }
            SystemKind::Lorenz3 { coupling } => {
                if !(coupling >= 0.0 && coupling.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "Lorenz coupling must be >= 0, got {coupling}"
                    )));
                }
            }
            SystemKind::Var5 | SystemKind::NlVar3 => {}
        }
        Ok(())
    }

    /// Spec of realization `r`: the stream seed is `seed ^ r`.
    pub fn realization(&self, r: u64) -> Self {
        Self {
            seed: self.seed ^ r,
            ..*self
        }
    }

    pub fn generate(&self) -> Result<(MultivariateSeries, GroundTruth)> {
        self.validate()?;
        let burn = self.burn_in;
        match self.kind {
            SystemKind::Var5 => gen_var5_with(self.n, self.seed, burn.unwrap_or(DEFAULT_BURN_IN)),
            SystemKind::NlVar3 => gen_nlvar3_with(self.n, self.seed, burn.unwrap_or(DEFAULT_BURN_IN)),
            SystemKind::Henon { vars, coupling } => {
                gen_henon_with(vars, coupling, self.n, self.seed, burn.unwrap_or(DEFAULT_BURN_IN))
            }
            SystemKind::Lorenz3 { coupling } => {
                let burn_time = burn.map_or(LORENZ_BURN_IN_TIME, |b| b as f64 * LORENZ_DT);
                gen_lorenz3_with(coupling, self.n, self.seed, burn_time, Tolerances::default())
            }
        }
    }
}

/// Directed coupling graph, `adjacency[driver][target]`, diagonal unused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub adjacency: Vec<Vec<bool>>,
}

impl GroundTruth {
    /// From 0-based `(driver, target)` edges.
    pub fn from_edges(size: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![vec![false; size]; size];
        for &(i, j) in edges {
            assert!(i != j, "self-loops are not part of the ground truth");
            adjacency[i][j] = true;
        }
        Self { adjacency }
    }

    /// The chain `i-1 -> i`.
    pub fn chain(size: usize) -> Self {
        let edges: Vec<_> = (1..size).map(|i| (i - 1, i)).collect();
        Self::from_edges(size, &edges)
    }

    pub fn size(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_edge(&self, driver: usize, target: usize) -> bool {
        self.adjacency[driver][target]
    }

    /// 0-based edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                if e && i != j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.size();
        let adjacency = (0..k)
            .map(|i| (0..k).map(|j| self.adjacency[perm[i]][perm[j]]).collect())
            .collect();
        Self { adjacency }
    }
}

/// `VAR5_COEFFICIENTS[lag - 1][target][source]` for the five-variable VAR(4).
pub const VAR5_COEFFICIENTS: [[[f64; 5]; 5]; 4] = [
    // lag 1
    [
        [0.4, 0.0, 0.0, 0.0, 0.4],
        [0.0, 0.4, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -0.4, 0.7],
    ],
    // lag 2
    [
        [-0.5, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.4],
        [0.0, 0.0, -0.7, 0.0, 0.0],
        [0.4, 0.3, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -0.5],
    ],
    // lag 3
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -0.3],
        [0.0, 0.0, 0.0, 0.8, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ],
    // lag 4
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.3, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ],
];

/// One VAR5 update; `history[l]` is the state `l + 1` steps back.
pub fn var5_step(history: &[[f64; 5]; 4], noise: &[f64; 5]) -> [f64; 5] {
    let mut x = *noise;
    for (lag, coeffs) in VAR5_COEFFICIENTS.iter().enumerate() {
        for (target, row) in coeffs.iter().enumerate() {
            for (source, c) in row.iter().enumerate() {
                if *c != 0.0 {
                    x[target] += c * history[lag][source];
                }
            }
        }
    }
    x
}

pub fn var5_truth() -> GroundTruth {
    // X1->X2, X1->X4, X2->X4, X4->X5, X5->X1, X5->X2, X5->X3
    GroundTruth::from_edges(5, &[(0, 1), (0, 3), (1, 3), (3, 4), (4, 0), (4, 1), (4, 2)])
}

fn normals<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

fn series_from_rows<const N: usize>(rows: &[[f64; N]]) -> Result<MultivariateSeries> {
    let columns = (0..N).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    MultivariateSeries::from_columns(columns)
}

/// Linear VAR(4) in five variables, unit Gaussian innovations, zero history.
pub fn gen_var5(n: usize, seed: u64) -> Result<(MultivariateSeries, GroundTruth)> {
    SystemSpec::new(SystemKind::Var5, n, seed).generate()
}

fn gen_var5_with(n: usize, seed: u64, burn_in: usize) -> Result<(MultivariateSeries, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = [[0.0; 5]; 4];
    let mut rows = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        let x = var5_step(&history, &normals(&mut rng));
        history.rotate_right(1);
        history[0] = x;
        if t >= burn_in {
            rows.push(x);
        }
    }
    Ok((series_from_rows(&rows)?, var5_truth()))
}

/// One update of the nonlinear VAR(1); `noise` is the unscaled innovation.
pub fn nlvar3_step(x: &[f64; 3], noise: &[f64; 3]) -> [f64; 3] {
    let map = |v: f64| 3.4 * v * (1.0 - v * v) * (-v * v).exp();
    [
        map(x[0]) + 0.4 * noise[0],
        map(x[1]) + 0.5 * x[0] * x[1] + 0.4 * noise[1],
        map(x[2]) + 0.3 * x[1] + 0.5 * x[0] * x[0] + 0.4 * noise[2],
    ]
}

pub fn nlvar3_truth() -> GroundTruth {
    GroundTruth::from_edges(3, &[(0, 1), (0, 2), (1, 2)])
}

/// Nonlinear VAR(1) in three variables, Gaussian innovations scaled by 0.4.
pub fn gen_nlvar3(n: usize, seed: u64) -> Result<(MultivariateSeries, GroundTruth)> {
    SystemSpec::new(SystemKind::NlVar3, n, seed).generate()
}

fn gen_nlvar3_with(n: usize, seed: u64, burn_in: usize) -> Result<(MultivariateSeries, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = [0.0; 3];
    let mut rows = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        x = nlvar3_step(&x, &normals(&mut rng));
        if t >= burn_in {
            rows.push(x);
        }
    }
    Ok((series_from_rows(&rows)?, nlvar3_truth()))
}

/// One update of the Hénon chain from the states one and two steps back.
pub fn henon_step(prev: &[f64], prev2: &[f64], coupling: f64) -> Vec<f64> {
    (0..prev.len())
        .map(|i| {
            let drive = if i == 0 {
                prev[0]
            } else {
                coupling * prev[i - 1] + (1.0 - coupling) * prev[i]
            };
            1.4 - drive * drive + 0.3 * prev2[i]
        })
        .collect()
}

/// `K` Hénon maps coupled in a chain, initial conditions uniform in
/// `[-0.1, 0.1]`, re-drawn if a trajectory escapes.
pub fn gen_henon(
    vars: usize,
    coupling: f64,
    n: usize,
    seed: u64,
) -> Result<(MultivariateSeries, GroundTruth)> {
    SystemSpec::new(SystemKind::Henon { vars, coupling }, n, seed).generate()
}

fn gen_henon_with(
    vars: usize,
    coupling: f64,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<(MultivariateSeries, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for attempt in 0..=HENON_MAX_RETRIES {
        let mut prev2: Vec<f64> = (0..vars).map(|_| rng.random_range(-0.1..=0.1)).collect();
        let mut prev: Vec<f64> = (0..vars).map(|_| rng.random_range(-0.1..=0.1)).collect();
        let mut columns = vec![Vec::with_capacity(n); vars];
        for t in 0..burn_in + n {
            let x = henon_step(&prev, &prev2, coupling);
            if x.iter().any(|v| !(v.abs() <= HENON_DIVERGENCE)) {
                log::debug!("Hénon run diverged at step {t} (attempt {attempt}), re-drawing");
                continue 'attempt;
            }
            if t >= burn_in {
                for (c, v) in columns.iter_mut().zip(&x) {
                    c.push(*v);
                }
            }
            prev2 = std::mem::replace(&mut prev, x);
        }
        return Ok((MultivariateSeries::from_columns(columns)?, GroundTruth::chain(vars)));
    }
    Err(Error::DivergedAfterRetries {
        retries: HENON_MAX_RETRIES,
    })
}

/// Right-hand side of three Lorenz oscillators (`sigma = 10`, `rho = 28`,
/// `beta = 8/3`) coupled through their x-equations; state layout
/// `(x1, y1, z1, x2, y2, z2, x3, y3, z3)`.
pub fn lorenz3_rhs(state: &[f64; 9], coupling: f64) -> [f64; 9] {
    let mut d = [0.0; 9];
    for i in 0..3 {
        let (x, y, z) = (state[3 * i], state[3 * i + 1], state[3 * i + 2]);
        let drive = if i == 0 {
            0.0
        } else {
            coupling * (state[3 * (i - 1)] - x)
        };
        d[3 * i] = -10.0 * x + 10.0 * y + drive;
        d[3 * i + 1] = -x * z + 28.0 * x - y;
        d[3 * i + 2] = x * y - 8.0 / 3.0 * z;
    }
    d
}

/// Samples the full state every `dt` time units starting from `initial`
/// (sample 0 is `initial` itself).
pub fn lorenz3_trajectory(
    initial: [f64; 9],
    coupling: f64,
    samples: usize,
    dt: f64,
    tol: Tolerances,
) -> Result<Vec<[f64; 9]>> {
    let mut solver = DormandPrince::new(|_, y: &[f64; 9]| lorenz3_rhs(y, coupling), 0.0, initial, tol);
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        if i > 0 {
            solver.advance_to(i as f64 * dt)?;
        }
        out.push(*solver.state());
    }
    Ok(out)
}

/// Draws the initial state of a Lorenz realization, uniform in `[-10, 10]`
/// per coordinate, and integrates it through the burn-in.
pub fn lorenz3_post_burn_in_state(
    coupling: f64,
    seed: u64,
    burn_in_time: f64,
    tol: Tolerances,
) -> Result<[f64; 9]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: [f64; 9] = std::array::from_fn(|_| rng.random_range(-10.0..=10.0));
    let mut solver = DormandPrince::new(|_, y: &[f64; 9]| lorenz3_rhs(y, coupling), 0.0, initial, tol);
    solver.advance_to(burn_in_time)?;
    Ok(*solver.state())
}

/// Three coupled Lorenz oscillators observed through their x-components.
pub fn gen_lorenz3(coupling: f64, n: usize, seed: u64) -> Result<(MultivariateSeries, GroundTruth)> {
    SystemSpec::new(SystemKind::Lorenz3 { coupling }, n, seed).generate()
}

fn gen_lorenz3_with(
    coupling: f64,
    n: usize,
    seed: u64,
    burn_in_time: f64,
    tol: Tolerances,
) -> Result<(MultivariateSeries, GroundTruth)> {
    let start = lorenz3_post_burn_in_state(coupling, seed, burn_in_time, tol)?;
    let traj = lorenz3_trajectory(start, coupling, n, LORENZ_DT, tol)?;
    let rows: Vec<[f64; 3]> = traj.iter().map(|s| [s[0], s[3], s[6]]).collect();
    Ok((series_from_rows(&rows)?, GroundTruth::chain(3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var5_fourth_equation() {
        let mut history = [[0.0; 5]; 4];
        history[2][3] = 1.0; // x4(t-3)
        history[1][0] = 1.0; // x1(t-2)
        history[1][1] = 1.0; // x2(t-2)
        let x = var5_step(&history, &[0.0; 5]);
        assert!((x[3] - (0.8 + 0.4 + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn var5_homogeneous_fixed_point() {
        let mut history = [[0.0; 5]; 4];
        for _ in 0..100 {
            let x = var5_step(&history, &[0.0; 5]);
            assert_eq!(x, [0.0; 5]);
            history.rotate_right(1);
            history[0] = x;
        }
    }

    #[test]
    fn nlvar3_terms() {
        assert_eq!(nlvar3_step(&[0.0; 3], &[0.0; 3]), [0.0; 3]);
        // only x1 nonzero: x3 picks up 0.5 * x1^2
        let x1 = 0.7;
        let next = nlvar3_step(&[x1, 0.0, 0.0], &[0.0; 3]);
        assert!((next[2] - 0.5 * x1 * x1).abs() < 1e-15);
        assert_eq!(next[1], 0.0);
    }

    #[test]
    fn ground_truth_edges() {
        let one_based = |g: GroundTruth| -> Vec<(usize, usize)> {
            g.edges().into_iter().map(|(i, j)| (i + 1, j + 1)).collect()
        };
        assert_eq!(
            one_based(var5_truth()),
            vec![(1, 2), (1, 4), (2, 4), (4, 5), (5, 1), (5, 2), (5, 3)]
        );
        assert_eq!(one_based(nlvar3_truth()), vec![(1, 2), (1, 3), (2, 3)]);
        assert_eq!(
            one_based(GroundTruth::chain(6)),
            vec![(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]
        );
    }

    #[test]
    fn lorenz_coupling_only_in_x() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let a = lorenz3_rhs(&s, 0.0);
        let b = lorenz3_rhs(&s, 2.5);
        assert_eq!(a[0], b[0]);
        assert!((b[3] - a[3] - 2.5 * (s[0] - s[3])).abs() < 1e-12);
        assert!((b[6] - a[6] - 2.5 * (s[3] - s[6])).abs() < 1e-12);
        for i in [1, 2, 4, 5, 7, 8] {
            assert_eq!(a[i], b[i]);
        }
    }

    #[test]
    fn validation() {
        assert!(SystemSpec::new(SystemKind::Henon { vars: 1, coupling: 0.3 }, 100, 0)
            .validate()
            .is_err());
        assert!(SystemSpec::new(SystemKind::Henon { vars: 3, coupling: 1.2 }, 100, 0)
            .validate()
            .is_err());
        assert!(SystemSpec::new(SystemKind::Var5, 32, 0).validate().is_err());
        assert!(SystemSpec::new(SystemKind::Lorenz3 { coupling: -1.0 }, 100, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn lengths_after_burn_in() {
        for kind in [
            SystemKind::Var5,
            SystemKind::NlVar3,
            SystemKind::Henon { vars: 4, coupling: 0.2 },
            SystemKind::Lorenz3 { coupling: 1.0 },
        ] {
            let (s, truth) = SystemSpec::new(kind, 100, 3).generate().unwrap();
            assert_eq!(s.n_samples(), 100);
            assert_eq!(s.n_vars(), kind.n_vars());
            assert_eq!(truth.size(), kind.n_vars());
        }
    }
}
