//! Detection of directed couplings in multivariate time series by
//! non-uniform (mixed) embedding.
//!
//! Three embedding searches are provided, selected by [`Method`]:
//! greedy PMIME, M-PMIME (exhaustive subset traversal for the first `m`
//! iterations, then greedy) and LM-PMIME (traversal, then greedy steps
//! scored by a low-dimensional approximation of conditional mutual
//! information). Information quantities come from k-nearest-neighbour
//! estimators in [`knn`]. [`simulators`] and [`evaluation`] reproduce the
//! benchmark experiments.
//!
//! ```no_run
//! use lmpmime::{causality_matrix, simulators, Method, MethodConfig};
//!
//! let (series, _truth) = simulators::gen_henon(3, 0.3, 1024, 7).unwrap();
//! let cfg = MethodConfig::new(Method::LmPmime).with_lag(5).with_strategy_factor(2);
//! let result = causality_matrix(&series, &cfg).unwrap();
//! println!("{:?}", result.matrix.rows());
//! ```

pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod knn;
pub mod series;
pub mod simulators;

pub use embedding::{
    build_embedding, causality_index, causality_matrix, CausalityMatrix, CausalityResult,
    Coefficients, EmbeddingVector, InformationEstimate, Method, MethodConfig,
};
pub use error::{Error, Result};
pub use evaluation::{metrics, run_batch, score_matrix, BatchSummary, ConfusionCounts, Metrics};
pub use knn::{conditional_mutual_information, mutual_information, EstimatorConfig};
pub use series::{align, build_candidate_set, standardize, AlignedSample, LaggedVariable, MultivariateSeries};
pub use simulators::{GroundTruth, SystemKind, SystemSpec};
