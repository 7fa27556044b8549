use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::EstimatorConfig;

/// Which embedding search to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Greedy forward selection scored by full conditional mutual information.
    #[serde(rename = "pmime")]
    Pmime,
    /// Exhaustive subset traversal for iterations `1 < k <= m`, then PMIME's greedy step.
    #[serde(rename = "m-pmime")]
    MPmime,
    /// Traversal for `1 < k <= m`, then greedy steps scored by the
    /// low-dimensional approximation of the CMI criterion.
    #[serde(rename = "lm-pmime")]
    LmPmime,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pmime, Method::MPmime, Method::LmPmime];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pmime => "pmime",
            Method::MPmime => "m-pmime",
            Method::LmPmime => "lm-pmime",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Pmime => "PMIME",
            Method::MPmime => "M-PMIME",
            Method::LmPmime => "LM-PMIME",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pmime" => Ok(Method::Pmime),
            "m-pmime" | "mpmime" => Ok(Method::MPmime),
            "lm-pmime" | "lmpmime" => Ok(Method::LmPmime),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Fixed weights for the relevance/redundancy criterion
/// `I(w;y) - beta*sum I(w;w_i) + gamma*sum I(w;w_i|y) - delta*sum I(w;w_j|w_i)`.
///
/// Without an override the weights adapt to the current embedding size:
/// `beta = gamma = 1/|v|`, `delta = 1/(|v|(|v|-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Coefficients {
    /// Adaptive weights for an embedding of `size` members. Terms whose sums
    /// are empty get weight 0.
    pub fn adaptive(size: usize) -> Self {
        let v = size as f64;
        let beta = if size > 0 { 1.0 / v } else { 0.0 };
        let delta = if size > 1 { 1.0 / (v * (v - 1.0)) } else { 0.0 };
        Self {
            beta,
            gamma: beta,
            delta,
        }
    }

    /// Mutual information maximisation: relevance only.
    pub const MIM: Self = Self {
        beta: 0.0,
        gamma: 0.0,
        delta: 0.0,
    };

    /// Conditional infomax feature extraction.
    pub const CIFE: Self = Self {
        beta: 1.0,
        gamma: 1.0,
        delta: 0.0,
    };
}

/// How `I(y; v^k)` is estimated for the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InformationEstimate {
    /// Sum of conditional increments `I(y; v_i | v_1..v_{i-1})`.
    #[default]
    ChainRule,
    /// One joint estimate over all members of `v`.
    Joint,
}

impl InformationEstimate {
    pub const ALL: [InformationEstimate; 2] = [InformationEstimate::ChainRule, InformationEstimate::Joint];

    pub fn name(self) -> &'static str {
        match self {
            InformationEstimate::ChainRule => "chain-rule",
            InformationEstimate::Joint => "joint",
        }
    }
}

impl std::str::FromStr for InformationEstimate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "chain-rule" | "chain" => Ok(InformationEstimate::ChainRule),
            "joint" => Ok(InformationEstimate::Joint),
            other => Err(Error::InvalidConfig(format!("unknown information estimate {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    /// Maximum lag `L`; candidates are lags `1..=L` of every variable.
    pub max_lag: usize,
    /// Stopping threshold `A < 1` on `I(y; v^{k-1}) / I(y; v^k)`.
    pub threshold: f64,
    /// Strategy adjustment factor `m`: traversal runs for iterations `1 < k <= m`.
    pub strategy_factor: usize,
    pub estimator: EstimatorConfig,
    /// Fixed criterion weights; `None` uses the adaptive setting.
    pub coefficients: Option<Coefficients>,
    /// Estimate of `I(y; v^k)` fed to the stopping rule.
    pub stop_information: InformationEstimate,
    pub horizon: usize,
    /// Largest number of subsets a traversal iteration may score.
    pub combination_budget: u64,
    /// Hard cap on embedding iterations.
    pub max_iterations: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            method: Method::LmPmime,
            max_lag: 5,
            threshold: 0.95,
            strategy_factor: 2,
            estimator: EstimatorConfig::default(),
            coefficients: None,
            stop_information: InformationEstimate::ChainRule,
            horizon: 1,
            combination_budget: 1_000_000,
            max_iterations: 20,
        }
    }
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_lag(mut self, max_lag: usize) -> Self {
        self.max_lag = max_lag;
        self
    }

    pub fn with_threshold(mut self, a: f64) -> Self {
        self.threshold = a;
        self
    }

    pub fn with_strategy_factor(mut self, m: usize) -> Self {
        self.strategy_factor = m;
        self
    }

    pub fn with_stop_information(mut self, estimate: InformationEstimate) -> Self {
        self.stop_information = estimate;
        self
    }

    pub fn with_k_nn(mut self, k: usize) -> Self {
        self.estimator.k_nn = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.max_lag == 0 {
            return Err(Error::InvalidConfig("max lag L must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "stopping threshold A must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.strategy_factor == 0 {
            return Err(Error::InvalidConfig("strategy factor m must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be >= 1".into()));
        }
        if let Some(c) = self.coefficients {
            if ![c.beta, c.gamma, c.delta].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig("criterion coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    /// Whether iteration `k` uses exhaustive traversal.
    pub(crate) fn is_traversal(&self, k: usize) -> bool {
        self.method != Method::Pmime && k > 1 && k <= self.strategy_factor
    }
}
