//! Multivariate series, lagged-variable candidate sets and the alignment of
//! lagged columns with the future value of a target variable.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K real-valued channels observed at n common time points.
///
/// Data is stored column-major: `columns[j][t]` is variable `j` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl MultivariateSeries {
    /// Builds a series from columns, validating shape and finiteness.
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a multivariate series needs at least 2 variables, got {}",
                columns.len()
            )));
        }
        if labels.len() != columns.len() {
            return Err(Error::ShapeMismatch {
                expected: columns.len(),
                actual: labels.len(),
            });
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "a multivariate series needs at least 2 samples, got {n}"
            )));
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if let Some(t) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: t, column: j });
            }
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate variable label {l:?}")));
            }
        }
        Ok(Self { columns, labels })
    }

    /// Builds a series with default labels `X1..XK`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let labels = default_labels(columns.len());
        Self::new(columns, labels)
    }

    /// Builds a series from sample rows (`rows[t][j]`).
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); k];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Parse {
                    line: t + 1,
                    message: format!("expected {k} fields, found {}", row.len()),
                });
            }
            for (j, v) in row.iter().enumerate() {
                columns[j].push(*v);
            }
        }
        let labels = labels.unwrap_or_else(|| default_labels(k));
        Self::new(columns, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn value(&self, t: usize, j: usize) -> f64 {
        self.columns[j][t]
    }

    /// Reorders variables so that new variable `i` is old variable `perm[i]`.
    pub fn permute_variables(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_vars())?;
        let columns = perm.iter().map(|&p| self.columns[p].clone()).collect();
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        Self::new(columns, labels)
    }

    /// Keeps every `q`-th sample, starting with the first.
    pub fn decimate(&self, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| c.iter().step_by(q).copied().collect())
            .collect();
        Self::new(columns, self.labels.clone())
    }

    /// Returns a copy with `f(j, t)` added to every entry.
    pub(crate) fn perturbed(&self, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| c.iter().enumerate().map(|(t, v)| v + f(j, t)).collect())
            .collect();
        Self {
            columns,
            labels: self.labels.clone(),
        }
    }

    /// Reads a comma-separated file: an optional header row of labels, then
    /// one sample per row.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut labels = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = None;
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 1;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if let Some(w) = width {
                if rec.len() != w {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected {w} fields, found {}", rec.len()),
                    });
                }
            }
            width = Some(rec.len());
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => {
                    if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Parse {
                            line,
                            message: format!("non-finite value in column {}", j + 1),
                        });
                    }
                    rows.push(row);
                }
                Err(_) if rows.is_empty() && labels.is_none() => {
                    labels = Some(rec.iter().map(str::to_owned).collect::<Vec<_>>());
                }
                Err(_) => {
                    let (j, field) = rec
                        .iter()
                        .enumerate()
                        .find(|(_, f)| f.parse::<f64>().is_err())
                        .expect("some field failed to parse");
                    let message = if field.is_empty() {
                        format!("missing value in column {}", j + 1)
                    } else {
                        format!("cannot parse {field:?} in column {} as a number", j + 1)
                    };
                    return Err(Error::Parse { line, message });
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no data rows".into(),
            });
        }
        Self::from_rows(&rows, labels)
    }

    /// Writes the series with a header row of labels.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.labels).map_err(csv_err)?;
        for t in 0..self.n_samples() {
            w.write_record(self.columns.iter().map(|c| format!("{:?}", c[t])))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("X{i}")).collect()
}

pub(crate) fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            actual: perm.len(),
        });
    }
    for &p in perm {
        if p >= k || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidConfig(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Centers every column and scales it to unit sample standard deviation.
pub fn standardize(series: &MultivariateSeries) -> Result<MultivariateSeries> {
    let n = series.n_samples();
    let mut columns = Vec::with_capacity(series.n_vars());
    for (j, col) in series.columns.iter().enumerate() {
        if let Some(t) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: t, column: j });
        }
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        // Relative cutoff so that values like [5, 5, 5] with rounding residue still count as constant.
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::ConstantColumn {
                index: j,
                label: series.labels[j].clone(),
            });
        }
        columns.push(col.iter().map(|v| (v - mean) / sd).collect());
    }
    Ok(MultivariateSeries {
        columns,
        labels: series.labels.clone(),
    })
}

/// A past value of one variable: `var` observed `lag` steps before the
/// current time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaggedVariable {
    pub var: usize,
    pub lag: usize,
}

impl LaggedVariable {
    pub const fn new(var: usize, lag: usize) -> Self {
        Self { var, lag }
    }
}

impl std::fmt::Display for LaggedVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x{}(t-{})", self.var + 1, self.lag)
    }
}

/// All `K * L` strictly-past lagged variables, variable-major then lag.
///
/// The order is part of the contract: every argmax in the embedding search
/// resolves ties in favour of the earlier candidate.
pub fn build_candidate_set(n_vars: usize, max_lag: usize) -> Vec<LaggedVariable> {
    assert!(n_vars >= 2, "candidate set needs at least 2 variables");
    assert!(max_lag >= 1, "candidate set needs max lag >= 1");
    (0..n_vars)
        .flat_map(|var| (1..=max_lag).map(move |lag| LaggedVariable::new(var, lag)))
        .collect()
}

/// Lagged columns and the target they are meant to explain, all indexed by
/// the same effective time `t = 0..n_eff`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSample {
    pub target: Vec<f64>,
    pub candidates: Vec<LaggedVariable>,
    pub columns: Vec<Vec<f64>>,
    pub max_lag: usize,
    pub horizon: usize,
}

impl AlignedSample {
    pub fn n_eff(&self) -> usize {
        self.target.len()
    }

    /// Column of a candidate, if it belongs to this sample.
    pub fn column(&self, lv: LaggedVariable) -> Option<&[f64]> {
        self.candidates
            .iter()
            .position(|c| *c == lv)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Aligns the lagged columns of `candidates` with the value of
/// `target_index` `horizon` steps ahead.
///
/// The maximum lag `L` is taken from the candidates; row `t` of column
/// `(j, lag)` is `x_j[t + L - lag]` and the target row is `x_y[t + L + h - 1]`.
pub fn align(
    series: &MultivariateSeries,
    target_index: usize,
    candidates: &[LaggedVariable],
    horizon: usize,
) -> Result<AlignedSample> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("prediction horizon must be >= 1".into()));
    }
    if target_index >= series.n_vars() {
        return Err(Error::InvalidConfig(format!(
            "target index {target_index} out of range for {} variables",
            series.n_vars()
        )));
    }
    if let Some(c) = candidates.iter().find(|c| c.var >= series.n_vars() || c.lag == 0) {
        return Err(Error::InvalidConfig(format!("invalid candidate {c:?}")));
    }
    let max_lag = candidates.iter().map(|c| c.lag).max().unwrap_or(1);
    let n = series.n_samples();
    if n < max_lag + horizon {
        return Err(Error::SeriesTooShort {
            samples: n,
            max_lag,
            horizon,
        });
    }
    let n_eff = n - max_lag - (horizon - 1);
    let offset = max_lag + horizon - 1;
    let target = series.columns[target_index][offset..offset + n_eff].to_vec();
    let columns = candidates
        .iter()
        .map(|c| {
            let start = max_lag - c.lag;
            series.columns[c.var][start..start + n_eff].to_vec()
        })
        .collect();
    Ok(AlignedSample {
        target,
        candidates: candidates.to_vec(),
        columns,
        max_lag,
        horizon,
    })
}
