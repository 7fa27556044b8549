//! Named reproductions of the benchmark tables and figures.

use clap::ValueEnum;
use lmpmime::SystemKind;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// VAR5 metrics for n = 256, 512, 1024.
    Table1,
    /// NLVAR3 metrics for n = 256, 512, 1024.
    Table2,
    /// Hénon chain, C = 0.1, K = 3, 6, 9.
    Table3,
    /// Hénon chain, C = 0.3, K = 3, 6, 9.
    Table4,
    /// Lorenz oscillators, C = 3, n = 256, 512, 1024.
    Table5,
    /// Lorenz oscillators, n = 512, C = 1..5.
    Table6,
    /// Mean causality matrices for VAR5, n = 512.
    Fig2,
    /// Mean causality matrices for NLVAR3, n = 512.
    Fig3,
    /// Mean causality matrices for the Hénon chain, K = 6, C = 0.1.
    Fig4,
    /// Mean causality matrices for the Hénon chain, K = 6, C = 0.3.
    Fig5,
    /// Mean causality matrices for Lorenz, C = 3.
    Fig6,
    /// Mean causality matrices for Lorenz, C = 5.
    Fig7,
}

/// Method parameters shared by all rows of a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parameters {
    #[serde(rename = "L")]
    pub max_lag: usize,
    #[serde(rename = "A")]
    pub threshold: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub kind: SystemKind,
    pub n: usize,
}

/// Restrictions of the default grid from the command line.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Filters {
    pub vars: Vec<usize>,
    pub n: Vec<usize>,
    pub coupling: Vec<f64>,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Table1 => "table1",
            Target::Table2 => "table2",
            Target::Table3 => "table3",
            Target::Table4 => "table4",
            Target::Table5 => "table5",
            Target::Table6 => "table6",
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Fig4 => "fig4",
            Target::Fig5 => "fig5",
            Target::Fig6 => "fig6",
            Target::Fig7 => "fig7",
        }
    }

    pub fn is_figure(self) -> bool {
        matches!(self, Target::Fig2 | Target::Fig3 | Target::Fig4 | Target::Fig5 | Target::Fig6 | Target::Fig7)
    }

    pub fn parameters(self) -> Parameters {
        let (max_lag, threshold, m) = match self {
            Target::Table1 | Target::Fig2 => (6, 0.97, 2),
            Target::Table2 | Target::Fig3 => (6, 0.97, 3),
            Target::Table3 | Target::Table4 | Target::Fig4 | Target::Fig5 => (5, 0.95, 2),
            Target::Table5 | Target::Table6 | Target::Fig6 | Target::Fig7 => (5, 0.95, 3),
        };
        Parameters { max_lag, threshold, m }
    }

    /// The full grid of the published target.
    pub fn rows(self) -> Vec<Row> {
        let lengths = [256, 512, 1024];
        let henon = |coupling: f64| -> Vec<Row> {
            [3, 6, 9]
                .map(|vars| Row { kind: SystemKind::Henon { vars, coupling }, n: 1024 })
                .to_vec()
        };
        let lorenz = |coupling: f64, n: usize| Row { kind: SystemKind::Lorenz3 { coupling }, n };
        match self {
            Target::Table1 => lengths.map(|n| Row { kind: SystemKind::Var5, n }).to_vec(),
            Target::Table2 => lengths.map(|n| Row { kind: SystemKind::NlVar3, n }).to_vec(),
            Target::Table3 => henon(0.1),
            Target::Table4 => henon(0.3),
            Target::Table5 => lengths.map(|n| lorenz(3.0, n)).to_vec(),
            Target::Table6 => (1..=5).map(|c| lorenz(c as f64, 512)).collect(),
            Target::Fig2 => vec![Row { kind: SystemKind::Var5, n: 512 }],
            Target::Fig3 => vec![Row { kind: SystemKind::NlVar3, n: 512 }],
            Target::Fig4 => vec![Row { kind: SystemKind::Henon { vars: 6, coupling: 0.1 }, n: 1024 }],
            Target::Fig5 => vec![Row { kind: SystemKind::Henon { vars: 6, coupling: 0.3 }, n: 1024 }],
            Target::Fig6 => vec![lorenz(3.0, 512)],
            Target::Fig7 => vec![lorenz(5.0, 512)],
        }
    }

    /// Grid after applying the filters. A filter on a dimension the target
    /// does not vary replaces the value instead of filtering it out.
    pub fn select(self, f: &Filters) -> Vec<Row> {
        let mut rows = self.rows();
        let varies = |get: &dyn Fn(&Row) -> Option<f64>| {
            let mut vals: Vec<f64> = rows.iter().filter_map(get).collect();
            vals.dedup();
            vals.len() > 1
        };
        let vars_of = |r: &Row| match r.kind {
            SystemKind::Henon { vars, .. } => Some(vars as f64),
            _ => None,
        };
        let coupling_of = |r: &Row| match r.kind {
            SystemKind::Henon { coupling, .. } | SystemKind::Lorenz3 { coupling } => Some(coupling),
            _ => None,
        };
        let n_of = |r: &Row| Some(r.n as f64);
        let (vary_vars, vary_c, vary_n) = (varies(&vars_of), varies(&coupling_of), varies(&n_of));

        if !f.vars.is_empty() {
            rows = expand(rows, vary_vars, &f.vars, |r| vars_of(r).map(|v| v as usize), |r, v| {
                if let SystemKind::Henon { coupling, .. } = r.kind {
                    r.kind = SystemKind::Henon { vars: v, coupling };
                }
            });
        }
        if !f.coupling.is_empty() {
            rows = expand(rows, vary_c, &f.coupling, coupling_of, |r, c| match r.kind {
                SystemKind::Henon { vars, .. } => r.kind = SystemKind::Henon { vars, coupling: c },
                SystemKind::Lorenz3 { .. } => r.kind = SystemKind::Lorenz3 { coupling: c },
                _ => {}
            });
        }
        if !f.n.is_empty() {
            rows = expand(rows, vary_n, &f.n, |r| Some(r.n), |r, n| r.n = n);
        }
        rows
    }
}

fn expand<T: PartialEq + Copy>(
    rows: Vec<Row>,
    filter: bool,
    wanted: &[T],
    get: impl Fn(&Row) -> Option<T>,
    set: impl Fn(&mut Row, T),
) -> Vec<Row> {
    if filter {
        return rows.into_iter().filter(|r| get(r).is_none_or(|v| wanted.contains(&v))).collect();
    }
    let mut out = Vec::new();
    for r in rows {
        if get(&r).is_none() {
            out.push(r);
            continue;
        }
        for &w in wanted {
            let mut r = r;
            set(&mut r, w);
            out.push(r);
        }
    }
    out
}

/// File-name tag for one grid row.
pub fn row_tag(row: &Row) -> String {
    match row.kind {
        SystemKind::Var5 => format!("var5-n{}", row.n),
        SystemKind::NlVar3 => format!("nlvar3-n{}", row.n),
        SystemKind::Henon { vars, coupling } => format!("henon-k{vars}-c{coupling}-n{}", row.n),
        SystemKind::Lorenz3 { coupling } => format!("lorenz3-c{coupling}-n{}", row.n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table4_filtered_to_k3() {
        let rows = Target::Table4.select(&Filters { vars: vec![3], ..Default::default() });
        assert_eq!(rows, vec![Row { kind: SystemKind::Henon { vars: 3, coupling: 0.3 }, n: 1024 }]);
    }

    #[test]
    fn fixed_dimension_is_replaced() {
        let rows = Target::Fig5.select(&Filters { vars: vec![3, 4], n: vec![256], ..Default::default() });
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.n == 256));
        assert_eq!(rows[1].kind, SystemKind::Henon { vars: 4, coupling: 0.3 });
    }

    #[test]
    fn table6_spans_couplings() {
        let rows = Target::Table6.select(&Filters { coupling: vec![2.0, 5.0], ..Default::default() });
        assert_eq!(rows.len(), 2);
        assert_eq!(row_tag(&rows[1]), "lorenz3-c5-n512");
        assert_eq!(Target::Table6.parameters(), Parameters { max_lag: 5, threshold: 0.95, m: 3 });
    }
}
