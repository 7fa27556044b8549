//! Artifact writers. Every artifact starts with the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use lmpmime::evaluation::write_metrics_csv;
use lmpmime::{BatchSummary, CausalityMatrix};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Pgm,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "pgm" => Ok(Format::Pgm),
            other => Err(format!("unknown format {other:?} (expected json, csv or pgm)")),
        }
    }
}

/// Self-description stamped on every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Header<S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub settings: S,
}

impl<S: Serialize> Header<S> {
    pub fn new(command: impl Into<String>, settings: S) -> Self {
        Self {
            tool: "lmpmime",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            settings,
        }
    }

    /// The header as `# key: value` lines for text formats.
    pub fn comment_lines(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = String::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                writeln!(out, "# {k}: {v}")?;
            }
        }
        Ok(out)
    }
}

pub struct Writer {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, formats: Vec<Format>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats,
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn create(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        f.write_all(bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<S: Serialize, T: Serialize>(&mut self, name: &str, header: &Header<S>, key: &str, body: &T) -> Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut doc = serde_json::Map::new();
        doc.insert("header".into(), serde_json::to_value(header)?);
        doc.insert(key.into(), serde_json::to_value(body)?);
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
        text.push('\n');
        self.create(&format!("{name}.json"), text.as_bytes())
    }

    pub fn metrics_csv<S: Serialize>(&mut self, name: &str, header: &Header<S>, rows: &[BatchSummary]) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut bytes = header.comment_lines()?.into_bytes();
        write_metrics_csv(&mut bytes, rows)?;
        self.create(&format!("{name}.csv"), &bytes)
    }

    pub fn matrix_csv<S: Serialize>(
        &mut self,
        name: &str,
        header: &Header<S>,
        labels: &[String],
        m: &CausalityMatrix,
    ) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut bytes = header.comment_lines()?.into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            let mut head = vec!["driver\\target".to_string()];
            head.extend(labels.iter().cloned());
            w.write_record(&head)?;
            for (label, row) in labels.iter().zip(m.rows()) {
                let mut rec = vec![label.clone()];
                rec.extend(row.iter().map(|v| format!("{v:.6}")));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        self.create(&format!("{name}.csv"), &bytes)
    }

    pub fn heatmap<S: Serialize>(&mut self, name: &str, header: &Header<S>, m: &CausalityMatrix) -> Result<()> {
        if !self.wants(Format::Pgm) {
            return Ok(());
        }
        let comments = header.comment_lines()?;
        let bytes = pgm(m, CELL_PIXELS, &comments);
        self.create(&format!("{name}.pgm"), &bytes)
    }
}

/// Side of the square drawn for each matrix entry.
pub const CELL_PIXELS: usize = 16;

/// Plain (ASCII) graymap, white = matrix maximum, black = 0. Rows are
/// drivers, columns targets.
pub fn pgm(m: &CausalityMatrix, cell: usize, comments: &str) -> Vec<u8> {
    let max = m.max();
    let level = |v: f64| -> u8 {
        if max > 0.0 {
            (255.0 * (v.max(0.0) / max)).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    };
    let side = m.size * cell;
    let mut out = String::from("P2\n");
    out.push_str(comments);
    let _ = write!(out, "{side} {side}\n255\n");
    for row in m.rows() {
        let line: Vec<String> = row
            .iter()
            .flat_map(|&v| std::iter::repeat_n(level(v).to_string(), cell))
            .collect();
        let line = line.join(" ");
        for _ in 0..cell {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_scales_linearly() {
        let m = CausalityMatrix::from_rows(&[vec![0.0, 0.5], vec![0.25, 0.0]]).unwrap();
        let text = String::from_utf8(pgm(&m, 1, "# hi\n")).unwrap();
        assert_eq!(text, "P2\n# hi\n2 2\n255\n0 255\n128 0\n");
    }

    #[test]
    fn pgm_of_zero_matrix_is_black() {
        let text = String::from_utf8(pgm(&CausalityMatrix::zeros(2), 2, "")).unwrap();
        assert!(text.ends_with("0 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n"));
    }

    #[test]
    fn formats_parse() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("png".parse::<Format>().is_err());
    }
}
