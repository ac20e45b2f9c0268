//! Text formats for models, lambda tables, annotations, detections and
//! metrics. Every writer is deterministic; model files round-trip
//! byte-identically.

pub mod lambda;
pub mod model;
pub mod records;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::Provenance;
use crate::error::{CliError, Result};

pub use lambda::{read_lambda, write_lambda};
pub use model::{read_model, write_model};
pub use records::{
    read_annotations, read_detections, write_annotations, write_detections, write_metrics, write_pr_csv, DetectionRecord,
    EvalCounts,
};

/// Line cursor over a keyword-structured text file.
pub(crate) struct Cursor<'a> {
    path: PathBuf,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str, path: &Path) -> Self {
        Self { path: path.to_path_buf(), lines: text.lines().enumerate().peekable(), line: 0 }
    }

    pub(crate) fn error(&self, reason: impl Into<String>) -> CliError {
        CliError::parse(&self.path, self.line, reason)
    }

    /// Next line split on whitespace; its first token must be `keyword`.
    pub(crate) fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let Some((n, line)) = self.lines.next() else {
            self.line += 1;
            return Err(self.error(format!("expected `{keyword}`, found end of file")));
        };
        self.line = n + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == keyword => Ok(tokens.collect()),
            _ => Err(self.error(format!("expected `{keyword}`"))),
        }
    }

    /// Next line split on whitespace, keyword included; the keyword must be
    /// one of `keywords`.
    pub(crate) fn expect_any(&mut self, keywords: &[&str]) -> Result<Vec<&'a str>> {
        let Some((n, line)) = self.lines.next() else {
            self.line += 1;
            return Err(self.error(format!("expected one of {keywords:?}, found end of file")));
        };
        self.line = n + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first() {
            Some(k) if keywords.contains(k) => Ok(tokens),
            _ => Err(self.error(format!("expected one of {keywords:?}"))),
        }
    }

    /// Like [`Cursor::expect`] for lines carrying exactly one value.
    pub(crate) fn value<T: FromStr>(&mut self, keyword: &str) -> Result<T> {
        let tokens = self.expect(keyword)?;
        match tokens[..] {
            [v] => self.parse(v),
            _ => Err(self.error(format!("`{keyword}` takes one value"))),
        }
    }

    pub(crate) fn parse<T: FromStr>(&self, token: &str) -> Result<T> {
        token.parse().map_err(|_| self.error(format!("cannot parse `{token}`")))
    }

    pub(crate) fn provenance(&mut self) -> Result<Provenance> {
        let config_sha256 = self.value::<String>("config_sha256")?;
        let seed = self.value("seed")?;
        Ok(Provenance { config_sha256, seed })
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        match self.lines.next() {
            Some((n, _)) => {
                self.line = n + 1;
                Err(self.error("trailing content"))
            }
            None => Ok(()),
        }
    }
}

pub(crate) fn write_provenance(out: &mut String, p: &Provenance) {
    out.push_str(&format!("config_sha256 {}\nseed {}\n", p.config_sha256, p.seed));
}
