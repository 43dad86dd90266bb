//! Streaming sufficient statistics (n, mean, sum of squared deviations) and
//! the derived self-normalized quantities S_n(theta), V_n(theta).
//!
//! Every e-variable and interval in this crate is a function of these three
//! numbers plus its parameters, so `SampleSummary` is the hub type. The
//! single-pass update is Welford's recurrence, which keeps both the biased
//! and unbiased variance exact to working precision.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sufficient statistics of an observed sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    n: u64,
    mean: f64,
    ssd: f64,
}

impl SampleSummary {
    /// Summary of the empty sample.
    pub fn empty() -> Self {
        SampleSummary { n: 0, mean: 0.0, ssd: 0.0 }
    }

    /// Build from raw statistics, validating the invariants `ssd >= 0` and
    /// `ssd = 0` when `n <= 1`.
    pub fn from_parts(n: u64, mean: f64, ssd: f64) -> Result<Self> {
        if !mean.is_finite() || !ssd.is_finite() || ssd < 0.0 {
            return Err(Error::InvalidParameter {
                name: "ssd",
                value: ssd,
                constraint: "requires finite mean and ssd >= 0",
            });
        }
        if n <= 1 && ssd != 0.0 {
            return Err(Error::InvalidParameter {
                name: "ssd",
                value: ssd,
                constraint: "must be 0 when n <= 1",
            });
        }
        Ok(SampleSummary { n, mean, ssd })
    }

    /// Single pass over a sample.
    pub fn summarize(samples: impl IntoIterator<Item = f64>) -> Self {
        samples.into_iter().fold(Self::empty(), |acc, x| acc.update(x))
    }

    /// Summary extended by one observation (Welford update).
    pub fn update(self, x: f64) -> Self {
        let n = self.n + 1;
        let delta = x - self.mean;
        let mean = self.mean + delta / n as f64;
        let ssd = self.ssd + delta * (x - mean);
        SampleSummary { n, mean, ssd }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn ssd(&self) -> f64 {
        self.ssd
    }

    /// Biased sample variance s^2 = ssd/n. None when n = 0.
    pub fn biased_var(&self) -> Option<f64> {
        (self.n >= 1).then(|| self.ssd / self.n as f64)
    }

    /// Unbiased sample variance ssd/(n-1). None when n < 2.
    pub fn unbiased_var(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.ssd / (self.n - 1) as f64)
    }

    /// Biased sample standard deviation.
    pub fn biased_sd(&self) -> Option<f64> {
        self.biased_var().map(f64::sqrt)
    }

    /// Unbiased sample standard deviation.
    pub fn unbiased_sd(&self) -> Option<f64> {
        self.unbiased_var().map(f64::sqrt)
    }

    /// S_n(theta), V_n(theta), and the centering gap mean - theta.
    pub fn theta_stats(&self, theta: f64) -> Result<ThetaStats> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        let nf = self.n as f64;
        let delta = self.mean - theta;
        ThetaStats::from_raw(nf * delta, (self.ssd + nf * delta * delta).sqrt(), delta)
    }
}

/// The self-normalized pair S_n(theta) = sum(X_i - theta) and
/// V_n(theta) = sqrt(sum (X_i - theta)^2), plus delta = mean - theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaStats {
    pub s: f64,
    pub v: f64,
    pub delta: f64,
}

impl ThetaStats {
    fn from_raw(s: f64, v: f64, delta: f64) -> Result<Self> {
        Ok(ThetaStats { s, v, delta })
    }

    /// S/V with the degenerate-sample convention: `None` at the all-constant
    /// sample (S = 0, V = 0), an error in the impossible S != 0, V = 0 case.
    pub fn ratio(&self) -> Result<Option<f64>> {
        if self.v > 0.0 {
            Ok(Some(self.s / self.v))
        } else if self.s == 0.0 {
            Ok(None)
        } else {
            Err(Error::DegenerateSample)
        }
    }
}

/// How to interpret an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One decimal float per line.
    Plain,
    /// Comma-separated rows; take the 0-based column, optionally skipping a
    /// header row.
    Csv { column: usize, has_header: bool },
}

/// Parse newline-delimited floats or a CSV column. Non-numeric rows are
/// rejected with their 1-based line number; blank lines are skipped.
pub fn parse_samples<R: BufRead>(reader: R, format: InputFormat) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Io(e.to_string()))?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let field = match format {
            InputFormat::Plain => trimmed,
            InputFormat::Csv { column, has_header } => {
                if has_header && idx == 0 {
                    continue;
                }
                trimmed.split(',').nth(column).map(str::trim).ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("row has no column {column}"),
                })?
            }
        };
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("not a number: {field:?}"),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Read and parse a data file from disk.
pub fn parse_samples_path(path: &std::path::Path, format: InputFormat) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_samples(std::io::BufReader::new(file), format)
}
