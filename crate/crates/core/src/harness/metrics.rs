use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agents::PerformanceReport;
use crate::dvae::EpochLoss;
use crate::error::{Error, Result};

/// A CSV record type with a fixed column list.
pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

/// `epoch,loss,recon,kl`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
}

impl From<EpochLoss> for LossRow {
    fn from(e: EpochLoss) -> Self {
        LossRow {
            epoch: e.epoch,
            loss: e.loss,
            recon: e.recon,
            kl: e.kl,
        }
    }
}

/// `episode,performance,rolling_mean`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRow {
    pub episode: usize,
    pub performance: f64,
    pub rolling_mean: f64,
}

/// `horizon,position_error,pixel_error,samples`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub horizon: usize,
    /// Mean Manhattan distance between dreamed and true player cells.
    pub position_error: f64,
    /// Mean absolute per-pixel difference.
    pub pixel_error: f64,
    pub samples: usize,
}

/// `algorithm,avg_performance,converged_episode`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub avg_performance: f64,
    /// Episode index, or `N/A` when the run never converged.
    pub converged_episode: String,
}

impl CsvRow for LossRow {
    const HEADER: &'static [&'static str] = &["epoch", "loss", "recon", "kl"];
}

impl CsvRow for PerformanceRow {
    const HEADER: &'static [&'static str] = &["episode", "performance", "rolling_mean"];
}

impl CsvRow for HorizonRow {
    const HEADER: &'static [&'static str] = &["horizon", "position_error", "pixel_error", "samples"];
}

impl CsvRow for SummaryRow {
    const HEADER: &'static [&'static str] = &["algorithm", "avg_performance", "converged_episode"];
}

pub fn performance_rows(report: &PerformanceReport) -> Vec<PerformanceRow> {
    report
        .performance
        .iter()
        .zip(&report.rolling_mean)
        .enumerate()
        .map(|(episode, (p, m))| PerformanceRow {
            episode,
            performance: *p,
            rolling_mean: *m,
        })
        .collect()
}

/// Writes rows as RFC 4180 CSV with a header row.
pub fn write_csv<T: CsvRow>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::CRLF)
        .from_path(path)?;
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: CsvRow>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(T::HEADER.iter().copied()) {
        return Err(Error::Invalid("unexpected CSV header".into()));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Rebuilds a report from a stored per-episode metrics file.
pub fn report_from_csv(path: impl AsRef<Path>, window: usize, threshold: f64) -> Result<PerformanceReport> {
    let rows: Vec<PerformanceRow> = read_csv(path)?;
    for (i, r) in rows.iter().enumerate() {
        if r.episode != i {
            return Err(Error::Invalid(format!(
                "episode index {} out of order at row {i}",
                r.episode
            )));
        }
    }
    Ok(PerformanceReport::new(
        rows.iter().map(|r| r.performance).collect(),
        window,
        threshold,
    ))
}
