//! Per-round training metrics and their CSV form.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "round",
    "strategy",
    "snr_db",
    "train_loss",
    "eval_psnr_db",
    "eval_msssim",
    "bytes_down",
    "bytes_up",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub round: u32,
    pub strategy: String,
    pub snr_db: f64,
    pub train_loss: f64,
    pub eval_psnr_db: Option<f64>,
    pub eval_msssim: Option<f64>,
    pub bytes_down: u64,
    pub bytes_up: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    rows: Vec<ReportRow>,
}

impl TrainingReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; rounds must strictly increase per strategy.
    pub fn push(&mut self, row: ReportRow) -> Result<()> {
        if let Some(prev) = self.rows.iter().rev().find(|r| r.strategy == row.strategy) {
            if row.round <= prev.round {
                return Err(Error::Protocol(format!(
                    "round {} recorded after round {} for {}",
                    row.round, prev.round, row.strategy
                )));
            }
        }
        if let Some(m) = row.eval_msssim {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Metric(format!("ms-ssim {m} outside [0, 1]")));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    /// Last row that carries an evaluation.
    pub fn final_eval(&self) -> Option<&ReportRow> {
        self.rows.iter().rev().find(|r| r.eval_psnr_db.is_some())
    }

    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        if header {
            w.write_record(CSV_HEADER)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, true).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Appends rows to `path`, writing the header only if the file is new
    /// or empty.
    pub fn append_csv(&self, path: &Path) -> Result<()> {
        let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.write_csv(file, fresh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: u32, strategy: &str) -> ReportRow {
        ReportRow {
            round,
            strategy: strategy.into(),
            snr_db: 10.0,
            train_loss: 0.25,
            eval_psnr_db: Some(21.5),
            eval_msssim: None,
            bytes_down: 100,
            bytes_up: 80,
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = TrainingReport::new();
        r.push(row(1, "fedlol/partial")).unwrap();
        r.push(row(2, "a,b")).unwrap();
        assert_eq!(
            r.to_csv_string(),
            "round,strategy,snr_db,train_loss,eval_psnr_db,eval_msssim,bytes_down,bytes_up\n\
             1,fedlol/partial,10.0,0.25,21.5,,100,80\n\
             2,\"a,b\",10.0,0.25,21.5,,100,80\n"
        );
    }

    #[test]
    fn rounds_must_increase() {
        let mut r = TrainingReport::new();
        r.push(row(3, "x")).unwrap();
        assert!(r.push(row(3, "x")).is_err());
        r.push(row(1, "y")).unwrap();
        let mut bad = row(4, "x");
        bad.eval_msssim = Some(1.5);
        assert!(r.push(bad).is_err());
    }

    #[test]
    fn append_keeps_single_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut a = TrainingReport::new();
        a.push(row(1, "s")).unwrap();
        a.append_csv(&path).unwrap();
        a.append_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("round,strategy").count(), 1);
        assert_eq!(text.lines().count(), 3);
    }
}
