//! Report files.
//!
//! * `raw.jsonl`: one [`BatchRecord`] per (sweep point, batch, policy).
//! * `runs.jsonl`: one [`RunLine`] per (sweep point, batch, run, policy),
//!   the uniform baseline included.
//! * `summary.csv`: median and quartiles of BWR, EST and WTR per policy and
//!   sweep point, plus the share of batches with BWR above 0.5.
//! * `series.csv`: mean ± standard error of BWR and EST per sweep point.
//!
//! Summaries depend only on `raw.jsonl`, so `metrics` can rebuild them.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentResult;
use crate::metrics::quartile_summary;
use crate::oracle::MeanEstimate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub axis: String,
    pub axis_value: Option<f64>,
    pub batch: usize,
    pub prompts: Vec<String>,
    pub policy: String,
    pub runs: usize,
    pub bwr: f64,
    pub est: f64,
    pub wtr: f64,
    pub mean_total: f64,
    pub bwtr_curve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub axis: String,
    pub axis_value: Option<f64>,
    pub batch: usize,
    pub run: usize,
    pub policy: String,
    pub allocation: Vec<usize>,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub axis: String,
    pub axis_value: Option<f64>,
    pub policy: String,
    pub batches: usize,
    pub bwr_median: f64,
    pub bwr_q1: f64,
    pub bwr_q3: f64,
    pub bwr_mean: f64,
    pub bwr_se: f64,
    pub pct_bwr_above_half: f64,
    pub est_median: f64,
    pub est_q1: f64,
    pub est_q3: f64,
    pub est_mean: f64,
    pub est_se: f64,
    pub wtr_median: f64,
    pub wtr_q1: f64,
    pub wtr_q3: f64,
}

pub fn batch_records(result: &ExperimentResult) -> Vec<BatchRecord> {
    let mut out = Vec::new();
    for point in &result.points {
        for batch in &point.batches {
            for p in &batch.policies {
                out.push(BatchRecord {
                    axis: point.axis.clone(),
                    axis_value: point.value,
                    batch: batch.batch,
                    prompts: batch.prompts.clone(),
                    policy: p.policy.clone(),
                    runs: p.report.runs,
                    bwr: p.report.bwr,
                    est: p.report.est,
                    wtr: p.report.wtr,
                    mean_total: p.report.mean_total,
                    bwtr_curve: p.report.bwtr_curve.clone(),
                });
            }
        }
    }
    out
}

pub fn run_lines(result: &ExperimentResult) -> Vec<RunLine> {
    let mut out = Vec::new();
    for point in &result.points {
        for batch in &point.batches {
            for (run, base) in batch.baseline.iter().enumerate() {
                let line = |policy: &str, rec: &crate::types::RunRecord| RunLine {
                    axis: point.axis.clone(),
                    axis_value: point.value,
                    batch: batch.batch,
                    run,
                    policy: policy.to_string(),
                    allocation: rec.allocation.counts().to_vec(),
                    total: rec.total,
                };
                if !batch.policies.iter().any(|p| p.policy == "uniform") {
                    out.push(line("uniform", base));
                }
                for p in &batch.policies {
                    out.push(line(&p.policy, &p.records[run]));
                }
            }
        }
    }
    out
}

/// Groups records by (axis, axis value, policy) in first-seen order.
pub fn summarize(records: &[BatchRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: Vec<(&str, Option<f64>, &str, Vec<&BatchRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|g| g.0 == r.axis && g.1 == r.axis_value && g.2 == r.policy)
        {
            Some(g) => g.3.push(r),
            None => groups.push((&r.axis, r.axis_value, &r.policy, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(axis, axis_value, policy, rs)| {
            let bwr: Vec<f64> = rs.iter().map(|r| r.bwr).collect();
            let est: Vec<f64> = rs.iter().map(|r| r.est).collect();
            let wtr: Vec<f64> = rs.iter().map(|r| r.wtr).collect();
            let (qb, qe, qw) = (quartile_summary(&bwr)?, quartile_summary(&est)?, quartile_summary(&wtr)?);
            let (mb, me) = (MeanEstimate::from_samples(&bwr)?, MeanEstimate::from_samples(&est)?);
            let above = bwr.iter().filter(|&&x| x > 0.5).count();
            Ok(SummaryRow {
                axis: axis.to_string(),
                axis_value,
                policy: policy.to_string(),
                batches: rs.len(),
                bwr_median: qb.median,
                bwr_q1: qb.q1,
                bwr_q3: qb.q3,
                bwr_mean: mb.mean,
                bwr_se: mb.standard_error,
                pct_bwr_above_half: 100.0 * above as f64 / rs.len() as f64,
                est_median: qe.median,
                est_q1: qe.q1,
                est_q3: qe.q3,
                est_mean: me.mean,
                est_se: me.standard_error,
                wtr_median: qw.median,
                wtr_q1: qw.q1,
                wtr_q3: qw.q3,
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(write_err(path))?;
    }
    w.flush().map_err(write_err(path))
}

pub fn read_batch_records(path: &Path) -> Result<Vec<BatchRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = create(path)?;
    let err = write_err(path);
    writeln!(
        w,
        "axis,axis_value,policy,batches,bwr_median,bwr_q1,bwr_q3,bwr_mean,pct_bwr_above_half,\
         est_median,est_q1,est_q3,wtr_median,wtr_q1,wtr_q3"
    )
    .map_err(&err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            fmt_opt(r.axis_value),
            r.policy,
            r.batches,
            r.bwr_median,
            r.bwr_q1,
            r.bwr_q3,
            r.bwr_mean,
            r.pct_bwr_above_half,
            r.est_median,
            r.est_q1,
            r.est_q3,
            r.wtr_median,
            r.wtr_q1,
            r.wtr_q3
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

pub fn write_series_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = create(path)?;
    let err = write_err(path);
    writeln!(w, "axis,axis_value,policy,batches,bwr_mean,bwr_se,est_mean,est_se").map_err(&err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.axis,
            fmt_opt(r.axis_value),
            r.policy,
            r.batches,
            r.bwr_mean,
            r.bwr_se,
            r.est_mean,
            r.est_se
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

#[derive(Clone, Debug)]
pub struct ReportPaths {
    pub raw: PathBuf,
    pub runs: Option<PathBuf>,
    pub summary: PathBuf,
    pub series: PathBuf,
}

/// Writes `summary.csv` and `series.csv` for already-computed batch records.
pub fn emit_summaries(records: &[BatchRecord], out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let rows = summarize(records)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let summary = out_dir.join("summary.csv");
    let series = out_dir.join("series.csv");
    write_summary_csv(&summary, &rows)?;
    write_series_csv(&series, &rows)?;
    Ok((summary, series))
}

/// Writes all four report files into `out_dir`.
pub fn emit_report(result: &ExperimentResult, out_dir: &Path) -> Result<ReportPaths> {
    let records = batch_records(result);
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (summary, series) = emit_summaries(&records, out_dir)?;
    let raw = out_dir.join("raw.jsonl");
    write_jsonl(&raw, &records)?;
    let runs = out_dir.join("runs.jsonl");
    write_jsonl(&runs, &run_lines(result))?;
    Ok(ReportPaths {
        raw,
        runs: Some(runs),
        summary,
        series,
    })
}
