//! CSV files of a sweep. The column layout is documented in `docs/csv.md`.
//!
//! `summary.csv` and `trials.csv` depend only on the inputs; wall-clock
//! times live in `timing.csv` and `trial_timing.csv`.

use std::fs;
use std::path::Path;

use crate::plot::{line_chart, Series};
use crate::sweep::{SummaryRow, SweepResult, SweptParam, TrialRecord};
use crate::{CliError, Result};

pub const SUMMARY_HEADER: [&str; 7] = ["algorithm", "param_name", "param", "mean_ee_c", "mean_ee_s", "feasible_fraction", "mean_iterations"];
pub const TRIALS_HEADER: [&str; 12] = [
    "param", "trial", "seed", "status", "threshold", "ee_c", "ee_s", "sum_rate", "p_total", "crb", "iterations", "converged",
];
pub const TIMING_HEADER: [&str; 2] = ["param", "mean_wall_s"];
pub const TRIAL_TIMING_HEADER: [&str; 3] = ["param", "trial", "wall_s"];
pub const BOUNDARY_HEADER: [&str; 2] = ["ee_s_threshold", "ee_c"];

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_f(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| CliError::Invalid(format!("{what}: bad number '{s}'")))
}

fn parse_u(s: &str, what: &str) -> Result<u64> {
    s.parse().map_err(|_| CliError::Invalid(format!("{what}: bad integer '{s}'")))
}

fn check_header(rdr: &mut csv::Reader<fs::File>, want: &[&str], file: &str) -> Result<()> {
    let h = rdr.headers()?;
    if h.iter().ne(want.iter().copied()) {
        return Err(CliError::Invalid(format!("{file}: unexpected header {h:?}")));
    }
    Ok(())
}

pub fn write_summary(r: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for row in &r.rows {
        w.write_record([
            r.algorithm.clone(),
            r.param.name().to_string(),
            num(row.param),
            num(row.mean_ee_c),
            num(row.mean_ee_s),
            num(row.feasible_fraction),
            num(row.mean_iterations),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials(r: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRIALS_HEADER)?;
    for t in &r.trials {
        w.write_record([
            num(t.param),
            t.trial.to_string(),
            t.seed.to_string(),
            t.status.clone(),
            num(t.threshold),
            num(t.ee_c),
            num(t.ee_s),
            num(t.sum_rate),
            num(t.p_total),
            num(t.crb),
            t.iterations.to_string(),
            (t.converged as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing(r: &SweepResult, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("timing.csv"))?;
    w.write_record(TIMING_HEADER)?;
    for row in &r.rows {
        w.write_record([num(row.param), num(row.mean_wall_s)])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("trial_timing.csv"))?;
    w.write_record(TRIAL_TIMING_HEADER)?;
    for t in &r.trials {
        w.write_record([num(t.param), t.trial.to_string(), num(t.wall_s)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every CSV file and the SVG charts of a result into `dir`.
pub fn write_result(r: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(r, &dir.join("summary.csv"))?;
    write_trials(r, &dir.join("trials.csv"))?;
    write_timing(r, dir)?;
    let x = r.param.name();
    let pts = |ys: Vec<f64>| r.rows.iter().map(|row| row.param).zip(ys).collect::<Vec<_>>();
    let title = format!("{} sweep", r.algorithm);
    fs::write(
        dir.join("ee_c.svg"),
        line_chart(&title, x, "EE_C (bit/s/Hz/W)", &[Series::new("mean EE_C", pts(r.mean_ee_c()))]),
    )?;
    fs::write(
        dir.join("ee_s.svg"),
        line_chart(&title, x, "EE_S (1/(rad² J))", &[Series::new("mean EE_S", pts(r.mean_ee_s()))]),
    )?;
    if r.param == SweptParam::Threshold {
        let b = r.boundary();
        let mut w = csv::Writer::from_path(dir.join("boundary.csv"))?;
        w.write_record(BOUNDARY_HEADER)?;
        for (e, c) in &b {
            w.write_record([num(*e), num(*c)])?;
        }
        w.flush()?;
        fs::write(
            dir.join("boundary.svg"),
            line_chart("EE_C / EE_S tradeoff", "EE_S threshold", "EE_C (bit/s/Hz/W)", &[Series::new("boundary", b)]),
        )?;
    }
    Ok(())
}

/// Reads the files written by [`write_result`] back into a result.
pub fn read_result(dir: &Path) -> Result<SweepResult> {
    let mut rdr = csv::Reader::from_path(dir.join("summary.csv"))?;
    check_header(&mut rdr, &SUMMARY_HEADER, "summary.csv")?;
    let mut algorithm = String::new();
    let mut param = None;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        algorithm = rec[0].to_string();
        param = Some(SweptParam::parse(&rec[1]).ok_or_else(|| CliError::Invalid(format!("summary.csv: unknown parameter '{}'", &rec[1])))?);
        rows.push(SummaryRow {
            param: parse_f(&rec[2], "param")?,
            mean_ee_c: parse_f(&rec[3], "mean_ee_c")?,
            mean_ee_s: parse_f(&rec[4], "mean_ee_s")?,
            feasible_fraction: parse_f(&rec[5], "feasible_fraction")?,
            mean_iterations: parse_f(&rec[6], "mean_iterations")?,
            mean_wall_s: f64::NAN,
        });
    }
    let param = param.ok_or_else(|| CliError::Invalid("summary.csv has no rows".into()))?;

    let mut rdr = csv::Reader::from_path(dir.join("timing.csv"))?;
    check_header(&mut rdr, &TIMING_HEADER, "timing.csv")?;
    let timing: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if timing.len() != rows.len() {
        return Err(CliError::Invalid("timing.csv and summary.csv disagree in length".into()));
    }
    for (row, rec) in rows.iter_mut().zip(&timing) {
        row.mean_wall_s = parse_f(&rec[1], "mean_wall_s")?;
    }

    let mut rdr = csv::Reader::from_path(dir.join("trials.csv"))?;
    check_header(&mut rdr, &TRIALS_HEADER, "trials.csv")?;
    let mut trials = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        trials.push(TrialRecord {
            param: parse_f(&rec[0], "param")?,
            trial: parse_u(&rec[1], "trial")? as usize,
            seed: parse_u(&rec[2], "seed")?,
            status: rec[3].to_string(),
            threshold: parse_f(&rec[4], "threshold")?,
            ee_c: parse_f(&rec[5], "ee_c")?,
            ee_s: parse_f(&rec[6], "ee_s")?,
            sum_rate: parse_f(&rec[7], "sum_rate")?,
            p_total: parse_f(&rec[8], "p_total")?,
            crb: parse_f(&rec[9], "crb")?,
            iterations: parse_u(&rec[10], "iterations")? as usize,
            converged: &rec[11] == "1",
            wall_s: f64::NAN,
        });
    }
    let mut rdr = csv::Reader::from_path(dir.join("trial_timing.csv"))?;
    check_header(&mut rdr, &TRIAL_TIMING_HEADER, "trial_timing.csv")?;
    let tt: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if tt.len() != trials.len() {
        return Err(CliError::Invalid("trial_timing.csv and trials.csv disagree in length".into()));
    }
    for (t, rec) in trials.iter_mut().zip(&tt) {
        t.wall_s = parse_f(&rec[2], "wall_s")?;
    }
    Ok(SweepResult { algorithm, param, rows, trials })
}
