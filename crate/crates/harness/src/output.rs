//! Trace and summary files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use bomi::strategies::Trace;
use bomi::PartialPoint;

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn push_point(line: &mut String, p: &PartialPoint) {
    for v in p.iter() {
        match v {
            Some(v) => write!(line, ",{v}").unwrap(),
            None => line.push_str(",?"),
        }
    }
    for v in p.iter() {
        line.push_str(if v.is_some() { ",1" } else { ",0" });
    }
}

/// CSV with header `strategy,seed,iter,event,y,best_y,x_0..,mask_0..`.
/// Initial rows have `iter = 0`. Masked coordinates, and `y` of rows the
/// strategy does not keep, are written as `?`.
pub fn trace_csv(trace: &Trace, seed: u64) -> String {
    let d = trace.initial.dims();
    let mut out = String::from("strategy,seed,iter,event,y,best_y");
    for j in 0..d {
        write!(out, ",x_{j}").unwrap();
    }
    for j in 0..d {
        write!(out, ",mask_{j}").unwrap();
    }
    out.push('\n');
    let name = trace.strategy.to_string();
    for row in trace.initial.rows() {
        let mut line = format!("{name},{seed},0,0,{},{}", row.y, trace.initial_best);
        push_point(&mut line, &row.point);
        out.push_str(&line);
        out.push('\n');
    }
    for r in &trace.records {
        let y = if r.retained { r.y.to_string() } else { "?".to_string() };
        let mut line = format!("{name},{seed},{},{},{y},{}", r.iter, u8::from(r.event), r.best_y);
        push_point(&mut line, &r.stored);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub iter: usize,
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

/// Mean and standard error (sample std over `sqrt(n)`, zero for `n = 1`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row per iteration `0..=T` from the best-so-far curves of `traces`,
/// all produced by `strategy`.
pub fn summarize(strategy: &str, traces: &[&Trace]) -> Vec<SummaryRow> {
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| t.best_curve()).collect();
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = curves.iter().map(|c| c[i]).collect();
            let (mean, std_err) = mean_se(&vals);
            SummaryRow {
                strategy: strategy.to_string(),
                iter: i,
                mean,
                std_err,
                n: vals.len(),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "strategy,iter,mean_best,std_err,n";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.strategy, r.iter, r.mean, r.std_err, r.n).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SUMMARY_HEADER => {}
        Some((_, h)) => {
            return Err(ParseError {
                line: 1,
                message: format!("expected header {SUMMARY_HEADER:?}, found {h:?}"),
            })
        }
        None => {
            return Err(ParseError {
                line: 1,
                message: "empty summary".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ParseError { line: line_no, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |k: usize| fields[k].trim().parse::<f64>().map_err(|_| err(format!("bad number {:?}", fields[k])));
        let int = |k: usize| fields[k].trim().parse::<usize>().map_err(|_| err(format!("bad integer {:?}", fields[k])));
        rows.push(SummaryRow {
            strategy: fields[0].trim().to_string(),
            iter: int(1)?,
            mean: num(2)?,
            std_err: num(3)?,
            n: int(4)?,
        });
    }
    if rows.is_empty() {
        return Err(ParseError {
            line: 2,
            message: "summary has no rows".into(),
        });
    }
    Ok(rows)
}
