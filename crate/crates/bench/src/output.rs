//! CSV writers. Floats use Rust's shortest round-trip formatting.

use std::path::Path;

use aeicp::{TraceRecord, Variant};

use crate::{BenchResult, CellOutcome, Problem};

pub const TRACE_HEADER: [&str; 8] = [
    "k",
    "f",
    "E",
    "step_norm",
    "d_norm",
    "gamma_k",
    "accepted_extrapolation",
    "wallclock_s",
];

/// Shortest round-trip digits; exponent form for very small or large
/// magnitudes so a 1e-300 residual does not print 300 zeros.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn emit_trace(trace: &[TraceRecord], path: &Path) -> BenchResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            num(r.f),
            num(r.energy),
            num(r.step_norm),
            num(r.d_norm),
            num(r.gamma_k),
            u8::from(r.accepted_extrapolation).to_string(),
            num(r.wallclock),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of an aggregate table: (f, c, cpu seconds) per variant column.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub problem: String,
    pub cond_a: f64,
    pub cells: Vec<(f64, f64, f64)>,
}

/// Column-wise mean of the rows, labelled "avg". Cells that failed (NaN)
/// are left out of their column's mean.
pub fn average_row(rows: &[AggregateRow]) -> AggregateRow {
    let mean = |vals: Vec<f64>| {
        let ok: Vec<f64> = vals.into_iter().filter(|v| !v.is_nan()).collect();
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().sum::<f64>() / ok.len() as f64
        }
    };
    let width = rows.first().map_or(0, |r| r.cells.len());
    AggregateRow {
        problem: "avg".into(),
        cond_a: mean(rows.iter().map(|r| r.cond_a).collect()),
        cells: (0..width)
            .map(|j| {
                (
                    mean(rows.iter().map(|r| r.cells[j].0).collect()),
                    mean(rows.iter().map(|r| r.cells[j].1).collect()),
                    mean(rows.iter().map(|r| r.cells[j].2).collect()),
                )
            })
            .collect(),
    }
}

/// Header, one line per row, then the "avg" line.
pub fn emit_aggregate(variants: &[Variant], rows: &[AggregateRow], path: &Path) -> BenchResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["problem".to_string(), "cond_A".to_string()];
    for v in variants {
        for col in ["f", "c", "cpu"] {
            header.push(format!("{}_{col}", v.name()));
        }
    }
    w.write_record(&header)?;
    let avg = average_row(rows);
    for row in rows.iter().chain(std::iter::once(&avg)) {
        let mut rec = vec![row.problem.clone(), num(row.cond_a)];
        for &(f, c, cpu) in &row.cells {
            rec.extend([num(f), num(c), num(cpu)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub problem: String,
    pub formulation: String,
    pub variant: String,
    pub status: String,
    pub iterations: usize,
    pub f: f64,
    pub c: f64,
    pub lambda: f64,
    pub cpu_seconds: f64,
    pub monitor_violations: usize,
}

impl ReportLine {
    pub fn from_cell(p: &Problem, c: &CellOutcome) -> Self {
        let base = Self {
            problem: p.label.clone(),
            formulation: c.formulation.to_string(),
            variant: c.variant.to_string(),
            status: String::new(),
            iterations: 0,
            f: f64::NAN,
            c: f64::NAN,
            lambda: f64::NAN,
            cpu_seconds: c.cpu_seconds,
            monitor_violations: 0,
        };
        match &c.run {
            Ok(r) => Self {
                status: r.status.to_string(),
                iterations: r.trace.last().map_or(0, |t| t.k),
                f: r.final_f(),
                c: r.report.c,
                lambda: r.report.lambda,
                monitor_violations: r.violations.len(),
                ..base
            },
            Err(e) => Self {
                status: format!("error: {e}"),
                ..base
            },
        }
    }
}

pub const REPORT_HEADER: [&str; 10] = [
    "problem",
    "formulation",
    "variant",
    "status",
    "iterations",
    "f",
    "c",
    "lambda",
    "cpu_s",
    "monitor_violations",
];

pub fn emit_report(lines: &[ReportLine], path: &Path) -> BenchResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for l in lines {
        w.write_record([
            l.problem.clone(),
            l.formulation.clone(),
            l.variant.clone(),
            l.status.clone(),
            l.iterations.to_string(),
            num(l.f),
            num(l.c),
            num(l.lambda),
            num(l.cpu_seconds),
            l.monitor_violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
