//! CSV series files.
//!
//! Header `t,x1,x2,x3,v1,v2,v3,E,M,I,xi,Hh,Ih`, preceded by `#` metadata
//! lines. Numbers use the shortest representation that parses back to the
//! same `f64`; undefined quantities are empty cells.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{ConvergenceTable, RunOutput};
use crate::observables::ObservableSample;
use crate::vec3::Vec3;

pub const SERIES_HEADER: &str = "t,x1,x2,x3,v1,v2,v3,E,M,I,xi,Hh,Ih";
pub const DRIFT_HEADER: &str = "method,quantity,reference,max_abs_dev,final_dev,first_window_max,last_window_max";

fn num(out: &mut String, x: f64) {
    let _ = write!(out, "{x:?}");
}

fn opt(out: &mut String, x: Option<f64>) {
    if let Some(x) = x {
        num(out, x);
    }
}

pub fn series_to_string(run: &RunOutput) -> String {
    let mut out = String::with_capacity(160 * (run.samples.len() + 24));
    let _ = writeln!(out, "# cpdyn {}", env!("CARGO_PKG_VERSION"));
    for line in run.scenario.to_kv_string().lines() {
        let _ = writeln!(out, "# scenario: {line}");
    }
    let st = &run.solver_stats;
    let _ = writeln!(out, "# steps = {}, sample_every = {}", run.steps, run.sample_every);
    let _ = writeln!(
        out,
        "# solver: solves = {}, mean_iterations = {:.3}, max_iterations = {}, max_residual = {:e}",
        st.solves,
        st.mean_iterations(),
        st.max_iterations,
        st.max_residual
    );
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for s in &run.samples {
        write_row(&mut out, s);
    }
    out
}

fn write_row(out: &mut String, s: &ObservableSample) {
    let fields = [s.t, s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2], s.energy];
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, *f);
    }
    for f in [s.momentum, s.moment, s.xi, s.modified_energy, s.modified_moment] {
        out.push(',');
        opt(out, f);
    }
    out.push('\n');
}

pub fn emit_csv(run: &RunOutput, path: &Path) -> Result<()> {
    fs::write(path, series_to_string(run)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parses a series file written by [`emit_csv`].
pub fn parse_series(text: &str) -> Result<Vec<ObservableSample>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == SERIES_HEADER => {}
        other => {
            return Err(Error::Io(format!(
                "unexpected series header: {}",
                other.unwrap_or("<missing>")
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| parse_row(line).ok_or_else(|| Error::Io(format!("bad series row {}: {line}", i + 1))))
        .collect()
}

fn parse_row(line: &str) -> Option<ObservableSample> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != 13 {
        return None;
    }
    let req = |i: usize| cells[i].trim().parse::<f64>().ok();
    let opt = |i: usize| -> Option<Option<f64>> {
        let c = cells[i].trim();
        if c.is_empty() {
            Some(None)
        } else {
            c.parse().ok().map(Some)
        }
    };
    Some(ObservableSample {
        t: req(0)?,
        x: Vec3::new(req(1)?, req(2)?, req(3)?),
        v: Vec3::new(req(4)?, req(5)?, req(6)?),
        energy: req(7)?,
        momentum: opt(8)?,
        moment: opt(9)?,
        xi: opt(10)?,
        modified_energy: opt(11)?,
        modified_moment: opt(12)?,
    })
}

pub fn read_series(path: &Path) -> Result<Vec<ObservableSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_series(&text)
}

/// One row per (run, quantity).
pub fn drift_to_string(runs: &[&RunOutput]) -> String {
    let mut out = String::new();
    out.push_str(DRIFT_HEADER);
    out.push('\n');
    for run in runs {
        for (name, d) in run.drift.entries() {
            let _ = writeln!(
                out,
                "{},{name},{:?},{:?},{:?},{:?},{:?}",
                run.scenario.method, d.reference, d.max_abs_dev, d.final_dev, d.first_window_max, d.last_window_max
            );
        }
    }
    out
}

pub fn convergence_to_string(tables: &[ConvergenceTable]) -> String {
    let mut out = String::from("method,h,global_error\n");
    for t in tables {
        for r in &t.rows {
            let _ = writeln!(out, "{},{:?},{:?}", t.method, r.h, r.global_error);
        }
    }
    out.push_str("# slopes:");
    for t in tables {
        let _ = write!(out, " {}={:.4}", t.method, t.slope);
    }
    out.push('\n');
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
