use std::thread;

use super::{final_state, run_scenario, RunOutput, Scenario};
use crate::error::{Error, Result};
use crate::integrators::{reference_solve, MethodId, ParticleState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub global_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub method: MethodId,
    pub t_short: f64,
    pub h_ref: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub slope: f64,
}

/// Global position error at `t_short` against an RK4 reference with step
/// `min(h_list)/20`, for each stepsize in `h_list`.
pub fn convergence_study(sc: &Scenario, h_list: &[f64], t_short: f64) -> Result<ConvergenceTable> {
    if h_list.len() < 2 {
        return Err(Error::InvalidScenario(
            "convergence study needs at least two stepsizes".into(),
        ));
    }
    if !(t_short.is_finite() && t_short > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "t_short must be positive, got {t_short}"
        )));
    }
    let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let h_ref = h_min / 20.0;
    let base = sc.clone().with_t_end(t_short);
    base.validate()?;
    let model = base.model()?;
    let s0 = ParticleState::new(0.0, sc.x0, sc.v0);

    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let run = base.clone().with_h(h);
        let end = final_state(&run, &model)?;
        let exact = reference_solve(&s0, h_ref, end.t, &model)?;
        rows.push(ConvergenceRow {
            h,
            global_error: (end.x - exact.x).norm(),
        });
    }
    let slope = fit_slope(&rows);
    Ok(ConvergenceTable {
        method: sc.method,
        t_short,
        h_ref,
        rows,
        slope,
    })
}

/// Least-squares slope of `log(error)` vs `log(h)`.
pub fn fit_slope(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.global_error > 0.0)
        .map(|r| (r.h.ln(), r.global_error.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs of several methods on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunOutput>,
}

impl Comparison {
    pub fn methods(&self) -> Vec<MethodId> {
        self.runs.iter().map(|r| r.scenario.method).collect()
    }
}

/// Runs scenarios that differ only in method, concurrently.
pub fn compare_methods(scenarios: &[Scenario]) -> Result<Comparison> {
    let first = scenarios
        .first()
        .ok_or_else(|| Error::InvalidScenario("no scenarios to compare".into()))?;
    for sc in &scenarios[1..] {
        let same = sc.field == first.field
            && sc.eps == first.eps
            && sc.h == first.h
            && sc.t_end == first.t_end
            && sc.x0 == first.x0
            && sc.v0 == first.v0;
        if !same {
            return Err(Error::InvalidScenario(format!(
                "scenario for {} differs from {} in more than the method",
                sc.method, first.method
            )));
        }
    }
    let results: Vec<Result<RunOutput>> = thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|sc| s.spawn(move || run_scenario(sc))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    Ok(Comparison {
        runs: results.into_iter().collect::<Result<_>>()?,
    })
}
