//! End-to-end experiment runs: trajectories, observable series and drift
//! metrics.

mod scenario;
mod study;

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::field::FieldModel;
use crate::integrators::{
    boris_step, make_starter, rk4_step, tsm1_avf_step, tsm1_step, tsm2_step, varm_step, MethodId, ParticleState,
    StarterStrategy, TwoStepState,
};
use crate::observables::{compute_sample, midpoint_state, sample_at, ObservableSample};
use crate::solver::{SolveReport, SolverSettings};

pub use scenario::{parse_vec3, SamplePoint, Scenario, MAX_DEFAULT_SAMPLES};
pub use study::{compare_methods, convergence_study, fit_slope, Comparison, ConvergenceRow, ConvergenceTable};

/// Fraction of the run used for the start/end window drift comparison.
pub const WINDOW_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

impl SolverStats {
    fn record(&mut self, rep: &SolveReport) {
        self.solves += 1;
        self.total_iterations += rep.iterations;
        self.max_iterations = self.max_iterations.max(rep.iterations);
        self.max_residual = self.max_residual.max(rep.final_residual);
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.solves as f64
        }
    }
}

/// Sequential generator of grid states `(t_n, x_n, v_n)`, `n = 0, 1, ...`,
/// for any method. Time is reconstructed as `n·h`.
///
/// For Boris and VARM the velocity `v_n` is the central difference
/// `(x_{n+1} - x_{n-1})/(2h)`, so the recursion runs one step ahead of the
/// yielded state; `v_0` is the initial velocity.
pub struct Trajectory<'a> {
    model: &'a FieldModel,
    method: MethodId,
    h: f64,
    settings: SolverSettings,
    avf_order: usize,
    next_index: usize,
    one_step: ParticleState,
    two_step: TwoStepState,
    stats: SolverStats,
}

impl<'a> Trajectory<'a> {
    pub fn new(
        model: &'a FieldModel,
        method: MethodId,
        h: f64,
        s0: ParticleState,
        starter: StarterStrategy,
        settings: SolverSettings,
        avf_order: usize,
    ) -> Result<Self> {
        model.check(s0.x).map_err(|e| e.at_step(0))?;
        let mut stats = SolverStats::default();
        let two_step = if method.is_two_step() {
            let (ts, rep) = make_starter(&s0, h, model, starter, &settings).map_err(|e| e.at_step(0))?;
            stats.record(&rep);
            ts
        } else {
            TwoStepState::default()
        };
        Ok(Trajectory {
            model,
            method,
            h,
            settings,
            avf_order,
            next_index: 0,
            one_step: ParticleState::new(0.0, s0.x, s0.v),
            two_step,
            stats,
        })
    }

    pub fn from_scenario(model: &'a FieldModel, sc: &Scenario) -> Result<Self> {
        Trajectory::new(
            model,
            sc.method,
            sc.h,
            ParticleState::new(0.0, sc.x0, sc.v0),
            sc.starter(),
            sc.solver,
            sc.avf_order,
        )
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Yields the next grid state.
    pub fn next_state(&mut self) -> Result<ParticleState> {
        let n = self.next_index;
        let t = n as f64 * self.h;
        let out = if n == 0 {
            self.one_step
        } else {
            self.advance(n).map_err(|e| e.at_step(n))?
        };
        self.next_index += 1;
        Ok(ParticleState::new(t, out.x, out.v))
    }

    fn advance(&mut self, n: usize) -> Result<ParticleState> {
        let (model, h, st) = (self.model, self.h, &self.settings);
        Ok(match self.method {
            MethodId::Tsm1 | MethodId::Tsm1Avf | MethodId::Rk4Ref => {
                let next = match self.method {
                    MethodId::Tsm1 => {
                        let (s, rep) = tsm1_step(&self.one_step, h, model, st)?;
                        self.stats.record(&rep);
                        s
                    }
                    MethodId::Tsm1Avf => {
                        let (s, rep) = tsm1_avf_step(&self.one_step, h, model, st, self.avf_order)?;
                        self.stats.record(&rep);
                        s
                    }
                    _ => rk4_step(&self.one_step, h, model)?,
                };
                self.one_step = next;
                next
            }
            MethodId::Tsm2 => {
                if n >= 2 {
                    let (ts, rep) = tsm2_step(&self.two_step, h, model, st)?;
                    self.stats.record(&rep);
                    self.two_step = ts;
                }
                ParticleState::new(0.0, self.two_step.x_curr, self.two_step.v_curr)
            }
            MethodId::Boris | MethodId::Varm => {
                let (ts, v_n) = if self.method == MethodId::Boris {
                    boris_step(&self.two_step, h, model)?
                } else {
                    let (ts, v, rep) = varm_step(&self.two_step, h, model, st)?;
                    self.stats.record(&rep);
                    (ts, v)
                };
                let x_n = self.two_step.x_curr;
                self.two_step = ts;
                ParticleState::new(0.0, x_n, v_n)
            }
        })
    }
}

/// Drift of one observable relative to its first sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    pub reference: f64,
    /// `max_n |Q_n - Q_0|` over the full (undecimated) stream.
    pub max_abs_dev: f64,
    /// `Q_last - Q_0`.
    pub final_dev: f64,
    /// `max |Q_n - Q_0|` over the first [`WINDOW_FRACTION`] of samples.
    pub first_window_max: f64,
    /// `max |Q_n - Q_0|` over the last [`WINDOW_FRACTION`] of samples.
    pub last_window_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftMetrics {
    pub energy: Drift,
    pub momentum: Option<Drift>,
    pub moment: Option<Drift>,
    pub modified_energy: Option<Drift>,
    pub modified_moment: Option<Drift>,
}

impl DriftMetrics {
    /// `(name, drift)` pairs for the defined quantities, in CSV order.
    pub fn entries(&self) -> Vec<(&'static str, Drift)> {
        let mut v = vec![("E", self.energy)];
        for (name, d) in [
            ("M", self.momentum),
            ("I", self.moment),
            ("Hh", self.modified_energy),
            ("Ih", self.modified_moment),
        ] {
            if let Some(d) = d {
                v.push((name, d));
            }
        }
        v
    }
}

struct DriftTracker {
    total: usize,
    window: usize,
    seen: usize,
    slot: Option<Drift>,
}

impl DriftTracker {
    fn new(total: usize) -> Self {
        let window = ((total as f64 * WINDOW_FRACTION).ceil() as usize).clamp(1, total.max(1));
        DriftTracker {
            total,
            window,
            seen: 0,
            slot: None,
        }
    }

    fn push(&mut self, q: Option<f64>) {
        let idx = self.seen;
        self.seen += 1;
        let Some(q) = q else {
            return;
        };
        let d = self.slot.get_or_insert(Drift {
            reference: q,
            ..Default::default()
        });
        let dev = q - d.reference;
        d.max_abs_dev = d.max_abs_dev.max(dev.abs());
        d.final_dev = dev;
        if idx < self.window {
            d.first_window_max = d.first_window_max.max(dev.abs());
        }
        if idx + self.window >= self.total {
            d.last_window_max = d.last_window_max.max(dev.abs());
        }
    }
}

struct DriftSet {
    e: DriftTracker,
    m: DriftTracker,
    i: DriftTracker,
    hh: DriftTracker,
    ih: DriftTracker,
}

impl DriftSet {
    fn new(total: usize) -> Self {
        DriftSet {
            e: DriftTracker::new(total),
            m: DriftTracker::new(total),
            i: DriftTracker::new(total),
            hh: DriftTracker::new(total),
            ih: DriftTracker::new(total),
        }
    }

    fn push(&mut self, s: &ObservableSample) {
        self.e.push(Some(s.energy));
        self.m.push(s.momentum);
        self.i.push(s.moment);
        self.hh.push(s.modified_energy);
        self.ih.push(s.modified_moment);
    }

    fn finish(self) -> DriftMetrics {
        DriftMetrics {
            energy: self.e.slot.unwrap_or_default(),
            momentum: self.m.slot,
            moment: self.i.slot,
            modified_energy: self.hh.slot,
            modified_moment: self.ih.slot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub steps: usize,
    pub sample_every: usize,
    /// Decimated series, sorted by time.
    pub samples: Vec<ObservableSample>,
    pub drift: DriftMetrics,
    pub solver_stats: SolverStats,
    pub final_state: ParticleState,
    pub wall_time: Duration,
}

/// Integrates the scenario and collects observables.
///
/// Midpoint mode produces one observable per step (`n + ½`, `n = 0..N-1`);
/// endpoint mode one per grid state (`n = 0..N`). Drift is measured on
/// every one of them against the first; only every `sample_every`-th is
/// stored.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    sc.validate()?;
    let model = sc.model()?;
    run_with_model(sc, &model)
}

/// As [`run_scenario`] but with a caller-supplied model (e.g. a custom field).
pub fn run_with_model(sc: &Scenario, model: &FieldModel) -> Result<RunOutput> {
    sc.validate()?;
    let started = Instant::now();
    let steps = sc.step_count();
    let stride = sc.sample_stride();
    let h = sc.h;
    let total_samples = match sc.sample_point {
        SamplePoint::Midpoint => steps,
        SamplePoint::Endpoint => steps + 1,
    };
    let mut drift = DriftSet::new(total_samples);
    let mut samples = Vec::with_capacity(total_samples.div_ceil(stride));
    let mut keep = |k: usize, s: ObservableSample, drift: &mut DriftSet| {
        drift.push(&s);
        if k.is_multiple_of(stride) {
            samples.push(s);
        }
    };

    let mut traj = Trajectory::from_scenario(model, sc)?;
    let mut prev = traj.next_state()?;
    if sc.sample_point == SamplePoint::Endpoint {
        keep(0, sample_at(prev.t, prev.x, prev.v, model, h), &mut drift);
    }
    for n in 0..steps {
        let next = traj.next_state()?;
        match sc.sample_point {
            SamplePoint::Midpoint => {
                let mut ms = midpoint_state(&prev, &next);
                ms.t_mid = (n as f64 + 0.5) * h;
                keep(n, compute_sample(&ms, model, h), &mut drift);
            }
            SamplePoint::Endpoint => keep(n + 1, sample_at(next.t, next.x, next.v, model, h), &mut drift),
        }
        prev = next;
    }
    Ok(RunOutput {
        scenario: sc.clone(),
        steps,
        sample_every: stride,
        samples,
        drift: drift.finish(),
        solver_stats: traj.stats(),
        final_state: prev,
        wall_time: started.elapsed(),
    })
}

/// Integrates to `t_end` and returns only the final grid state.
pub fn final_state(sc: &Scenario, model: &FieldModel) -> Result<ParticleState> {
    sc.validate()?;
    let mut traj = Trajectory::from_scenario(model, sc)?;
    let mut s = traj.next_state()?;
    for _ in 0..sc.step_count() {
        s = traj.next_state()?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::field::BuiltinField;
    use crate::vec3::Vec3;

    #[test]
    fn shared_types_are_thread_safe() {
        fn check<T: Send + Sync>() {}
        check::<FieldModel>();
        check::<Scenario>();
        check::<RunOutput>();
    }

    fn short(method: MethodId) -> Scenario {
        Scenario::default().with_method(method).with_t_end(5.0)
    }

    #[test]
    fn single_step_run_has_one_sample_and_zero_drift() {
        for m in MethodId::ALL {
            let out = run_scenario(&short(m).with_t_end(0.1)).unwrap();
            assert_eq!(out.samples.len(), 1, "{m}");
            assert_eq!(out.steps, 1);
            assert_eq!(out.drift.energy.max_abs_dev, 0.0);
            assert_eq!(out.drift.momentum.unwrap().max_abs_dev, 0.0);
            assert!((out.samples[0].t - 0.05).abs() < 1e-16);
        }
    }

    #[test]
    fn free_field_conserves_kinetic_energy() {
        for m in MethodId::ALL {
            let sc = short(m).with_field(BuiltinField::Free).with_t_end(1000.0);
            let out = run_scenario(&sc).unwrap();
            assert_eq!(out.steps, 10_000);
            assert!(out.drift.energy.max_abs_dev <= 1e-12, "{m}: {:?}", out.drift.energy);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        for m in [MethodId::Tsm2, MethodId::Varm] {
            let a = run_scenario(&short(m)).unwrap();
            let b = run_scenario(&short(m)).unwrap();
            assert_eq!(a.samples, b.samples);
            assert_eq!(a.drift, b.drift);
        }
    }

    #[test]
    fn time_bookkeeping_and_decimation() {
        let mut sc = short(MethodId::Tsm1).with_t_end(10.0);
        sc.sample_every = Some(7);
        let out = run_scenario(&sc).unwrap();
        assert_eq!(out.steps, 100);
        assert_eq!(out.samples.len(), 15);
        for (k, s) in out.samples.iter().enumerate() {
            assert_eq!(s.t, (k as f64 * 7.0 + 0.5) * 0.1);
        }
    }

    #[test]
    fn drift_uses_the_full_stream() {
        let mut sparse = short(MethodId::Tsm2).with_t_end(50.0);
        sparse.sample_every = Some(97);
        let dense = Scenario {
            sample_every: Some(1),
            ..sparse.clone()
        };
        let a = run_scenario(&sparse).unwrap();
        let b = run_scenario(&dense).unwrap();
        assert_eq!(a.drift, b.drift);
        let stored_max = a
            .samples
            .iter()
            .map(|s| (s.energy - a.drift.energy.reference).abs())
            .fold(0.0, f64::max);
        assert!(stored_max <= a.drift.energy.max_abs_dev);
    }

    #[test]
    fn drift_invariants() {
        let out = run_scenario(&short(MethodId::Boris).with_t_end(100.0)).unwrap();
        for (_, d) in out.drift.entries() {
            assert!(d.max_abs_dev >= d.final_dev.abs());
            assert!(d.max_abs_dev >= d.first_window_max && d.max_abs_dev >= d.last_window_max);
        }
        assert_eq!(out.drift.energy.reference, out.samples[0].energy);
    }

    #[test]
    fn tsm2_midpoint_velocity_is_the_chord() {
        let out = run_scenario(&short(MethodId::Tsm2).with_t_end(2.0)).unwrap();
        let model = out.scenario.model().unwrap();
        let mut traj = Trajectory::from_scenario(&model, &out.scenario).unwrap();
        let mut prev = traj.next_state().unwrap();
        for s in &out.samples {
            let next = traj.next_state().unwrap();
            let chord = (next.x - prev.x) / 0.1;
            assert!((s.v - chord).max_abs() < 1e-14);
            prev = next;
        }
    }

    #[test]
    fn endpoint_mode_samples_grid_states() {
        let mut sc = short(MethodId::Tsm1).with_t_end(1.0);
        sc.sample_point = SamplePoint::Endpoint;
        let out = run_scenario(&sc).unwrap();
        assert_eq!(out.samples.len(), 11);
        assert_eq!(out.samples[0].x, sc.x0);
        assert_eq!(out.samples[10].t, 1.0);
    }

    #[test]
    fn singular_entry_is_reported_with_step() {
        let sc = Scenario {
            x0: Vec3::new(0.0, 0.05, 0.0),
            v0: Vec3::new(0.0, -1.0, 0.0),
            ..short(MethodId::Tsm1)
        };
        let err = run_scenario(&sc).unwrap_err();
        assert!(matches!(err, Error::AtStep { .. }), "{err:?}");
        assert!(matches!(err.root(), Error::Singular { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn nonconvergence_is_reported_with_step() {
        // The implicit starter fails during setup (step 0); with an explicit
        // starter the first failing solve is the one producing x_2.
        for (starter, expected) in [(StarterStrategy::Tsm1, 0), (StarterStrategy::Reference, 2)] {
            let mut sc = short(MethodId::Tsm2);
            sc.solver.max_iter = 2;
            sc.starter = Some(starter);
            let err = run_scenario(&sc).unwrap_err();
            assert!(matches!(err.root(), Error::NonConvergence { .. }), "{err:?}");
            match err {
                Error::AtStep { step, .. } => assert_eq!(step, expected),
                e => panic!("{e:?}"),
            }
        }
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        assert!(matches!(
            run_scenario(&short(MethodId::Tsm1).with_h(-0.1)),
            Err(Error::InvalidScenario(_))
        ));
        assert!(matches!(
            run_scenario(&short(MethodId::Tsm1).with_eps(0.0)),
            Err(Error::InvalidScenario(_))
        ));
    }
}
