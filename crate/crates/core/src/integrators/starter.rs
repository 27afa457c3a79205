use std::fmt;
use std::str::FromStr;

use super::{reference_solve, tsm1_step, ParticleState, TwoStepState};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::solver::{SolveReport, SolverSettings};

/// How `x₁` is produced for a two-step recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarterStrategy {
    /// One step of the one-step midpoint scheme.
    Tsm1,
    /// RK4 over `[0, h]` with step `h/100`.
    Reference,
}

impl StarterStrategy {
    pub fn name(self) -> &'static str {
        match self {
            StarterStrategy::Tsm1 => "tsm1",
            StarterStrategy::Reference => "reference",
        }
    }
}

impl fmt::Display for StarterStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StarterStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsm1" => Ok(StarterStrategy::Tsm1),
            "reference" | "ref" | "rk4" => Ok(StarterStrategy::Reference),
            _ => Err(Error::InvalidScenario(format!("unknown starter '{s}'"))),
        }
    }
}

pub fn make_starter(
    s0: &ParticleState,
    h: f64,
    model: &FieldModel,
    strategy: StarterStrategy,
    settings: &SolverSettings,
) -> Result<(TwoStepState, SolveReport)> {
    let (s1, report) = match strategy {
        StarterStrategy::Tsm1 => tsm1_step(s0, h, model, settings)?,
        StarterStrategy::Reference => (
            reference_solve(s0, h.abs() / 100.0, s0.t + h, model)?,
            SolveReport::direct(),
        ),
    };
    Ok((
        TwoStepState {
            x_prev: s0.x,
            x_curr: s1.x,
            v_curr: s1.v,
            t_curr: s0.t + h,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_builtin, BuiltinField};
    use crate::vec3::Vec3;

    #[test]
    fn free_flight_starters_agree() {
        let m = make_builtin(BuiltinField::Free, 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, 0.5, -1.0));
        for strategy in [StarterStrategy::Tsm1, StarterStrategy::Reference] {
            let (ts, _) = make_starter(&s0, 0.1, &m, strategy, &SolverSettings::default()).unwrap();
            // the reference starter takes 100 substeps, so allow their rounding
            assert!((ts.x_curr - (s0.x + s0.v * 0.1)).max_abs() < 1e-14);
            assert_eq!(ts.x_prev, s0.x);
            assert_eq!(ts.t_curr, 0.1);
        }
    }

    #[test]
    fn starters_differ_at_third_order() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(0.0, 1.0, 0.1), Vec3::new(0.09, 0.05, 0.2));
        let gap = |h: f64| {
            let st = SolverSettings::default();
            let (a, _) = make_starter(&s0, h, &m, StarterStrategy::Tsm1, &st).unwrap();
            let (b, _) = make_starter(&s0, h, &m, StarterStrategy::Reference, &st).unwrap();
            (a.x_curr - b.x_curr).norm()
        };
        let ratio = gap(0.1) / gap(0.05);
        assert!((7.0..9.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn parse_names() {
        assert_eq!("tsm1".parse::<StarterStrategy>().unwrap(), StarterStrategy::Tsm1);
        assert_eq!(
            "reference".parse::<StarterStrategy>().unwrap(),
            StarterStrategy::Reference
        );
        assert!("euler".parse::<StarterStrategy>().is_err());
    }
}
