//! Stepping maps for `ẍ = ẋ × B(x)/ε + F(x)`.
//!
//! One-step schemes act on [`ParticleState`]; two-step recursions act on
//! [`TwoStepState`] and need a starter to supply `x₁`.

mod boris;
mod reference;
mod starter;
mod tsm1;
mod tsm2;
mod varm;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::vec3::Vec3;

pub use boris::boris_step;
pub use reference::{reference_solve, rk4_step};
pub use starter::{make_starter, StarterStrategy};
pub use tsm1::{gauss_legendre, tsm1_avf_step, tsm1_step, DEFAULT_AVF_ORDER};
pub use tsm2::{tsm2_momentum_map, tsm2_step};
pub use varm::varm_step;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

impl ParticleState {
    pub fn new(t: f64, x: Vec3, v: Vec3) -> Self {
        ParticleState { t, x, v }
    }
}

/// State of a two-step recursion after `n` steps: `x_{n-1}`, `x_n`, `v_n`, `t_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoStepState {
    pub x_prev: Vec3,
    pub x_curr: Vec3,
    pub v_curr: Vec3,
    pub t_curr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Tsm1,
    Tsm1Avf,
    Tsm2,
    Boris,
    Varm,
    Rk4Ref,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Tsm1,
        MethodId::Tsm1Avf,
        MethodId::Tsm2,
        MethodId::Boris,
        MethodId::Varm,
        MethodId::Rk4Ref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Tsm1 => "tsm1",
            MethodId::Tsm1Avf => "tsm1-avf",
            MethodId::Tsm2 => "tsm2",
            MethodId::Boris => "boris",
            MethodId::Varm => "varm",
            MethodId::Rk4Ref => "rk4ref",
        }
    }

    pub fn is_two_step(self) -> bool {
        matches!(self, MethodId::Tsm2 | MethodId::Boris | MethodId::Varm)
    }

    /// Starter used when a scenario does not name one.
    pub fn default_starter(self) -> StarterStrategy {
        match self {
            MethodId::Boris | MethodId::Varm => StarterStrategy::Reference,
            _ => StarterStrategy::Tsm1,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = MethodId::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidScenario(format!("unknown method '{s}' (expected one of {})", names.join(", ")))
            })
    }
}
