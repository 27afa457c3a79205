//! Structure-preserving integrators for charged-particle dynamics
//!
//! ```text
//! ẍ = ẋ × B(x) / ε + F(x),   B = ∇ × A,   F = -∇U
//! ```
//!
//! Two-step symmetric methods (`tsm1`, `tsm1-avf`, `tsm2`), the Boris and
//! variational (`varm`) baselines, an RK4 reference, the conserved and
//! modified quantities, and an experiment harness.

pub mod cli;
pub mod error;
pub mod field;
pub mod harness;
pub mod integrators;
pub mod observables;
pub mod solver;
pub mod vec3;

pub use error::{Error, Result};
pub use field::{make_builtin, BuiltinField, FieldModel, Potentials};
pub use harness::{run_scenario, RunOutput, Scenario};
pub use integrators::{MethodId, ParticleState, TwoStepState};
pub use solver::{solve_cross_linear, SolverSettings};
pub use vec3::{Mat3, Vec3};
