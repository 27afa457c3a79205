//! Solvers for the implicit relations inside each step.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Threshold on `|z - map(z)|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-13,
            max_iter: 100,
            damping: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "solver tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("solver max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// A report for steps that need no iteration.
    pub fn direct() -> Self {
        SolveReport {
            iterations: 0,
            final_residual: 0.0,
            converged: true,
        }
    }
}

/// Damped fixed-point iteration `z ← (1-d)·z + d·map(z)`.
///
/// Stops as soon as `|z - map(z)| ≤ tol`, then takes one further damped
/// iteration from the accepted iterate and returns that. For a contraction
/// with rate `L` the returned point is within `L²·tol/(1-L)` of the fixed
/// point rather than `L·tol/(1-L)`. Two-step recursions carry any per-step
/// solver error along their neutral translation mode, so the extra
/// evaluation keeps long-run gaps between algebraically equivalent schemes
/// at rounding level.
///
/// The map may fail (e.g. when an iterate enters a singular set); such
/// errors are propagated unchanged.
pub fn solve_fixed_point<F>(mut map: F, guess: Vec3, settings: &SolverSettings) -> Result<(Vec3, SolveReport)>
where
    F: FnMut(Vec3) -> Result<Vec3>,
{
    let d = settings.damping;
    let relax = |z: Vec3, mz: Vec3| if d == 1.0 { mz } else { z * (1.0 - d) + mz * d };
    let mut z = guess;
    let mut residual = f64::INFINITY;
    for it in 1..=settings.max_iter {
        let mz = map(z)?;
        residual = (mz - z).norm();
        if residual <= settings.tol {
            let accepted = relax(z, mz);
            let polished = relax(accepted, map(accepted)?);
            return Ok((
                polished,
                SolveReport {
                    iterations: it,
                    final_residual: residual,
                    converged: true,
                },
            ));
        }
        if !residual.is_finite() {
            break;
        }
        z = relax(z, mz);
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iter,
        residual,
        last_iterate: z,
    })
}

/// Exact solution of `v + t × v = r`.
///
/// The matrix `I + [t]×` has determinant `1 + |t|²` and is never singular.
#[inline]
pub fn solve_cross_linear(t: Vec3, r: Vec3) -> Vec3 {
    (r - t.cross(r) + t * t.dot(r)) / (1.0 + t.norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_contraction() {
        let (z, rep) = solve_fixed_point(
            |z| Ok(z * 0.5 + Vec3::new(1.0, 1.0, 1.0)),
            Vec3::ZERO,
            &SolverSettings::default(),
        )
        .unwrap();
        assert!((z - Vec3::new(2.0, 2.0, 2.0)).max_abs() <= 1e-13);
        assert!(rep.converged && rep.final_residual <= 1e-13);
    }

    #[test]
    fn identity_map_converges_immediately() {
        let g = Vec3::new(0.3, -4.0, 7.5);
        let (z, rep) = solve_fixed_point(Ok, g, &SolverSettings::default()).unwrap();
        assert_eq!(z, g);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn divergent_map_reports_nonconvergence() {
        let err = solve_fixed_point(
            |z| Ok(z * 2.0 + Vec3::new(1.0, 0.0, 0.0)),
            Vec3::ZERO,
            &SolverSettings::default(),
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { residual, .. } => assert!(residual > 1.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn damping_rescues_an_oscillating_iteration() {
        // Contraction factor -1.5: undamped diverges, damping 0.4 gives 0.0.
        let map = |z: Vec3| Ok(z * -1.5 + Vec3::new(2.5, 0.0, 0.0));
        assert!(solve_fixed_point(map, Vec3::ZERO, &SolverSettings::default()).is_err());
        let settings = SolverSettings {
            damping: 0.4,
            ..Default::default()
        };
        let (z, _) = solve_fixed_point(map, Vec3::ZERO, &settings).unwrap();
        assert!((z - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-12);
    }

    #[test]
    fn residual_is_monotone_for_affine_contraction() {
        let mut residuals = Vec::new();
        let _ = solve_fixed_point(
            |z| {
                let out = z * 0.7 + Vec3::new(0.1, 0.2, 0.3);
                residuals.push((out - z).norm());
                Ok(out)
            },
            Vec3::new(10.0, -3.0, 2.0),
            &SolverSettings::default(),
        )
        .unwrap();
        assert!(residuals.len() > 10);
        assert!(residuals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn map_errors_propagate() {
        let err = solve_fixed_point(
            |z| Err(Error::Singular { position: z }),
            Vec3::ZERO,
            &SolverSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn settings_validation() {
        assert!(SolverSettings::default().validate().is_ok());
        assert!(SolverSettings {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverSettings {
            max_iter: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverSettings {
            damping: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverSettings {
            damping: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cross_linear_examples() {
        let r = Vec3::new(0.2, -1.0, 3.0);
        assert_eq!(solve_cross_linear(Vec3::ZERO, r), r);

        let v = solve_cross_linear(Vec3::new(0.0, 0.0, 0.05), Vec3::new(1.0, 0.0, 0.0));
        assert!((v - Vec3::new(1.0 / 1.0025, -0.05 / 1.0025, 0.0)).max_abs() < 1e-15);
        assert!((v - Vec3::new(0.99750623, -0.04987531, 0.0)).max_abs() < 5e-9);

        for tau in [0.0, 0.3, -7.0, 1e4] {
            let v = solve_cross_linear(Vec3::new(0.0, 0.0, tau), Vec3::new(0.0, 0.0, 1.0));
            assert!((v - Vec3::new(0.0, 0.0, 1.0)).max_abs() < 1e-15);
        }
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-10.0f64..10.0).prop_map(Vec3)
    }

    proptest! {
        #[test]
        fn cross_linear_round_trip(t in vec3(), r in vec3()) {
            let v = solve_cross_linear(t, r);
            let res = (v + t.cross(v) - r).norm();
            prop_assert!(res <= 1e-14 * (1.0 + r.norm()), "residual {}", res);
        }

        #[test]
        fn cross_linear_preserves_component_along_t(t in vec3(), r in vec3()) {
            let v = solve_cross_linear(t, r);
            let scale = 1.0 + t.norm() * r.norm();
            prop_assert!((v.dot(t) - r.dot(t)).abs() <= 1e-13 * scale);
        }
    }
}
