//! The implicit-midpoint-type one-step scheme and its averaged-force variant.
//!
//! ```text
//! x_{n+1} = x_n + h v_{n+1/2}
//! v_{n+1} = v_n + h v_{n+1/2} × B(x_{n+1/2})/ε + h F̄
//! ```
//!
//! with `F̄ = F(x_{n+1/2})` for TSM1 and `F̄ = ∫₀¹ F(x_n + σ(x_{n+1} - x_n)) dσ`
//! for the averaged-force form. For fixed `x_{n+1/2}` the velocity relation is
//! the linear system `v + (h/2ε)B × v = v_n + (h/2)F̄`, solved exactly; the
//! outer fixed point iterates the midpoint position.

use super::ParticleState;
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::solver::{solve_cross_linear, solve_fixed_point, SolveReport, SolverSettings};
use crate::vec3::Vec3;

pub const DEFAULT_AVF_ORDER: usize = 5;

pub fn tsm1_step(
    s: &ParticleState,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
) -> Result<(ParticleState, SolveReport)> {
    midpoint_step(s, h, model, settings, |_x_n, x_mid| {
        model.check(x_mid)?;
        Ok(model.force(x_mid))
    })
}

/// TSM1 with the midpoint force replaced by its Gauss–Legendre average
/// along the segment `[x_n, x_{n+1}]` (`quad_order` nodes).
pub fn tsm1_avf_step(
    s: &ParticleState,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
    quad_order: usize,
) -> Result<(ParticleState, SolveReport)> {
    if quad_order < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be at least 2, got {quad_order}"
        )));
    }
    let rule = gauss_legendre(quad_order);
    midpoint_step(s, h, model, settings, |x_n, x_mid| {
        model.check(x_mid)?;
        let dx = (x_mid - x_n) * 2.0;
        let mut acc = Vec3::ZERO;
        for &(node, weight) in &rule {
            let y = x_n + dx * node;
            model.check(y)?;
            acc += model.force(y) * weight;
        }
        Ok(acc)
    })
}

fn midpoint_step<F>(
    s: &ParticleState,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
    force_term: F,
) -> Result<(ParticleState, SolveReport)>
where
    F: Fn(Vec3, Vec3) -> Result<Vec3>,
{
    model.check(s.x)?;
    let (x_n, v_n) = (s.x, s.v);
    let gyro = 0.5 * h / model.eps();
    let mut v_half = v_n;
    let (x_mid, report) = solve_fixed_point(
        |x_mid| {
            let f_bar = force_term(x_n, x_mid)?;
            v_half = solve_cross_linear(model.magnetic_field(x_mid) * gyro, v_n + f_bar * (0.5 * h));
            Ok(x_n + v_half * (0.5 * h))
        },
        x_n + v_n * (0.5 * h),
        settings,
    )?;
    let x_next = x_mid * 2.0 - x_n;
    model.check(x_next)?;
    Ok((ParticleState::new(s.t + h, x_next, v_half * 2.0 - v_n), report))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like estimate.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.push((0.5 * (1.0 - z), 0.5 * w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_builtin, BuiltinField, Potentials};
    use crate::vec3::Mat3;
    use std::sync::Arc;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn const_b(eps: f64) -> FieldModel {
        make_builtin(
            BuiltinField::ConstantB {
                b: Vec3::new(0.0, 0.0, 1.0),
            },
            eps,
        )
        .unwrap()
    }

    fn quadratic(b: Vec3) -> FieldModel {
        make_builtin(
            BuiltinField::QuadraticU {
                q: Mat3::IDENTITY,
                q_lin: Vec3::ZERO,
                b,
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn gyration_step_matches_hand_solution() {
        let s0 = ParticleState::new(0.0, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
        let (s1, _) = tsm1_step(&s0, 0.1, &const_b(1.0), &settings()).unwrap();
        let d = 1.0025;
        // x₁ = h·v_{1/2}, v_{1/2} = (1, -0.05, 0)/1.0025
        assert!((s1.x - Vec3::new(0.1 / d, -0.005 / d, 0.0)).max_abs() < 1e-15);
        assert!((s1.x - Vec3::new(0.09975062, -0.00498753, 0.0)).max_abs() < 5e-9);
        assert!((s1.v - Vec3::new(2.0 / d - 1.0, -0.1 / d, 0.0)).max_abs() < 1e-15);
        assert!((s1.v - Vec3::new(0.99501247, -0.09975062, 0.0)).max_abs() < 5e-9);
        assert!((s1.v.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s1.t, 0.1);
    }

    #[test]
    fn free_motion() {
        let m = make_builtin(BuiltinField::Free, 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.25, 2.0));
        let (s1, _) = tsm1_step(&s0, 0.1, &m, &settings()).unwrap();
        assert!((s1.x - (s0.x + s0.v * 0.1)).max_abs() < 1e-15);
        assert_eq!(s1.v, s0.v);
    }

    #[test]
    fn step_is_symmetric() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        for (x, v) in [
            (Vec3::new(0.0, 1.0, 0.1), Vec3::new(0.09, 0.05, 0.2)),
            (Vec3::new(0.7, -0.4, 1.0), Vec3::new(-0.3, 0.2, 0.1)),
        ] {
            let s0 = ParticleState::new(0.0, x, v);
            let (s1, _) = tsm1_step(&s0, 0.1, &m, &settings()).unwrap();
            let (back, _) = tsm1_step(&s1, -0.1, &m, &settings()).unwrap();
            assert!((back.x - s0.x).max_abs() <= 10.0 * 1e-13);
            assert!((back.v - s0.v).max_abs() <= 10.0 * 1e-13);
        }
    }

    #[test]
    fn quadratic_potential_energy_is_exact() {
        let m = quadratic(Vec3::new(0.0, 0.0, 1.0));
        let energy = |s: &ParticleState| 0.5 * s.v.norm_sq() + m.scalar_potential(s.x);
        let mut s = ParticleState::new(0.0, Vec3::new(0.3, 1.0, -0.2), Vec3::new(0.5, 0.1, 0.4));
        let e0 = energy(&s);
        for _ in 0..2000 {
            s = tsm1_step(&s, 0.1, &m, &settings()).unwrap().0;
        }
        assert!((energy(&s) - e0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 2..=8 {
            let rule = gauss_legendre(n);
            assert!((rule.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn avf_equals_tsm1_for_quadratic_potential() {
        let m = quadratic(Vec3::ZERO);
        let s0 = ParticleState::new(0.0, Vec3::new(0.3, 1.0, -0.2), Vec3::new(0.5, 0.1, 0.4));
        let (a, _) = tsm1_step(&s0, 0.1, &m, &settings()).unwrap();
        let (b, _) = tsm1_avf_step(&s0, 0.1, &m, &settings(), DEFAULT_AVF_ORDER).unwrap();
        assert!((a.x - b.x).max_abs() <= 1e-12);
        assert!((a.v - b.v).max_abs() <= 1e-12);
    }

    #[test]
    fn avf_equals_tsm1_without_potential() {
        let m = const_b(0.5);
        let s0 = ParticleState::new(0.0, Vec3::new(0.3, 1.0, -0.2), Vec3::new(0.5, 0.1, 0.4));
        let (a, _) = tsm1_step(&s0, 0.2, &m, &settings()).unwrap();
        for order in [2, 3, 5, 9] {
            let (b, _) = tsm1_avf_step(&s0, 0.2, &m, &settings(), order).unwrap();
            assert!((a.x - b.x).max_abs() <= 1e-12);
        }
        assert!(tsm1_avf_step(&s0, 0.2, &m, &settings(), 1).is_err());
    }

    #[derive(Debug)]
    struct Cubic;

    impl Potentials for Cubic {
        fn vector_potential(&self, _x: Vec3) -> Vec3 {
            Vec3::ZERO
        }
        fn magnetic_field(&self, _x: Vec3) -> Vec3 {
            Vec3::ZERO
        }
        fn scalar_potential(&self, x: Vec3) -> f64 {
            x.x().powi(3)
        }
        fn force(&self, x: Vec3) -> Vec3 {
            Vec3::new(-3.0 * x.x() * x.x(), 0.0, 0.0)
        }
    }

    #[test]
    fn avf_differs_from_tsm1_at_third_order_for_cubic_potential() {
        let m = FieldModel::custom(Arc::new(Cubic), 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 0.3, 0.0));
        let diff = |h: f64| {
            let (a, _) = tsm1_step(&s0, h, &m, &settings()).unwrap();
            let (b, _) = tsm1_avf_step(&s0, h, &m, &settings(), 5).unwrap();
            (a.v - b.v).norm()
        };
        // Leading term: F'' |Δx|²/24 · h with Δx ≈ h v₀: -6·h³/24 = -h³/4 in v₁.
        let d1 = diff(0.04);
        let d2 = diff(0.02);
        assert!((7.0..9.0).contains(&(d1 / d2)), "ratio {}", d1 / d2);
        assert!((d1 / (0.04f64.powi(3) / 4.0) - 1.0).abs() < 0.1, "{d1}");
    }
}
