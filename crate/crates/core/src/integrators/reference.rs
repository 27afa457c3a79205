use super::ParticleState;
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::vec3::Vec3;

/// One classical RK4 step of `ẋ = v`, `v̇ = v × B(x)/ε + F(x)`.
pub fn rk4_step(s: &ParticleState, h: f64, model: &FieldModel) -> Result<ParticleState> {
    let rhs = |x: Vec3, v: Vec3| -> Result<(Vec3, Vec3)> {
        model.check(x)?;
        Ok((v, model.acceleration(x, v)))
    };
    let (k1x, k1v) = rhs(s.x, s.v)?;
    let (k2x, k2v) = rhs(s.x + k1x * (0.5 * h), s.v + k1v * (0.5 * h))?;
    let (k3x, k3v) = rhs(s.x + k2x * (0.5 * h), s.v + k2v * (0.5 * h))?;
    let (k4x, k4v) = rhs(s.x + k3x * h, s.v + k3v * h)?;
    let x = s.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
    let v = s.v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    model.check(x)?;
    Ok(ParticleState::new(s.t + h, x, v))
}

/// Integrates from `s0.t` to `t_end` with RK4 using the largest uniform
/// step not exceeding `h_ref` that lands exactly on `t_end`.
pub fn reference_solve(s0: &ParticleState, h_ref: f64, t_end: f64, model: &FieldModel) -> Result<ParticleState> {
    if !(h_ref.is_finite() && h_ref > 0.0) {
        return Err(Error::InvalidParameter(format!("h_ref must be positive, got {h_ref}")));
    }
    let span = t_end - s0.t;
    if !(span.is_finite() && span >= 0.0) {
        return Err(Error::InvalidParameter(
            "t_end must not precede the initial time".into(),
        ));
    }
    let steps = (span / h_ref - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(*s0);
    }
    let h = span / steps as f64;
    let mut s = *s0;
    for n in 0..steps {
        s = rk4_step(&s, h, model).map_err(|e| e.at_step(n))?;
    }
    s.t = t_end;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_builtin, BuiltinField};

    fn gyration_exact(t: f64) -> (Vec3, Vec3) {
        // B = e₃, v₀ = e₁, x₀ = 0: clockwise circle of radius 1.
        (
            Vec3::new(t.sin(), t.cos() - 1.0, 0.0),
            Vec3::new(t.cos(), -t.sin(), 0.0),
        )
    }

    fn const_b() -> FieldModel {
        make_builtin(
            BuiltinField::ConstantB {
                b: Vec3::new(0.0, 0.0, 1.0),
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn free_flight_is_exact() {
        let m = make_builtin(BuiltinField::Free, 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, -1.0, 0.5), Vec3::new(0.25, 0.5, -2.0));
        let s = reference_solve(&s0, 0.01, 3.0, &m).unwrap();
        assert!((s.x - (s0.x + s0.v * 3.0)).max_abs() < 1e-13);
        assert_eq!(s.t, 3.0);
    }

    #[test]
    fn gyration_speed_is_conserved() {
        let s0 = ParticleState::new(0.0, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
        let s = reference_solve(&s0, 1e-3, 1.0, &const_b()).unwrap();
        assert!((s.v.norm() - 1.0).abs() < 1e-10);
        let (x, v) = gyration_exact(1.0);
        assert!((s.x - x).max_abs() < 1e-12 && (s.v - v).max_abs() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let s0 = ParticleState::new(0.0, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
        let err = |h: f64| {
            let s = reference_solve(&s0, h, 2.0, &const_b()).unwrap();
            (s.x - gyration_exact(2.0).0).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn singular_entry_is_reported() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, -1.0, 0.0));
        let err = reference_solve(&s0, 0.01, 1.0, &m).unwrap_err();
        assert!(matches!(err.root(), Error::Singular { .. }), "{err:?}");
    }
}
