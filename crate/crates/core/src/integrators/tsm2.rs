//! Variational two-step scheme from the midpoint discretisation of the
//! Lagrangian `L(x, v) = ½|v|² + A(x)·v/ε - U(x)`:
//!
//! ```text
//! x_{n+1} - 2x_n + x_{n-1} = (h/2ε) A'ᵀ(x_{n+1/2})(x_{n+1} - x_n)
//!                          + (h/2ε) A'ᵀ(x_{n-1/2})(x_n - x_{n-1})
//!                          - (h/ε)(A(x_{n+1/2}) - A(x_{n-1/2}))
//!                          + (h²/2)(F(x_{n+1/2}) + F(x_{n-1/2}))
//! v_{n+1} = 2(x_{n+1} - x_n)/h - v_n
//! ```

use super::TwoStepState;
use crate::error::Result;
use crate::field::FieldModel;
use crate::solver::{solve_fixed_point, SolveReport, SolverSettings};
use crate::vec3::Vec3;

pub fn tsm2_step(
    ts: &TwoStepState,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
) -> Result<(TwoStepState, SolveReport)> {
    let inv_eps = 1.0 / model.eps();
    let (x_prev, x_n) = (ts.x_prev, ts.x_curr);
    model.check(x_n)?;
    let m_prev = x_prev.midpoint(x_n);
    model.check(m_prev)?;

    let back = x_n - x_prev;
    let known = x_n * 2.0 - x_prev
        + model.vector_potential_jacobian(m_prev).tr_mul_vec(back) * (0.5 * h * inv_eps)
        + model.vector_potential(m_prev) * (h * inv_eps)
        + model.force(m_prev) * (0.5 * h * h);

    let (x_next, report) = solve_fixed_point(
        |y| {
            let m = x_n.midpoint(y);
            model.check(m)?;
            Ok(
                known + model.vector_potential_jacobian(m).tr_mul_vec(y - x_n) * (0.5 * h * inv_eps)
                    - model.vector_potential(m) * (h * inv_eps)
                    + model.force(m) * (0.5 * h * h),
            )
        },
        x_n * 2.0 - x_prev,
        settings,
    )?;
    model.check(x_next)?;
    let v_next = (x_next - x_n) * (2.0 / h) - ts.v_curr;
    Ok((
        TwoStepState {
            x_prev: x_n,
            x_curr: x_next,
            v_curr: v_next,
            t_curr: ts.t_curr + h,
        },
        report,
    ))
}

/// One step of the scheme written as a map on `(x_n, p_n)` through the
/// discrete Legendre transforms of `L_h(x_n, x_{n+1}) = h·L(x_{n+1/2}, (x_{n+1} - x_n)/h)`:
///
/// ```text
/// p_n     = w + A(m)/ε - (h/2)(A'ᵀ(m) w/ε + F(m))
/// p_{n+1} = w + A(m)/ε + (h/2)(A'ᵀ(m) w/ε + F(m))
/// ```
///
/// with `m = x_{n+1/2}` and `w = (x_{n+1} - x_n)/h`. Chaining these maps
/// reproduces [`tsm2_step`]'s position recursion; `p` agrees with
/// `v + A(x)/ε` to leading order. The map is canonically symplectic.
pub fn tsm2_momentum_map(
    x: Vec3,
    p: Vec3,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
) -> Result<(Vec3, Vec3, SolveReport)> {
    let inv_eps = 1.0 / model.eps();
    model.check(x)?;
    let (w, report) = solve_fixed_point(
        |w| {
            let m = x + w * (0.5 * h);
            model.check(m)?;
            Ok(p - model.vector_potential(m) * inv_eps
                + (model.vector_potential_jacobian(m).tr_mul_vec(w) * inv_eps + model.force(m)) * (0.5 * h))
        },
        p - model.vector_potential(x) * inv_eps,
        settings,
    )?;
    let m = x + w * (0.5 * h);
    let p_next = w
        + model.vector_potential(m) * inv_eps
        + (model.vector_potential_jacobian(m).tr_mul_vec(w) * inv_eps + model.force(m)) * (0.5 * h);
    Ok((x + w * h, p_next, report))
}
