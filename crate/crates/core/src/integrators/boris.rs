use super::TwoStepState;
use crate::error::Result;
use crate::field::FieldModel;
use crate::solver::solve_cross_linear;
use crate::vec3::Vec3;

/// Boris recursion
/// `x_{n+1} - 2x_n + x_{n-1} = (h/2)(x_{n+1} - x_{n-1}) × B(x_n)/ε + h² F(x_n)`.
///
/// Linear in `x_{n+1}`, so solved exactly. Returns the advanced state and the
/// central-difference velocity `(x_{n+1} - x_{n-1})/(2h)` at the old `x_n`.
/// The advanced state's `v_curr` is only a provisional value
/// `2(x_{n+1} - x_n)/h - v_n`; the central difference replaces it once
/// `x_{n+2}` is known.
pub fn boris_step(ts: &TwoStepState, h: f64, model: &FieldModel) -> Result<(TwoStepState, Vec3)> {
    let (x_prev, x_n) = (ts.x_prev, ts.x_curr);
    model.check(x_n)?;
    let b = model.magnetic_field(x_n) / model.eps();
    let rhs = x_n * 2.0 - x_prev - x_prev.cross(b) * (0.5 * h) + model.force(x_n) * (h * h);
    let x_next = solve_cross_linear(b * (0.5 * h), rhs);
    model.check(x_next)?;
    let v_n = (x_next - x_prev) / (2.0 * h);
    Ok((
        TwoStepState {
            x_prev: x_n,
            x_curr: x_next,
            v_curr: (x_next - x_n) * (2.0 / h) - v_n,
            t_curr: ts.t_curr + h,
        },
        v_n,
    ))
}
