use super::TwoStepState;
use crate::error::Result;
use crate::field::FieldModel;
use crate::solver::{solve_fixed_point, SolveReport, SolverSettings};
use crate::vec3::Vec3;

/// Variational recursion with the potentials evaluated at grid points:
///
/// ```text
/// x_{n+1} - 2x_n + x_{n-1} = (h/2ε) A'ᵀ(x_n)(x_{n+1} - x_{n-1})
///                          - (h/2ε)(A(x_{n+1}) - A(x_{n-1}))
///                          + h² F(x_n)
/// ```
///
/// solved by fixed point on `x_{n+1}`. Returns the advanced state and the
/// central-difference velocity at the old `x_n`; see [`super::boris_step`]
/// for the meaning of the advanced state's `v_curr`.
pub fn varm_step(
    ts: &TwoStepState,
    h: f64,
    model: &FieldModel,
    settings: &SolverSettings,
) -> Result<(TwoStepState, Vec3, SolveReport)> {
    let (x_prev, x_n) = (ts.x_prev, ts.x_curr);
    model.check(x_n)?;
    let c = 0.5 * h / model.eps();
    let jac = model.vector_potential_jacobian(x_n);
    let known = x_n * 2.0 - x_prev - jac.tr_mul_vec(x_prev) * c
        + model.vector_potential(x_prev) * c
        + model.force(x_n) * (h * h);
    let (x_next, report) = solve_fixed_point(
        |y| {
            model.check(y)?;
            Ok(known + (jac.tr_mul_vec(y) - model.vector_potential(y)) * c)
        },
        x_n * 2.0 - x_prev,
        settings,
    )?;
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
        report,
    ))
}
