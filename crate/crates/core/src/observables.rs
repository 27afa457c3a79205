//! Conserved and nearly conserved quantities.
//!
//! * energy `E = ½|v|² + U(x)`
//! * momentum `M = (v + c·A(x))ᵀ S x` for a symmetry generator `S`
//! * magnetic moment `I = ½|v_⊥|²/|B|`, `v_⊥ = v × B/|B|`
//! * `ξ = 2 arctan(h|B|/(2ε))`
//! * modified energy `H_h = E + (ξ csc ξ - 1)·I·|B|`
//! * modified moment `I_h = (1 + h²|B|²/(4ε²))·I = sec²(ξ/2)·I`

use crate::field::FieldModel;
use crate::integrators::ParticleState;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointState {
    pub t_mid: f64,
    pub x_mid: Vec3,
    pub v_mid: Vec3,
}

/// Values of the tracked quantities at one (mid)point. Quantities that need
/// `|B| > 0` or a symmetry generator are `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub energy: f64,
    pub momentum: Option<f64>,
    pub moment: Option<f64>,
    pub xi: Option<f64>,
    pub modified_energy: Option<f64>,
    pub modified_moment: Option<f64>,
}

pub fn midpoint_state(a: &ParticleState, b: &ParticleState) -> MidpointState {
    MidpointState {
        t_mid: 0.5 * (a.t + b.t),
        x_mid: a.x.midpoint(b.x),
        v_mid: a.v.midpoint(b.v),
    }
}

pub fn energy(model: &FieldModel, x: Vec3, v: Vec3) -> f64 {
    0.5 * v.norm_sq() + model.scalar_potential(x)
}

pub fn momentum(model: &FieldModel, x: Vec3, v: Vec3) -> Option<f64> {
    let s = model.symmetry_generator()?;
    Some((v + model.vector_potential(x) * model.momentum_scale()).dot(s.mul_vec(x)))
}

/// `ξ csc ξ - 1`, switching to its Taylor series near zero.
pub fn xi_csc_xi_minus_one(xi: f64) -> f64 {
    if xi.abs() < 1e-3 {
        let x2 = xi * xi;
        x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    } else {
        xi / xi.sin() - 1.0
    }
}

pub fn compute_sample(ms: &MidpointState, model: &FieldModel, h: f64) -> ObservableSample {
    sample_at(ms.t_mid, ms.x_mid, ms.v_mid, model, h)
}

/// Observables of an arbitrary phase-space point (used for endpoint series).
pub fn sample_at(t: f64, x: Vec3, v: Vec3, model: &FieldModel, h: f64) -> ObservableSample {
    let e = energy(model, x, v);
    let b = model.magnetic_field(x);
    let b_norm = b.norm();
    let mut out = ObservableSample {
        t,
        x,
        v,
        energy: e,
        momentum: momentum(model, x, v),
        moment: None,
        xi: None,
        modified_energy: None,
        modified_moment: None,
    };
    if b_norm > 0.0 {
        let v_perp = v.cross(b) / b_norm;
        let moment = 0.5 * v_perp.norm_sq() / b_norm;
        let eta = 0.5 * h.abs() * b_norm / model.eps();
        let xi = 2.0 * eta.atan();
        out.moment = Some(moment);
        out.xi = Some(xi);
        out.modified_energy = Some(e + xi_csc_xi_minus_one(xi) * moment * b_norm);
        out.modified_moment = Some((eta * eta + 1.0) * moment);
    }
    out
}

/// Result of [`modified_invariant_expansion_check`] at one `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRow {
    pub xi: f64,
    /// `(ξ csc ξ - 1)/ξ²`, tends to 1/6.
    pub energy_coefficient: f64,
    /// `(sec²(ξ/2) - 1)/ξ²`, tends to 1/4.
    pub moment_coefficient: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
    pub passed: bool,
}

/// Modified-invariant coefficients of the grid-point variational scheme in
/// the small-`ξ` expansions `H + c_E ξ² I|B|` and `(1 + c_I ξ²) I`.
pub const VARM_ENERGY_COEFFICIENT: f64 = 5.0 / 12.0;
pub const VARM_MOMENT_COEFFICIENT: f64 = 0.5;

/// Checks the leading Taylor coefficients of the modified energy and
/// modified moment deformations: each ratio to its leading term must lie
/// within `ξ²/2` of one.
pub fn modified_invariant_expansion_check(xi_values: &[f64]) -> ExpansionReport {
    let rows: Vec<ExpansionRow> = xi_values
        .iter()
        .map(|&xi| {
            let x2 = xi * xi;
            let c_e = xi_csc_xi_minus_one(xi) / x2;
            let half_tan = (0.5 * xi).tan();
            let c_i = half_tan * half_tan / x2;
            let in_range = xi > 0.0 && xi <= 0.5;
            let passed =
                in_range && (c_e / (1.0 / 6.0) - 1.0).abs() <= x2 / 2.0 && (c_i / 0.25 - 1.0).abs() <= x2 / 2.0;
            ExpansionRow {
                xi,
                energy_coefficient: c_e,
                moment_coefficient: c_i,
                passed,
            }
        })
        .collect();
    let passed = !rows.is_empty() && rows.iter().all(|r| r.passed);
    ExpansionReport { rows, passed }
}
