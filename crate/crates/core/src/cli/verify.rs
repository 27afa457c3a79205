//! Quick self-checks behind `cpdyn verify`.

use crate::field::{make_builtin, sample_points, skew_exponential, verify_consistency, BuiltinField};
use crate::integrators::{tsm1_step, tsm2_step, ParticleState, TwoStepState};
use crate::observables::{energy, modified_invariant_expansion_check};
use crate::solver::{solve_cross_linear, SolverSettings};
use crate::vec3::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, result: Result<(bool, String), crate::Error>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_verification() -> VerifyReport {
    let checks = vec![
        check("field-consistency", field_consistency()),
        check("tsm1-symmetry", tsm1_symmetry()),
        check("tsm2-constant-b-reduction", constant_b_reduction()),
        check("quadratic-energy", quadratic_energy()),
        check("cross-linear-round-trip", cross_linear_round_trip()),
        check("rotation-invariance", rotation_invariance()),
        check("modified-invariant-expansion", expansion()),
    ];
    VerifyReport { checks }
}

fn quadratic() -> BuiltinField {
    BuiltinField::QuadraticU {
        q: Mat3([[1.0, 0.2, 0.0], [0.2, 0.5, 0.1], [0.0, 0.1, 0.8]]),
        q_lin: Vec3::new(0.1, -0.2, 0.05),
        b: Vec3::new(0.3, -0.4, 1.2),
    }
}

fn field_consistency() -> crate::Result<(bool, String)> {
    let pts = sample_points(64, 2.0, 0.2);
    let mut worst = 0.0f64;
    let mut ok = true;
    for f in [
        BuiltinField::experiment(),
        quadratic(),
        BuiltinField::ConstantB {
            b: Vec3::new(0.0, 1.0, 2.0),
        },
    ] {
        let r = verify_consistency(&make_builtin(f, 1.0)?, &pts, 1e-4, 1e-6)?;
        ok &= r.passed;
        worst = worst.max(r.max_curl_deviation).max(r.max_gradient_deviation);
    }
    Ok((ok, format!("max deviation {worst:.2e}")))
}

fn tsm1_symmetry() -> crate::Result<(bool, String)> {
    let model = make_builtin(BuiltinField::experiment(), 1.0)?;
    let settings = SolverSettings::default();
    let mut worst = 0.0f64;
    for (i, x) in sample_points(20, 1.5, 0.3).into_iter().enumerate() {
        let v = Vec3::new(0.1 * i as f64 - 1.0, 0.3, -0.2);
        let s = ParticleState::new(0.0, x, v);
        let (fwd, _) = tsm1_step(&s, 0.1, &model, &settings)?;
        let (back, _) = tsm1_step(&fwd, -0.1, &model, &settings)?;
        worst = worst.max((back.x - x).norm()).max((back.v - v).norm());
    }
    Ok((worst <= 1e-12, format!("max round-trip error {worst:.2e}")))
}

fn constant_b_reduction() -> crate::Result<(bool, String)> {
    let model = make_builtin(
        BuiltinField::ConstantB {
            b: Vec3::new(0.2, -0.5, 1.5),
        },
        1.0,
    )?;
    let settings = SolverSettings::default();
    let h = 0.05;
    let mut one = ParticleState::new(0.0, Vec3::new(0.3, 0.1, -0.2), Vec3::new(0.4, -0.1, 0.7));
    let (s1, _) = tsm1_step(&one, h, &model, &settings)?;
    let mut two = TwoStepState {
        x_prev: one.x,
        x_curr: s1.x,
        v_curr: s1.v,
        t_curr: h,
    };
    one = s1;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        one = tsm1_step(&one, h, &model, &settings)?.0;
        two = tsm2_step(&two, h, &model, &settings)?.0;
        worst = worst.max((one.x - two.x_curr).norm() / one.x.norm().max(1.0));
    }
    Ok((worst <= 1e-10, format!("max relative position gap {worst:.2e}")))
}

fn quadratic_energy() -> crate::Result<(bool, String)> {
    let model = make_builtin(quadratic(), 1.0)?;
    let settings = SolverSettings::default();
    let mut s = ParticleState::new(0.0, Vec3::new(0.5, -0.3, 0.2), Vec3::new(0.1, 0.4, -0.3));
    let e0 = energy(&model, s.x, s.v);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        s = tsm1_step(&s, 0.1, &model, &settings)?.0;
        worst = worst.max((energy(&model, s.x, s.v) - e0).abs());
    }
    let tol = 1e-12 * e0.abs().max(1.0);
    Ok((worst <= tol, format!("max energy deviation {worst:.2e}")))
}

fn cross_linear_round_trip() -> crate::Result<(bool, String)> {
    let ts = sample_points(500, 3.0, 0.0);
    let rs = sample_points(1000, 5.0, 0.0);
    let mut worst = 0.0f64;
    for (t, r) in ts.iter().zip(rs.iter().skip(500)) {
        let v = solve_cross_linear(*t, *r);
        worst = worst.max((v + t.cross(v) - *r).norm() / (1.0 + r.norm()));
    }
    Ok((worst <= 1e-14, format!("max scaled residual {worst:.2e}")))
}

fn rotation_invariance() -> crate::Result<(bool, String)> {
    let model = make_builtin(BuiltinField::experiment(), 1.0)?;
    let s = model.symmetry_generator().expect("experiment field has a symmetry");
    let mut worst = 0.0f64;
    for x in sample_points(40, 2.0, 0.2) {
        for tau in [0.3, 1.1, -2.0] {
            let rot = skew_exponential(&s, tau);
            let y = rot.mul_vec(x);
            worst = worst
                .max((model.scalar_potential(y) - model.scalar_potential(x)).abs())
                .max((model.vector_potential(y) - rot.mul_vec(model.vector_potential(x))).norm());
        }
    }
    Ok((worst <= 1e-13, format!("max invariance defect {worst:.2e}")))
}

fn expansion() -> crate::Result<(bool, String)> {
    let r = modified_invariant_expansion_check(&[0.1, 0.03, 0.01, 0.003]);
    Ok((r.passed, format!("{} rows", r.rows.len())))
}
