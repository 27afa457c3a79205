//! Electromagnetic field models.
//!
//! A [`FieldModel`] bundles the vector potential `A`, its Jacobian `A'`, the
//! magnetic field `B = ∇×A`, the scalar potential `U`, the electric force
//! `F = -∇U`, an optional symmetry generator `S` and the field scale `ε`.
//! The equations of motion are `ẍ = ẋ × B(x)/ε + F(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vec3::{Mat3, Vec3};

/// Default floor on `x₁² + x₂²` below which the rotationally symmetric
/// experiment field is treated as singular.
pub const DEFAULT_AXIS_FLOOR: f64 = 1e-12;

/// Analytic evaluators of a static field. Implementors must be pure.
pub trait Potentials: Send + Sync + fmt::Debug {
    fn vector_potential(&self, x: Vec3) -> Vec3;

    /// `A'(x)` with entries `∂A_i/∂x_j`. Defaults to central differences.
    fn vector_potential_jacobian(&self, x: Vec3) -> Mat3 {
        fd_jacobian(|y| self.vector_potential(y), x)
    }

    fn magnetic_field(&self, x: Vec3) -> Vec3;

    fn scalar_potential(&self, x: Vec3) -> f64;

    fn force(&self, x: Vec3) -> Vec3;

    /// Skew-symmetric generator of a continuous symmetry of `U` and `A`.
    fn symmetry_generator(&self) -> Option<Mat3> {
        None
    }

    /// Whether `x` lies where the model is undefined.
    fn is_singular(&self, _x: Vec3) -> bool {
        false
    }
}

/// Central-difference Jacobian with step `1e-6·max(1, |x|)`.
pub fn fd_jacobian(f: impl Fn(Vec3) -> Vec3, x: Vec3) -> Mat3 {
    let step = 1e-6 * x.norm().max(1.0);
    let col = |j: usize| {
        let mut e = Vec3::ZERO;
        e.0[j] = step;
        (f(x + e) - f(x - e)) / (2.0 * step)
    };
    Mat3::from_columns(col(0), col(1), col(2))
}

/// Built-in field configurations.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinField {
    /// Uniform field `b`, `A(x) = -½ x × b`, `U ≡ 0`.
    ConstantB { b: Vec3 },
    /// `U = 1/(100 r)`, `B = (0, 0, r)`, `A = (r/3)(-x₂, x₁, 0)` with
    /// `r = √(x₁² + x₂²)`; singular on the `x₃` axis.
    ExperimentRotSym { axis_floor: f64 },
    /// `U = ½xᵀQx + qᵀx` together with a uniform magnetic field `b`.
    QuadraticU { q: Mat3, q_lin: Vec3, b: Vec3 },
    /// No fields at all.
    Free,
}

impl BuiltinField {
    pub fn experiment() -> Self {
        BuiltinField::ExperimentRotSym {
            axis_floor: DEFAULT_AXIS_FLOOR,
        }
    }

    /// Short identifier used by scenario files and the CLI.
    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltinField::ConstantB { .. } => "constant-b",
            BuiltinField::ExperimentRotSym { .. } => "experiment",
            BuiltinField::QuadraticU { .. } => "quadratic",
            BuiltinField::Free => "free",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match self {
            BuiltinField::ConstantB { b } if !b.is_finite() => bad("constant field b must be finite"),
            BuiltinField::ExperimentRotSym { axis_floor } if !(axis_floor.is_finite() && *axis_floor >= 0.0) => {
                bad("axis floor must be finite and non-negative")
            }
            BuiltinField::QuadraticU { q, q_lin, b } => {
                if !(q.is_finite() && q_lin.is_finite() && b.is_finite()) {
                    bad("quadratic potential parameters must be finite")
                } else if !q.is_symmetric() {
                    bad("quadratic potential matrix Q must be symmetric")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

impl Potentials for BuiltinField {
    fn vector_potential(&self, x: Vec3) -> Vec3 {
        match self {
            BuiltinField::ConstantB { b } | BuiltinField::QuadraticU { b, .. } => x.cross(*b) * -0.5,
            BuiltinField::ExperimentRotSym { .. } => {
                let r = x.x().hypot(x.y());
                Vec3::new(-x.y(), x.x(), 0.0) * (r / 3.0)
            }
            BuiltinField::Free => Vec3::ZERO,
        }
    }

    fn vector_potential_jacobian(&self, x: Vec3) -> Mat3 {
        match self {
            BuiltinField::ConstantB { b } | BuiltinField::QuadraticU { b, .. } => Mat3::cross_matrix(*b).scale(0.5),
            BuiltinField::ExperimentRotSym { .. } => {
                let (x1, x2) = (x.x(), x.y());
                let r = x1.hypot(x2);
                if r == 0.0 {
                    return Mat3::ZERO;
                }
                Mat3([
                    [-x1 * x2 / (3.0 * r), -(r + x2 * x2 / r) / 3.0, 0.0],
                    [(r + x1 * x1 / r) / 3.0, x1 * x2 / (3.0 * r), 0.0],
                    [0.0, 0.0, 0.0],
                ])
            }
            BuiltinField::Free => Mat3::ZERO,
        }
    }

    fn magnetic_field(&self, x: Vec3) -> Vec3 {
        match self {
            BuiltinField::ConstantB { b } | BuiltinField::QuadraticU { b, .. } => *b,
            BuiltinField::ExperimentRotSym { .. } => Vec3::new(0.0, 0.0, x.x().hypot(x.y())),
            BuiltinField::Free => Vec3::ZERO,
        }
    }

    fn scalar_potential(&self, x: Vec3) -> f64 {
        match self {
            BuiltinField::ExperimentRotSym { .. } => 1.0 / (100.0 * x.x().hypot(x.y())),
            BuiltinField::QuadraticU { q, q_lin, .. } => 0.5 * x.dot(q.mul_vec(x)) + q_lin.dot(x),
            BuiltinField::ConstantB { .. } | BuiltinField::Free => 0.0,
        }
    }

    fn force(&self, x: Vec3) -> Vec3 {
        match self {
            BuiltinField::ExperimentRotSym { .. } => {
                let r = x.x().hypot(x.y());
                Vec3::new(x.x(), x.y(), 0.0) / (100.0 * r * r * r)
            }
            BuiltinField::QuadraticU { q, q_lin, .. } => -(q.mul_vec(x) + *q_lin),
            BuiltinField::ConstantB { .. } | BuiltinField::Free => Vec3::ZERO,
        }
    }

    fn symmetry_generator(&self) -> Option<Mat3> {
        match self {
            // S x = x × e₃, i.e. rotation about the x₃ axis.
            BuiltinField::ExperimentRotSym { .. } => Some(Mat3([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])),
            BuiltinField::ConstantB { b } if b.norm() > 0.0 => Some(Mat3::cross_matrix(*b / b.norm()).scale(-1.0)),
            _ => None,
        }
    }

    fn is_singular(&self, x: Vec3) -> bool {
        match self {
            BuiltinField::ExperimentRotSym { axis_floor } => {
                let r2 = x.x() * x.x() + x.y() * x.y();
                r2.is_nan() || r2 <= *axis_floor
            }
            _ => false,
        }
    }
}

/// A field together with its scale `ε`. Cheap to clone and safe to share
/// across threads.
#[derive(Clone)]
pub struct FieldModel {
    eps: f64,
    momentum_scale: f64,
    potentials: Arc<dyn Potentials>,
    builtin: Option<BuiltinField>,
}

impl fmt::Debug for FieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldModel")
            .field("eps", &self.eps)
            .field("momentum_scale", &self.momentum_scale)
            .field("potentials", &self.potentials)
            .finish()
    }
}

/// Builds one of the built-in models.
pub fn make_builtin(id: BuiltinField, eps: f64) -> Result<FieldModel> {
    id.validate()?;
    let mut model = FieldModel::custom(Arc::new(id.clone()), eps)?;
    model.builtin = Some(id);
    Ok(model)
}

impl FieldModel {
    /// Wraps user-supplied evaluators.
    pub fn custom(potentials: Arc<dyn Potentials>, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        if let Some(s) = potentials.symmetry_generator() {
            if !s.is_skew_symmetric() {
                return Err(Error::InvalidParameter(
                    "symmetry generator must be skew-symmetric".into(),
                ));
            }
        }
        Ok(FieldModel {
            eps,
            momentum_scale: 1.0 / eps,
            potentials,
            builtin: None,
        })
    }

    /// Overrides the factor multiplying `A` in the momentum `(v + c·A(x))ᵀ S x`.
    /// Defaults to `1/ε`; the two choices coincide at `ε = 1`.
    pub fn with_momentum_scale(mut self, scale: f64) -> Self {
        self.momentum_scale = scale;
        self
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn momentum_scale(&self) -> f64 {
        self.momentum_scale
    }

    pub fn builtin(&self) -> Option<&BuiltinField> {
        self.builtin.as_ref()
    }

    #[inline]
    pub fn vector_potential(&self, x: Vec3) -> Vec3 {
        self.potentials.vector_potential(x)
    }

    #[inline]
    pub fn vector_potential_jacobian(&self, x: Vec3) -> Mat3 {
        self.potentials.vector_potential_jacobian(x)
    }

    #[inline]
    pub fn magnetic_field(&self, x: Vec3) -> Vec3 {
        self.potentials.magnetic_field(x)
    }

    #[inline]
    pub fn scalar_potential(&self, x: Vec3) -> f64 {
        self.potentials.scalar_potential(x)
    }

    #[inline]
    pub fn force(&self, x: Vec3) -> Vec3 {
        self.potentials.force(x)
    }

    pub fn symmetry_generator(&self) -> Option<Mat3> {
        self.potentials.symmetry_generator()
    }

    pub fn is_singular(&self, x: Vec3) -> bool {
        self.potentials.is_singular(x)
    }

    /// Fails with [`Error::Singular`] for points in the singular set or
    /// non-finite points.
    #[inline]
    pub fn check(&self, x: Vec3) -> Result<()> {
        if !x.is_finite() || self.potentials.is_singular(x) {
            Err(Error::Singular { position: x })
        } else {
            Ok(())
        }
    }

    /// Right-hand side of the first-order system `(ẋ, v̇)`.
    pub fn acceleration(&self, x: Vec3, v: Vec3) -> Vec3 {
        v.cross(self.magnetic_field(x)) / self.eps + self.force(x)
    }
}

/// Outcome of [`verify_consistency`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// `max |curl_fd(A) - B|` over the evaluated points.
    pub max_curl_deviation: f64,
    /// `max |-grad_fd(U) - F|` over the evaluated points.
    pub max_gradient_deviation: f64,
    pub points_checked: usize,
    /// Indices of sample points skipped because they lie in the singular set.
    pub skipped: Vec<usize>,
    pub tol: f64,
    pub passed: bool,
}

/// Checks `B = ∇×A` and `F = -∇U` by central differences at the sample points.
pub fn verify_consistency(model: &FieldModel, points: &[Vec3], fd_step: f64, tol: f64) -> Result<ConsistencyReport> {
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::InvalidParameter("fd_step must be positive".into()));
    }
    let mut report = ConsistencyReport {
        max_curl_deviation: 0.0,
        max_gradient_deviation: 0.0,
        points_checked: 0,
        skipped: Vec::new(),
        tol,
        passed: false,
    };
    for (i, &x) in points.iter().enumerate() {
        let stencil_hits_singular = (0..3).any(|j| {
            let mut e = Vec3::ZERO;
            e.0[j] = fd_step;
            model.is_singular(x + e) || model.is_singular(x - e)
        });
        if model.check(x).is_err() || stencil_hits_singular {
            report.skipped.push(i);
            continue;
        }
        let (jac, grad) = fd_derivatives(model, x, fd_step);
        let curl = Vec3::new(
            jac.0[2][1] - jac.0[1][2],
            jac.0[0][2] - jac.0[2][0],
            jac.0[1][0] - jac.0[0][1],
        );
        let dev_curl = (curl - model.magnetic_field(x)).norm();
        let dev_grad = (-grad - model.force(x)).norm();
        report.max_curl_deviation = report.max_curl_deviation.max(dev_curl);
        report.max_gradient_deviation = report.max_gradient_deviation.max(dev_grad);
        report.points_checked += 1;
    }
    report.passed =
        report.points_checked > 0 && report.max_curl_deviation <= tol && report.max_gradient_deviation <= tol;
    Ok(report)
}

fn fd_derivatives(model: &FieldModel, x: Vec3, step: f64) -> (Mat3, Vec3) {
    let mut cols = [Vec3::ZERO; 3];
    let mut grad = Vec3::ZERO;
    for (j, col) in cols.iter_mut().enumerate() {
        let mut e = Vec3::ZERO;
        e.0[j] = step;
        *col = (model.vector_potential(x + e) - model.vector_potential(x - e)) / (2.0 * step);
        grad.0[j] = (model.scalar_potential(x + e) - model.scalar_potential(x - e)) / (2.0 * step);
    }
    (Mat3::from_columns(cols[0], cols[1], cols[2]), grad)
}

/// Rotation `e^{τS}` for a skew-symmetric `S`, via Rodrigues' formula.
pub fn skew_exponential(s: &Mat3, tau: f64) -> Mat3 {
    // S = [w]× for w = (s32, s13, s21).
    let w = Vec3::new(s.0[2][1], s.0[0][2], s.0[1][0]);
    let theta = w.norm() * tau;
    if w.norm() == 0.0 {
        return Mat3::IDENTITY;
    }
    let k = Mat3::cross_matrix(w / w.norm());
    let k2 = mat_mul(&k, &k);
    let mut out = Mat3::IDENTITY;
    for i in 0..3 {
        for j in 0..3 {
            out.0[i][j] += theta.sin() * k.0[i][j] + (1.0 - theta.cos()) * k2.0[i][j];
        }
    }
    out
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = Mat3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out.0[i][j] = (0..3).map(|k| a.0[i][k] * b.0[k][j]).sum();
        }
    }
    out
}

/// Deterministic sample points in `[-half, half]³` avoiding a cylinder of
/// radius `r_min` around the `x₃` axis.
pub fn sample_points(count: usize, half: f64, r_min: f64) -> Vec<Vec3> {
    // Weyl sequence on the unit cube; no RNG state to thread around.
    let alphas = [
        1.0 / 1.220_744_084_605_759_5,
        1.0 / (1.220_744_084_605_759_5 * 1.220_744_084_605_759_5),
        1.0 / (1.220_744_084_605_759_5 * 1.220_744_084_605_759_5 * 1.220_744_084_605_759_5),
    ];
    let mut out = Vec::with_capacity(count);
    let mut n = 0u64;
    while out.len() < count {
        n += 1;
        let p = Vec3::new(
            (2.0 * (0.5 + alphas[0] * n as f64).fract() - 1.0) * half,
            (2.0 * (0.5 + alphas[1] * n as f64).fract() - 1.0) * half,
            (2.0 * (0.5 + alphas[2] * n as f64).fract() - 1.0) * half,
        );
        if p.x().hypot(p.y()) >= r_min {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn experiment_field_at_reference_point() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let x = Vec3::new(0.0, 1.0, 0.1);
        assert!(close(m.magnetic_field(x), Vec3::new(0.0, 0.0, 1.0), 1e-15));
        assert!((m.scalar_potential(x) - 0.01).abs() < 1e-15);
        assert!(close(m.vector_potential(x), Vec3::new(-1.0 / 3.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn constant_field_vector_potential() {
        let m = make_builtin(
            BuiltinField::ConstantB {
                b: Vec3::new(0.0, 0.0, 1.0),
            },
            1.0,
        )
        .unwrap();
        let a = m.vector_potential(Vec3::new(2.0, 3.0, 4.0));
        assert!(close(a, Vec3::new(-1.5, 1.0, 0.0), 1e-15));
    }

    #[test]
    fn free_field_has_no_force() {
        let m = make_builtin(BuiltinField::Free, 1.0).unwrap();
        for x in sample_points(10, 3.0, 0.0) {
            assert_eq!(m.force(x), Vec3::ZERO);
            assert_eq!(m.magnetic_field(x), Vec3::ZERO);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(make_builtin(BuiltinField::Free, 0.0).is_err());
        assert!(make_builtin(BuiltinField::Free, -1.0).is_err());
        assert!(make_builtin(BuiltinField::Free, f64::NAN).is_err());
        let q = Mat3([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let err = make_builtin(
            BuiltinField::QuadraticU {
                q,
                q_lin: Vec3::ZERO,
                b: Vec3::ZERO,
            },
            1.0,
        );
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn singular_set_guard() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        assert!(m.check(Vec3::new(0.0, 0.0, 1.0)).is_err());
        assert!(m.check(Vec3::new(1e-7, 0.0, 1.0)).is_err());
        assert!(m.check(Vec3::new(1e-5, 0.0, 1.0)).is_ok());
        let loose = make_builtin(BuiltinField::ExperimentRotSym { axis_floor: 1e-4 }, 1.0).unwrap();
        assert!(loose.check(Vec3::new(1e-3, 0.0, 0.0)).is_err());
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        for x in sample_points(50, 2.0, 0.1) {
            let fd = fd_jacobian(|y| m.vector_potential(y), x);
            assert!(m.vector_potential_jacobian(x).max_abs_diff(&fd) < 1e-8, "{x}");
        }
    }

    #[test]
    fn experiment_field_is_consistent() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let pts = sample_points(100, 2.0, 0.1);
        let rep = verify_consistency(&m, &pts, 1e-5, 1e-6).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.points_checked, 100);
    }

    #[test]
    fn constant_field_curl_is_exact() {
        let m = make_builtin(
            BuiltinField::ConstantB {
                b: Vec3::new(0.3, -0.2, 1.1),
            },
            1.0,
        )
        .unwrap();
        let rep = verify_consistency(&m, &sample_points(20, 5.0, 0.0), 1e-3, 1e-12).unwrap();
        assert!(rep.max_curl_deviation < 1e-12, "{rep:?}");
    }

    #[derive(Debug)]
    struct FlippedA(BuiltinField);

    impl Potentials for FlippedA {
        fn vector_potential(&self, x: Vec3) -> Vec3 {
            -self.0.vector_potential(x)
        }
        fn magnetic_field(&self, x: Vec3) -> Vec3 {
            self.0.magnetic_field(x)
        }
        fn scalar_potential(&self, x: Vec3) -> f64 {
            self.0.scalar_potential(x)
        }
        fn force(&self, x: Vec3) -> Vec3 {
            self.0.force(x)
        }
    }

    #[test]
    fn sign_flipped_potential_fails_with_twice_b() {
        let m = FieldModel::custom(Arc::new(FlippedA(BuiltinField::experiment())), 1.0).unwrap();
        let pts = sample_points(40, 2.0, 0.1);
        let rep = verify_consistency(&m, &pts, 1e-5, 1e-6).unwrap();
        assert!(!rep.passed);
        let max_b = pts
            .iter()
            .map(|&x| 2.0 * m.magnetic_field(x).norm())
            .fold(0.0, f64::max);
        assert!((rep.max_curl_deviation - max_b).abs() < 1e-6, "{rep:?} vs {max_b}");
    }

    #[test]
    fn singular_points_are_skipped_and_flagged() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let pts = [Vec3::new(0.0, 0.0, 0.5), Vec3::new(1.0, 0.5, 0.0)];
        let rep = verify_consistency(&m, &pts, 1e-5, 1e-6).unwrap();
        assert_eq!(rep.skipped, vec![0]);
        assert_eq!(rep.points_checked, 1);
        assert!(rep.passed);
    }

    #[test]
    fn curl_error_is_second_order_in_step() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let pts = sample_points(20, 2.0, 0.3);
        let d1 = verify_consistency(&m, &pts, 1e-2, 1.0).unwrap().max_curl_deviation;
        let d2 = verify_consistency(&m, &pts, 5e-3, 1.0).unwrap().max_curl_deviation;
        let ratio = d1 / d2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn experiment_symmetry_invariance() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let s = m.symmetry_generator().unwrap();
        assert!(s.is_skew_symmetric());
        for tau in [0.1, 1.0, PI] {
            let rot = skew_exponential(&s, tau);
            let back = skew_exponential(&s, -tau);
            for x in sample_points(30, 2.0, 0.1) {
                let y = rot.mul_vec(x);
                let u = m.scalar_potential(x);
                assert!((m.scalar_potential(y) - u).abs() <= 1e-12 * u.abs());
                let a = m.vector_potential(x);
                let a_back = back.mul_vec(m.vector_potential(y));
                assert!((a_back - a).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn skew_exponential_generates_the_symmetry_flow() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let s = m.symmetry_generator().unwrap();
        let x = Vec3::new(0.4, -1.1, 0.3);
        let tau = 1e-6;
        let d = (skew_exponential(&s, tau).mul_vec(x) - skew_exponential(&s, -tau).mul_vec(x)) / (2.0 * tau);
        assert!((d - s.mul_vec(x)).max_abs() < 1e-9);
    }

    #[test]
    fn momentum_closed_form() {
        let m = make_builtin(BuiltinField::experiment(), 1.0).unwrap();
        let s = m.symmetry_generator().unwrap();
        let pts = sample_points(40, 2.0, 0.1);
        let vels = sample_points(40, 0.5, 0.0);
        for (&x, &v) in pts.iter().zip(vels.iter()) {
            let general = (v + m.vector_potential(x)).dot(s.mul_vec(x));
            let r = x.x().hypot(x.y());
            let closed = (v.x() - x.y() / 3.0 * r) * x.y() - (v.y() + x.x() / 3.0 * r) * x.x();
            assert!((general - closed).abs() <= 1e-12 * closed.abs().max(1.0));
        }
    }
}
