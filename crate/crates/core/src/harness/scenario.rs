//! Experiment configuration and its flat `key = value` text form.
//!
//! ```text
//! # comment
//! field = experiment
//! eps = 1
//! method = tsm2
//! h = 0.1
//! t_end = 10000
//! x0 = 0,1,0.1
//! v0 = 0.09,0.05,0.2
//! solver.tol = 1e-13
//! ```
//!
//! Dotted keys address nested settings (`field.b`, `solver.max_iter`, ...).
//! Later assignments override earlier ones, which is how command-line flags
//! are layered over a file.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{make_builtin, BuiltinField, FieldModel, DEFAULT_AXIS_FLOOR};
use crate::integrators::{MethodId, StarterStrategy, DEFAULT_AVF_ORDER};
use crate::solver::SolverSettings;
use crate::vec3::{Mat3, Vec3};

/// Upper bound on stored samples when `sample_every` is left to default.
pub const MAX_DEFAULT_SAMPLES: usize = 100_000;

/// Where observables are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplePoint {
    /// At `((x_n + x_{n+1})/2, (v_n + v_{n+1})/2)`.
    #[default]
    Midpoint,
    /// At the grid states `(x_n, v_n)`; diagnostic only.
    Endpoint,
}

impl FromStr for SamplePoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "midpoint" => Ok(SamplePoint::Midpoint),
            "endpoint" => Ok(SamplePoint::Endpoint),
            _ => Err(Error::InvalidScenario(format!("unknown sample point '{s}'"))),
        }
    }
}

impl SamplePoint {
    pub fn name(self) -> &'static str {
        match self {
            SamplePoint::Midpoint => "midpoint",
            SamplePoint::Endpoint => "endpoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub field: BuiltinField,
    pub eps: f64,
    pub method: MethodId,
    pub h: f64,
    pub t_end: f64,
    pub x0: Vec3,
    pub v0: Vec3,
    /// `None` selects the method's default starter.
    pub starter: Option<StarterStrategy>,
    pub solver: SolverSettings,
    /// `None` keeps at most [`MAX_DEFAULT_SAMPLES`] samples.
    pub sample_every: Option<usize>,
    pub sample_point: SamplePoint,
    pub avf_order: usize,
    /// Factor on `A` in the momentum; `None` means `1/ε`.
    pub momentum_scale: Option<f64>,
}

impl Default for Scenario {
    /// The rotationally symmetric normal-field experiment.
    fn default() -> Self {
        Scenario {
            field: BuiltinField::experiment(),
            eps: 1.0,
            method: MethodId::Tsm2,
            h: 0.1,
            t_end: 10_000.0,
            x0: Vec3::new(0.0, 1.0, 0.1),
            v0: Vec3::new(0.09, 0.05, 0.20),
            starter: None,
            solver: SolverSettings::default(),
            sample_every: None,
            sample_point: SamplePoint::Midpoint,
            avf_order: DEFAULT_AVF_ORDER,
            momentum_scale: None,
        }
    }
}

impl Scenario {
    pub fn with_method(mut self, method: MethodId) -> Self {
        self.method = method;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_field(mut self, field: BuiltinField) -> Self {
        self.field = field;
        self
    }

    pub fn starter(&self) -> StarterStrategy {
        self.starter.unwrap_or_else(|| self.method.default_starter())
    }

    /// Number of steps covering `[0, t_end]`.
    pub fn step_count(&self) -> usize {
        (self.t_end / self.h - 1e-9).ceil().max(1.0) as usize
    }

    pub fn sample_stride(&self) -> usize {
        self.sample_every
            .unwrap_or_else(|| self.step_count().div_ceil(MAX_DEFAULT_SAMPLES).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.x0.is_finite() && self.v0.is_finite()) {
            return bad("initial data must be finite".into());
        }
        if self.sample_every == Some(0) {
            return bad("sample_every must be at least 1".into());
        }
        if self.avf_order < 2 {
            return bad("avf_order must be at least 2".into());
        }
        if let Some(c) = self.momentum_scale {
            if !c.is_finite() {
                return bad("momentum_scale must be finite".into());
            }
        }
        self.solver
            .validate()
            .map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    /// Builds the field model described by the scenario.
    pub fn model(&self) -> Result<FieldModel> {
        let model = make_builtin(self.field.clone(), self.eps).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        Ok(match self.momentum_scale {
            Some(c) => model.with_momentum_scale(c),
            None => model,
        })
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "field" | "field.kind" => {
                self.field = match value {
                    "experiment" => BuiltinField::ExperimentRotSym {
                        axis_floor: self.axis_floor(),
                    },
                    "constant-b" => BuiltinField::ConstantB { b: self.b_param() },
                    "quadratic" => BuiltinField::QuadraticU {
                        q: self.q_param(),
                        q_lin: self.q_lin_param(),
                        b: self.b_param(),
                    },
                    "free" => BuiltinField::Free,
                    _ => return Err(Error::InvalidScenario(format!("unknown field '{value}'"))),
                }
            }
            "field.b" => {
                let b = parse_vec3(key, value)?;
                match &mut self.field {
                    BuiltinField::ConstantB { b: slot } | BuiltinField::QuadraticU { b: slot, .. } => *slot = b,
                    _ => return Err(inapplicable(key, &self.field)),
                }
            }
            "field.q" => {
                let q = parse_mat3(key, value)?;
                match &mut self.field {
                    BuiltinField::QuadraticU { q: slot, .. } => *slot = q,
                    _ => return Err(inapplicable(key, &self.field)),
                }
            }
            "field.q_lin" => {
                let q_lin = parse_vec3(key, value)?;
                match &mut self.field {
                    BuiltinField::QuadraticU { q_lin: slot, .. } => *slot = q_lin,
                    _ => return Err(inapplicable(key, &self.field)),
                }
            }
            "field.axis_floor" => {
                let floor = parse_num(key, value)?;
                match &mut self.field {
                    BuiltinField::ExperimentRotSym { axis_floor } => *axis_floor = floor,
                    _ => return Err(inapplicable(key, &self.field)),
                }
            }
            "eps" => self.eps = parse_num(key, value)?,
            "method" => self.method = value.parse()?,
            "h" => self.h = parse_num(key, value)?,
            "t_end" => self.t_end = parse_num(key, value)?,
            "x0" => self.x0 = parse_vec3(key, value)?,
            "v0" => self.v0 = parse_vec3(key, value)?,
            "starter" => {
                self.starter = match value {
                    "default" => None,
                    v => Some(v.parse()?),
                }
            }
            "solver.tol" => self.solver.tol = parse_num(key, value)?,
            "solver.max_iter" => self.solver.max_iter = parse_num(key, value)?,
            "solver.damping" => self.solver.damping = parse_num(key, value)?,
            "sample_every" => {
                self.sample_every = match value {
                    "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "observe" => self.sample_point = value.parse()?,
            "avf_order" => self.avf_order = parse_num(key, value)?,
            "momentum_scale" => {
                self.momentum_scale = match value {
                    "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            _ => return Err(Error::InvalidScenario(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses a scenario file layered over the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        sc.apply_kv_str(text)?;
        Ok(sc)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidScenario(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::InvalidScenario(format!("line {}: {}", lineno + 1, strip(&e))))?;
        }
        Ok(())
    }

    /// Serialises every setting; `from_kv_str(to_kv_string())` is lossless.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("field", self.field.kind_name().to_string());
        match &self.field {
            BuiltinField::ConstantB { b } => put("field.b", b.to_string()),
            BuiltinField::ExperimentRotSym { axis_floor } => put("field.axis_floor", format!("{axis_floor:?}")),
            BuiltinField::QuadraticU { q, q_lin, b } => {
                put("field.q", fmt_mat3(q));
                put("field.q_lin", q_lin.to_string());
                put("field.b", b.to_string());
            }
            BuiltinField::Free => {}
        }
        put("eps", format!("{:?}", self.eps));
        put("method", self.method.to_string());
        put("h", format!("{:?}", self.h));
        put("t_end", format!("{:?}", self.t_end));
        put("x0", self.x0.to_string());
        put("v0", self.v0.to_string());
        put(
            "starter",
            self.starter.map_or_else(|| "default".to_string(), |s| s.to_string()),
        );
        put("solver.tol", format!("{:?}", self.solver.tol));
        put("solver.max_iter", self.solver.max_iter.to_string());
        put("solver.damping", format!("{:?}", self.solver.damping));
        put(
            "sample_every",
            self.sample_every.map_or_else(|| "auto".to_string(), |s| s.to_string()),
        );
        put("observe", self.sample_point.name().to_string());
        put("avf_order", self.avf_order.to_string());
        put(
            "momentum_scale",
            self.momentum_scale
                .map_or_else(|| "auto".to_string(), |c| format!("{c:?}")),
        );
        out
    }

    fn b_param(&self) -> Vec3 {
        match &self.field {
            BuiltinField::ConstantB { b } | BuiltinField::QuadraticU { b, .. } => *b,
            _ => Vec3::new(0.0, 0.0, 1.0),
        }
    }

    fn q_param(&self) -> Mat3 {
        match &self.field {
            BuiltinField::QuadraticU { q, .. } => *q,
            _ => Mat3::IDENTITY,
        }
    }

    fn q_lin_param(&self) -> Vec3 {
        match &self.field {
            BuiltinField::QuadraticU { q_lin, .. } => *q_lin,
            _ => Vec3::ZERO,
        }
    }

    fn axis_floor(&self) -> f64 {
        match &self.field {
            BuiltinField::ExperimentRotSym { axis_floor } => *axis_floor,
            _ => DEFAULT_AXIS_FLOOR,
        }
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::InvalidScenario(m) => m.clone(),
        e => e.to_string(),
    }
}

fn inapplicable(key: &str, field: &BuiltinField) -> Error {
    Error::InvalidScenario(format!("'{key}' does not apply to field '{}'", field.kind_name()))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidScenario(format!("'{key}': cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str, len: usize) -> Result<Vec<f64>> {
    let parts: Vec<f64> = value.split(',').map(|p| parse_num(key, p)).collect::<Result<_>>()?;
    if parts.len() != len {
        return Err(Error::InvalidScenario(format!(
            "'{key}': expected {len} comma-separated numbers, got {}",
            parts.len()
        )));
    }
    Ok(parts)
}

pub fn parse_vec3(key: &str, value: &str) -> Result<Vec3> {
    let p = parse_list(key, value, 3)?;
    Ok(Vec3::new(p[0], p[1], p[2]))
}

fn parse_mat3(key: &str, value: &str) -> Result<Mat3> {
    let p = parse_list(key, value, 9)?;
    Ok(Mat3([[p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], p[8]]]))
}

fn fmt_mat3(m: &Mat3) -> String {
    m.0.iter()
        .flatten()
        .map(|e| format!("{e:?}"))
        .collect::<Vec<_>>()
        .join(",")
}
