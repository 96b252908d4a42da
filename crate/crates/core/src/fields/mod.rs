//! Analytic test fields on R^N.
//!
//! Every field is a closed-form descriptor, not a sampled grid. Alongside
//! pointwise evaluation each field exposes the metadata the quadrature
//! engines rely on for exact domain truncation: a sound Lipschitz bound, a
//! sound decay radius `ε ↦ R(ε)` with `|u(x)| ≤ ε` whenever `|x| ≥ R(ε)`, and
//! (for radial shapes) the radial profile with its kinks.

mod complex;
mod spline;

use serde::{Deserialize, Serialize};

pub use complex::{ComplexField, Phase, VectorPotential};
pub use spline::{RadialProfile, RadialProfileSpec};

use crate::error::{invalid, Error, Result};

/// Space dimension N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension {
                n,
                reason: "dimension must be at least 1",
            });
        }
        Ok(Dimension(n))
    }

    pub fn n(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Inequality checkers need N ≥ 3.
    pub fn require_sobolev(self) -> Result<Self> {
        if self.0 < 3 {
            return Err(Error::InvalidDimension {
                n: self.0,
                reason: "inequality checks require N >= 3",
            });
        }
        Ok(self)
    }

    /// L^p variants need N > p.
    pub fn require_above(self, p: f64) -> Result<Self> {
        if !(self.as_f64() > p) {
            return Err(Error::InvalidDimension {
                n: self.0,
                reason: "L^p checks require N > p",
            });
        }
        Ok(self)
    }

    /// |S^{N-1}|, the surface area of the unit sphere in R^N.
    pub fn sphere_area(self) -> f64 {
        sphere_area(self.0)
    }

    /// Volume of the unit ball in R^N.
    pub fn ball_volume(self) -> f64 {
        sphere_area(self.0) / self.as_f64()
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

/// |S^{n-1}| via |S^{k}| = 2π/(k-1)·|S^{k-2}|.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

pub type Point = Vec<f64>;

/// max of exp(1 - 1/(1-s^2)) * 2s/(1-s^2)^2 over s in (0,1), attained at s = 3^{-1/4}.
fn bump_slope_max() -> f64 {
    let s = 3f64.powf(-0.25);
    bump_profile(s) * 2.0 * s / (1.0 - s * s).powi(2)
}

fn bump_profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_profile_deriv(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        -bump_profile(s) * 2.0 * s / (q * q)
    }
}

/// The enumerated field shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// amplitude · exp(−rate·|x − center|²)
    Gaussian {
        center: Point,
        rate: f64,
        amplitude: f64,
    },
    /// Clamped cubic radial profile around `center` (origin when absent).
    RadialProfile(RadialProfile),
    /// amplitude · exp(1 − 1/(1 − |x−c|²/radius²)) inside the ball, 0 outside.
    SmoothBump {
        center: Point,
        radius: f64,
        amplitude: f64,
    },
    /// amplitude · 1{|x − center| ≤ radius}
    Indicator {
        center: Point,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Constant { value: f64 },
    /// amplitude · exp(slope · x); only meaningful under the Gauss measure.
    Exponential { slope: Point, amplitude: f64 },
    Sum(Vec<Shape>),
}

fn one() -> f64 {
    1.0
}

/// Geometric change applied by [`ScalarField::transform`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Dilate(f64),
    Amplify(f64),
    Translate(Point),
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn dist_origin(x: &[f64], c: Option<&[f64]>) -> f64 {
    match c {
        Some(c) => dist(x, c),
        None => norm(x),
    }
}

impl Shape {
    fn validate(&self, n: usize) -> Result<()> {
        let check_center = |c: &[f64]| {
            if c.len() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                })
            } else if c.iter().any(|v| !v.is_finite()) {
                Err(invalid("center", "non-finite coordinate"))
            } else {
                Ok(())
            }
        };
        match self {
            Shape::Gaussian {
                center,
                rate,
                amplitude,
            } => {
                check_center(center)?;
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(invalid("rate", "must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(invalid("amplitude", "must be finite"));
                }
            }
            Shape::RadialProfile(p) => {
                if let Some(c) = p.center() {
                    check_center(c)?;
                }
            }
            Shape::SmoothBump {
                center,
                radius,
                amplitude,
            }
            | Shape::Indicator {
                center,
                radius,
                amplitude,
            } => {
                check_center(center)?;
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(invalid("radius", "must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(invalid("amplitude", "must be finite"));
                }
            }
            Shape::Constant { value } => {
                if !value.is_finite() {
                    return Err(invalid("value", "must be finite"));
                }
            }
            Shape::Exponential { slope, amplitude } => {
                check_center(slope)?;
                if !amplitude.is_finite() {
                    return Err(invalid("amplitude", "must be finite"));
                }
            }
            Shape::Sum(terms) => {
                if terms.is_empty() {
                    return Err(invalid("sum", "needs at least one term"));
                }
                for t in terms {
                    t.validate(n)?;
                }
            }
        }
        Ok(())
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Gaussian {
                center,
                rate,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                amplitude * (-rate * r2).exp()
            }
            Shape::RadialProfile(p) => p.value(dist_origin(x, p.center())),
            Shape::SmoothBump {
                center,
                radius,
                amplitude,
            } => amplitude * bump_profile(dist(x, center) / radius),
            Shape::Indicator {
                center,
                radius,
                amplitude,
            } => {
                if dist(x, center) <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Shape::Constant { value } => *value,
            Shape::Exponential { slope, amplitude } => {
                amplitude * x.iter().zip(slope).map(|(a, k)| a * k).sum::<f64>().exp()
            }
            Shape::Sum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    fn differentiable(&self) -> bool {
        match self {
            Shape::Indicator { amplitude, .. } => *amplitude == 0.0,
            Shape::Sum(terms) => terms.iter().all(|t| t.differentiable()),
            _ => true,
        }
    }

    fn add_grad(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Shape::Gaussian {
                center,
                rate,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                let f = -2.0 * rate * amplitude * (-rate * r2).exp();
                for ((o, a), c) in out.iter_mut().zip(x).zip(center) {
                    *o += f * (a - c);
                }
            }
            Shape::RadialProfile(p) => {
                let zero = vec![0.0; x.len()];
                let c = p.center().unwrap_or(&zero);
                let r = dist(x, c);
                if r > 0.0 {
                    let d = p.derivative(r) / r;
                    for ((o, a), c) in out.iter_mut().zip(x).zip(c) {
                        *o += d * (a - c);
                    }
                }
            }
            Shape::SmoothBump {
                center,
                radius,
                amplitude,
            } => {
                let r = dist(x, center);
                if r > 0.0 && r < *radius {
                    let d = amplitude * bump_profile_deriv(r / radius) / radius / r;
                    for ((o, a), c) in out.iter_mut().zip(x).zip(center) {
                        *o += d * (a - c);
                    }
                }
            }
            Shape::Indicator { .. } | Shape::Constant { .. } => {}
            Shape::Exponential { slope, amplitude } => {
                let v = amplitude * x.iter().zip(slope).map(|(a, k)| a * k).sum::<f64>().exp();
                for (o, k) in out.iter_mut().zip(slope) {
                    *o += v * k;
                }
            }
            Shape::Sum(terms) => {
                for t in terms {
                    t.add_grad(x, out);
                }
            }
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            Shape::Gaussian {
                rate, amplitude, ..
            } => amplitude.abs() * (2.0 * rate).sqrt() * (-0.5f64).exp(),
            Shape::RadialProfile(p) => p.max_abs_derivative(),
            Shape::SmoothBump {
                radius, amplitude, ..
            } => amplitude.abs() / radius * bump_slope_max(),
            Shape::Indicator { amplitude, .. } | Shape::Exponential { amplitude, .. } => {
                if *amplitude == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Shape::Constant { .. } => 0.0,
            Shape::Sum(terms) => terms.iter().map(|t| t.lipschitz()).sum(),
        }
    }

    fn sup_bound(&self) -> f64 {
        match self {
            Shape::Gaussian { amplitude, .. }
            | Shape::SmoothBump { amplitude, .. }
            | Shape::Indicator { amplitude, .. } => amplitude.abs(),
            Shape::RadialProfile(p) => p.max_abs(),
            Shape::Constant { value } => value.abs(),
            Shape::Exponential { amplitude, .. } => {
                if *amplitude == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Shape::Sum(terms) => terms.iter().map(|t| t.sup_bound()).sum(),
        }
    }

    fn support_radius(&self) -> Option<f64> {
        match self {
            Shape::RadialProfile(p) => Some(p.center().map(norm).unwrap_or(0.0) + p.support_radius()),
            Shape::SmoothBump { center, radius, .. } | Shape::Indicator { center, radius, .. } => {
                Some(norm(center) + radius)
            }
            Shape::Constant { value } if *value == 0.0 => Some(0.0),
            Shape::Sum(terms) => terms
                .iter()
                .map(|t| t.support_radius())
                .try_fold(0.0, |acc: f64, r| r.map(|r| acc.max(r))),
            _ => None,
        }
    }

    fn decay_radius(&self, eps: f64) -> f64 {
        if self.sup_bound() <= eps {
            return 0.0;
        }
        match self {
            Shape::Gaussian {
                center,
                rate,
                amplitude,
            } => norm(center) + ((amplitude.abs() / eps).ln() / rate).sqrt(),
            Shape::RadialProfile(p) => {
                p.center().map(norm).unwrap_or(0.0) + p.local_decay_radius(eps)
            }
            Shape::SmoothBump {
                center,
                radius,
                amplitude,
            } => {
                let lg = 1.0 - (eps / amplitude.abs()).ln();
                let s = (1.0 - 1.0 / lg).max(0.0).sqrt();
                norm(center) + radius * s.min(1.0)
            }
            Shape::Indicator { center, radius, .. } => norm(center) + radius,
            Shape::Constant { .. } | Shape::Exponential { .. } => f64::INFINITY,
            Shape::Sum(terms) => {
                let share = eps / terms.len() as f64;
                terms
                    .iter()
                    .map(|t| t.decay_radius(share))
                    .fold(0.0, f64::max)
            }
        }
    }

    fn center(&self) -> Option<&[f64]> {
        match self {
            Shape::Gaussian { center, .. }
            | Shape::SmoothBump { center, .. }
            | Shape::Indicator { center, .. } => Some(center),
            Shape::RadialProfile(p) => p.center(),
            _ => None,
        }
    }

    fn is_radial_about(&self, c: &[f64]) -> bool {
        match self {
            Shape::RadialProfile(p) if p.center().is_none() => c.iter().all(|v| *v == 0.0),
            Shape::Sum(terms) => terms.iter().all(|t| t.is_radial_about(c)),
            Shape::Constant { .. } | Shape::Exponential { .. } => false,
            s => s.center() == Some(c),
        }
    }

    fn first_center(&self, n: usize) -> Option<Point> {
        match self {
            Shape::RadialProfile(p) => {
                Some(p.center().map(|c| c.to_vec()).unwrap_or_else(|| vec![0.0; n]))
            }
            Shape::Sum(terms) => terms[0].first_center(n),
            s => s.center().map(|c| c.to_vec()),
        }
    }

    /// g(r) for a shape already known to be radial about its center.
    fn profile(&self, r: f64) -> f64 {
        match self {
            Shape::Gaussian {
                rate, amplitude, ..
            } => amplitude * (-rate * r * r).exp(),
            Shape::RadialProfile(p) => p.value(r),
            Shape::SmoothBump {
                radius, amplitude, ..
            } => amplitude * bump_profile(r / radius),
            Shape::Indicator {
                radius, amplitude, ..
            } => {
                if r <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Shape::Sum(terms) => terms.iter().map(|t| t.profile(r)).sum(),
            Shape::Constant { value } => *value,
            Shape::Exponential { .. } => f64::NAN,
        }
    }

    fn profile_deriv(&self, r: f64) -> f64 {
        match self {
            Shape::Gaussian {
                rate, amplitude, ..
            } => -2.0 * rate * r * amplitude * (-rate * r * r).exp(),
            Shape::RadialProfile(p) => p.derivative(r),
            Shape::SmoothBump {
                radius, amplitude, ..
            } => amplitude * bump_profile_deriv(r / radius) / radius,
            Shape::Sum(terms) => terms.iter().map(|t| t.profile_deriv(r)).sum(),
            _ => 0.0,
        }
    }

    fn kinks(&self, out: &mut Vec<f64>) {
        match self {
            Shape::RadialProfile(p) => out.extend_from_slice(&p.knots()[1..]),
            Shape::SmoothBump { radius, .. } | Shape::Indicator { radius, .. } => out.push(*radius),
            Shape::Sum(terms) => terms.iter().for_each(|t| t.kinks(out)),
            _ => {}
        }
    }

    fn transform(&self, t: &Transform) -> Shape {
        let map_center = |c: &[f64]| -> Point {
            match t {
                Transform::Dilate(l) => c.iter().map(|v| v * l).collect(),
                Transform::Translate(v) => c.iter().zip(v).map(|(a, b)| a + b).collect(),
                Transform::Amplify(_) => c.to_vec(),
            }
        };
        let (scale, amp) = match t {
            Transform::Dilate(l) => (*l, 1.0),
            Transform::Amplify(a) => (1.0, *a),
            Transform::Translate(_) => (1.0, 1.0),
        };
        match self {
            Shape::Gaussian {
                center,
                rate,
                amplitude,
            } => Shape::Gaussian {
                center: map_center(center),
                rate: rate / (scale * scale),
                amplitude: amplitude * amp,
            },
            Shape::RadialProfile(p) => {
                let center = match (p.center(), t) {
                    (None, Transform::Translate(v)) => Some(v.clone()),
                    (None, _) => None,
                    (Some(c), _) => Some(map_center(c)),
                };
                Shape::RadialProfile(p.with_geometry(center, scale, amp))
            }
            Shape::SmoothBump {
                center,
                radius,
                amplitude,
            } => Shape::SmoothBump {
                center: map_center(center),
                radius: radius * scale,
                amplitude: amplitude * amp,
            },
            Shape::Indicator {
                center,
                radius,
                amplitude,
            } => Shape::Indicator {
                center: map_center(center),
                radius: radius * scale,
                amplitude: amplitude * amp,
            },
            Shape::Constant { value } => Shape::Constant { value: value * amp },
            Shape::Exponential { slope, amplitude } => match t {
                Transform::Dilate(l) => Shape::Exponential {
                    slope: slope.iter().map(|k| k / l).collect(),
                    amplitude: *amplitude,
                },
                Transform::Amplify(a) => Shape::Exponential {
                    slope: slope.clone(),
                    amplitude: amplitude * a,
                },
                Transform::Translate(v) => {
                    let shift: f64 = slope.iter().zip(v).map(|(k, b)| k * b).sum();
                    Shape::Exponential {
                        slope: slope.clone(),
                        amplitude: amplitude * (-shift).exp(),
                    }
                }
            },
            Shape::Sum(terms) => Shape::Sum(terms.iter().map(|s| s.transform(t)).collect()),
        }
    }
}

/// A real-valued test function on R^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldSpec", into = "FieldSpec")]
pub struct ScalarField {
    dim: Dimension,
    shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub dim: Dimension,
    pub shape: Shape,
}

impl TryFrom<FieldSpec> for ScalarField {
    type Error = Error;
    fn try_from(s: FieldSpec) -> Result<Self> {
        ScalarField::new(s.dim, s.shape)
    }
}

impl From<ScalarField> for FieldSpec {
    fn from(f: ScalarField) -> Self {
        FieldSpec {
            dim: f.dim,
            shape: f.shape,
        }
    }
}

/// Radial view of a field: `u(x) = g(|x − center|)`.
#[derive(Debug, Clone, Copy)]
pub struct RadialView<'a> {
    shape: &'a Shape,
}

impl RadialView<'_> {
    pub fn value(&self, r: f64) -> f64 {
        self.shape.profile(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.shape.profile_deriv(r)
    }

    /// Radii where g or its low derivatives jump, sorted and deduplicated.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = Vec::new();
        self.shape.kinks(&mut k);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

impl ScalarField {
    pub fn new(dim: Dimension, shape: Shape) -> Result<Self> {
        shape.validate(dim.n())?;
        Ok(ScalarField { dim, shape })
    }

    pub fn gaussian(n: usize, rate: f64, amplitude: f64) -> Result<Self> {
        ScalarField::new(
            Dimension::new(n)?,
            Shape::Gaussian {
                center: vec![0.0; n],
                rate,
                amplitude,
            },
        )
    }

    pub fn bump(n: usize, radius: f64, amplitude: f64) -> Result<Self> {
        ScalarField::new(
            Dimension::new(n)?,
            Shape::SmoothBump {
                center: vec![0.0; n],
                radius,
                amplitude,
            },
        )
    }

    pub fn indicator(n: usize, radius: f64) -> Result<Self> {
        ScalarField::new(
            Dimension::new(n)?,
            Shape::Indicator {
                center: vec![0.0; n],
                radius,
                amplitude: 1.0,
            },
        )
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        ScalarField::new(Dimension::new(n)?, Shape::Constant { value })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim.n() {
            return Err(Error::DimensionMismatch {
                expected: self.dim.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.shape.eval(x))
    }

    /// Unchecked evaluation for hot loops whose points are built internally.
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.shape.eval(x)
    }

    pub fn is_differentiable(&self) -> bool {
        self.shape.differentiable()
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if !self.is_differentiable() {
            return Err(Error::Unsupported(
                "gradient of a discontinuous field".into(),
            ));
        }
        let mut g = vec![0.0; x.len()];
        self.shape.add_grad(x, &mut g);
        Ok(g)
    }

    /// Sound global Lipschitz bound (`+inf` for discontinuous or unbounded shapes).
    pub fn lipschitz_bound(&self) -> f64 {
        self.shape.lipschitz()
    }

    /// Sound upper bound on sup|u|.
    pub fn sup_bound(&self) -> f64 {
        self.shape.sup_bound()
    }

    /// R(ε) with |u(x)| ≤ ε whenever |x| ≥ R(ε); `+inf` when no such radius exists.
    pub fn decay_radius(&self, eps: f64) -> f64 {
        self.shape.decay_radius(eps)
    }

    /// Radius R with u = 0 for |x| ≥ R, when the field has compact support.
    pub fn support_radius(&self) -> Option<f64> {
        self.shape.support_radius()
    }

    /// Center about which the field is radial, if any.
    pub fn radial_center(&self) -> Option<Point> {
        let c = self.shape.first_center(self.dim.n())?;
        if self.shape.is_radial_about(&c) {
            Some(c)
        } else {
            None
        }
    }

    /// The field translated so that its radial center is the origin.
    pub fn centered(&self) -> Option<ScalarField> {
        let c = self.radial_center()?;
        if c.iter().all(|v| *v == 0.0) {
            return Some(self.clone());
        }
        let v: Vec<f64> = c.iter().map(|a| -a).collect();
        self.translate(&v).ok()
    }

    pub fn radial_view(&self) -> Option<RadialView<'_>> {
        self.radial_center().map(|_| RadialView { shape: &self.shape })
    }

    /// `x ↦ t·u((x − v)/λ)` for the requested operation.
    pub fn transform(&self, t: &Transform) -> Result<ScalarField> {
        match t {
            Transform::Dilate(l) if !(*l > 0.0) || !l.is_finite() => {
                return Err(invalid("lambda", "dilation factor must be positive"))
            }
            Transform::Amplify(a) if !a.is_finite() => {
                return Err(invalid("t", "amplitude factor must be finite"))
            }
            Transform::Translate(v) => self.check_point(v)?,
            _ => {}
        }
        ScalarField::new(self.dim, self.shape.transform(t))
    }

    pub fn dilate(&self, lambda: f64) -> Result<ScalarField> {
        self.transform(&Transform::Dilate(lambda))
    }

    pub fn amplify(&self, t: f64) -> Result<ScalarField> {
        self.transform(&Transform::Amplify(t))
    }

    pub fn translate(&self, v: &[f64]) -> Result<ScalarField> {
        self.transform(&Transform::Translate(v.to_vec()))
    }

    /// Gaussian components `(center, rate, amplitude)` when the field is a
    /// Gaussian or a sum of Gaussians.
    pub fn gaussian_terms(&self) -> Option<Vec<(&[f64], f64, f64)>> {
        fn collect<'a>(s: &'a Shape, out: &mut Vec<(&'a [f64], f64, f64)>) -> bool {
            match s {
                Shape::Gaussian {
                    center,
                    rate,
                    amplitude,
                } => {
                    out.push((center, *rate, *amplitude));
                    true
                }
                Shape::Sum(ts) => ts.iter().all(|t| collect(t, out)),
                _ => false,
            }
        }
        let mut out = Vec::new();
        collect(&self.shape, &mut out).then_some(out)
    }

    /// Short stable label used in report rows.
    pub fn label(&self) -> String {
        stable_hash(&serde_json::to_string(&self.shape).unwrap_or_default())
    }
}

/// FNV-1a of a string, as 16 hex digits.
pub(crate) fn stable_hash(s: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(x: f64) -> f64 {
        x.exp()
    }

    fn zoo(n: usize) -> Vec<ScalarField> {
        let d = Dimension::new(n).unwrap();
        let mut c = vec![0.0; n];
        c[0] = 0.3;
        vec![
            ScalarField::gaussian(n, 1.0, 1.0).unwrap(),
            ScalarField::new(
                d,
                Shape::Gaussian {
                    center: c.clone(),
                    rate: 2.5,
                    amplitude: -0.7,
                },
            )
            .unwrap(),
            ScalarField::bump(n, 1.5, 2.0).unwrap(),
            ScalarField::new(
                d,
                Shape::RadialProfile(
                    RadialProfile::new(
                        Some(c.clone()),
                        vec![0.0, 0.4, 1.0, 1.7],
                        vec![1.0, 0.9, 0.25, 0.0],
                    )
                    .unwrap(),
                ),
            )
            .unwrap(),
            ScalarField::new(
                d,
                Shape::Sum(vec![
                    Shape::Gaussian {
                        center: vec![0.0; n],
                        rate: 1.0,
                        amplitude: 1.0,
                    },
                    Shape::SmoothBump {
                        center: c,
                        radius: 0.8,
                        amplitude: 0.5,
                    },
                ]),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((g.eval(&[1.0, 0.0, 0.0]).unwrap() - e(-1.0)).abs() < 1e-15);
        assert!((g.eval(&[0.6, 0.8, 0.0]).unwrap() - 0.367879).abs() < 1e-6);
        let ind = ScalarField::indicator(3, 1.0).unwrap();
        assert_eq!(ind.eval(&[2.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(ind.eval(&[0.5, 0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            g.eval(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grad_examples() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        assert_eq!(g.grad(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        let v = g.grad(&[1.0, 0.0, 0.0]).unwrap();
        assert!((v[0] + 2.0 * e(-1.0)).abs() < 1e-15);
        assert_eq!(&v[1..], &[0.0, 0.0]);
        let b = ScalarField::bump(3, 1.0, 1.0).unwrap();
        assert_eq!(b.grad(&[2.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        let ind = ScalarField::indicator(3, 1.0).unwrap();
        assert!(matches!(ind.grad(&[0.0; 3]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn transform_examples() {
        let g = ScalarField::gaussian(3, 1.3, 1.0).unwrap();
        assert_eq!(g.dilate(1.0).unwrap().amplify(1.0).unwrap(), g);
        match g.dilate(2.0).unwrap().shape() {
            Shape::Gaussian { rate, .. } => assert!((rate - 1.3 / 4.0).abs() < 1e-15),
            _ => panic!(),
        }
        match g.translate(&[1.0, 2.0, 3.0]).unwrap().shape() {
            Shape::Gaussian { center, .. } => assert_eq!(center, &vec![1.0, 2.0, 3.0]),
            _ => panic!(),
        }
        assert!(g.dilate(0.0).is_err());
    }

    #[test]
    fn transform_matches_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in zoo(3) {
            let (l, t) = (1.7, -0.6);
            let v = [0.2, -0.1, 0.4];
            let h = f.dilate(l).unwrap().amplify(t).unwrap().translate(&v).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| (a - b) / l).collect();
                let want = t * f.eval(&y).unwrap();
                assert!((h.eval(&x).unwrap() - want).abs() < 1e-12);
            }
            let lf = f.lipschitz_bound();
            assert!((h.lipschitz_bound() - lf * t.abs() / l).abs() < 1e-12 * lf.max(1.0));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in zoo(3) {
            let step = 1e-4;
            for _ in 0..100 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let g = f.grad(&x).unwrap();
                for k in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let fd = (f.eval(&xp).unwrap() - f.eval(&xm).unwrap()) / (2.0 * step);
                    let scale = norm(&g).max(1e-3);
                    assert!(
                        (fd - g[k]).abs() / scale <= 1e-5,
                        "{:?} at {:?}: fd {fd} vs {}",
                        f.shape(),
                        x,
                        g[k]
                    );
                }
            }
        }
    }

    #[test]
    fn decay_radius_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in zoo(3) {
            for &eps in &[0.5, 0.1, 1e-3, 1e-8] {
                let r = f.decay_radius(eps) * 1.01;
                for _ in 0..200 {
                    let mut x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let s = norm(&x);
                    x.iter_mut().for_each(|v| *v *= r / s);
                    assert!(f.eval(&x).unwrap().abs() <= eps, "{:?} eps {eps}", f.shape());
                }
            }
        }
    }

    #[test]
    fn lipschitz_bound_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in zoo(3) {
            let l = f.lipschitz_bound();
            for _ in 0..2000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y: Vec<f64> = x.iter().map(|a| a + rng.random_range(-0.3..0.3)).collect();
                let d = (f.eval(&x).unwrap() - f.eval(&y).unwrap()).abs();
                assert!(d <= l * dist(&x, &y) * (1.0 + 1e-12) + 1e-15);
            }
        }
        assert_eq!(ScalarField::indicator(3, 1.0).unwrap().lipschitz_bound(), f64::INFINITY);
    }

    #[test]
    fn radial_detection() {
        let fs = zoo(3);
        assert!(fs[0].radial_center().is_some());
        assert!(fs[1].radial_center().is_some());
        assert!(fs[3].radial_center().is_some());
        assert!(fs[4].radial_center().is_none());
        let t = fs[0].translate(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.radial_center(), Some(vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn sphere_constants() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((Dimension::new(3).unwrap().ball_volume() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(Dimension::new(0).is_err());
        assert!(Dimension::new(2).unwrap().require_sobolev().is_err());
    }

    #[test]
    fn serde_roundtrip_and_strictness() {
        let f = &zoo(3)[3];
        let s = serde_json::to_string(f).unwrap();
        let back: ScalarField = serde_json::from_str(&s).unwrap();
        assert_eq!(&back, f);
        let bad = r#"{"dim":3,"shape":{"gaussian":{"center":[0,0,0],"rate":1,"amplitude":1,"x":2}}}"#;
        assert!(serde_json::from_str::<ScalarField>(bad).is_err());
        let wrong_dim = r#"{"dim":3,"shape":{"gaussian":{"center":[0,0],"rate":1,"amplitude":1}}}"#;
        assert!(serde_json::from_str::<ScalarField>(wrong_dim).is_err());
    }

    proptest! {
        #[test]
        fn dilation_scales_lipschitz(l in 0.1f64..10.0, rate in 0.1f64..5.0) {
            let g = ScalarField::gaussian(4, rate, 1.0).unwrap();
            let h = g.dilate(l).unwrap();
            prop_assert!((h.lipschitz_bound() * l / g.lipschitz_bound() - 1.0).abs() < 1e-12);
            let eps = 0.01;
            prop_assert!((h.decay_radius(eps) / l / g.decay_radius(eps) - 1.0).abs() < 1e-12);
        }
    }
}
