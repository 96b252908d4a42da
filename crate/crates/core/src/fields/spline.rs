//! Clamped cubic spline used by [`Shape::RadialProfile`](super::Shape).
//!
//! The profile is pinned to zero slope at the origin (so the radial field is
//! differentiable there) and to zero value and slope at the last knot, which
//! makes the field compactly supported and C^1 across the support boundary.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialProfileSpec {
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

/// Piecewise-cubic radial function `r -> g(r)` with `g(r) = 0` beyond the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialProfileSpec", into = "RadialProfileSpec")]
pub struct RadialProfile {
    center: Option<Vec<f64>>,
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl TryFrom<RadialProfileSpec> for RadialProfile {
    type Error = crate::Error;

    fn try_from(spec: RadialProfileSpec) -> Result<Self> {
        RadialProfile::new(spec.center, spec.knots, spec.values)
    }
}

impl From<RadialProfile> for RadialProfileSpec {
    fn from(p: RadialProfile) -> Self {
        RadialProfileSpec {
            center: p.center,
            knots: p.knots,
            values: p.values,
        }
    }
}

impl RadialProfile {
    /// Knots must start at 0, increase strictly, and the last value must be 0.
    pub fn new(center: Option<Vec<f64>>, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(invalid(
                "knots",
                "need at least two knots and one value per knot",
            ));
        }
        if knots[0] != 0.0 {
            return Err(invalid("knots", "first knot must be 0"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(invalid("knots", "knots must be finite and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "values must be finite"));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(invalid("values", "profile must vanish at the last knot"));
        }
        let second = clamped_second_derivatives(&knots, &values);
        Ok(RadialProfile {
            center,
            knots,
            values,
            second,
        })
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.center.as_deref()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_radius(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub(crate) fn with_geometry(&self, center: Option<Vec<f64>>, scale: f64, amp: f64) -> Self {
        let knots: Vec<f64> = self.knots.iter().map(|k| k * scale).collect();
        let values: Vec<f64> = self.values.iter().map(|v| v * amp).collect();
        // Rescaling keeps knots valid, so construction cannot fail.
        RadialProfile::new(center, knots, values).expect("rescaled profile is valid")
    }

    fn segment(&self, r: f64) -> Option<usize> {
        if r < 0.0 || r >= self.support_radius() {
            return None;
        }
        let idx = self.knots.partition_point(|&k| k <= r);
        Some(idx - 1)
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.segment(r) {
            None => 0.0,
            Some(i) => {
                let (x0, x1) = (self.knots[i], self.knots[i + 1]);
                let h = x1 - x0;
                let a = (x1 - r) / h;
                let b = 1.0 - a;
                a * self.values[i]
                    + b * self.values[i + 1]
                    + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h
                        * h
                        / 6.0
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.segment(r) {
            None => 0.0,
            Some(i) => self.segment_derivative(i, (r - self.knots[i]) / (self.knots[i + 1] - self.knots[i])),
        }
    }

    fn segment_derivative(&self, i: usize, b: f64) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let a = 1.0 - b;
        (self.values[i + 1] - self.values[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * self.second[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.second[i + 1]
    }

    /// Exact max of |g'| per segment (g' is quadratic on each segment).
    pub fn max_abs_derivative(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.knots.len() - 1 {
            let mut cands = vec![0.0, 1.0];
            let dm = self.second[i + 1] - self.second[i];
            if dm != 0.0 {
                let b = -self.second[i] / dm;
                if b > 0.0 && b < 1.0 {
                    cands.push(b);
                }
            }
            for b in cands {
                best = best.max(self.segment_derivative(i, b).abs());
            }
        }
        best
    }

    /// Exact max of |g| on segment `i`.
    fn segment_max_abs(&self, i: usize) -> f64 {
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let mut best = self.values[i].abs().max(self.values[i + 1].abs());
        // roots of the quadratic derivative in b
        let h = x1 - x0;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let slope = (self.values[i + 1] - self.values[i]) / h;
        // g'(b) = qa b^2 + qb b + qc
        let qa = h * (m1 - m0) / 2.0;
        let qb = h * m0;
        let qc = slope - h * m0 / 3.0 - h * m1 / 6.0;
        let mut roots = Vec::new();
        if qa.abs() < 1e-300 {
            if qb != 0.0 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                roots.push((-qb + sq) / (2.0 * qa));
                roots.push((-qb - sq) / (2.0 * qa));
            }
        }
        for b in roots {
            if b > 0.0 && b < 1.0 {
                best = best.max(self.value(x0 + b * h).abs());
            }
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.knots.len() - 1)
            .map(|i| self.segment_max_abs(i))
            .fold(0.0, f64::max)
    }

    /// Smallest knot radius beyond which |g| ≤ eps holds on every later segment.
    pub fn local_decay_radius(&self, eps: f64) -> f64 {
        let mut radius = 0.0;
        for i in 0..self.knots.len() - 1 {
            if self.segment_max_abs(i) > eps {
                radius = self.knots[i + 1];
            }
        }
        radius
    }
}

fn clamped_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    diag[0] = 2.0 * h[0];
    sup[0] = h[0];
    rhs[0] = 6.0 * ((y[1] - y[0]) / h[0]);
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    sub[n - 1] = h[n - 2];
    diag[n - 1] = 2.0 * h[n - 2];
    rhs[n - 1] = 6.0 * (-(y[n - 1] - y[n - 2]) / h[n - 2]);

    // Thomas algorithm
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> RadialProfile {
        RadialProfile::new(None, vec![0.0, 0.5, 1.0, 2.0], vec![1.0, 0.8, 0.3, 0.0]).unwrap()
    }

    #[test]
    fn interpolates_knots() {
        let p = bell();
        for (k, v) in p.knots().iter().zip(p.values()) {
            assert!((p.value(*k) - v).abs() < 1e-14);
        }
        assert_eq!(p.value(2.5), 0.0);
    }

    #[test]
    fn clamped_ends() {
        let p = bell();
        assert!(p.derivative(0.0).abs() < 1e-12);
        assert!(p.derivative(2.0 - 1e-12).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = bell();
        for i in 1..40 {
            let r = i as f64 * 0.049;
            let fd = (p.value(r + 1e-6) - p.value(r - 1e-6)) / 2e-6;
            assert!((fd - p.derivative(r)).abs() < 1e-7, "r={r}");
        }
    }

    #[test]
    fn max_bounds_are_sound() {
        let p = bell();
        let lmax = p.max_abs_derivative();
        let vmax = p.max_abs();
        for i in 0..=4000 {
            let r = i as f64 * 5e-4;
            assert!(p.derivative(r).abs() <= lmax * (1.0 + 1e-12));
            assert!(p.value(r).abs() <= vmax * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_nonzero_tail() {
        assert!(RadialProfile::new(None, vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(RadialProfile::new(None, vec![0.1, 1.0], vec![1.0, 0.0]).is_err());
    }
}
