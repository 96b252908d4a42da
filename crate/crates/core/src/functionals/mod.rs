//! Nonlocal functionals, entropies, log-moments and energies.
//!
//! Every pair functional is the single kernel
//!
//! ```text
//!     ∫∫ F(|u(x) − u(y)|) / |x − y|^{N+p} dx dy
//! ```
//!
//! with `F` a [`MonotoneEnvelope`]. `I_δ` with exponent p is the threshold
//! envelope `F = δ^p·1{t > δ}`, so [`i_delta`], [`i_delta_p`] and
//! [`f_functional`] share one code path and agree bitwise.

mod integrals;
mod pair;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{McSpec, RadialSpec};

pub use integrals::{
    dirichlet_energy, ent_mu, entropy_l2, entropy_l2_complex, gauss_lsi_sides, j_delta_energy,
    j_energy, l2_norm_sq, log_moment_lp, lp_integral, restricted_power_integral, Density,
    GaussSides, LevelSet, Measure,
};
pub use pair::{
    f_functional, i_delta, i_delta_magnetic, i_delta_p, radial_grid_step, MagneticPair,
};

/// Kernel parameters for the threshold functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub delta: f64,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub envelope: Option<MonotoneEnvelope>,
}

fn two() -> f64 {
    2.0
}

impl KernelSpec {
    pub fn new(delta: f64) -> Self {
        KernelSpec {
            delta,
            p: 2.0,
            envelope: None,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive and finite"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid("p", "must be at least 1"));
        }
        if let Some(e) = &self.envelope {
            e.validate()?;
        }
        Ok(())
    }

    /// The envelope actually integrated: the explicit one, or `δ^p·1{t > δ}`.
    pub fn effective_envelope(&self) -> MonotoneEnvelope {
        self.envelope
            .clone()
            .unwrap_or_else(|| MonotoneEnvelope::threshold(self.delta, self.p))
    }
}

/// Non-decreasing F: [0, ∞) → [0, ∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneEnvelope {
    /// F(t) = t^q, sub-homogeneous with β = q.
    PowerLaw { q: f64 },
    /// F(t) = scale·1{t > tau}.
    Threshold { tau: f64, scale: f64 },
}

/// x^p, exact for small integer p.
pub(crate) fn pow_p(x: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

impl MonotoneEnvelope {
    /// `δ^p·1{t > δ}`, the envelope of I_δ with exponent p.
    pub fn threshold(delta: f64, p: f64) -> Self {
        MonotoneEnvelope::Threshold {
            tau: delta,
            scale: pow_p(delta, p),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            MonotoneEnvelope::PowerLaw { q } => pow_p(t, q),
            MonotoneEnvelope::Threshold { tau, scale } => {
                if t > tau {
                    scale
                } else {
                    0.0
                }
            }
        }
    }

    /// Sub-homogeneity exponent; `None` for envelopes without one.
    pub fn beta(&self) -> Option<f64> {
        match *self {
            MonotoneEnvelope::PowerLaw { q } => Some(q),
            MonotoneEnvelope::Threshold { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            MonotoneEnvelope::PowerLaw { q } => format!("t^{q}"),
            MonotoneEnvelope::Threshold { tau, scale } => format!("{scale}*1{{t>{tau}}}"),
        }
    }

    /// F vanishes on [0, vanishing_threshold].
    pub fn vanishing_threshold(&self) -> f64 {
        match *self {
            MonotoneEnvelope::PowerLaw { .. } => 0.0,
            MonotoneEnvelope::Threshold { tau, .. } => tau,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, MonotoneEnvelope::Threshold { scale, .. } if scale == 0.0)
    }

    /// Parameter checks, then monotonicity and (when β exists)
    /// F(ts) ≤ t^β F(s) on a 50×50 grid, tolerance 1e-12 relative.
    pub fn validate(&self) -> Result<()> {
        match *self {
            MonotoneEnvelope::PowerLaw { q } => {
                if !(q > 0.0 && q.is_finite()) {
                    return Err(invalid("q", "power-law exponent must be positive"));
                }
            }
            MonotoneEnvelope::Threshold { tau, scale } => {
                if !(tau >= 0.0 && tau.is_finite() && scale >= 0.0 && scale.is_finite()) {
                    return Err(invalid("threshold", "tau and scale must be finite and >= 0"));
                }
            }
        }
        let grid: Vec<f64> = (0..50).map(|i| 1e-3 * 1.2f64.powi(i)).collect();
        for w in grid.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            if !(a >= 0.0) || b < a {
                return Err(Error::InvalidEnvelope(format!(
                    "{} is not non-decreasing and nonnegative near t = {}",
                    self.name(),
                    w[0]
                )));
            }
        }
        if let Some(beta) = self.beta() {
            for &t in &grid {
                for &s in &grid {
                    let lhs = self.eval(t * s);
                    let rhs = t.powf(beta) * self.eval(s);
                    if lhs > rhs + 1e-12 * rhs.abs().max(1e-300) {
                        return Err(Error::InvalidEnvelope(format!(
                            "{}: F({t}·{s}) > t^β F({s})",
                            self.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Energy parameter ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    /// Radial engine for radial Lipschitz fields, Monte Carlo otherwise.
    #[default]
    Auto,
    Mc,
    Radial,
}

/// Engine selection plus the parameters of both engines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSpec {
    pub mode: EngineMode,
    pub mc: McSpec,
    pub radial: RadialSpec,
}

impl EngineSpec {
    pub fn mc(mc: McSpec) -> Self {
        EngineSpec {
            mode: EngineMode::Mc,
            mc,
            radial: RadialSpec::default(),
        }
    }

    pub fn radial(radial: RadialSpec) -> Self {
        EngineSpec {
            mode: EngineMode::Radial,
            mc: McSpec::default(),
            radial,
        }
    }

    pub fn with_mode(mut self, mode: EngineMode) -> Self {
        self.mode = mode;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelopes_validate() {
        for q in [1.0, 2.0, 3.0, 2.5] {
            MonotoneEnvelope::PowerLaw { q }.validate().unwrap();
        }
        MonotoneEnvelope::threshold(0.1, 2.0).validate().unwrap();
        assert!(MonotoneEnvelope::PowerLaw { q: -1.0 }.validate().is_err());
        assert!(MonotoneEnvelope::Threshold { tau: 0.1, scale: -1.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn power_law_saturates_sub_homogeneity() {
        let f = MonotoneEnvelope::PowerLaw { q: 3.0 };
        assert_eq!(f.eval(2.0), 8.0);
        assert_eq!(f.eval(2.0), 2f64.powi(3) * f.eval(1.0));
    }

    #[test]
    fn threshold_is_delta_p_indicator() {
        let f = MonotoneEnvelope::threshold(0.5, 3.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(0.50001), 0.125);
        assert_eq!(f.beta(), None);
    }

    #[test]
    fn kernel_spec_serde_is_strict() {
        let k: KernelSpec = serde_json::from_str(r#"{"delta":0.1}"#).unwrap();
        assert_eq!(k.p, 2.0);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"delta":0.1,"q":1}"#).is_err());
        let e: MonotoneEnvelope = serde_json::from_str(r#"{"power_law":{"q":3}}"#).unwrap();
        assert_eq!(e, MonotoneEnvelope::PowerLaw { q: 3.0 });
    }
}
