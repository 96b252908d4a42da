//! Integration engines.
//!
//! * [`mc`]: stratified importance-sampling Monte Carlo for pair integrals
//!   over R^N × R^N, with per-chunk counter-based streams and an ordered
//!   reduction, so estimates are bit-identical for any worker count.
//! * [`radial`]: deterministic (r, s, θ) tensor quadrature for radial fields.
//! * [`volume`]: single integrals over R^N (radial, Monte Carlo, Gauss–Hermite).

pub mod mc;
pub mod radial;
pub mod rules;
pub mod volume;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use mc::{mc_pair_integrate, mc_pair_integrate_many, PairIntegrand, PairPlan, XRegion};
pub use radial::{radial_pair_integrate, RadialDomain, RadialPairIntegrand, RadialPlan};
pub use volume::{gauss_volume_integrate, mc_volume_integrate, radial_volume_integrate, xlogx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Radial,
    ClosedForm,
    GaussHermite,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Radial => "radial",
            Method::ClosedForm => "closed_form",
            Method::GaussHermite => "gauss_hermite",
        }
    }
}

/// A numerical value with its error accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Statistical standard error (0 for deterministic engines).
    pub stderr: f64,
    pub n_effective: u64,
    /// Rigorous bound on the mass removed by domain truncation.
    pub tail_bound: f64,
    pub method: Method,
    pub diverged: bool,
    /// Grid-refinement discrepancy |I(n) − I(n/2)| for deterministic engines.
    pub discretization: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            n_effective: 0,
            tail_bound: 0.0,
            method: Method::ClosedForm,
            diverged: false,
            discretization: 0.0,
        }
    }

    pub fn zero() -> Self {
        Estimate::exact(0.0)
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.value *= c;
        self.stderr *= c.abs();
        self.tail_bound *= c.abs();
        self.discretization *= c.abs();
        self
    }

    /// Estimate of a smooth function of several estimates: `value` with
    /// each error term propagated to first order through the partial
    /// derivatives `inputs[i].0`, assuming no cancellation between inputs.
    pub fn derived(value: f64, inputs: &[(f64, &Estimate)]) -> Estimate {
        let mut out = Estimate::exact(value);
        for (d, e) in inputs {
            let d = d.abs();
            out.stderr += d * e.stderr;
            out.discretization += d * e.discretization;
            out.tail_bound += d * e.tail_bound;
            out.diverged |= e.diverged;
            out.n_effective = out.n_effective.max(e.n_effective);
            if out.method == Method::ClosedForm {
                out.method = e.method;
            }
        }
        out
    }

    /// Error bar used by comparisons: stderr for MC, discretization otherwise.
    pub fn uncertainty(&self) -> f64 {
        self.stderr + self.discretization + self.tail_bound
    }
}

/// Monte Carlo engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub master_seed: u64,
    pub n_samples: u64,
    pub chunk_size: u64,
    /// Relative tail threshold ε: the x-domain is truncated at R(ε·sup|u|)
    /// where no exact truncation applies.
    pub outer_radius_eps: f64,
    pub radial_strata: u64,
    /// H_max = h_max_factor · R for the pair-variable range.
    pub h_max_factor: f64,
    /// Number of worker threads; never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            master_seed: 0x5eed_1234,
            n_samples: 1 << 20,
            chunk_size: 1 << 14,
            outer_radius_eps: 1e-6,
            radial_strata: 16,
            h_max_factor: 64.0,
            workers: None,
        }
    }
}

impl McSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.n_samples = n;
        self
    }

    pub fn n_chunks(&self) -> u64 {
        self.n_samples.div_ceil(self.chunk_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 || self.n_samples < self.chunk_size {
            return Err(invalid("n_samples", "need n_samples >= chunk_size > 0"));
        }
        if self.n_chunks() < 2 {
            return Err(invalid("n_samples", "need at least two chunks for an error bar"));
        }
        if self.radial_strata == 0 || !self.chunk_size.is_multiple_of(self.radial_strata) {
            return Err(invalid(
                "radial_strata",
                "chunk_size must be a positive multiple of radial_strata",
            ));
        }
        if !(self.outer_radius_eps > 0.0 && self.outer_radius_eps < 1.0) {
            return Err(invalid("outer_radius_eps", "must lie in (0, 1)"));
        }
        if !(self.h_max_factor > 1.0) {
            return Err(invalid("h_max_factor", "must exceed 1"));
        }
        Ok(())
    }
}

/// Deterministic radial engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialSpec {
    pub n_r: usize,
    pub n_s: usize,
    pub n_theta: usize,
    /// Overrides the automatic outer radius of the r-domain.
    pub r_max: Option<f64>,
}

impl Default for RadialSpec {
    fn default() -> Self {
        RadialSpec {
            n_r: 16,
            n_s: 16,
            n_theta: 16,
            r_max: None,
        }
    }
}

impl RadialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_s == 0 || self.n_theta == 0 {
            return Err(invalid("radial", "grid sizes must be positive"));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0) {
                return Err(invalid("r_max", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, num: usize, den: usize) -> Self {
        RadialSpec {
            n_r: (self.n_r * num / den).max(1),
            n_s: (self.n_s * num / den).max(1),
            n_theta: (self.n_theta * num / den).max(1),
            r_max: self.r_max,
        }
    }
}
