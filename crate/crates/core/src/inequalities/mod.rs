//! Inequality checkers, admissible constants and family sweeps.
//!
//! Inequalities with an unspecified constant C are reported through an
//! [`RhsBuilder`], the map C ↦ rhs(C). The admissible constant is its exact
//! inverse at the instance's lhs. A family constant is the largest admissible
//! constant over a training split, and it is re-validated on a held-out split.

mod checks;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::functionals::{EngineSpec, MonotoneEnvelope};

pub use checks::{
    check_diamagnetic, check_euclidean_family, check_gauss_lsi, check_logsobolev_main,
    check_magnetic_lsi, check_nonlocal_sobolev, check_small_set_bound, check_envelope_lsi, jensen_gap,
    jensen_gap_p, small_set_pointwise_holds,
};

/// Relative floor below which deterministic deficits count as zero.
pub const DETERMINISTIC_TOLERANCE: f64 = 1e-9;

/// rhs as a function of the free constant C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsBuilder {
    /// rhs(C) = (N/2)·log(C·base)
    Log { half_n: f64, base: f64 },
    /// rhs(C) = C·base
    Linear { base: f64 },
}

impl RhsBuilder {
    pub fn eval(&self, c: f64) -> f64 {
        match *self {
            RhsBuilder::Log { half_n, base } => half_n * (c * base).ln(),
            RhsBuilder::Linear { base } => c * base,
        }
    }

    /// Smallest C with rhs(C) ≥ lhs; `None` when no finite C exists.
    pub fn invert(&self, lhs: f64) -> Option<f64> {
        let c = match *self {
            RhsBuilder::Log { half_n, base } => (lhs / half_n).exp() / base,
            RhsBuilder::Linear { base } => {
                if lhs <= 0.0 {
                    0.0
                } else {
                    lhs / base
                }
            }
        };
        (c.is_finite() && c >= 0.0).then_some(c)
    }
}

/// Provenance of a report row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportInputs {
    pub field: String,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub parameter: Option<f64>,
    pub engine: String,
}

impl ReportInputs {
    pub(crate) fn new(u_label: String, engine: &EngineSpec) -> Self {
        ReportInputs {
            field: u_label,
            engine: crate::fields::stable_hash(&serde_json::to_string(engine).unwrap_or_default()),
            ..Default::default()
        }
    }
}

/// One inequality instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality_id: String,
    pub lhs: f64,
    /// rhs at the constant in `constant`, or the fully explicit rhs.
    pub rhs: Option<f64>,
    /// rhs − lhs (for Jensen: lhs − rhs, the gap).
    pub deficit: Option<f64>,
    pub constant: Option<f64>,
    pub admissible_constant: Option<f64>,
    pub rhs_builder: Option<RhsBuilder>,
    /// 3 × combined standard error of the deficit.
    pub stat_margin: f64,
    /// Propagated discretization and truncation bounds of the deficit.
    pub numerical_error: f64,
    /// Combined standard error of the deficit.
    pub stderr: f64,
    /// (standard error, numerical error) of the lhs.
    pub lhs_error: (f64, f64),
    /// (standard error, numerical error) of the builder's base, or of the
    /// explicit rhs when there is no builder.
    pub base_error: (f64, f64),
    /// A constituent integral diverged; the inequality holds trivially.
    pub degenerate: bool,
    pub inputs: ReportInputs,
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub(crate) fn new(id: &str, lhs: f64, inputs: ReportInputs) -> Self {
        InequalityReport {
            inequality_id: id.to_string(),
            lhs,
            rhs: None,
            deficit: None,
            constant: None,
            admissible_constant: None,
            rhs_builder: None,
            stat_margin: 0.0,
            numerical_error: 0.0,
            stderr: 0.0,
            lhs_error: (0.0, 0.0),
            base_error: (0.0, 0.0),
            degenerate: false,
            inputs,
            details: BTreeMap::new(),
        }
    }

    pub(crate) fn explicit(mut self, rhs: f64) -> Self {
        self.rhs = Some(rhs);
        self.deficit = Some(rhs - self.lhs);
        self
    }

    pub(crate) fn with_builder(mut self, b: RhsBuilder) -> Self {
        self.rhs_builder = Some(b);
        self.admissible_constant = b.invert(self.lhs);
        self
    }

    pub(crate) fn detail(mut self, k: &str, v: f64) -> Self {
        self.details.insert(k.to_string(), v);
        self
    }

    pub(crate) fn errors(mut self, lhs: (f64, f64), base: (f64, f64)) -> Self {
        self.lhs_error = lhs;
        self.base_error = base;
        self.refresh_margins();
        self
    }

    /// Propagate the stored errors to the deficit at the current constant
    /// (the admissible one when none is set).
    fn refresh_margins(&mut self) {
        let scale = match self.rhs_builder {
            None => 1.0,
            Some(RhsBuilder::Log { half_n, base }) => half_n / base,
            Some(RhsBuilder::Linear { .. }) => {
                self.constant.or(self.admissible_constant).unwrap_or(0.0)
            }
        };
        self.stderr = self.lhs_error.0 + scale * self.base_error.0;
        self.stat_margin = 3.0 * self.stderr;
        self.numerical_error = self.lhs_error.1 + scale * self.base_error.1;
    }

    /// Fill rhs and deficit at the constant C.
    pub fn at_constant(&self, c: f64) -> Self {
        let mut r = self.clone();
        if let Some(b) = self.rhs_builder {
            let rhs = b.eval(c);
            r.constant = Some(c);
            r.rhs = Some(rhs);
            r.deficit = Some(rhs - self.lhs);
            r.refresh_margins();
        }
        r
    }

    /// Total tolerance: stat_margin + numerical error + a relative floor.
    pub fn tolerance(&self) -> f64 {
        self.stat_margin
            + self.numerical_error
            + DETERMINISTIC_TOLERANCE * self.lhs.abs().max(self.rhs.unwrap_or(0.0).abs()).max(1.0)
    }

    /// deficit ≥ −tolerance (true when degenerate or no deficit is defined).
    pub fn holds(&self) -> bool {
        self.degenerate || self.deficit.is_none_or(|d| d >= -self.tolerance())
    }
}

/// Which checker a sweep or a CLI config runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InequalityId {
    NonlocalSobolev { lambda: f64 },
    LogsobolevMain,
    EnvelopeLsi { envelope: MonotoneEnvelope },
    SmallSetBound { lambda: f64 },
    JensenGap { p: f64 },
    GaussLsi,
    EuclideanFamily { a: f64 },
    /// Complex checks take the scalar field as modulus with a zero phase.
    MagneticLsi { potential: crate::fields::VectorPotential },
    Diamagnetic { potential: crate::fields::VectorPotential },
}

impl InequalityId {
    pub fn uses_delta(&self) -> bool {
        matches!(
            self,
            InequalityId::NonlocalSobolev { .. }
                | InequalityId::LogsobolevMain
                | InequalityId::SmallSetBound { .. }
                | InequalityId::MagneticLsi { .. }
                | InequalityId::Diamagnetic { .. }
        )
    }

    /// Run the checker on one instance (`delta` ignored when unused).
    pub fn check(&self, u: &ScalarField, delta: f64, engine: &EngineSpec) -> Result<InequalityReport> {
        use crate::fields::ComplexField;
        match self {
            InequalityId::NonlocalSobolev { lambda } => check_nonlocal_sobolev(u, delta, *lambda, engine),
            InequalityId::LogsobolevMain => check_logsobolev_main(u, delta, engine),
            InequalityId::EnvelopeLsi { envelope } => check_envelope_lsi(u, envelope, engine),
            InequalityId::SmallSetBound { lambda } => check_small_set_bound(u, delta, *lambda, engine),
            InequalityId::JensenGap { p } => jensen_gap_p(u, *p, engine),
            InequalityId::GaussLsi => check_gauss_lsi(u, engine),
            InequalityId::EuclideanFamily { a } => check_euclidean_family(u, *a, engine),
            InequalityId::MagneticLsi { potential } => {
                check_magnetic_lsi(&ComplexField::real(u.clone()), potential, delta, engine)
            }
            InequalityId::Diamagnetic { potential } => {
                check_diamagnetic(&ComplexField::real(u.clone()), potential, delta, engine)
            }
        }
    }
}

/// Result of [`sweep_family`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySweep {
    pub inequality_id: String,
    pub fields: Vec<ScalarField>,
    pub deltas: Vec<f64>,
    pub reports: Vec<InequalityReport>,
    /// Indices into `reports` of the held-out instances.
    pub held_out: Vec<usize>,
    /// Instances excluded because a constituent diverged or failed.
    pub excluded: Vec<(usize, String)>,
    /// Largest admissible constant over the training instances.
    pub family_constant: Option<f64>,
    /// Largest admissible constant over every instance.
    pub sup_all: Option<f64>,
    /// Every held-out instance satisfies the inequality at `family_constant`.
    pub held_out_ok: bool,
    /// Held-out reports re-evaluated at `family_constant`.
    pub validation: Vec<InequalityReport>,
}

/// Run `id` over fields × deltas, take the supremum admissible constant on a
/// seeded 80/20 split and validate it on the held-out 20%.
pub fn sweep_family(
    fields: &[ScalarField],
    deltas: &[f64],
    id: &InequalityId,
    engine: &EngineSpec,
    seed: u64,
) -> Result<FamilySweep> {
    if fields.is_empty() {
        return Err(Error::Precondition("family sweep needs at least one field".into()));
    }
    let ds: Vec<f64> = if id.uses_delta() {
        if deltas.is_empty() {
            return Err(Error::Precondition("this inequality needs a delta grid".into()));
        }
        deltas.to_vec()
    } else {
        vec![f64::NAN]
    };
    let mut reports = Vec::new();
    let mut excluded = Vec::new();
    for u in fields {
        for &d in &ds {
            let idx = reports.len() + excluded.len();
            match id.check(u, d, engine) {
                Ok(r) if !r.degenerate => reports.push(r),
                Ok(_) => excluded.push((idx, "diverged".to_string())),
                Err(e) => excluded.push((idx, e.to_string())),
            }
        }
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = reports.len() / 5;
    let mut held_out: Vec<usize> = order[..n_hold].to_vec();
    held_out.sort_unstable();
    let max_c = |it: &mut dyn Iterator<Item = &InequalityReport>| {
        it.filter_map(|r| r.admissible_constant).fold(None, |m: Option<f64>, c| {
            Some(m.map_or(c, |m| m.max(c)))
        })
    };
    let family_constant = max_c(
        &mut reports
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_out.contains(i))
            .map(|(_, r)| r),
    );
    let sup_all = max_c(&mut reports.iter());
    let validation: Vec<InequalityReport> = match family_constant {
        Some(c) => held_out.iter().map(|&i| reports[i].at_constant(c)).collect(),
        None => Vec::new(),
    };
    let held_out_ok = validation.iter().all(|r| r.holds());
    Ok(FamilySweep {
        inequality_id: reports
            .first()
            .map(|r| r.inequality_id.clone())
            .unwrap_or_default(),
        fields: fields.to_vec(),
        deltas: deltas.to_vec(),
        reports,
        held_out,
        excluded,
        family_constant,
        sup_all,
        held_out_ok,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn builders_invert_exactly(lhs in -5.0f64..5.0, base in 1e-3f64..1e3, half_n in 1.0f64..3.0) {
            let b = RhsBuilder::Log { half_n, base };
            let c = b.invert(lhs).unwrap();
            prop_assert!((b.eval(c) - lhs).abs() <= 1e-9 * lhs.abs().max(1.0));
            let l = RhsBuilder::Linear { base };
            let c = l.invert(lhs.abs()).unwrap();
            prop_assert!((l.eval(c) - lhs.abs()).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn builders_are_increasing(c1 in 1e-3f64..1e3, f in 1.001f64..10.0, base in 1e-3f64..1e3) {
            let b = RhsBuilder::Log { half_n: 1.5, base };
            prop_assert!(b.eval(c1 * f) > b.eval(c1));
            let l = RhsBuilder::Linear { base };
            prop_assert!(l.eval(c1 * f) > l.eval(c1));
        }
    }
}
