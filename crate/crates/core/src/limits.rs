//! The δ → 0 study of I_δ(u)/‖∇u‖₂², Q_N and the classical limit of the
//! nonlocal logarithmic Sobolev inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Dimension, ScalarField};
use crate::functionals::{dirichlet_energy, entropy_l2, i_delta, l2_norm_sq, radial_grid_step, EngineSpec};
use crate::quadrature::Estimate;

/// Label attached to every analytic Q_N value.
pub const QN_PROVENANCE: &str = "derived by near-diagonal expansion, not a literature value";

/// Q_N = |S^{N−1}|/(2N) from the near-diagonal expansion of I_δ.
pub fn qn_derived(dim: Dimension) -> f64 {
    dim.sphere_area() / (2.0 * dim.as_f64())
}

/// I_δ(u) along a decreasing δ-grid with ratios against ‖∇u‖₂².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub deltas: Vec<f64>,
    pub values: Vec<Estimate>,
    pub ratios: Vec<f64>,
    pub dirichlet: f64,
    /// r₀ of the fit r(δ) = r₀ + c·δ^γ through the last three points.
    pub extrapolated_limit: f64,
    pub extrapolation_error: f64,
    pub gamma: f64,
}

fn require_grid(deltas: &[f64], min_len: usize) -> Result<()> {
    if deltas.len() < min_len {
        return Err(Error::Precondition(format!("need at least {min_len} δ values")));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Precondition("δ values must be positive and finite".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("δ grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Reject δ at which the radial level grid cannot resolve |u(x)−u(y)| = δ.
pub fn check_resolution(u: &ScalarField, delta: f64, engine: &EngineSpec) -> Result<()> {
    let lip = u.lipschitz_bound();
    if let Some(step) = radial_grid_step(u, delta, engine) {
        if step > delta / (10.0 * lip) {
            return Err(Error::Precondition(format!(
                "radial grid step {step:.3e} exceeds δ/(10L) = {:.3e}",
                delta / (10.0 * lip)
            )));
        }
    }
    Ok(())
}

fn positive_energy(u: &ScalarField, engine: &EngineSpec) -> Result<Estimate> {
    if !u.is_differentiable() {
        return Err(Error::Precondition("field is not differentiable".into()));
    }
    let d = dirichlet_energy(u, engine)?;
    if !(d.value > 0.0 && d.value.is_finite()) {
        return Err(Error::Precondition("Dirichlet energy must be positive and finite".into()));
    }
    Ok(d)
}

fn sweep_values(u: &ScalarField, deltas: &[f64], engine: &EngineSpec) -> Result<Vec<Estimate>> {
    let osc = 2.0 * u.sup_bound();
    deltas
        .iter()
        .map(|&d| {
            if d >= osc {
                return Err(Error::Precondition(format!("δ = {d} exceeds the oscillation bound")));
            }
            check_resolution(u, d, engine)?;
            let e = i_delta(u, d, engine)?;
            if e.diverged {
                return Err(Error::Divergent(format!("I_δ diverged at δ = {d}")));
            }
            Ok(e)
        })
        .collect()
}

/// Fitted exponent of r(δ) = r₀ + c·δ^γ through three points, or None when
/// the differences do not have a consistent sign.
fn fit_gamma(d: [f64; 3], r: [f64; 3]) -> Option<f64> {
    let rho = (r[0] - r[1]) / (r[1] - r[2]);
    if !(rho.is_finite() && rho > 0.0) {
        return None;
    }
    let phi = |g: f64| (d[0].powf(g) - d[1].powf(g)) / (d[1].powf(g) - d[2].powf(g));
    let (mut lo, mut hi) = (0.05, 8.0);
    if rho <= phi(lo) || rho >= phi(hi) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn extrapolate(d: [f64; 3], r: [f64; 3]) -> (f64, f64) {
    let gamma = fit_gamma(d, r).unwrap_or(1.0);
    let c = (r[1] - r[2]) / (d[1].powf(gamma) - d[2].powf(gamma));
    (r[2] - c * d[2].powf(gamma), gamma)
}

fn last3(v: &[f64], end: usize) -> [f64; 3] {
    [v[end - 3], v[end - 2], v[end - 1]]
}

/// Sweep I_δ(u) over a strictly decreasing δ-grid (at least three points) and
/// extrapolate the ratio I_δ/‖∇u‖₂² to δ = 0.
///
/// `extrapolation_error` is the shift from the previous triple (or the whole
/// Richardson correction with only three points) plus the propagated
/// uncertainty of the finest ratio.
pub fn delta_sweep(u: &ScalarField, deltas: &[f64], engine: &EngineSpec) -> Result<DeltaSweep> {
    require_grid(deltas, 3)?;
    let dir = positive_energy(u, engine)?;
    let values = sweep_values(u, deltas, engine)?;
    let ratios: Vec<f64> = values.iter().map(|e| e.value / dir.value).collect();
    let n = deltas.len();
    let (r0, gamma) = extrapolate(last3(deltas, n), last3(&ratios, n));
    let shift = if n >= 4 {
        (r0 - extrapolate(last3(deltas, n - 1), last3(&ratios, n - 1)).0).abs()
    } else {
        (r0 - ratios[n - 1]).abs()
    };
    let last = &values[n - 1];
    let noise = (3.0 * last.stderr + last.discretization + last.tail_bound) / dir.value
        + ratios[n - 1] * dir.uncertainty() / dir.value;
    Ok(DeltaSweep {
        deltas: deltas.to_vec(),
        values,
        ratios,
        dirichlet: dir.value,
        extrapolated_limit: r0,
        extrapolation_error: shift + noise,
        gamma,
    })
}

/// Pooled Q_N estimate over several fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnEstimate {
    pub dim: usize,
    pub sweeps: Vec<DeltaSweep>,
    pub estimate: f64,
    pub error: f64,
    pub derived: f64,
    pub derived_provenance: String,
    pub relative_deviation: f64,
    /// Two fields disagree beyond their combined error bars.
    pub inconsistent: bool,
}

/// Pool the extrapolated ratios of at least two fields (inverse-variance
/// weights) and compare against [`qn_derived`].
pub fn estimate_qn(fields: &[ScalarField], deltas: &[f64], engine: &EngineSpec) -> Result<QnEstimate> {
    if fields.len() < 2 {
        return Err(Error::Precondition("Q_N estimation needs at least two fields".into()));
    }
    let dim = fields[0].dim();
    if let Some(f) = fields.iter().find(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim.n(),
            got: f.dim().n(),
        });
    }
    let sweeps = fields
        .iter()
        .map(|u| delta_sweep(u, deltas, engine))
        .collect::<Result<Vec<_>>>()?;
    let floor = 1e-12;
    let w: Vec<f64> = sweeps
        .iter()
        .map(|s| 1.0 / s.extrapolation_error.max(floor).powi(2))
        .collect();
    let wsum: f64 = w.iter().sum();
    let estimate = sweeps
        .iter()
        .zip(&w)
        .map(|(s, w)| w * s.extrapolated_limit)
        .sum::<f64>()
        / wsum;
    let error = wsum.sqrt().recip();
    let mut inconsistent = false;
    for (i, a) in sweeps.iter().enumerate() {
        for b in &sweeps[i + 1..] {
            let gap = (a.extrapolated_limit - b.extrapolated_limit).abs();
            inconsistent |= gap > a.extrapolation_error + b.extrapolation_error;
        }
    }
    let derived = qn_derived(dim);
    Ok(QnEstimate {
        dim: dim.n(),
        sweeps,
        estimate,
        error,
        derived,
        derived_provenance: QN_PROVENANCE.to_string(),
        relative_deviation: (estimate - derived).abs() / derived,
        inconsistent,
    })
}

/// Empirical sup of I_δ(u)/‖∇u‖₂² over a δ-grid and its stability under
/// grid doubling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub deltas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub argmax_delta: f64,
    pub refined_sup_ratio: f64,
    pub relative_change: f64,
    pub finite: bool,
    /// relative_change < 5%.
    pub grid_stable: bool,
}

pub const GRID_STABILITY: f64 = 0.05;

fn sup_of(deltas: &[f64], ratios: &[f64]) -> (f64, f64) {
    deltas
        .iter()
        .zip(ratios)
        .fold((f64::NEG_INFINITY, f64::NAN), |(m, a), (&d, &r)| if r > m { (r, d) } else { (m, a) })
}

/// sup over the grid of I_δ(u)/‖∇u‖₂², an empirical lower bound for the
/// uniform constant; the doubled grid adds the geometric midpoints.
pub fn check_upper_bound(u: &ScalarField, deltas: &[f64], engine: &EngineSpec) -> Result<UpperBoundReport> {
    require_grid(deltas, 2)?;
    let dir = positive_energy(u, engine)?;
    let values = sweep_values(u, deltas, engine)?;
    let ratios: Vec<f64> = values.iter().map(|e| e.value / dir.value).collect();
    let mids: Vec<f64> = deltas.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let mid_ratios: Vec<f64> = sweep_values(u, &mids, engine)?
        .iter()
        .map(|e| e.value / dir.value)
        .collect();
    let (sup, arg) = sup_of(deltas, &ratios);
    let (mid_sup, _) = sup_of(&mids, &mid_ratios);
    let refined = sup.max(mid_sup);
    let relative_change = (refined - sup).abs() / sup.abs().max(f64::MIN_POSITIVE);
    let finite = ratios.iter().chain(&mid_ratios).all(|r| r.is_finite());
    Ok(UpperBoundReport {
        deltas: deltas.to_vec(),
        ratios,
        sup_ratio: sup,
        argmax_delta: arg,
        refined_sup_ratio: refined,
        relative_change,
        finite,
        grid_stable: finite && relative_change < GRID_STABILITY,
    })
}

/// Sides of the main nonlocal LSI along a δ-sweep and their classical limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRecovery {
    pub deltas: Vec<f64>,
    pub constant: f64,
    /// Ent(u) + (N/2)log‖u‖₂², independent of δ.
    pub lhs: f64,
    pub rhs: Vec<f64>,
    /// δ^{4/N}‖u‖₂^{(2N−4)/N} / I_δ(u).
    pub delta_term_ratio: Vec<f64>,
    /// rhs(δ) − (N/2)log(C·I_δ(u)).
    pub residuals: Vec<f64>,
    pub delta_term_monotone: bool,
    /// (N/2)log(C·Q·‖∇u‖₂²) with Q the sweep's extrapolated ratio.
    pub limit_rhs: f64,
    /// Same with Q = [`qn_derived`].
    pub limit_rhs_derived: f64,
    /// |rhs(δ_min) − limit_rhs| / max(|limit_rhs|, 1).
    pub final_relative_gap: f64,
    pub sweep: DeltaSweep,
}

/// Evaluate the right-hand side of the main nonlocal LSI at `constant` along the sweep and
/// track the vanishing δ-term.
pub fn recover_classical_lsi(
    u: &ScalarField,
    deltas: &[f64],
    constant: f64,
    engine: &EngineSpec,
) -> Result<ClassicalRecovery> {
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::Precondition("family constant must be positive".into()));
    }
    let dim = u.dim().require_sobolev()?;
    let sweep = delta_sweep(u, deltas, engine)?;
    let nf = dim.as_f64();
    let half_n = 0.5 * nf;
    let n = l2_norm_sq(u, engine)?.value;
    let lhs = entropy_l2(u, engine)?.value + half_n * n.ln();
    let norm_term = n.powf((nf - 2.0) / nf);
    let mut rhs = Vec::with_capacity(deltas.len());
    let mut ratio = Vec::with_capacity(deltas.len());
    let mut residuals = Vec::with_capacity(deltas.len());
    for (&d, e) in deltas.iter().zip(&sweep.values) {
        let dterm = d.powf(4.0 / nf) * norm_term;
        rhs.push(half_n * (constant * (dterm + e.value)).ln());
        ratio.push(dterm / e.value);
        residuals.push(half_n * (1.0 + dterm / e.value).ln());
    }
    let delta_term_monotone = ratio.windows(2).all(|w| w[1] < w[0]);
    let limit_rhs = half_n * (constant * sweep.extrapolated_limit * sweep.dirichlet).ln();
    let limit_rhs_derived = half_n * (constant * qn_derived(dim) * sweep.dirichlet).ln();
    let last = *rhs.last().expect("grid has at least three points");
    Ok(ClassicalRecovery {
        deltas: deltas.to_vec(),
        constant,
        lhs,
        final_relative_gap: (last - limit_rhs).abs() / limit_rhs.abs().max(1.0),
        rhs,
        delta_term_ratio: ratio,
        residuals,
        delta_term_monotone,
        limit_rhs,
        limit_rhs_derived,
        sweep,
    })
}

/// δ_k = δ₀·2^{−k}, k = 0..count.
pub fn dyadic_grid(delta0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| delta0 * 0.5f64.powi(k as i32)).collect()
}
