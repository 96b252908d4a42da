use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InequalityReport, ReportInputs, RhsBuilder};
use crate::error::{invalid, Error, Result};
use crate::fields::{ComplexField, ScalarField, VectorPotential};
use crate::functionals::{
    dirichlet_energy, entropy_l2, f_functional, gauss_lsi_sides, i_delta, i_delta_magnetic,
    l2_norm_sq, log_moment_lp, lp_integral, restricted_power_integral, EngineSpec, LevelSet,
    MonotoneEnvelope,
};
use crate::quadrature::Estimate;

fn err(e: &Estimate) -> (f64, f64) {
    (e.stderr, e.discretization + e.tail_bound)
}

fn sum_err(parts: &[(f64, (f64, f64))]) -> (f64, f64) {
    parts
        .iter()
        .fold((0.0, 0.0), |acc, (c, e)| (acc.0 + c.abs() * e.0, acc.1 + c.abs() * e.1))
}

fn inputs(u: &ScalarField, engine: &EngineSpec) -> ReportInputs {
    ReportInputs::new(u.label(), engine)
}

/// ∫_{|u|>λδ} |u|^{2N/(N−2)} ≤ C·I_δ(u)^{N/(N−2)}.
pub fn check_nonlocal_sobolev(
    u: &ScalarField,
    delta: f64,
    lambda: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let dim = u.dim().require_sobolev()?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    let nf = dim.as_f64();
    let crit = 2.0 * nf / (nf - 2.0);
    let e = nf / (nf - 2.0);
    let lhs = restricted_power_integral(u, crit, LevelSet::Above(lambda * delta), engine)?;
    let i = i_delta(u, delta, engine)?;
    let mut ins = inputs(u, engine);
    ins.delta = Some(delta);
    ins.lambda = Some(lambda);
    let mut r = InequalityReport::new("nonlocal_sobolev", lhs.value, ins).detail("i_delta", i.value);
    if i.diverged {
        r.degenerate = true;
        return Ok(r);
    }
    let base = i.value.powf(e);
    let d_base = e * i.value.powf(e - 1.0);
    Ok(r.with_builder(RhsBuilder::Linear { base })
        .errors(err(&lhs), sum_err(&[(d_base, err(&i))])))
}

/// The main logarithmic Sobolev inequality:
/// Ent(u) + (N/2)log‖u‖² ≤ (N/2)log(C δ^{4/N}‖u‖^{(2N−4)/N} + C I_δ(u)).
pub fn check_logsobolev_main(
    u: &ScalarField,
    delta: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let i = i_delta(u, delta, engine)?;
    lsi_report("logsobolev_main", u, delta, &i, engine)
}

fn lsi_report(
    id: &str,
    u: &ScalarField,
    delta: f64,
    functional: &Estimate,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let dim = u.dim().require_sobolev()?;
    let nf = dim.as_f64();
    let half_n = 0.5 * nf;
    let n = l2_norm_sq(u, engine)?;
    let ent = entropy_l2(u, engine)?;
    let lhs = ent.value + half_n * n.value.ln();
    let dterm_coeff = delta.powf(4.0 / nf);
    let dterm = dterm_coeff * n.value.powf((nf - 2.0) / nf);
    let mut ins = inputs(u, engine);
    ins.delta = Some(delta);
    let mut r = InequalityReport::new(id, lhs, ins)
        .detail("entropy", ent.value)
        .detail("l2_norm_sq", n.value)
        .detail("functional", functional.value)
        .detail("delta_term", dterm);
    if functional.diverged {
        r.degenerate = true;
        return Ok(r);
    }
    let base = dterm + functional.value;
    let d_n = dterm_coeff * (nf - 2.0) / nf * n.value.powf(-2.0 / nf);
    Ok(r.with_builder(RhsBuilder::Log { half_n, base }).errors(
        sum_err(&[(1.0, err(&ent)), (half_n / n.value, err(&n))]),
        sum_err(&[(1.0, err(functional)), (d_n, err(&n))]),
    ))
}

/// Ent(u) + (N/2)log‖u‖^β ≤ (N/2)log(C‖u‖^β + C∫∫F(|u(x)−u(y)|)/|x−y|^{N+2}).
pub fn check_envelope_lsi(
    u: &ScalarField,
    f: &MonotoneEnvelope,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let dim = u.dim().require_sobolev()?;
    let beta = f.beta().ok_or_else(|| {
        Error::InvalidEnvelope(format!(
            "{} has no exponent β with F(ts) <= t^β F(s) for all s, t",
            f.name()
        ))
    })?;
    let nf = dim.as_f64();
    let half_n = 0.5 * nf;
    let phi = f_functional(u, f, 2.0, engine)?;
    let n = l2_norm_sq(u, engine)?;
    let ent = entropy_l2(u, engine)?;
    let lhs = ent.value + half_n * 0.5 * beta * n.value.ln();
    let norm_beta = n.value.powf(0.5 * beta);
    let mut ins = inputs(u, engine);
    ins.parameter = Some(beta);
    let mut r = InequalityReport::new("envelope_lsi", lhs, ins)
        .detail("entropy", ent.value)
        .detail("l2_norm_sq", n.value)
        .detail("functional", phi.value)
        .detail("beta", beta);
    if phi.diverged {
        r.degenerate = true;
        return Ok(r);
    }
    let d_n = 0.5 * beta * n.value.powf(0.5 * beta - 1.0);
    Ok(r.with_builder(RhsBuilder::Log { half_n, base: norm_beta + phi.value })
        .errors(
            sum_err(&[(1.0, err(&ent)), (half_n * 0.5 * beta / n.value, err(&n))]),
            sum_err(&[(1.0, err(&phi)), (d_n, err(&n))]),
        ))
}

/// The magnetic logarithmic Sobolev inequality, with I_δ^A on the right.
/// `details["modulus_constant"]` is the admissible constant of the paired
/// non-magnetic instance on |u|.
pub fn check_magnetic_lsi(
    u: &ComplexField,
    a: &VectorPotential,
    delta: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let pair = i_delta_magnetic(u, a, delta, engine)?;
    let m = u.modulus();
    let r = lsi_report("magnetic_lsi", m, delta, &pair.magnetic, engine)?;
    let plain = lsi_report("magnetic_lsi", m, delta, &pair.modulus, engine)?;
    let mut r = r.detail("modulus_functional", pair.modulus.value);
    if let Some(c) = plain.admissible_constant {
        r = r.detail("modulus_constant", c);
    }
    Ok(r)
}

/// I_δ(|u|) ≤ I_δ^A(u) on shared samples; deficit = I_δ^A(u) − I_δ(|u|).
pub fn check_diamagnetic(
    u: &ComplexField,
    a: &VectorPotential,
    delta: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let pair = i_delta_magnetic(u, a, delta, engine)?;
    let mut ins = inputs(u.modulus(), engine);
    ins.delta = Some(delta);
    let mut r = InequalityReport::new("diamagnetic", pair.modulus.value, ins)
        .explicit(pair.magnetic.value)
        .detail("magnetic_stderr", pair.magnetic.stderr)
        .detail("modulus_stderr", pair.modulus.stderr);
    r.degenerate = pair.magnetic.diverged || pair.modulus.diverged;
    Ok(r)
}

/// ∫ u² log(u²/‖u‖²) dG ≤ (1/π)∫|∇u|² dG.
pub fn check_gauss_lsi(u: &ScalarField, engine: &EngineSpec) -> Result<InequalityReport> {
    let s = gauss_lsi_sides(u, engine)?;
    Ok(InequalityReport::new("gauss_lsi", s.lhs.value, inputs(u, engine))
        .explicit(s.rhs.value)
        .errors(err(&s.lhs), err(&s.rhs)))
}

/// ∫ u² log(u²/‖u‖²) + N(1 + log a)‖u‖² ≤ (a²/π)∫|∇u|².
pub fn check_euclidean_family(
    u: &ScalarField,
    a: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    if !(a > 0.0) {
        return Err(invalid("a", "must be positive"));
    }
    let nf = u.dim().as_f64();
    let n = l2_norm_sq(u, engine)?;
    let m = log_moment_lp(u, 2.0, engine)?;
    let d = dirichlet_energy(u, engine)?;
    let k = nf * (1.0 + a.ln());
    let lhs = m.value - n.value * n.value.ln() + k * n.value;
    let rhs = a * a / PI * d.value;
    let mut ins = inputs(u, engine);
    ins.parameter = Some(a);
    Ok(InequalityReport::new("euclidean_family", lhs, ins)
        .explicit(rhs)
        .errors(
            sum_err(&[(1.0, err(&m)), ((n.value.ln() + 1.0 - k), err(&n))]),
            sum_err(&[(a * a / PI, err(&d))]),
        ))
}

/// Jensen gap for p = 2 (see [`jensen_gap_p`]).
pub fn jensen_gap(u: &ScalarField, engine: &EngineSpec) -> Result<InequalityReport> {
    jensen_gap_p(u, 2.0, engine)
}

/// log ∫|v|^{Np/(N−p)} − (p/(N−p)) ∫|v|^p log|v|^p for v = u/‖u‖_p.
/// The gap is reported as `deficit` (lhs − rhs) and is ≥ 0 by Jensen.
pub fn jensen_gap_p(u: &ScalarField, p: f64, engine: &EngineSpec) -> Result<InequalityReport> {
    let dim = u.dim().require_above(p)?;
    let nf = dim.as_f64();
    let crit = nf * p / (nf - p);
    let pp = lp_integral(u, p, engine)?;
    if !(pp.value > 0.0) {
        return Err(Error::UndefinedEntropy);
    }
    let s = lp_integral(u, crit, engine)?;
    let m = log_moment_lp(u, p, engine)?;
    let (pv, sv, mv) = (pp.value, s.value, m.value);
    let lhs = sv.ln() - crit / p * pv.ln();
    let coef = p / (nf - p);
    let rhs = coef * (mv / pv - pv.ln());
    let mut ins = inputs(u, engine);
    ins.parameter = Some(p);
    let mut r = InequalityReport::new("jensen_gap", lhs, ins).errors(
        sum_err(&[(1.0 / sv, err(&s)), (crit / (p * pv), err(&pp))]),
        sum_err(&[(coef / pv, err(&m)), (coef * (mv / (pv * pv) + 1.0 / pv), err(&pp))]),
    );
    r.rhs = Some(rhs);
    r.deficit = Some(lhs - rhs);
    Ok(r)
}

fn normalized(u: &ScalarField, engine: &EngineSpec) -> Result<(ScalarField, Estimate)> {
    let n = l2_norm_sq(u, engine)?;
    if !(n.value > 0.0) {
        return Err(Error::Precondition("field has zero L2 norm".into()));
    }
    Ok((u.amplify(1.0 / n.value.sqrt())?, n))
}

/// ∫_{|v|≤λδ} |v|^{2N/(N−2)} ≤ (λδ)^{4/(N−2)} for v = u/‖u‖₂.
pub fn check_small_set_bound(
    u: &ScalarField,
    delta: f64,
    lambda: f64,
    engine: &EngineSpec,
) -> Result<InequalityReport> {
    let dim = u.dim().require_sobolev()?;
    let nf = dim.as_f64();
    let level = lambda * delta;
    if !(level > 0.0) {
        return Err(invalid("lambda", "λδ must be positive"));
    }
    let (v, _) = normalized(u, engine)?;
    let lhs = restricted_power_integral(&v, 2.0 * nf / (nf - 2.0), LevelSet::AtMost(level), engine)?;
    let rhs = level.powf(4.0 / (nf - 2.0));
    let mut ins = inputs(u, engine);
    ins.delta = Some(delta);
    ins.lambda = Some(lambda);
    Ok(InequalityReport::new("small_set_bound", lhs.value, ins)
        .explicit(rhs)
        .errors(err(&lhs), (0.0, 0.0)))
}

/// Spot-check |v|^{2N/(N−2)} ≤ (λδ)^{4/(N−2)}·v² at `points` random points of
/// the sublevel set {|v| ≤ λδ}, v = u/‖u‖₂.
pub fn small_set_pointwise_holds(
    u: &ScalarField,
    delta: f64,
    lambda: f64,
    points: usize,
    seed: u64,
    engine: &EngineSpec,
) -> Result<bool> {
    let dim = u.dim().require_sobolev()?;
    let nf = dim.as_f64();
    let level = lambda * delta;
    let (v, _) = normalized(u, engine)?;
    let radius = v.support_radius().unwrap_or_else(|| v.decay_radius(1e-3 * level)) * 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim.n()];
    let mut checked = 0;
    let mut tries = 0;
    while checked < points && tries < 1000 * points {
        tries += 1;
        for xi in x.iter_mut() {
            *xi = radius * (2.0 * rng.random::<f64>() - 1.0);
        }
        let a = v.eval(&x)?.abs();
        if a > level {
            continue;
        }
        checked += 1;
        let lhs = a.powf(2.0 * nf / (nf - 2.0));
        let rhs = level.powf(4.0 / (nf - 2.0)) * a * a;
        if lhs > rhs * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(checked == points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Dimension, Phase};
    use crate::quadrature::{McSpec, RadialSpec};

    fn det() -> EngineSpec {
        EngineSpec::radial(RadialSpec::default())
    }

    fn mc() -> EngineSpec {
        EngineSpec::mc(McSpec {
            n_samples: 1 << 16,
            chunk_size: 1 << 12,
            ..McSpec::default()
        })
    }

    fn g3() -> ScalarField {
        ScalarField::gaussian(3, 1.0, 1.0).unwrap()
    }

    fn consistent(r: &InequalityReport) {
        let c = r.admissible_constant.unwrap();
        let b = r.rhs_builder.unwrap();
        assert!((b.eval(c) - r.lhs).abs() <= 1e-9 * r.lhs.abs().max(1.0), "{r:?}");
    }

    #[test]
    fn nonlocal_sobolev_examples() {
        let small = ScalarField::gaussian(3, 1.0, 0.05).unwrap();
        let r = check_nonlocal_sobolev(&small, 0.1, 1.0, &det()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.admissible_constant, Some(0.0));
        let r1 = check_nonlocal_sobolev(&g3(), 0.1, 1.0, &det()).unwrap();
        let r2 = check_nonlocal_sobolev(&g3(), 0.1, 2.0, &det()).unwrap();
        assert!(r2.lhs <= r1.lhs);
        assert!(r1.admissible_constant.unwrap().is_finite());
        consistent(&r1);
    }

    #[test]
    fn logsobolev_main_gaussian() {
        let r = check_logsobolev_main(&g3(), 0.1, &det()).unwrap();
        assert!((r.lhs + 1.161313).abs() < 1e-5, "{}", r.lhs);
        consistent(&r);
        let at = r.at_constant(2.0 * r.admissible_constant.unwrap());
        assert!(at.deficit.unwrap() > 0.0);
    }

    #[test]
    fn amplitude_consistency_of_constants() {
        let a = check_logsobolev_main(&g3().amplify(2.0).unwrap(), 0.1, &det()).unwrap();
        let b = check_logsobolev_main(&g3(), 0.05, &det()).unwrap();
        let (ca, cb) = (a.admissible_constant.unwrap(), b.admissible_constant.unwrap());
        assert!((ca / cb - 1.0).abs() < 1e-3, "{ca} {cb}");
    }

    #[test]
    fn envelope_lsi_power_law() {
        let r = check_envelope_lsi(&g3(), &MonotoneEnvelope::PowerLaw { q: 3.0 }, &det()).unwrap();
        consistent(&r);
        assert!(check_envelope_lsi(&g3(), &MonotoneEnvelope::threshold(0.1, 2.0), &det()).is_err());
        // ‖u‖₂ = 1 reduces lhs to the entropy
        let v = g3().amplify((std::f64::consts::PI / 2.0).powf(-0.75)).unwrap();
        let r = check_envelope_lsi(&v, &MonotoneEnvelope::PowerLaw { q: 3.0 }, &det()).unwrap();
        assert!((r.lhs - r.details["entropy"]).abs() < 1e-12);
    }

    #[test]
    fn diamagnetic_and_magnetic() {
        let d = Dimension::new(3).unwrap();
        let u = ComplexField::real(g3());
        let r = check_diamagnetic(&u, &VectorPotential::Zero, 0.1, &mc()).unwrap();
        assert_eq!(r.deficit, Some(0.0));
        let a = VectorPotential::uniform_field(d, 1.0);
        let r = check_diamagnetic(&u, &a, 0.1, &mc()).unwrap();
        assert!(r.deficit.unwrap() >= 0.0);
        let m = check_magnetic_lsi(&u, &a, 0.1, &mc()).unwrap();
        assert!(m.admissible_constant.unwrap() <= m.details["modulus_constant"]);
        let plain = check_logsobolev_main(&g3(), 0.1, &mc()).unwrap();
        let zero = check_magnetic_lsi(&u, &VectorPotential::Zero, 0.1, &mc()).unwrap();
        assert_eq!(zero.lhs, plain.lhs);
        assert_eq!(zero.admissible_constant, plain.admissible_constant);
        let phased = ComplexField::new(g3(), Phase::Linear { wavevector: vec![2.0, 0.0, 0.0] }).unwrap();
        let p = check_magnetic_lsi(&phased, &VectorPotential::Zero, 0.1, &mc()).unwrap();
        assert_eq!(p.lhs, zero.lhs);
        assert_ne!(p.details["functional"], zero.details["functional"]);
    }

    #[test]
    fn euclidean_family_equality_case() {
        for alpha in [1.0, std::f64::consts::PI / 2.0] {
            let a = (std::f64::consts::PI / (2.0 * alpha)).sqrt();
            let u = ScalarField::gaussian(3, alpha, 1.0).unwrap();
            let r = check_euclidean_family(&u, a, &det()).unwrap();
            assert!(r.deficit.unwrap().abs() < 1e-9, "{r:?}");
            let r2 = check_euclidean_family(&u, 2.0 * a, &det()).unwrap();
            assert!(r2.deficit.unwrap() > 0.1);
        }
    }

    #[test]
    fn jensen_examples() {
        let r = jensen_gap(&g3(), &det()).unwrap();
        let exact = 1.5 * (std::f64::consts::PI / 6.0).ln() - 4.5 * (std::f64::consts::PI / 2.0).ln()
            + 2.0 * (1.5 + 1.5 * (std::f64::consts::PI / 2.0).ln());
        assert!((r.deficit.unwrap() - exact).abs() < 1e-9, "{r:?}");
        assert!((exact - (3.0 - 1.5 * 3f64.ln())).abs() < 1e-12);
        let ind = ScalarField::indicator(3, 1.0).unwrap();
        assert!(jensen_gap(&ind, &det()).unwrap().deficit.unwrap().abs() < 1e-12);
        assert!(jensen_gap_p(&g3(), 1.5, &det()).unwrap().deficit.unwrap() > 0.0);
    }

    #[test]
    fn small_set_bound_examples() {
        let r = check_small_set_bound(&g3(), 0.1, 1.0, &det()).unwrap();
        assert!(r.deficit.unwrap() > 0.0);
        let big = check_small_set_bound(&g3(), 100.0, 1.0, &det()).unwrap();
        let total = lp_integral(&g3().amplify((std::f64::consts::PI / 2.0).powf(-0.75)).unwrap(), 6.0, &det())
            .unwrap()
            .value;
        assert!((big.lhs / total - 1.0).abs() < 1e-10);
        assert!(small_set_pointwise_holds(&g3(), 0.1, 1.0, 100, 7, &det()).unwrap());
    }

    #[test]
    fn gauss_lsi_constant() {
        let one = ScalarField::constant(3, 1.0).unwrap();
        let r = check_gauss_lsi(&one, &det()).unwrap();
        assert_eq!(r.deficit, Some(0.0));
    }
}
