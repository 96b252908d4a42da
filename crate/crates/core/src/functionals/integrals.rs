//! Single integrals: norms, energies, entropies and log-moments.

use std::f64::consts::PI;

use super::pair::i_delta;
use super::{pow_p, EnergyParams, EngineMode, EngineSpec};
use crate::error::{invalid, Error, Result};
use crate::fields::{ComplexField, ScalarField};
use crate::quadrature::rules::LevelScanner;
use crate::quadrature::{
    gauss_volume_integrate, mc_volume_integrate, radial_volume_integrate, xlogx, Estimate, Method,
};

/// Integrand of a single integral as a function of (u(x), |∇u(x)|²).
type Local<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// ∫_{R^N} φ(u, |∇u|²) dx; `levels` are values of |u| where φ has kinks.
fn volume(
    u: &ScalarField,
    phi: Local<'_>,
    needs_grad: bool,
    levels: &[f64],
    engine: &EngineSpec,
) -> Result<Estimate> {
    if needs_grad && !u.is_differentiable() {
        return Err(Error::Divergent(
            "gradient integral of a discontinuous field".into(),
        ));
    }
    let sup = u.sup_bound();
    if sup == 0.0 {
        return Ok(Estimate::zero());
    }
    let outer_radius = |u: &ScalarField| {
        let r = match u.support_radius() {
            Some(s) => s,
            None => u.decay_radius(engine.mc.outer_radius_eps * sup),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Divergent(
                "field does not decay; the integral over R^N is infinite".into(),
            ))
        }
    };
    let centered = u.centered();
    match (engine.mode, centered.as_ref().and_then(|c| c.radial_view())) {
        (EngineMode::Radial | EngineMode::Auto, Some(g)) => {
            let outer = outer_radius(centered.as_ref().expect("radial"))?;
            let kinks = g.kinks();
            let gv = |r: f64| g.value(r);
            let mut breaks = kinks.clone();
            if !levels.is_empty() {
                let sc = LevelScanner::new(gv, outer, 4096, &kinks);
                for &l in levels {
                    sc.crossings(&gv, l, &mut breaks);
                    sc.crossings(&gv, -l, &mut breaks);
                }
            }
            let f = |r: f64| {
                let d = if needs_grad { g.derivative(r) } else { 0.0 };
                phi(g.value(r), d * d)
            };
            radial_volume_integrate(&f, &breaks, outer, u.dim(), &engine.radial)
        }
        (EngineMode::Radial, None) => Err(Error::Precondition(
            "radial engine requested for a non-radial field".into(),
        )),
        _ => {
            let outer = outer_radius(u)?;
            let f = |x: &[f64]| {
                let v = u.value(x);
                let g2 = if needs_grad {
                    u.grad(x).map(|g| g.iter().map(|a| a * a).sum()).unwrap_or(f64::NAN)
                } else {
                    0.0
                };
                phi(v, g2)
            };
            mc_volume_integrate(&f, u.dim(), outer, u.support_radius().is_some(), &engine.mc)
        }
    }
}

/// ∫ φ(u, |∇u|²) dG with dG = e^{−π|x|²}dx, by tensor Gauss–Hermite.
fn gauss(u: &ScalarField, phi: Local<'_>, needs_grad: bool) -> Result<Estimate> {
    if needs_grad && !u.is_differentiable() {
        return Err(Error::Divergent(
            "gradient integral of a discontinuous field".into(),
        ));
    }
    let points = match u.dim().n() {
        1 => 96,
        2 => 64,
        3 => 40,
        4 => 24,
        5 => 14,
        _ => 8,
    };
    let f = |x: &[f64]| {
        let v = u.value(x);
        let g2 = if needs_grad {
            u.grad(x).map(|g| g.iter().map(|a| a * a).sum()).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        phi(v, g2)
    };
    gauss_volume_integrate(&f, u.dim(), points)
}

fn finite(e: Estimate, what: &str) -> Result<Estimate> {
    if e.value.is_finite() {
        Ok(e)
    } else {
        Err(Error::Divergent(format!("{what} is not finite")))
    }
}

/// ∫ |u|^p dx.
pub fn lp_integral(u: &ScalarField, p: f64, engine: &EngineSpec) -> Result<Estimate> {
    if !(p > 0.0) {
        return Err(invalid("p", "must be positive"));
    }
    finite(volume(u, &|v, _| pow_p(v.abs(), p), false, &[], engine)?, "Lp integral")
}

/// ‖u‖₂², in closed form for Gaussian sums.
pub fn l2_norm_sq(u: &ScalarField, engine: &EngineSpec) -> Result<Estimate> {
    if let Some(terms) = u.gaussian_terms() {
        let n = u.dim().as_f64();
        let mut total = 0.0;
        for (ci, ai, ui) in &terms {
            for (cj, aj, uj) in &terms {
                let s = ai + aj;
                let d2: f64 = ci.iter().zip(cj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                total += ui * uj * (PI / s).powf(0.5 * n) * (-ai * aj * d2 / s).exp();
            }
        }
        return Ok(Estimate::exact(total));
    }
    lp_integral(u, 2.0, engine)
}

/// ∫ |∇u|² dx, in closed form for Gaussian sums.
pub fn dirichlet_energy(u: &ScalarField, engine: &EngineSpec) -> Result<Estimate> {
    if let Some(terms) = u.gaussian_terms() {
        let n = u.dim().as_f64();
        let mut total = 0.0;
        for (ci, ai, ui) in &terms {
            for (cj, aj, uj) in &terms {
                let s = ai + aj;
                let d2: f64 = ci.iter().zip(cj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let overlap = (PI / s).powf(0.5 * n) * (-ai * aj * d2 / s).exp();
                total += ui * uj * 4.0 * ai * aj * overlap * (0.5 * n / s - ai * aj * d2 / (s * s));
            }
        }
        return Ok(Estimate::exact(total));
    }
    finite(volume(u, &|_, g2| g2, true, &[], engine)?, "Dirichlet energy")
}

/// ∫ |u|^p log |u|^p dx with 0·log 0 = 0.
pub fn log_moment_lp(u: &ScalarField, p: f64, engine: &EngineSpec) -> Result<Estimate> {
    if !(p > 0.0) {
        return Err(invalid("p", "must be positive"));
    }
    finite(
        volume(u, &|v, _| xlogx(pow_p(v.abs(), p)), false, &[], engine)?,
        "log-moment",
    )
}

/// Which part of R^N a restricted integral covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSet {
    /// {|u| > level}
    Above(f64),
    /// {|u| ≤ level}
    AtMost(f64),
}

/// ∫_{set} |u|^q dx.
pub fn restricted_power_integral(
    u: &ScalarField,
    q: f64,
    set: LevelSet,
    engine: &EngineSpec,
) -> Result<Estimate> {
    let (level, above) = match set {
        LevelSet::Above(l) => (l, true),
        LevelSet::AtMost(l) => (l, false),
    };
    if !(level >= 0.0) {
        return Err(invalid("level", "must be nonnegative"));
    }
    if above && level >= u.sup_bound() {
        return Ok(Estimate::zero());
    }
    let phi = move |v: f64, _| {
        let a = v.abs();
        if (a > level) == above {
            pow_p(a, q)
        } else {
            0.0
        }
    };
    finite(volume(u, &phi, false, &[level], engine)?, "restricted power integral")
}

/// ∫ (u²/‖u‖₂²) log(u²/‖u‖₂²) dx = M/n − log n with M = ∫u² log u², n = ‖u‖₂².
pub fn entropy_l2(u: &ScalarField, engine: &EngineSpec) -> Result<Estimate> {
    let n = l2_norm_sq(u, engine)?;
    if !(n.value > 0.0) {
        return Err(Error::UndefinedEntropy);
    }
    let m = log_moment_lp(u, 2.0, engine)?;
    let (nv, mv) = (n.value, m.value);
    Ok(Estimate::derived(
        mv / nv - nv.ln(),
        &[(1.0 / nv, &m), (mv / (nv * nv) + 1.0 / nv, &n)],
    ))
}

/// Entropy of |u| for a complex field.
pub fn entropy_l2_complex(u: &ComplexField, engine: &EngineSpec) -> Result<Estimate> {
    entropy_l2(u.modulus(), engine)
}

/// Reference measure of [`ent_mu`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Lebesgue,
    /// e^{−π|x|²}dx, a probability measure.
    Gauss,
}

/// The nonnegative function whose entropy is taken.
#[derive(Debug, Clone, Copy)]
pub enum Density<'a> {
    Field(&'a ScalarField),
    SquareOf(&'a ScalarField),
}

/// Ent_μ(f) = ∫ (f/‖f‖₁) log(f/‖f‖₁) dμ + (N/2) log ‖f‖₁.
pub fn ent_mu(f: Density<'_>, mu: Measure, engine: &EngineSpec) -> Result<Estimate> {
    let (u, square) = match f {
        Density::Field(u) => (u, false),
        Density::SquareOf(u) => (u, true),
    };
    let dens = move |v: f64| if square { v * v } else { v };
    let mass_fn = move |v: f64, _| {
        let d = dens(v);
        if d < 0.0 {
            f64::NAN
        } else {
            d
        }
    };
    let ent_fn = move |v: f64, _| xlogx(dens(v));
    let (mass, e) = match mu {
        Measure::Lebesgue => (
            volume(u, &mass_fn, false, &[], engine)?,
            volume(u, &ent_fn, false, &[], engine)?,
        ),
        Measure::Gauss => (gauss(u, &mass_fn, false)?, gauss(u, &ent_fn, false)?),
    };
    if mass.value.is_nan() || e.value.is_nan() {
        return Err(Error::Precondition("density must be nonnegative".into()));
    }
    if !(mass.value > 0.0 && mass.value.is_finite()) {
        return Err(Error::Precondition(format!(
            "need 0 < ||f||_1 < inf, got {}",
            mass.value
        )));
    }
    let (m, ev) = (mass.value, e.value);
    let half_n = 0.5 * u.dim().as_f64();
    Ok(Estimate::derived(
        ev / m - m.ln() + half_n * m.ln(),
        &[(1.0 / m, &e), (ev / (m * m) + (1.0 - half_n) / m, &mass)],
    ))
}

/// Both sides of the Gauss-measure log-Sobolev inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSides {
    /// ∫ u² log(u²/‖u‖²_{2,G}) dG
    pub lhs: Estimate,
    /// (1/π) ∫ |∇u|² dG
    pub rhs: Estimate,
}

pub fn gauss_lsi_sides(u: &ScalarField, _engine: &EngineSpec) -> Result<GaussSides> {
    if u.lipschitz_bound() == 0.0 {
        // u²/‖u‖² ≡ 1 under a probability measure and ∇u ≡ 0.
        return Ok(GaussSides {
            lhs: Estimate::zero(),
            rhs: Estimate::zero(),
        });
    }
    let n = gauss(u, &|v, _| v * v, false)?;
    let m = gauss(u, &|v, _| xlogx(v * v), false)?;
    let d = gauss(u, &|_, g2| g2, true)?;
    let nv = n.value;
    let lhs = Estimate::derived(m.value - xlogx(nv), &[(1.0, &m), ((nv.ln() + 1.0).abs(), &n)]);
    let rhs = d.scaled(1.0 / PI);
    Ok(GaussSides {
        lhs: finite(lhs, "Gauss-LSI lhs")?,
        rhs: finite(rhs, "Gauss-LSI rhs")?,
    })
}

/// J(u) = ½∫|∇u|² + ((ω+1)/2)∫u² − ½∫u² log u².
pub fn j_energy(u: &ScalarField, params: EnergyParams, engine: &EngineSpec) -> Result<Estimate> {
    let d = dirichlet_energy(u, engine)?;
    energy(u, params, &d, 0.5, engine)
}

/// J_δ(u) = I_δ(u) + ((ω+1)/2)∫u² − ½∫u² log u².
pub fn j_delta_energy(
    u: &ScalarField,
    params: EnergyParams,
    delta: f64,
    engine: &EngineSpec,
) -> Result<Estimate> {
    let i = i_delta(u, delta, engine)?;
    energy(u, params, &i, 1.0, engine)
}

fn energy(
    u: &ScalarField,
    params: EnergyParams,
    lead: &Estimate,
    lead_coeff: f64,
    engine: &EngineSpec,
) -> Result<Estimate> {
    let n = l2_norm_sq(u, engine)?;
    let m = log_moment_lp(u, 2.0, engine)?;
    let c = 0.5 * (params.omega + 1.0);
    let value = lead_coeff * lead.value + c * n.value - 0.5 * m.value;
    let mut e = Estimate::derived(value, &[(lead_coeff, lead), (c, &n), (0.5, &m)]);
    if lead.method == Method::Mc {
        e.method = Method::Mc;
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Dimension, Shape};
    use crate::functionals::EngineSpec;
    use crate::quadrature::{McSpec, RadialSpec};

    fn det() -> EngineSpec {
        EngineSpec::radial(RadialSpec::default())
    }

    fn g3() -> ScalarField {
        ScalarField::gaussian(3, 1.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn gaussian_closed_forms() {
        let n = (PI / 2.0).powf(1.5);
        assert!(rel(l2_norm_sq(&g3(), &det()).unwrap().value, n) < 1e-14);
        assert!(rel(dirichlet_energy(&g3(), &det()).unwrap().value, 3.0 * n) < 1e-14);
        assert!(rel(log_moment_lp(&g3(), 2.0, &det()).unwrap().value, -1.5 * n) < 1e-10);
        let ent = -1.5 - 1.5 * (PI / 2.0).ln();
        assert!(rel(entropy_l2(&g3(), &det()).unwrap().value, ent) < 1e-10);
        assert!((ent + 2.177374).abs() < 1e-6);
    }

    #[test]
    fn radial_quadrature_matches_closed_forms() {
        // The same Gaussian written as a one-term sum with a bump term of
        // amplitude 0 is not a pure Gaussian sum, so it takes the radial path.
        let d = Dimension::new(3).unwrap();
        let shape = Shape::Sum(vec![
            g3().shape().clone(),
            Shape::SmoothBump {
                center: vec![0.0; 3],
                radius: 1.0,
                amplitude: 0.0,
            },
        ]);
        let u = ScalarField::new(d, shape).unwrap();
        assert!(u.gaussian_terms().is_none());
        let n = (PI / 2.0).powf(1.5);
        assert!(rel(l2_norm_sq(&u, &det()).unwrap().value, n) < 1e-10);
        assert!(rel(dirichlet_energy(&u, &det()).unwrap().value, 3.0 * n) < 1e-10);
    }

    #[test]
    fn amplitude_two_log_moment() {
        let u = ScalarField::gaussian(3, 1.0, 2.0).unwrap();
        let n = (PI / 2.0).powf(1.5);
        let exact = 4.0 * 4f64.ln() * n + 4.0 * (-1.5 * n);
        assert!(rel(log_moment_lp(&u, 2.0, &det()).unwrap().value, exact) < 1e-10);
        assert!((exact + 0.895410).abs() < 1e-6, "{exact}");
    }

    #[test]
    fn gaussian_sum_closed_forms_match_quadrature() {
        let d = Dimension::new(3).unwrap();
        let shape = Shape::Sum(vec![
            Shape::Gaussian { center: vec![0.0; 3], rate: 1.0, amplitude: 1.0 },
            Shape::Gaussian { center: vec![0.5, 0.0, 0.0], rate: 2.0, amplitude: -0.5 },
        ]);
        let u = ScalarField::new(d, shape).unwrap();
        let mc = EngineSpec::mc(McSpec::default());
        let a = l2_norm_sq(&u, &mc).unwrap();
        let b = lp_integral(&u, 2.0, &mc).unwrap();
        assert!((a.value - b.value).abs() < 4.0 * b.stderr, "{a:?} {b:?}");
        let a = dirichlet_energy(&u, &mc).unwrap();
        let b = volume(&u, &|_, g2| g2, true, &[], &mc).unwrap();
        assert!((a.value - b.value).abs() < 4.0 * b.stderr, "{a:?} {b:?}");
    }

    #[test]
    fn entropy_is_scale_invariant() {
        let e1 = entropy_l2(&g3(), &det()).unwrap().value;
        let e2 = entropy_l2(&g3().amplify(3.7).unwrap(), &det()).unwrap().value;
        assert!((e1 - e2).abs() < 1e-10 * e1.abs());
    }

    #[test]
    fn indicator_entropy() {
        let u = ScalarField::indicator(3, 1.0).unwrap();
        let e = entropy_l2(&u, &det()).unwrap().value;
        assert!((e + (4.0 * PI / 3.0).ln()).abs() < 1e-10, "{e}");
    }

    #[test]
    fn zero_field_has_no_entropy() {
        let z = ScalarField::gaussian(3, 1.0, 0.0).unwrap();
        assert_eq!(entropy_l2(&z, &det()), Err(Error::UndefinedEntropy));
    }

    #[test]
    fn ent_mu_identities() {
        let one = ScalarField::constant(3, 1.0).unwrap();
        let e = ent_mu(Density::Field(&one), Measure::Gauss, &det()).unwrap();
        assert!(e.value.abs() < 1e-12);
        let c = ScalarField::constant(3, 2.5).unwrap();
        let e = ent_mu(Density::Field(&c), Measure::Gauss, &det()).unwrap();
        assert!((e.value - 1.5 * 2.5f64.ln()).abs() < 1e-12);
        let a = ent_mu(Density::SquareOf(&g3()), Measure::Lebesgue, &det()).unwrap().value;
        let b = entropy_l2(&g3(), &det()).unwrap().value;
        let n = l2_norm_sq(&g3(), &det()).unwrap().value;
        assert!(rel(a - b, 1.5 * n.ln()) < 1e-8);
        assert!(ent_mu(Density::Field(&c), Measure::Lebesgue, &det()).is_err());
    }

    #[test]
    fn gauss_lsi_constants_and_exponentials() {
        let one = ScalarField::constant(3, 1.0).unwrap();
        let s = gauss_lsi_sides(&one, &det()).unwrap();
        assert_eq!(s.lhs.value, 0.0);
        assert_eq!(s.rhs.value, 0.0);
        // e^{c x₁}: both sides equal (c²/π) e^{c²/π}
        let d = Dimension::new(3).unwrap();
        let e = ScalarField::new(d, Shape::Exponential { slope: vec![1.0, 0.0, 0.0], amplitude: 1.0 })
            .unwrap();
        let s = gauss_lsi_sides(&e, &det()).unwrap();
        let exact = (1.0 / PI) * (1.0 / PI).exp();
        assert!(rel(s.lhs.value, exact) < 1e-10);
        assert!(rel(s.rhs.value, exact) < 1e-10);
        let s2 = gauss_lsi_sides(&e.amplify(3.0).unwrap(), &det()).unwrap();
        assert!(rel(s2.lhs.value, 9.0 * exact) < 1e-10);
        assert!(rel(s2.rhs.value, 9.0 * exact) < 1e-10);
    }

    #[test]
    fn energies() {
        let n = (PI / 2.0).powf(1.5);
        let j = j_energy(&g3(), EnergyParams { omega: 0.0 }, &det()).unwrap();
        let exact = 0.5 * 3.0 * n + 0.5 * n + 0.5 * 1.5 * n;
        assert!(rel(j.value, exact) < 1e-10);
        assert!((exact - 5.413927).abs() < 1e-5);
        let j1 = j_energy(&g3(), EnergyParams { omega: -1.0 }, &det()).unwrap();
        assert!(rel(j1.value, 0.5 * 3.0 * n + 0.75 * n) < 1e-10);
        let jd = j_delta_energy(&g3(), EnergyParams { omega: 0.0 }, 0.1, &det()).unwrap();
        assert!(jd.value.is_finite());
    }

    #[test]
    fn restricted_integrals_split_the_total() {
        let u = g3();
        let total = lp_integral(&u, 6.0, &det()).unwrap().value;
        let a = restricted_power_integral(&u, 6.0, LevelSet::Above(0.1), &det()).unwrap().value;
        let b = restricted_power_integral(&u, 6.0, LevelSet::AtMost(0.1), &det()).unwrap().value;
        assert!(rel(a + b, total) < 1e-12);
        // ∫_{r<r*} e^{-6r²} 4πr² dr with e^{-r*²} = 0.1
        let rs = 10f64.ln().sqrt();
        let rule = crate::quadrature::rules::GaussRule::legendre(40);
        let exact = rule.integrate(0.0, rs, |r| 4.0 * PI * r * r * (-6.0 * r * r).exp());
        assert!(rel(a, exact) < 1e-10);
        assert_eq!(
            restricted_power_integral(&u, 6.0, LevelSet::Above(1.0), &det()).unwrap().value,
            0.0
        );
    }
}
