//! Pair functionals: I_δ, its L^p version, the F-functional and I_δ^A.

use num_complex::Complex64;

use super::integrals::{dirichlet_energy, lp_integral};
use super::{pow_p, EngineMode, EngineSpec, KernelSpec, MonotoneEnvelope};
use crate::error::{invalid, Error, Result};
use crate::fields::{ComplexField, Dimension, RadialView, ScalarField, VectorPotential};
use crate::quadrature::mc::{mc_pair_integrate_many, PairIntegrand, PairPlan, XRegion};
use crate::quadrature::radial::{radial_pair_integrate, RadialDomain, RadialPairIntegrand, RadialPlan};
use crate::quadrature::rules::LevelScanner;
use crate::quadrature::Estimate;

/// Fraction of the reported value the excluded inner region may carry.
const INNER_TOLERANCE: f64 = 1e-4;
const SCANNER_SAMPLES: usize = 4096;
const SCANNER_MAX_SAMPLES: usize = 1 << 22;

/// |h|^{-e} from |h|².
#[inline]
fn kernel(h2: f64, half_exponent: f64) -> f64 {
    if half_exponent == half_exponent.trunc() {
        h2.powi(-(half_exponent as i32))
    } else {
        h2.powf(-half_exponent)
    }
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

struct EnvelopeIntegrand<'a> {
    u: &'a ScalarField,
    f: &'a MonotoneEnvelope,
    half_exponent: f64,
}

impl PairIntegrand for EnvelopeIntegrand<'_> {
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let v = self.f.eval((self.u.value(x) - self.u.value(y)).abs());
        out[0] = if v == 0.0 {
            0.0
        } else {
            v * kernel(dist2(x, y), self.half_exponent)
        };
    }
}

struct RadialEnvelope<'a> {
    g: RadialView<'a>,
    f: &'a MonotoneEnvelope,
    scanner: LevelScanner,
    kinks: Vec<f64>,
    r_breaks: Vec<f64>,
}

impl<'a> RadialEnvelope<'a> {
    fn new(g: RadialView<'a>, f: &'a MonotoneEnvelope, hi: f64, lipschitz: f64) -> Self {
        let kinks = g.kinks();
        let gv = |r: f64| g.value(r);
        let tau = f.vanishing_threshold();
        let scanner = LevelScanner::new(gv, hi, scanner_samples(hi, tau, lipschitz), &kinks);
        let mut levels = scanner.extremal_values(&gv);
        levels.push(g.value(0.0));
        levels.push(g.value(scanner.upper()));
        levels.push(0.0);
        let mut r_breaks = kinks.clone();
        for e in levels {
            for l in [e - tau, e + tau] {
                scanner.crossings(&gv, l, &mut r_breaks);
            }
        }
        r_breaks.sort_by(f64::total_cmp);
        r_breaks.dedup();
        RadialEnvelope {
            g,
            f,
            scanner,
            kinks,
            r_breaks,
        }
    }
}

impl RadialPairIntegrand for RadialEnvelope<'_> {
    fn weight(&self, r: f64, s: f64) -> f64 {
        self.f.eval((self.g.value(r) - self.g.value(s)).abs())
    }

    fn r_breakpoints(&self) -> Vec<f64> {
        self.r_breaks.clone()
    }

    fn s_breakpoints(&self, r: f64, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.kinks);
        let gv = |s: f64| self.g.value(s);
        let c = gv(r);
        let tau = self.f.vanishing_threshold();
        if tau > 0.0 {
            self.scanner.crossings(&gv, c - tau, out);
            self.scanner.crossings(&gv, c + tau, out);
        } else {
            self.scanner.crossings(&gv, c, out);
        }
    }
}

/// Scanner resolution: at least 4096 cells and cells no wider than τ/(10L).
fn scanner_samples(hi: f64, tau: f64, lipschitz: f64) -> usize {
    let need = if tau > 0.0 && lipschitz.is_finite() {
        (10.0 * lipschitz * hi / tau).ceil()
    } else {
        0.0
    };
    (need.min(SCANNER_MAX_SAMPLES as f64) as usize).max(SCANNER_SAMPLES)
}

/// Level-crossing cell width the radial engine uses for u at threshold τ,
/// or None when u is not evaluated radially.
pub fn radial_grid_step(u: &ScalarField, tau: f64, engine: &EngineSpec) -> Option<f64> {
    let u = &u.centered()?;
    let radius = engine.radial.r_max.unwrap_or_else(|| u.decay_radius(0.5 * tau));
    if !radius.is_finite() {
        return None;
    }
    let hi = 2.0 * radius;
    Some(hi / scanner_samples(hi, tau, u.lipschitz_bound()) as f64)
}

/// I_δ(u) = ∫∫_{|u(x)−u(y)|>δ} δ²/|x−y|^{N+2}.
pub fn i_delta(u: &ScalarField, delta: f64, engine: &EngineSpec) -> Result<Estimate> {
    i_delta_p(u, &KernelSpec::new(delta), engine)
}

/// ∫∫_{|u(x)−u(y)|>δ} δ^p/|x−y|^{N+p}; an explicit envelope replaces δ^p·1{t>δ}.
pub fn i_delta_p(u: &ScalarField, k: &KernelSpec, engine: &EngineSpec) -> Result<Estimate> {
    k.validate()?;
    f_functional(u, &k.effective_envelope(), k.p, engine)
}

/// ∫∫ F(|u(x)−u(y)|)/|x−y|^{N+p}.
pub fn f_functional(
    u: &ScalarField,
    f: &MonotoneEnvelope,
    p: f64,
    engine: &EngineSpec,
) -> Result<Estimate> {
    f.validate()?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", "must be at least 1"));
    }
    let sup = u.sup_bound();
    let lip = u.lipschitz_bound();
    let tau = f.vanishing_threshold();
    if f.is_zero() || sup == 0.0 || lip == 0.0 || (tau > 0.0 && tau >= 2.0 * sup) {
        return Ok(Estimate::zero());
    }
    if let MonotoneEnvelope::PowerLaw { q } = *f {
        if q <= p {
            return Err(Error::Divergent(format!(
                "F(t) = t^{q} against |h|^-(N+{p}) is not integrable at the diagonal for a \
                 nonconstant field (needs q > p)"
            )));
        }
    }
    let dim = u.dim();
    let radial_ok = dim.n() >= 2 && lip.is_finite() && u.radial_view().is_some();
    match engine.mode {
        EngineMode::Radial if !radial_ok => Err(Error::Precondition(
            "radial engine needs a radial Lipschitz field and N >= 2".into(),
        )),
        EngineMode::Radial | EngineMode::Auto if radial_ok => radial_path(u, f, p, engine),
        _ => mc_path(u, f, p, engine),
    }
}

fn finite_radius(r: f64) -> Result<f64> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Divergent("field has no finite decay radius".into()))
    }
}

fn radial_path(
    u: &ScalarField,
    f: &MonotoneEnvelope,
    p: f64,
    engine: &EngineSpec,
) -> Result<Estimate> {
    let u = &u.centered().expect("checked radial");
    let dim = u.dim();
    let tau = f.vanishing_threshold();
    let domain = if tau > 0.0 {
        RadialDomain::Symmetric {
            radius: finite_radius(u.decay_radius(0.5 * tau))?,
        }
    } else if let Some(s) = u.support_radius() {
        RadialDomain::Symmetric { radius: s }
    } else {
        RadialDomain::Full {
            radius: finite_radius(u.decay_radius(engine.mc.outer_radius_eps * u.sup_bound()))?,
        }
    };
    let radius = engine.radial.r_max.unwrap_or(match domain {
        RadialDomain::Symmetric { radius }
        | RadialDomain::Support { radius }
        | RadialDomain::Full { radius } => radius,
    });
    let domain = match domain {
        RadialDomain::Symmetric { .. } => RadialDomain::Symmetric { radius },
        RadialDomain::Support { .. } => RadialDomain::Support { radius },
        RadialDomain::Full { .. } => RadialDomain::Full { radius },
    };
    let g = u.radial_view().expect("checked radial");
    let integrand = RadialEnvelope::new(g, f, 2.0 * radius, u.lipschitz_bound());
    let plan = RadialPlan {
        dim,
        exponent: dim.as_f64() + p,
        window: (0.0, f64::INFINITY),
        domain,
    };
    radial_pair_integrate(&integrand, &plan, &engine.radial)
}

fn mc_path(u: &ScalarField, f: &MonotoneEnvelope, p: f64, engine: &EngineSpec) -> Result<Estimate> {
    let dim = u.dim();
    let mc = &engine.mc;
    mc.validate()?;
    let area = dim.sphere_area();
    let lip = u.lipschitz_bound();
    let integrand = EnvelopeIntegrand {
        u,
        f,
        half_exponent: 0.5 * (dim.as_f64() + p),
    };
    match *f {
        MonotoneEnvelope::Threshold { tau, scale } => {
            let radius = finite_radius(u.decay_radius(0.5 * tau))?;
            let plan = threshold_plan(dim, radius, tau, scale, p, lip, mc.h_max_factor);
            Ok(mc_pair_integrate_many(&integrand, &plan, mc)?[0])
        }
        MonotoneEnvelope::PowerLaw { q } => {
            let sup = u.sup_bound();
            let (region, radius) = match u.support_radius() {
                Some(s) => (XRegion::Symmetric { radius: s }, s),
                None => {
                    let r = finite_radius(u.decay_radius(mc.outer_radius_eps * sup))?;
                    (
                        XRegion::SymmetricFull {
                            radius: r,
                            tail_fraction: 0.1,
                        },
                        r,
                    )
                }
            };
            if !lip.is_finite() {
                return Err(Error::Unsupported(
                    "power-law envelope needs a Lipschitz field".into(),
                ));
            }
            let h_max = mc.h_max_factor * radius;
            // |u(x)−u(y)|^q ≤ 2^{max(q,1)−1}(|u(x)|^q + |u(y)|^q)
            let lq = lp_integral(u, q, engine)?.value;
            let h_tail = 2f64.powf(q.max(1.0)) * lq * area * h_max.powf(-p) / p;
            // Excluded |h| < c: ∫∫ ≤ K·c^{q−p}/(q−p).
            let k_inner = if q >= 2.0 {
                let d = dirichlet_energy(u, engine)?.value;
                lip.powf(q - 2.0) * d * area
            } else if let Some(s) = u.support_radius() {
                2.0 * dim.ball_volume() * (s + radius).powi(dim.n() as i32) * lip.powf(q) * area
            } else {
                return Err(Error::Unsupported(
                    "power-law exponent below 2 needs a compactly supported field".into(),
                ));
            };
            let excluded = |c: f64| k_inner * c.powf(q - p) / (q - p);
            let c0 = radius / 16.0;
            let mut plan = PairPlan {
                dim,
                region,
                inner_cutoff: c0,
                probe_cutoff: c0,
                h_max,
                tail_bound: 0.0,
            };
            let pilot_spec = mc.clone().with_samples((mc.n_samples / 16).max(2 * mc.chunk_size));
            let pilot = mc_pair_integrate_many(&integrand, &plan, &pilot_spec)?[0].value;
            let target = INNER_TOLERANCE * pilot;
            let c = if k_inner > 0.0 && target > 0.0 {
                c0.min((target * (q - p) / k_inner).powf(1.0 / (q - p)))
            } else {
                c0
            };
            plan.inner_cutoff = c;
            plan.probe_cutoff = c;
            plan.tail_bound = excluded(c) + h_tail;
            Ok(mc_pair_integrate_many(&integrand, &plan, mc)?[0])
        }
    }
}

/// Plan for a threshold envelope `scale·1{t > tau}` on a field with
/// |u| ≤ tau/2 outside B_radius and Lipschitz bound `lip`.
fn threshold_plan(
    dim: Dimension,
    radius: f64,
    tau: f64,
    scale: f64,
    p: f64,
    lip: f64,
    h_max_factor: f64,
) -> PairPlan {
    let h_max = h_max_factor * radius;
    let ball = dim.ball_volume() * radius.powi(dim.n() as i32);
    let (inner, probe) = if lip.is_finite() {
        (tau / lip, tau / lip)
    } else {
        (0.0, radius / 64.0)
    };
    PairPlan {
        dim,
        region: XRegion::Symmetric { radius },
        inner_cutoff: inner,
        probe_cutoff: probe,
        h_max,
        tail_bound: 2.0 * scale * ball * dim.sphere_area() * h_max.powf(-p) / p,
    }
}

/// Paired estimates on one sample stream: I_δ^A(u) and I_δ(|u|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticPair {
    pub magnetic: Estimate,
    pub modulus: Estimate,
}

struct MagneticIntegrand<'a> {
    u: &'a ComplexField,
    a: &'a VectorPotential,
    delta: f64,
    scale: f64,
    half_exponent: f64,
}

impl PairIntegrand for MagneticIntegrand<'_> {
    fn components(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let m = self.u.modulus();
        let (mx, my) = (m.value(x), m.value(y));
        let ux = self.u.at(mx, x);
        let uy = self.u.at(my, y);
        let psi = if self.a.is_zero() {
            uy
        } else {
            let n = x.len();
            let mut mid = [0.0; 8];
            let mut av = [0.0; 8];
            let (mid, av) = if n <= 8 {
                (&mut mid[..n], &mut av[..n])
            } else {
                unreachable!("dimension above 8 is rejected before sampling")
            };
            for i in 0..n {
                mid[i] = 0.5 * (x[i] + y[i]);
            }
            self.a.eval(mid, av);
            let theta: f64 = (0..n).map(|i| (x[i] - y[i]) * av[i]).sum();
            Complex64::from_polar(1.0, theta) * uy
        };
        let mag = (psi - ux).norm();
        let modulus = (mx.abs() - my.abs()).abs();
        let k = if mag > self.delta || modulus > self.delta {
            self.scale * kernel(dist2(x, y), self.half_exponent)
        } else {
            0.0
        };
        // The pointwise bound ||u(x)|−|u(y)|| ≤ |Ψ_u(x,y) − u(x)| makes the
        // magnetic indicator dominate; the `||` guards it against rounding.
        out[0] = k;
        out[1] = if modulus > self.delta { k } else { 0.0 };
    }
}

/// I_δ^A(u) = ∫∫_{|Ψ_u(x,y)−u(x)|>δ} δ²/|x−y|^{N+2}, Ψ_u(x,y) = e^{i(x−y)·A((x+y)/2)}u(y),
/// evaluated jointly with I_δ(|u|) on the same Monte Carlo samples.
pub fn i_delta_magnetic(
    u: &ComplexField,
    a: &VectorPotential,
    delta: f64,
    engine: &EngineSpec,
) -> Result<MagneticPair> {
    let k = KernelSpec::new(delta);
    k.validate()?;
    let dim = u.dim();
    a.validate(dim)?;
    if dim.n() > 8 {
        return Err(Error::Unsupported("magnetic functional above N = 8".into()));
    }
    if engine.mode == EngineMode::Radial {
        return Err(Error::Unsupported(
            "the magnetic functional has no radial reduction".into(),
        ));
    }
    let m = u.modulus();
    let sup = m.sup_bound();
    if sup == 0.0 || delta >= 2.0 * sup {
        return Ok(MagneticPair {
            magnetic: Estimate::zero(),
            modulus: Estimate::zero(),
        });
    }
    let mc = &engine.mc;
    mc.validate()?;
    let radius = finite_radius(m.decay_radius(0.5 * delta))?;
    // For x ∈ B_R and |h| ≤ c: |Ψ_u(x,y) − u(x)| ≤ (L + sup·(a0 + a1 R))|h| + sup·a1|h|²/2.
    let lc = u.lipschitz_bound();
    let (a0, a1) = a.growth();
    let lin = lc + sup * (a0 + a1 * radius);
    let quad = 0.5 * sup * a1;
    let scale = pow_p(delta, 2.0);
    let mut plan = threshold_plan(dim, radius, delta, scale, 2.0, lin, mc.h_max_factor);
    if lin.is_finite() && quad > 0.0 {
        plan.inner_cutoff = 2.0 * delta / (lin + (lin * lin + 4.0 * quad * delta).sqrt());
        plan.probe_cutoff = plan.inner_cutoff;
    }
    let integrand = MagneticIntegrand {
        u,
        a,
        delta,
        scale,
        half_exponent: 0.5 * (dim.as_f64() + 2.0),
    };
    let est = mc_pair_integrate_many(&integrand, &plan, mc)?;
    Ok(MagneticPair {
        magnetic: est[0],
        modulus: est[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Phase;
    use crate::quadrature::{McSpec, Method, RadialSpec};

    fn mc_small() -> EngineSpec {
        EngineSpec::mc(McSpec {
            n_samples: 1 << 16,
            chunk_size: 1 << 12,
            ..McSpec::default()
        })
    }

    #[test]
    fn constant_and_small_fields_vanish() {
        let c = ScalarField::constant(3, 2.0).unwrap();
        assert_eq!(i_delta(&c, 0.1, &mc_small()).unwrap().value, 0.0);
        let g = ScalarField::gaussian(3, 1.0, 0.04).unwrap();
        let e = i_delta(&g, 0.1, &mc_small()).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.method, Method::ClosedForm);
    }

    #[test]
    fn zero_envelope_vanishes() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let f = MonotoneEnvelope::Threshold { tau: 0.1, scale: 0.0 };
        assert_eq!(f_functional(&g, &f, 2.0, &mc_small()).unwrap().value, 0.0);
    }

    #[test]
    fn p_two_is_i_delta_bitwise() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let a = i_delta(&g, 0.1, &mc_small()).unwrap();
        let b = i_delta_p(&g, &KernelSpec::new(0.1).with_p(2.0), &mc_small()).unwrap();
        let c = f_functional(&g, &MonotoneEnvelope::threshold(0.1, 2.0), 2.0, &mc_small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn amplitude_law_is_bitwise_for_dyadic_factors() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        for t in [2.0, 0.5] {
            for p in [2.0, 3.0] {
                let tg = g.amplify(t).unwrap();
                let a = i_delta_p(&tg, &KernelSpec::new(0.1).with_p(p), &mc_small()).unwrap();
                let b = i_delta_p(&g, &KernelSpec::new(0.1 / t).with_p(p), &mc_small()).unwrap();
                assert_eq!(a.value, pow_p(t, p) * b.value, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn quadratic_power_law_is_rejected_as_divergent() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let r = f_functional(&g, &MonotoneEnvelope::PowerLaw { q: 2.0 }, 2.0, &mc_small());
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn indicator_is_flagged_divergent() {
        let u = ScalarField::indicator(3, 1.0).unwrap();
        let e = i_delta(&u, 0.1, &mc_small()).unwrap();
        assert!(e.diverged);
    }

    #[test]
    fn radial_and_mc_agree_on_gaussian() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let r = i_delta(&g, 0.2, &EngineSpec::radial(RadialSpec::default())).unwrap();
        let m = i_delta(&g, 0.2, &mc_small()).unwrap();
        assert!(r.discretization < 1e-4 * r.value, "{r:?}");
        assert!((r.value - m.value).abs() < 4.0 * m.stderr, "{r:?} {m:?}");
    }

    #[test]
    fn magnetic_zero_potential_reduces_bitwise() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let u = ComplexField::real(g.clone());
        let pair = i_delta_magnetic(&u, &VectorPotential::Zero, 0.1, &mc_small()).unwrap();
        let plain = i_delta(&g, 0.1, &mc_small()).unwrap();
        assert_eq!(pair.magnetic, plain);
        assert_eq!(pair.modulus, plain);
    }

    #[test]
    fn magnetic_dominates_modulus() {
        let g = ScalarField::gaussian(3, 1.0, 1.0).unwrap();
        let u = ComplexField::new(g, Phase::Linear { wavevector: vec![1.0, 0.0, 0.0] }).unwrap();
        let a = VectorPotential::uniform_field(Dimension::new(3).unwrap(), 2.0);
        let pair = i_delta_magnetic(&u, &a, 0.1, &mc_small()).unwrap();
        assert!(pair.magnetic.value >= pair.modulus.value);
        assert!(pair.magnetic.value > pair.modulus.value + 3.0 * pair.magnetic.stderr);
    }
}
