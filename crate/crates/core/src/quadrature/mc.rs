//! Stratified importance-sampling Monte Carlo for singular pair integrals
//!
//! ```text
//!     ∫∫ f(x, y) dx dy,   h = y − x,
//! ```
//!
//! with `x` drawn from a ball (optionally mixed with a heavy radial tail) and
//! `h` drawn from the density ∝ |h|^{-N} on `inner_cutoff ≤ |h| ≤ h_max`,
//! stratified in log-radius. Samples are grouped into fixed-size chunks; chunk
//! `j` draws from the ChaCha stream `(master_seed, j)` and the per-chunk
//! partials are reduced in ascending chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Estimate, McSpec, Method};
use crate::error::{invalid, Result};
use crate::fields::Dimension;

/// Vector-valued nonnegative pair integrand; components share every sample.
pub trait PairIntegrand: Sync {
    fn components(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]);
}

/// Adapter for scalar closures.
pub struct FnIntegrand<F>(pub F);

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> PairIntegrand for FnIntegrand<F> {
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = (self.0)(x, y);
    }
}

/// How the x-domain is truncated (balls are centered at the origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XRegion {
    /// f(x, ·) = 0 whenever |x| ≥ radius.
    Support { radius: f64 },
    /// f symmetric in (x, y) and zero when both |x|, |y| ≥ radius. Pairs
    /// with x inside and y outside carry weight 2 to account for the mirror.
    Symmetric { radius: f64 },
    /// f symmetric, no vanishing assumption: a fraction `tail_fraction` of
    /// x-samples come from the density ∝ |x|^{-N-1} outside the ball.
    SymmetricFull { radius: f64, tail_fraction: f64 },
}

impl XRegion {
    pub fn radius(&self) -> f64 {
        match *self {
            XRegion::Support { radius }
            | XRegion::Symmetric { radius }
            | XRegion::SymmetricFull { radius, .. } => radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairPlan {
    pub dim: Dimension,
    pub region: XRegion,
    /// Radius below which the integrand is exactly zero (0 when unknown).
    pub inner_cutoff: f64,
    /// First cutoff of the halving probe used when `inner_cutoff == 0`.
    pub probe_cutoff: f64,
    pub h_max: f64,
    /// Caller-supplied rigorous bound on the mass with |h| > h_max (and any
    /// other excluded region).
    pub tail_bound: f64,
}

impl PairPlan {
    fn validate(&self) -> Result<()> {
        let r = self.region.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("radius", "x-domain radius must be positive and finite"));
        }
        if let XRegion::SymmetricFull { tail_fraction, .. } = self.region {
            if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
                return Err(invalid("tail_fraction", "must lie in (0, 1)"));
            }
        }
        if self.inner_cutoff < 0.0 {
            return Err(invalid("inner_cutoff", "must be nonnegative"));
        }
        let c = if self.inner_cutoff > 0.0 {
            self.inner_cutoff
        } else {
            self.probe_cutoff
        };
        if !(c > 0.0) || !(self.h_max > c) || !self.h_max.is_finite() {
            return Err(invalid("h_max", "need 0 < cutoff < h_max < inf"));
        }
        Ok(())
    }
}

/// Growth factor per cutoff halving that flags divergence.
pub const DIVERGENCE_GROWTH: f64 = 1.8;

#[derive(Debug, Clone)]
struct Partial {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: u64,
}

fn unit_direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = z;
            s += z * z;
        }
        if s > 1e-300 {
            let inv = s.sqrt().recip();
            out.iter_mut().for_each(|o| *o *= inv);
            return;
        }
    }
}

fn sphere_area(dim: Dimension) -> f64 {
    dim.sphere_area()
}

/// Run `n_chunks` independent chunks and return their partials in index order.
fn run_chunks<F>(spec: &McSpec, k: usize, chunk: F) -> Vec<Partial>
where
    F: Fn(&mut ChaCha8Rng, &mut Partial) + Sync,
{
    let n_chunks = spec.n_chunks();
    let work = |j: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
        rng.set_stream(j);
        let mut p = Partial {
            sum: vec![0.0; k],
            sumsq: vec![0.0; k],
            count: 0,
        };
        chunk(&mut rng, &mut p);
        p
    };
    let run = || (0..n_chunks).into_par_iter().map(work).collect::<Vec<_>>();
    match spec.workers {
        Some(1) => (0..n_chunks).map(work).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| (0..n_chunks).map(work).collect()),
        None => run(),
    }
}

/// Ordered reduction of chunk partials into one estimate per component.
fn reduce(partials: &[Partial], k: usize, tail_bound: f64) -> Vec<Estimate> {
    let count: u64 = partials.iter().map(|p| p.count).sum();
    let n_chunks = partials.len() as f64;
    (0..k)
        .map(|c| {
            let mut total = 0.0;
            for p in partials {
                total += p.sum[c];
            }
            let mean = total / count as f64;
            let mut ss = 0.0;
            for p in partials {
                let m = p.sum[c] / p.count as f64;
                ss += (m - mean) * (m - mean);
            }
            let var = if n_chunks > 1.0 { ss / (n_chunks - 1.0) } else { 0.0 };
            Estimate {
                value: mean,
                stderr: (var / n_chunks).sqrt(),
                n_effective: count,
                tail_bound,
                method: Method::Mc,
                diverged: false,
                discretization: 0.0,
            }
        })
        .collect()
}

fn integrate_at_cutoff<I: PairIntegrand + ?Sized>(
    integrand: &I,
    plan: &PairPlan,
    spec: &McSpec,
    cutoff: f64,
) -> Vec<Estimate> {
    let n = plan.dim.n();
    let nf = n as f64;
    let k = integrand.components();
    let strata = spec.radial_strata;
    let log_range = (plan.h_max / cutoff).ln();
    let area = sphere_area(plan.dim);
    let radius = plan.region.radius();
    let ball = plan.dim.ball_volume() * radius.powi(n as i32);
    let (tail_frac, full) = match plan.region {
        XRegion::SymmetricFull { tail_fraction, .. } => (tail_fraction, true),
        _ => (0.0, false),
    };
    let symmetric = !matches!(plan.region, XRegion::Support { .. });

    let partials = run_chunks(spec, k, |rng, p| {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut out = vec![0.0; k];
        for i in 0..spec.chunk_size {
            // x
            unit_direction(rng, &mut dir);
            let outside_x = full && rng.random::<f64>() < tail_frac;
            let (rho_x, inv_qx) = if outside_x {
                let u: f64 = 1.0 - rng.random::<f64>();
                let rho = radius / u;
                (rho, area * rho.powi(n as i32 + 1) / (radius * tail_frac))
            } else {
                let u: f64 = rng.random();
                (radius * u.powf(1.0 / nf), ball / (1.0 - tail_frac))
            };
            for (xi, d) in x.iter_mut().zip(&dir) {
                *xi = rho_x * d;
            }
            // h, stratified in log-radius
            let stratum = (i % strata) as f64;
            let u: f64 = rng.random();
            let rho_h = cutoff * (log_range * (stratum + u) / strata as f64).exp();
            unit_direction(rng, &mut dir);
            let mut y2 = 0.0;
            for ((yi, xi), d) in y.iter_mut().zip(&x).zip(&dir) {
                *yi = xi + rho_h * d;
                y2 += *yi * *yi;
            }
            let inv_qh = area * log_range * rho_h.powi(n as i32);
            let y_out = y2 >= radius * radius;
            let weight = match (symmetric, outside_x) {
                (false, _) => 1.0,
                (true, false) => {
                    if y_out {
                        2.0
                    } else {
                        1.0
                    }
                }
                (true, true) => {
                    if y_out {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if weight != 0.0 {
                integrand.eval(&x, &y, &mut out);
                let jac = weight * inv_qx * inv_qh;
                for ((o, s), q) in out[..k].iter().zip(&mut p.sum).zip(&mut p.sumsq) {
                    let v = o * jac;
                    *s += v;
                    *q += v * v;
                }
            }
            p.count += 1;
        }
    });
    reduce(&partials, k, plan.tail_bound)
}

/// Estimate one or more pair integrals on a shared sample stream.
///
/// With `inner_cutoff > 0` the region `|h| < inner_cutoff` must contribute
/// exactly zero. With `inner_cutoff == 0` the engine runs the probe at
/// `probe_cutoff`, its half and its quarter; two successive growths of at
/// least [`DIVERGENCE_GROWTH`] flag the estimate as diverged, and the
/// smallest-cutoff partial is returned.
pub fn mc_pair_integrate_many<I: PairIntegrand + ?Sized>(
    integrand: &I,
    plan: &PairPlan,
    spec: &McSpec,
) -> Result<Vec<Estimate>> {
    spec.validate()?;
    plan.validate()?;
    if plan.inner_cutoff > 0.0 {
        return Ok(integrate_at_cutoff(integrand, plan, spec, plan.inner_cutoff));
    }
    let c0 = plan.probe_cutoff;
    let probes: Vec<Vec<Estimate>> = [c0, c0 / 2.0, c0 / 4.0]
        .iter()
        .map(|&c| integrate_at_cutoff(integrand, plan, spec, c))
        .collect();
    let mut last = probes[2].clone();
    for (c, est) in last.iter_mut().enumerate() {
        let v: Vec<f64> = probes.iter().map(|p| p[c].value).collect();
        let grows = |a: f64, b: f64| a > 0.0 && b >= DIVERGENCE_GROWTH * a;
        est.diverged = grows(v[0], v[1]) && grows(v[1], v[2]);
    }
    Ok(last)
}

/// Single-component convenience wrapper around [`mc_pair_integrate_many`].
pub fn mc_pair_integrate(
    integrand: impl Fn(&[f64], &[f64]) -> f64 + Sync,
    plan: &PairPlan,
    spec: &McSpec,
) -> Result<Estimate> {
    Ok(mc_pair_integrate_many(&FnIntegrand(integrand), plan, spec)?[0])
}

/// Monte Carlo volume integral over R^N with the ball-plus-tail proposal.
pub(crate) fn mc_volume(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: Dimension,
    radius: f64,
    tail_fraction: f64,
    spec: &McSpec,
) -> Result<Estimate> {
    spec.validate()?;
    let n = dim.n();
    let nf = n as f64;
    let area = dim.sphere_area();
    let ball = dim.ball_volume() * radius.powi(n as i32);
    let partials = run_chunks(spec, 1, |rng, p| {
        let mut x = vec![0.0; n];
        let mut dir = vec![0.0; n];
        for _ in 0..spec.chunk_size {
            unit_direction(rng, &mut dir);
            let outside = tail_fraction > 0.0 && rng.random::<f64>() < tail_fraction;
            let (rho, inv_q) = if outside {
                let u: f64 = 1.0 - rng.random::<f64>();
                let rho = radius / u;
                (rho, area * rho.powi(n as i32 + 1) / (radius * tail_fraction))
            } else {
                let u: f64 = rng.random();
                (radius * u.powf(1.0 / nf), ball / (1.0 - tail_fraction))
            };
            for (xi, d) in x.iter_mut().zip(&dir) {
                *xi = rho * d;
            }
            let v = f(&x) * inv_q;
            p.sum[0] += v;
            p.sumsq[0] += v * v;
            p.count += 1;
        }
    });
    Ok(reduce(&partials, 1, 0.0)[0])
}
