//! Single integrals over R^N.

use super::mc::mc_volume;
use super::rules::{graded_panels, GaussRule};
use super::{Estimate, McSpec, Method, RadialSpec};
use crate::error::{Error, Result};
use crate::fields::Dimension;

/// t·log t with the continuous extension 0·log 0 = 0.
#[inline]
pub fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

fn radial_once(
    phi: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    tail_start: f64,
    dim: Dimension,
    n: usize,
    rule: &GaussRule,
) -> f64 {
    let k = dim.n() as i32 - 1;
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < tail_start)
        .collect();
    pts.push(0.0);
    pts.push(tail_start);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        for (a, b) in graded_panels(w[0], w[1], None, None, n) {
            total += rule.integrate(a, b, |r| r.powi(k) * phi(r));
        }
    }
    for (a, b) in graded_panels(0.0, 1.0, None, None, n) {
        total += rule.integrate(a, b, |t| {
            let r = tail_start / t;
            r.powi(k) * phi(r) * tail_start / (t * t)
        });
    }
    dim.sphere_area() * total
}

/// ∫_{R^N} φ(|x|) dx with breakpoints at the kinks of φ and the tail
/// [tail_start, ∞) mapped onto (0, 1].
pub fn radial_volume_integrate(
    phi: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    tail_start: f64,
    dim: Dimension,
    spec: &RadialSpec,
) -> Result<Estimate> {
    spec.validate()?;
    if !(tail_start > 0.0 && tail_start.is_finite()) {
        return Err(Error::Divergent(
            "no finite radius beyond which the integrand decays".into(),
        ));
    }
    let rule = GaussRule::legendre(8);
    let n = 2 * spec.n_r;
    let fine = radial_once(phi, breakpoints, tail_start, dim, n, &rule);
    let coarse = radial_once(phi, breakpoints, tail_start, dim, n / 2, &rule);
    if !fine.is_finite() {
        return Err(Error::Divergent("radial volume integral is not finite".into()));
    }
    Ok(Estimate {
        value: fine,
        stderr: 0.0,
        n_effective: 0,
        tail_bound: 0.0,
        method: Method::Radial,
        diverged: false,
        discretization: (fine - coarse).abs(),
    })
}

/// ∫_{R^N} f(x) dx by Monte Carlo with a ball(radius) + heavy-tail proposal.
pub fn mc_volume_integrate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: Dimension,
    radius: f64,
    compact: bool,
    spec: &McSpec,
) -> Result<Estimate> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Divergent(
            "no finite radius beyond which the integrand decays".into(),
        ));
    }
    let tail = if compact { 0.0 } else { 0.1 };
    mc_volume(f, dim, radius, tail, spec)
}

/// ∫ f(x) e^{-π|x|²} dx by tensor Gauss–Hermite with `points` nodes per axis.
pub fn gauss_volume_integrate(
    f: &dyn Fn(&[f64]) -> f64,
    dim: Dimension,
    points: usize,
) -> Result<Estimate> {
    let n = dim.n();
    let total_nodes = (points as f64).powi(n as i32);
    if total_nodes > 5e7 {
        return Err(Error::Unsupported(format!(
            "tensor Gauss-Hermite with {points}^{n} nodes"
        )));
    }
    let once = |m: usize| -> f64 {
        let rule = GaussRule::hermite(m);
        let scale = std::f64::consts::PI.sqrt().recip();
        let nodes: Vec<f64> = rule.nodes.iter().map(|z| z * scale).collect();
        let weights: Vec<f64> = rule.weights.iter().map(|w| w * scale).collect();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for d in 0..n {
                x[d] = nodes[idx[d]];
                w *= weights[idx[d]];
            }
            total += w * f(&x);
            let mut d = 0;
            loop {
                if d == n {
                    return total;
                }
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };
    let fine = once(points);
    let coarse = once((points / 2).max(1));
    Ok(Estimate {
        value: fine,
        stderr: 0.0,
        n_effective: total_nodes as u64,
        tail_bound: 0.0,
        method: Method::GaussHermite,
        diverged: false,
        discretization: (fine - coarse).abs(),
    })
}
