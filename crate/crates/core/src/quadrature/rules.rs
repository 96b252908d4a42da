//! One-dimensional building blocks: Gauss rules, graded panel meshes and
//! bracketed root finding.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_eval(n, z);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Nodes and weights for ∫ f(x) e^{-x²} dx over R.
    pub fn hermite(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[n - 1],
                3 => 1.91 * z - 0.91 * nodes[n - 2],
                _ => 2.0 * z - nodes[n - i + 1],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let (p, d) = hermite_eval(n, z);
                pp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Sum of w·f over the rule mapped onto [a, b].
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_eval(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
    }
    let d = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, d)
}

/// Orthonormal Hermite recurrence; returns (p_n(z), p_n'(z)·(orthonormal scaling)).
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    let pim4 = PI.powf(-0.25);
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Panel mesh on [a, b].
///
/// `left`/`right` give the length scale of a near-singularity just outside
/// (or at) that end. Graded ends get geometric cells of widths d, 2d, 4d, …
/// each split into `max(1, n/8)` panels; the remaining middle region gets
/// `n` uniform panels. Doubling `n` halves every panel.
pub fn graded_panels(a: f64, b: f64, left: Option<f64>, right: Option<f64>, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(1);
    let len = b - a;
    if !(len > 0.0) {
        return Vec::new();
    }
    let per_cell = (n / 8).max(1);
    let share = if left.is_some() && right.is_some() { 0.25 } else { 0.5 };
    let cells = |d: Option<f64>| -> Vec<f64> {
        // cumulative offsets of geometric cells from the end
        let mut out = Vec::new();
        if let Some(d) = d {
            let d = (0.25 * d).max(len * 1e-12);
            if d < share * len {
                let mut w = d;
                let mut acc = 0.0;
                while acc + w < share * len {
                    acc += w;
                    out.push(acc);
                    w *= 2.0;
                }
            }
        }
        out
    };
    let lc = cells(left);
    let rc = cells(right);

    let mut pts = vec![a];
    pts.extend(lc.iter().map(|o| a + o));
    let lo = *pts.last().unwrap();
    let hi = rc.last().map(|o| b - o).unwrap_or(b);

    let mut panels = Vec::new();
    let mut push_cell = |x0: f64, x1: f64, k: usize| {
        let h = (x1 - x0) / k as f64;
        for j in 0..k {
            let p0 = x0 + h * j as f64;
            let p1 = if j + 1 == k { x1 } else { x0 + h * (j + 1) as f64 };
            panels.push((p0, p1));
        }
    };
    for w in pts.windows(2) {
        push_cell(w[0], w[1], per_cell);
    }
    push_cell(lo, hi, n);
    let mut rpts: Vec<f64> = rc.iter().rev().map(|o| b - o).collect();
    rpts.push(b);
    let mut prev = hi;
    for p in rpts {
        if p > prev {
            push_cell(prev, p, per_cell);
        }
        prev = p;
    }
    panels
}

/// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    let neg_lo = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Level-crossing finder for a 1D function sampled on a fixed grid.
#[derive(Debug, Clone)]
pub struct LevelScanner {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl LevelScanner {
    pub fn new(g: impl Fn(f64) -> f64, hi: f64, samples: usize, extra: &[f64]) -> Self {
        let mut grid: Vec<f64> = (0..=samples).map(|i| hi * i as f64 / samples as f64).collect();
        // Kinks are included so piecewise shapes are bracketed at their jumps.
        for &k in extra {
            if k > 0.0 && k < hi {
                grid.push(k);
                grid.push(k * (1.0 + 1e-12));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let values = grid.iter().map(|&r| g(r)).collect();
        LevelScanner { grid, values }
    }

    pub fn upper(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// All r in (0, upper) with g(r) = level (sign changes of g − level, refined).
    pub fn crossings(&self, g: &impl Fn(f64) -> f64, level: f64, out: &mut Vec<f64>) {
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.values[i] - level, self.values[i + 1] - level);
            if a == 0.0 && i > 0 {
                out.push(self.grid[i]);
            } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
                out.push(bisect(self.grid[i], self.grid[i + 1], |r| g(r) - level));
            }
        }
    }

    /// Values of g at interior local extrema (sign changes of the discrete slope).
    pub fn extremal_values(&self, g: &impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = Vec::new();
        let v = &self.values;
        for i in 1..v.len() - 1 {
            let (d0, d1) = (v[i] - v[i - 1], v[i + 1] - v[i]);
            if (d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0) {
                // golden-section refine on [grid[i-1], grid[i+1]]
                let sign = if d0 > 0.0 { -1.0 } else { 1.0 };
                let (mut a, mut b) = (self.grid[i - 1], self.grid[i + 1]);
                let phi = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let c = b - phi * (b - a);
                    let d = a + phi * (b - a);
                    if sign * g(c) < sign * g(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                out.push(g(0.5 * (a + b)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::legendre(5);
        // degree 9 is exact for 5 points
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let rule = GaussRule::hermite(30);
        let m0: f64 = rule.weights.iter().sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x * x)
            .sum();
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
        // ∫ e^{2x} e^{-x²} = √π e
        let me: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * (2.0 * x).exp())
            .sum();
        assert!((me / (PI.sqrt() * 1f64.exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graded_panels_cover_interval() {
        for (l, r) in [(None, None), (Some(1e-3), None), (None, Some(1e-4)), (Some(0.01), Some(0.02))] {
            let p = graded_panels(1.0, 4.0, l, r, 16);
            assert_eq!(p.first().unwrap().0, 1.0);
            assert_eq!(p.last().unwrap().1, 4.0);
            for w in p.windows(2) {
                assert_eq!(w[0].1, w[1].0);
                assert!(w[0].1 > w[0].0);
            }
        }
        let p = graded_panels(0.0, 1.0, Some(1e-3), None, 8);
        assert!(p[0].1 - p[0].0 <= 2.5e-4 + 1e-15);
    }

    #[test]
    fn graded_rule_handles_near_singularity() {
        let rule = GaussRule::legendre(4);
        let d = 1e-3;
        let exact = 1.0 / (2.0 * d * d) - 1.0 / (2.0 * (1.0 + d) * (1.0 + d));
        let panels = graded_panels(0.0, 1.0, Some(d), None, 16);
        let v: f64 = panels
            .iter()
            .map(|&(a, b)| rule.integrate(a, b, |x| (x + d).powi(-3)))
            .sum();
        assert!((v / exact - 1.0).abs() < 1e-7, "{v} vs {exact}");
    }

    #[test]
    fn scanner_finds_crossings() {
        let g = |r: f64| (-r * r).exp();
        let sc = LevelScanner::new(g, 6.0, 512, &[]);
        let mut out = Vec::new();
        sc.crossings(&g, 0.1, &mut out);
        assert_eq!(out.len(), 1);
        assert!((out[0] - 10f64.ln().sqrt()).abs() < 1e-12);
        let h = |r: f64| r * (-r * r).exp();
        let sc = LevelScanner::new(h, 6.0, 512, &[]);
        let ext = sc.extremal_values(&h);
        assert_eq!(ext.len(), 1);
        assert!((ext[0] - (0.5f64).sqrt() * (-0.5f64).exp()).abs() < 1e-12);
    }
}
