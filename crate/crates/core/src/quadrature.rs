//! Gauss-Legendre rules and an adaptive composite integrator.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Tricomi initial guess, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let m = m as f64;
    let d = m * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed Gauss-Legendre rule mapped to an arbitrary interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { nodes, weights }
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        half * s
    }
}

/// Result of [`adaptive_integrate`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveIntegral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive composite Gauss-Legendre quadrature on [a, b].
///
/// Each panel is accepted once its single-panel value agrees with the sum of
/// its two halves to within `tol` scaled by the panel fraction. At least
/// `min_nodes` integrand evaluations are spent by pre-splitting the interval.
pub fn adaptive_integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    min_nodes: usize,
) -> AdaptiveIntegral {
    const RULE_POINTS: usize = 20;
    const MAX_DEPTH: usize = 40;
    let rule = GaussRule::new(RULE_POINTS);
    let initial = min_nodes.div_ceil(RULE_POINTS).max(1);
    let width = (b - a) / initial as f64;
    let mut stack: Vec<(f64, f64, f64, usize)> = (0..initial)
        .rev()
        .map(|k| {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == initial { b } else { lo + width };
            (lo, hi, rule.integrate(&f, lo, hi), 0)
        })
        .collect();
    let mut evaluations = initial * RULE_POINTS;
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let total = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        evaluations += 2 * RULE_POINTS;
        let fine = left + right;
        let err = (fine - coarse).abs();
        let allowed = tol * (hi - lo).abs() / total;
        if err <= allowed || depth >= MAX_DEPTH {
            value += fine;
            error_estimate += err;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    AdaptiveIntegral {
        value,
        error_estimate,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 2, 5, 20, 64] {
            let (_, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2m_minus_1() {
        let rule = GaussRule::new(5);
        for deg in 0..=9 {
            let got = rule.integrate(|x| x.powi(deg), 0.0, 1.0);
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let r = adaptive_integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 40);
        let want = 2.0 * (1.0 / 1e-2) * (1.0 / 1e-2f64).atan();
        assert!((r.value - want).abs() < 1e-8 * want);
        assert!(r.evaluations >= 40);
    }
}
