//! The drift field `b = c = sgn` on `(−1, 1)`, for which no shift makes the
//! Wentzell-Robin semigroup L∞-contractive.

use std::sync::Arc;

use super::{check_linfty_contraction, BoundaryModel, EvolutionConfig, LinftyReport};
use crate::assembly::assemble_robin_form;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::build_interval_mesh;
use crate::quadrature::adaptive_integrate;

/// Largest polynomial index tried by [`select_n`].
pub const COUNTEREXAMPLE_N_CAP: u64 = 1_000_000;
pub const COUNTEREXAMPLE_QUAD_TOL: f64 = 1e-10;
/// Slack allowed between the computed value and `−2 + 4ωα_n`.
const BOUND_SLACK: f64 = 1e-8;

/// `α_n = (1 − 2^{−1/n})^{1/2}`, the point where `u_n = 1`.
pub fn alpha_n(n: u64) -> f64 {
    (-(-std::f64::consts::LN_2 / n as f64).exp_m1()).sqrt()
}

/// `u_n(x) = 2(1 − x²)ⁿ` on `[−1, 1]`.
pub fn u_n(n: u64, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    2.0 * (n as f64 * (-x * x).ln_1p()).exp()
}

fn u_n_derivative(n: u64, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let nf = n as f64;
    -4.0 * nf * x * ((nf - 1.0) * (-x * x).ln_1p()).exp()
}

/// Smallest `n ≥ 1` with `4ωα_n < 2`.
pub fn select_n(omega: f64) -> Result<u64> {
    let mut n = 1;
    while 4.0 * omega * alpha_n(n) >= 2.0 {
        n += 1;
        if n > COUNTEREXAMPLE_N_CAP {
            return Err(Error::CounterexampleCap {
                cap: COUNTEREXAMPLE_N_CAP,
            });
        }
    }
    Ok(n)
}

/// `∫_{−α_n}^{α_n} (sgn(x)u_n′(x) + ω u_n(x)) dx` with its error estimate.
pub fn counterexample_form_value(n: u64, omega: f64, quadrature_n: usize) -> (f64, f64) {
    let a = alpha_n(n);
    let half = (quadrature_n / 2).max(20);
    let left = adaptive_integrate(
        |x| -u_n_derivative(n, x) + omega * u_n(n, x),
        -a,
        0.0,
        0.5 * COUNTEREXAMPLE_QUAD_TOL,
        half,
    );
    let right = adaptive_integrate(
        |x| u_n_derivative(n, x) + omega * u_n(n, x),
        0.0,
        a,
        0.5 * COUNTEREXAMPLE_QUAD_TOL,
        half,
    );
    (left.value + right.value, left.error_estimate + right.error_estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The invariance criterion fails for this shift.
    Violated,
    Compatible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub omega: f64,
    pub n: u64,
    pub alpha_n: f64,
    pub form_value: f64,
    pub quadrature_error: f64,
    /// `−2 + 4ωα_n`
    pub bound: f64,
    pub verdict: Verdict,
}

pub fn verify_counterexample(omegas: &[f64], quadrature_n: usize) -> Result<Vec<CounterexampleReport>> {
    omegas
        .iter()
        .map(|&omega| {
            let n = select_n(omega)?;
            let alpha = alpha_n(n);
            let (form_value, quadrature_error) = counterexample_form_value(n, omega, quadrature_n);
            let bound = -2.0 + 4.0 * omega * alpha;
            let verdict = if form_value < 0.0 && form_value <= bound + BOUND_SLACK {
                Verdict::Violated
            } else {
                Verdict::Compatible
            };
            Ok(CounterexampleReport {
                omega,
                n,
                alpha_n: alpha,
                form_value,
                quadrature_error,
                bound,
                verdict,
            })
        })
        .collect()
}

/// Time-steps the Wentzell problem for the `sgn` field from `u_n/2` (so
/// `‖u₀‖_∞ = 1`) and reports `max_t e^{−ωt}‖u(t)‖_∞`.
pub fn counterexample_growth(omega: f64, n_cells: usize, dt: f64, steps: usize, n_poly: u64) -> Result<LinftyReport> {
    if n_cells % 2 != 0 {
        return Err(Error::InvalidArgument("use an even cell count so that 0 is a vertex".into()));
    }
    let mesh = Arc::new(build_interval_mesh(-1.0, 1.0, n_cells)?);
    let field = CoefficientField::sgn_drift(0.0);
    let form = assemble_robin_form(&mesh, &field);
    let cfg = EvolutionConfig::new(dt, dt * steps as f64)
        .with_model(BoundaryModel::Wentzell)
        .with_lumped(true)
        .with_omega(omega);
    let u0: Vec<f64> = mesh.vertices().iter().map(|p| 0.5 * u_n(n_poly, p[0])).collect();
    check_linfty_contraction(&form, &field, &cfg, Some(omega), &[u0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert!((alpha_n(1) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((alpha_n(2) - (1.0 - 0.5f64.sqrt()).sqrt()).abs() < 1e-15);
        for n in [1, 3, 50, 1000] {
            assert!((u_n(n, alpha_n(n)) - 1.0).abs() < 1e-12);
            assert!(alpha_n(n + 1) < alpha_n(n));
        }
        assert_eq!(u_n(7, 0.0), 2.0);
    }

    #[test]
    fn selected_indices() {
        assert_eq!(select_n(1.0).unwrap(), 3);
        assert_eq!(select_n(10.0).unwrap(), 277);
        assert!(matches!(select_n(1e6), Err(Error::CounterexampleCap { .. })));
    }

    #[test]
    fn form_value_matches_closed_form() {
        // the sgn·u′ part integrates to −2 exactly; ∫u_n is a Beta-type integral
        for (n, omega) in [(3u64, 1.0), (277, 10.0)] {
            let (v, _) = counterexample_form_value(n, omega, 200);
            let a = alpha_n(n);
            let int_u = crate::quadrature::GaussRule::new(40).integrate(|x| u_n(n, x), -a, a);
            assert!((v - (-2.0 + omega * int_u)).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_violation() {
        for r in verify_counterexample(&[1.0, 10.0, 100.0], 200).unwrap() {
            assert_eq!(r.verdict, Verdict::Violated, "{r:?}");
            assert!(r.form_value < 0.0 && r.form_value <= r.bound + 1e-8);
        }
    }
}
