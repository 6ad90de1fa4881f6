//! Vertex-pair Hölder seminorms and the empirical Hölder exponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::FemFunction;
use crate::error::{Error, Result};
use crate::mesh::distance;

/// Meshes with more vertices than this are sampled instead of scanned.
pub const HOLDER_EXHAUSTIVE_LIMIT: usize = 5000;
pub const HOLDER_SAMPLED_PAIRS: usize = 1_000_000;
/// Largest accepted growth of the seminorm between successive levels.
pub const HOLDER_RATIO_LIMIT: f64 = 1.1;
const DEFAULT_SEED: u64 = 42;

/// `γ ∈ {0.05, 0.10, …, 0.95}`
pub const GAMMA_GRID: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90,
    0.95,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderSeminorm {
    pub value: f64,
    /// True when random pair subsampling replaced the full scan.
    pub sampled: bool,
    pub pairs: usize,
}

/// `max |u(x) − u(y)| / |x − y|^γ` over vertex pairs.
pub fn holder_seminorm(u: &FemFunction, gamma: f64) -> Result<HolderSeminorm> {
    holder_seminorm_seeded(u, gamma, DEFAULT_SEED)
}

pub fn holder_seminorm_seeded(u: &FemFunction, gamma: f64, seed: u64) -> Result<HolderSeminorm> {
    let (values, sampled, pairs) = holder_seminorms(u, &[gamma], seed)?;
    Ok(HolderSeminorm {
        value: values[0],
        sampled,
        pairs,
    })
}

/// Seminorms for several exponents in one pass. Returns the values, whether
/// pairs were sampled, and the number of pairs visited.
pub fn holder_seminorms(u: &FemFunction, gammas: &[f64], seed: u64) -> Result<(Vec<f64>, bool, usize)> {
    if let Some(&g) = gammas.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 1], got {g}")));
    }
    let pts = u.mesh().vertices();
    let vals = u.values();
    let n = pts.len();
    let pair_terms = |i: usize, j: usize, acc: &mut [f64]| {
        let du = (vals[i] - vals[j]).abs();
        if du == 0.0 {
            return;
        }
        let ln_d = distance(pts[i], pts[j]).ln();
        for (a, &g) in acc.iter_mut().zip(gammas) {
            *a = a.max(du * (-g * ln_d).exp());
        }
    };
    let merge = |mut a: Vec<f64>, b: Vec<f64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x = x.max(y);
        }
        a
    };
    let zero = || vec![0.0; gammas.len()];
    if n <= HOLDER_EXHAUSTIVE_LIMIT {
        let out = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = zero();
                for j in i + 1..n {
                    pair_terms(i, j, &mut acc);
                }
                acc
            })
            .reduce(zero, merge);
        Ok((out, false, n * n.saturating_sub(1) / 2))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = zero();
        let mut visited = 0;
        while visited < HOLDER_SAMPLED_PAIRS {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            pair_terms(i, j, &mut acc);
            visited += 1;
        }
        Ok((acc, true, visited))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderExponentEstimate {
    pub gamma_hat: f64,
    /// Seminorm at `gamma_hat` for each level.
    pub seminorms: Vec<f64>,
    /// `table[g][level]` for every `γ` on [`GAMMA_GRID`].
    pub table: Vec<Vec<f64>>,
    /// Set when no grid exponent passed and `gamma_hat` sits at the floor.
    pub at_floor: bool,
    pub sampled: bool,
}

/// Largest grid `γ` whose seminorm grows by at most [`HOLDER_RATIO_LIMIT`]
/// between every pair of successive levels.
pub fn estimate_holder_exponent(levels: &[FemFunction]) -> Result<HolderExponentEstimate> {
    estimate_holder_exponent_seeded(levels, DEFAULT_SEED)
}

/// As [`estimate_holder_exponent`], with an explicit seed for sampled pairs.
pub fn estimate_holder_exponent_seeded(levels: &[FemFunction], seed: u64) -> Result<HolderExponentEstimate> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 refinement levels, got {}",
            levels.len()
        )));
    }
    let mut per_level = Vec::with_capacity(levels.len());
    let mut sampled = false;
    for u in levels {
        let (vals, s, _) = holder_seminorms(u, &GAMMA_GRID, seed)?;
        sampled |= s;
        per_level.push(vals);
    }
    let table: Vec<Vec<f64>> = (0..GAMMA_GRID.len())
        .map(|g| per_level.iter().map(|v| v[g]).collect())
        .collect();
    let bounded = |row: &[f64]| {
        row.windows(2).all(|w| {
            if w[0] == 0.0 {
                w[1] <= 1e-12
            } else {
                w[1] <= HOLDER_RATIO_LIMIT * w[0]
            }
        })
    };
    let pick = (0..GAMMA_GRID.len()).rev().find(|&g| bounded(&table[g]));
    let (idx, at_floor) = match pick {
        Some(g) => (g, false),
        None => (0, true),
    };
    Ok(HolderExponentEstimate {
        gamma_hat: GAMMA_GRID[idx],
        seminorms: table[idx].clone(),
        table,
        at_floor,
        sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_interval_mesh;
    use std::sync::Arc;

    fn line(n: usize) -> Arc<crate::mesh::Mesh> {
        Arc::new(build_interval_mesh(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn lipschitz_and_constant() {
        let u = FemFunction::interpolate(line(20), |p| p[0]);
        assert!((holder_seminorm(&u, 1.0).unwrap().value - 1.0).abs() < 1e-12);
        let c = FemFunction::interpolate(line(20), |_| 3.0);
        assert_eq!(holder_seminorm(&c, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn square_root_half_exponent() {
        let u = FemFunction::interpolate(line(200), |p| p[0].sqrt());
        let s = holder_seminorm(&u, 0.5).unwrap().value;
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn rejects_bad_gamma() {
        let u = FemFunction::interpolate(line(4), |p| p[0]);
        assert!(holder_seminorm(&u, 0.0).is_err());
        assert!(holder_seminorm(&u, 1.5).is_err());
    }

    #[test]
    fn constant_levels_give_top_of_grid() {
        let levels: Vec<_> = [4, 8, 16]
            .iter()
            .map(|&n| FemFunction::interpolate(line(n), |_| 1.0))
            .collect();
        let est = estimate_holder_exponent(&levels).unwrap();
        assert_eq!(est.gamma_hat, 0.95);
        assert!(!est.at_floor);
    }

    #[test]
    fn smooth_function_is_lipschitz() {
        let levels: Vec<_> = [8, 16, 32, 64]
            .iter()
            .map(|&n| FemFunction::interpolate(line(n), |p| (3.0 * p[0]).sin()))
            .collect();
        assert_eq!(estimate_holder_exponent(&levels).unwrap().gamma_hat, 0.95);
    }
}
