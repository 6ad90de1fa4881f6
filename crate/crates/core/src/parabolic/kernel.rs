//! Discrete kernels `k(t, ·, y)`: the evolution of the mass-normalized delta
//! `M⁻¹e_y`.

use super::{Evolution, EvolutionConfig};
use crate::assembly::AssembledForm;
use crate::elliptic::{holder_seminorm, FemFunction};
use crate::error::{Error, Result};
use crate::linalg::BandLu;

/// Largest accepted growth of the Hölder modulus between two probe times.
pub const KERNEL_MODULUS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct KernelProbe {
    pub source: usize,
    pub times: Vec<f64>,
    pub kernel_columns: Vec<FemFunction>,
    pub holder_modulus: Vec<f64>,
    /// `𝟙ᵀM k(t, ·, y)` per time.
    pub masses: Vec<f64>,
    pub min_value: f64,
    /// `modulus(τ₂) ≤ 10·modulus(τ₁)` for every `τ₁ < τ₂`.
    pub modulus_bounded: bool,
}

fn delta(ev: &Evolution, y: usize) -> Result<Vec<f64>> {
    let n = ev.mass().nrows();
    if y >= n {
        return Err(Error::InvalidArgument(format!("source vertex {y} out of range 0..{n}")));
    }
    let mut e = vec![0.0; n];
    e[y] = 1.0;
    Ok(BandLu::factor(ev.mass())?.solve(&e))
}

fn step_counts(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                Err(Error::ZeroTime)
            } else {
                Ok(((t / dt).round() as usize).max(1))
            }
        })
        .collect()
}

/// Columns at the requested times; each time is rounded to a whole number of steps.
fn columns(ev: &Evolution, y: usize, steps: &[usize]) -> Result<Vec<Vec<f64>>> {
    let mut u = delta(ev, y)?;
    let mut done = 0;
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let mut out = vec![Vec::new(); steps.len()];
    for i in order {
        while done < steps[i] {
            u = ev.step(&u);
            done += 1;
        }
        out[i] = u.clone();
    }
    Ok(out)
}

pub fn probe_kernel(
    form: &AssembledForm,
    cfg: &EvolutionConfig,
    y: usize,
    times: &[f64],
    gamma: f64,
) -> Result<KernelProbe> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no probe times given".into()));
    }
    let steps = step_counts(times, cfg.dt)?;
    let ev = Evolution::new(form, *cfg)?;
    let cols = columns(&ev, y, &steps)?;
    let ones = vec![1.0; ev.mass().nrows()];
    let mut kernel_columns = Vec::with_capacity(cols.len());
    let mut holder_modulus = Vec::with_capacity(cols.len());
    let mut masses = Vec::with_capacity(cols.len());
    let mut min_value = f64::INFINITY;
    for c in cols {
        masses.push(ev.mass().bilinear(&ones, &c));
        min_value = c.iter().copied().fold(min_value, f64::min);
        let f = FemFunction::new(form.mesh().clone(), c)?;
        holder_modulus.push(holder_seminorm(&f, gamma)?.value);
        kernel_columns.push(f);
    }
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let modulus_bounded = idx.iter().enumerate().all(|(k, &i)| {
        idx[k + 1..]
            .iter()
            .all(|&j| times[j] <= times[i] || holder_modulus[j] <= KERNEL_MODULUS_FACTOR * holder_modulus[i])
    });
    Ok(KernelProbe {
        source: y,
        times: times.to_vec(),
        kernel_columns,
        holder_modulus,
        masses,
        min_value,
        modulus_bounded,
    })
}

/// `max |k(t, x, y) − k(t, y, x)|` over pairs from `sources`, relative to the
/// largest kernel value involved.
pub fn kernel_symmetry_defect(form: &AssembledForm, cfg: &EvolutionConfig, t: f64, sources: &[usize]) -> Result<f64> {
    let steps = step_counts(&[t], cfg.dt)?[0];
    let ev = Evolution::new(form, *cfg)?;
    let cols: Vec<Vec<f64>> = sources
        .iter()
        .map(|&y| columns(&ev, y, &[steps]).map(|mut c| c.remove(0)))
        .collect::<Result<_>>()?;
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, &ya) in sources.iter().enumerate() {
        for (b, &yb) in sources.iter().enumerate() {
            let kab = cols[b][ya];
            let kba = cols[a][yb];
            defect = defect.max((kab - kba).abs());
            scale = scale.max(kab.abs()).max(kba.abs());
        }
    }
    Ok(if scale > 0.0 { defect / scale } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_robin_form;
    use crate::coeff::CoefficientField;
    use crate::mesh::build_rectangle_mesh;
    use crate::parabolic::BoundaryModel;
    use std::sync::Arc;

    #[test]
    fn neumann_kernel_properties() {
        let m = Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap());
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        for model in [BoundaryModel::Robin, BoundaryModel::Wentzell] {
            let cfg = EvolutionConfig::new(0.002, 0.1).with_lumped(true).with_model(model);
            let probe = probe_kernel(&form, &cfg, 40, &[0.01, 0.05, 0.1], 0.5).unwrap();
            assert!(probe.min_value >= -1e-12);
            for mass in &probe.masses {
                assert!((mass - 1.0).abs() < 1e-12);
            }
            assert!(probe.modulus_bounded);
            let d = kernel_symmetry_defect(&form, &cfg, 0.02, &[0, 13, 40, 80]).unwrap();
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn zero_time_rejected() {
        let m = Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap());
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let cfg = EvolutionConfig::new(0.01, 0.1);
        assert!(matches!(probe_kernel(&form, &cfg, 0, &[0.0], 0.5), Err(Error::ZeroTime)));
    }
}
