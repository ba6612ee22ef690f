//! Heat kernel, cut-off, heat-kernel-weighted Dirichlet energy and the local
//! monotonicity functional
//! `Φ(r) = r⁻⁴ I(r, θ₁ξ, z*) I(r, θ₂ξ, z*)` with `θ₁ = (D_e u)₊`, `θ₂ = (D_e u)₋`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{
    directional_derivative, gradient, Cylinder, Grid, SpaceTimePoint, SpaceTimeSolution,
    SpatialField,
};

/// `G(x, t) = exp(-|x|²/4t) / (4πt)^{n/2}` for `t > 0`, zero otherwise;
/// `n = x.len()`.
pub fn heat_kernel(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-r2 / (4.0 * t)).exp() / (4.0 * PI * t).powf(0.5 * x.len() as f64)
}

/// Quintic smoothstep `6q⁵ - 15q⁴ + 10q³`, C² at both ends.
fn smoothstep(q: f64) -> f64 {
    q * q * q * (q * (6.0 * q - 15.0) + 10.0)
}

/// Radial C² bump: 1 on `B_{rho0/2}(x_star)`, 0 outside `B_{rho0}(x_star)`.
pub fn cutoff(x: &[f64], x_star: &[f64], rho0: f64) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(Error::NonPositiveRadius(rho0));
    }
    let dist = x
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let s = dist / rho0;
    Ok(if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        smoothstep(2.0 * (1.0 - s))
    })
}

/// Trapezoid weights of the tensor grid.
pub(crate) fn quadrature_weights(grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let m = grid.multi(i);
            (0..grid.dim())
                .map(|d| {
                    let edge = m[d] == 0 || m[d] + 1 == grid.nx()[d];
                    if edge {
                        0.5 * grid.dx()[d]
                    } else {
                        grid.dx()[d]
                    }
                })
                .product()
        })
        .collect()
}

fn squared_gradient(v: &SpatialField, grid: &Grid) -> Result<Vec<f64>> {
    let g = gradient(v, grid)?;
    Ok((0..grid.len())
        .map(|i| g.iter().map(|c| c[i] * c[i]).sum())
        .collect())
}

/// `I(r, v, z*)` for several fields and radii in one pass over the time slab.
///
/// Each snapshot interval `[t_k, t_{k+1}]` clipped to `[t* - r², t*]`
/// contributes `len * Σ_x w_x avg(|Dv|²) G(x - x*, t* - mid)`, where `avg`
/// is the mean of the two end slices and `mid` the clipped interval's
/// midpoint. The singular time `t*` itself is never evaluated.
///
/// `fields(k)` must return the same number of fields for every snapshot.
/// The result is indexed `[field][radius]`.
pub fn weighted_energies(
    sol: &SpaceTimeSolution,
    z_star: SpaceTimePoint,
    radii: &[f64],
    mut fields: impl FnMut(usize) -> Result<Vec<SpatialField>>,
) -> Result<Vec<Vec<f64>>> {
    let grid = sol.grid();
    let times = sol.times();
    let t_star = times[z_star.t_index];
    let r_top = radii.iter().copied().fold(0.0, f64::max);
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::NonPositiveRadius(r));
    }
    let start_time = t_star - r_top * r_top;
    if start_time < times[0] - 1e-12 {
        return Err(Error::SlabOutOfRange {
            start: start_time,
            end: t_star,
        });
    }
    let weights = quadrature_weights(grid);
    let x_star = grid.coords(z_star.index);
    let dim = grid.dim();
    let offsets: Vec<[f64; 2]> = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            [x[0] - x_star[0], x[1] - x_star[1]]
        })
        .collect();

    let first = times
        .partition_point(|&t| t <= start_time + 1e-12)
        .saturating_sub(1);
    let mut acc: Option<Vec<Vec<f64>>> = None;
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for k in first..=z_star.t_index {
        let cur: Vec<Vec<f64>> = fields(k)?
            .iter()
            .map(|v| squared_gradient(v, grid))
            .collect::<Result<_>>()?;
        let acc = acc.get_or_insert_with(|| vec![vec![0.0; radii.len()]; cur.len()]);
        if let Some(prev) = prev.as_ref() {
            let (a, b) = (times[k - 1], times[k]);
            for (ri, &r) in radii.iter().enumerate() {
                let lo = a.max(t_star - r * r);
                if lo >= b {
                    continue;
                }
                let len = b - lo;
                let lag = t_star - 0.5 * (lo + b);
                let kernel: Vec<f64> = offsets
                    .iter()
                    .zip(&weights)
                    .map(|(o, w)| w * heat_kernel(&o[..dim], lag))
                    .collect();
                for (fi, (p, c)) in prev.iter().zip(&cur).enumerate() {
                    let s: f64 = (0..kernel.len())
                        .map(|i| kernel[i] * 0.5 * (p[i] + c[i]))
                        .sum();
                    acc[fi][ri] += len * s;
                }
            }
        }
        prev = Some(cur);
    }
    Ok(acc.unwrap_or_default())
}

/// `I(r, v, z*) = ∫_{t*-r²}^{t*} ∫ |Dv|² G(x - x*, t* - t) dx dt` for a
/// space-time field given slice by slice.
pub fn weighted_energy_i(
    sol: &SpaceTimeSolution,
    mut v: impl FnMut(usize) -> Result<SpatialField>,
    z_star: SpaceTimePoint,
    r: f64,
) -> Result<f64> {
    let out = weighted_energies(sol, z_star, &[r], |k| Ok(vec![v(k)?]))?;
    Ok(out.first().map_or(0.0, |row| row[0]))
}

#[derive(Debug, Clone)]
pub struct PhiTable {
    pub center: SpaceTimePoint,
    pub direction: Vec<f64>,
    pub rho0: f64,
    pub radii: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// `max_r Φ(r) ρ0^{2n+8} / (‖θ₁‖² ‖θ₂‖²)` over `Q⁻_{ρ0}(z*)`; `None`
    /// when either part vanishes there.
    pub n_emp: Option<f64>,
}

/// Unit probe directions: coordinate axes, plus both diagonals in 2D.
pub fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        vec![vec![1.0]]
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h], vec![h, -h]]
    }
}

/// Local monotonicity functional for the positive and negative parts of
/// `D_e u`, localized by [`cutoff`].
pub fn acf_phi(
    sol: &SpaceTimeSolution,
    z_star: SpaceTimePoint,
    e: &[f64],
    rho0: f64,
    radii: &[f64],
) -> Result<PhiTable> {
    let grid = sol.grid();
    if e.len() != grid.dim() {
        return Err(Error::ShapeMismatch {
            expected: grid.dim(),
            got: e.len(),
        });
    }
    if !(rho0 > 0.0) {
        return Err(Error::NonPositiveRadius(rho0));
    }
    if let Some(&r) = radii.iter().find(|&&r| r > rho0) {
        return Err(Error::RadiusExceedsRho0 { radius: r, rho0 });
    }
    let x_star = grid.coords(z_star.index);
    let dim = grid.dim();
    let xi: Vec<f64> = (0..grid.len())
        .map(|i| cutoff(&grid.coords(i)[..dim], &x_star[..dim], rho0))
        .collect::<Result<_>>()?;

    let parts = |k: usize| -> Result<Vec<SpatialField>> {
        let de = directional_derivative(sol.u(k), grid, e)?;
        let pos = de
            .values()
            .iter()
            .zip(&xi)
            .map(|(v, c)| v.max(0.0) * c)
            .collect();
        let neg = de
            .values()
            .iter()
            .zip(&xi)
            .map(|(v, c)| (-v).max(0.0) * c)
            .collect();
        Ok(vec![SpatialField::new(pos)?, SpatialField::new(neg)?])
    };
    let energies = weighted_energies(sol, z_star, radii, parts)?;
    let phi_values: Vec<f64> = radii
        .iter()
        .enumerate()
        .map(|(ri, &r)| energies[0][ri] * energies[1][ri] / r.powi(4))
        .collect();

    // L² norms of the uncut parts over the lower cylinder of radius rho0
    let weights = quadrature_weights(grid);
    let times = sol.times();
    let ball = grid.ball(z_star.index, rho0);
    let (mut n1, mut n2) = (0.0, 0.0);
    for k in sol.time_window(z_star.t_index, rho0, Cylinder::Lower) {
        let tau = if k == 0 {
            times[1] - times[0]
        } else {
            times[k] - times[k - 1]
        };
        let de = directional_derivative(sol.u(k), grid, e)?;
        for &i in &ball {
            let v = de[i];
            let w = weights[i] * tau;
            if v > 0.0 {
                n1 += v * v * w;
            } else {
                n2 += v * v * w;
            }
        }
    }
    let phi_max = phi_values.iter().copied().fold(0.0, f64::max);
    let n_emp = (n1 > 0.0 && n2 > 0.0).then(|| phi_max * rho0.powi(2 * dim as i32 + 8) / (n1 * n2));

    Ok(PhiTable {
        center: z_star,
        direction: e.to_vec(),
        rho0,
        radii: radii.to_vec(),
        phi_values,
        n_emp,
    })
}
