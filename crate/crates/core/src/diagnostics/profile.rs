//! Empirical `|∂ₜu| + |D²u|` profile as a function of the parabolic distance
//! to the vertical walls, and the mean-square gradient bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_boundary::FreeBoundaryAtlas;
use crate::grid::{
    directional_derivative, gradient, hessian, parabolic_distance, time_derivative, Cylinder,
    SpaceTimePoint, SpaceTimeSolution, SpatialField,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub point: SpaceTimePoint,
    pub dist_to_gamma_v: f64,
    pub dist_to_boundary: f64,
    pub abs_dt_u: f64,
    /// Max absolute entry of the discrete Hessian.
    pub hess_norm: f64,
}

impl ProfileSample {
    pub fn total(&self) -> f64 {
        self.abs_dt_u + self.hess_norm
    }
}

/// Maxima over samples with `dist_to_gamma_v >= rho` and
/// `dist_to_boundary >= eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileBand {
    pub rho: f64,
    pub count: usize,
    pub max_dt_u: f64,
    pub max_hess: f64,
    pub max_total: f64,
}

#[derive(Debug, Clone)]
pub struct RegularityProfile {
    pub eps: f64,
    pub samples: Vec<ProfileSample>,
    /// Decreasing `rho`, from the domain diameter down to the grid
    /// resolution, then a final `rho = 0` band.
    pub bands: Vec<ProfileBand>,
}

impl RegularityProfile {
    /// Band of all admissible samples (`rho = 0`).
    pub fn global(&self) -> ProfileBand {
        *self
            .bands
            .last()
            .expect("profile always has the rho = 0 band")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub sample_count: usize,
    /// Minimum parabolic distance to the parabolic boundary for a sample to
    /// enter the band maxima.
    pub eps: f64,
}

/// Time levels at evenly spaced physical times, and an even spatial stride
/// over interior points, so that samples line up across refinements.
fn stratified_candidates(sol: &SpaceTimeSolution, sample_count: usize) -> Vec<SpaceTimePoint> {
    let grid = sol.grid();
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_interior(i)).collect();
    if interior.is_empty() || sol.len() < 2 || sample_count == 0 {
        return Vec::new();
    }
    let levels = sol.len() - 1;
    let n_time = (sample_count / interior.len())
        .clamp(16.min(levels), levels)
        .max(1);
    let n_space = (sample_count / n_time).clamp(1, interior.len());
    let times = sol.times();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let mut ks: Vec<usize> = (0..n_time)
        .map(|j| {
            let target = t0 + (j as f64 + 0.5) / n_time as f64 * (t1 - t0);
            let k = times.partition_point(|&t| t < target).clamp(1, levels);
            if k > 1 && (times[k - 1] - target).abs() < (times[k] - target).abs() {
                k - 1
            } else {
                k
            }
        })
        .collect();
    ks.dedup();
    let xs: Vec<usize> = (0..n_space)
        .map(|j| interior[j * interior.len() / n_space])
        .collect();
    ks.iter()
        .flat_map(|&k| xs.iter().map(move |&i| SpaceTimePoint::new(i, k)))
        .collect()
}

pub fn regularity_profile(
    sol: &SpaceTimeSolution,
    atlas: &FreeBoundaryAtlas,
    opts: ProfileOptions,
) -> Result<RegularityProfile> {
    let events = atlas.event_points();
    let walls = atlas.gamma_v_points();
    let candidates: Vec<SpaceTimePoint> = stratified_candidates(sol, opts.sample_count)
        .into_iter()
        .filter(|z| !events.contains(z))
        .collect();

    let mut derivs: Vec<(SpaceTimePoint, f64, f64)> = Vec::with_capacity(candidates.len());
    let mut cached: Option<(usize, SpatialField, SpatialField)> = None;
    for z in &candidates {
        if cached.as_ref().map(|c| c.0) != Some(z.t_index) {
            let dt_u = time_derivative(sol, z.t_index)?;
            let hess = hessian(sol.u(z.t_index), sol.grid())?.max_abs_entry();
            cached = Some((z.t_index, dt_u, hess));
        }
        let (_, dt_u, hess) = cached.as_ref().expect("filled above");
        derivs.push((*z, dt_u[z.index].abs(), hess[z.index]));
    }
    let samples: Vec<ProfileSample> = derivs
        .par_iter()
        .map(|&(point, abs_dt_u, hess_norm)| ProfileSample {
            point,
            dist_to_gamma_v: parabolic_distance(point, &walls, sol),
            dist_to_boundary: sol.parabolic_boundary_distance(point),
            abs_dt_u,
            hess_norm,
        })
        .collect();

    let grid = sol.grid();
    let times = sol.times();
    let tau_min = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let resolution = grid.dx_min().max(tau_min.sqrt());
    let mut rhos = Vec::new();
    let mut rho = sol.r_max();
    while rho >= resolution {
        rhos.push(rho);
        rho *= 0.5;
    }
    rhos.push(0.0);
    let bands = rhos
        .into_iter()
        .map(|rho| {
            let mut band = ProfileBand {
                rho,
                count: 0,
                max_dt_u: 0.0,
                max_hess: 0.0,
                max_total: 0.0,
            };
            for s in samples
                .iter()
                .filter(|s| s.dist_to_gamma_v >= rho && s.dist_to_boundary >= opts.eps)
            {
                band.count += 1;
                band.max_dt_u = band.max_dt_u.max(s.abs_dt_u);
                band.max_hess = band.max_hess.max(s.hess_norm);
                band.max_total = band.max_total.max(s.total());
            }
            band
        })
        .collect();
    Ok(RegularityProfile {
        eps: opts.eps,
        samples,
        bands,
    })
}

/// Both sides of `|Dv(z0)| <= N' sqrt(R⁻² mean_{Q_R⁻(z0)} v²)` for
/// `v = D_e u`: returns `(|Dv(z0)|, sqrt(R⁻² mean v²))`.
pub fn mean_square_gradient_bound(
    sol: &SpaceTimeSolution,
    z0: SpaceTimePoint,
    radius: f64,
    e: &[f64],
) -> Result<(f64, f64)> {
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    let grid = sol.grid();
    let elapsed = sol.times()[z0.t_index] - sol.times()[0];
    if grid.boundary_distance(z0.index) < radius || elapsed + 1e-12 < radius * radius {
        return Err(Error::CylinderOutsideDomain(radius));
    }
    let v0 = directional_derivative(sol.u(z0.t_index), grid, e)?;
    let dv = gradient(&v0, grid)?;
    let lhs = dv
        .iter()
        .map(|c| c[z0.index] * c[z0.index])
        .sum::<f64>()
        .sqrt();

    let ball = grid.ball(z0.index, radius);
    let (mut sum, mut count) = (0.0, 0usize);
    for k in sol.time_window(z0.t_index, radius, Cylinder::Lower) {
        let v = directional_derivative(sol.u(k), grid, e)?;
        for &i in &ball {
            sum += v[i] * v[i];
            count += 1;
        }
    }
    let mean = sum / count as f64;
    Ok((lhs, (mean / (radius * radius)).sqrt()))
}
