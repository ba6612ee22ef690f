//! Oscillation and gradient growth at degenerate free-boundary points.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::free_boundary::FreeBoundaryAtlas;
use crate::grid::{
    gradient_norm, parabolic_distance, Cylinder, SpaceTimePoint, SpaceTimeSolution, SpatialField,
};

#[derive(Debug, Clone)]
pub struct GrowthSample {
    pub center: SpaceTimePoint,
    pub grad_tol: f64,
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    /// `osc u` over `Q_r⁻(center)`.
    pub osc_lower: Vec<f64>,
    /// `osc u` over `Q_r(center)`.
    pub osc_full: Vec<f64>,
    /// `sup |Du|` over `Q_r(center)`; empty until [`gradient_growth`] runs.
    pub sup_grad: Vec<f64>,
}

impl GrowthSample {
    /// `osc_lower / r²`.
    pub fn ratios_quadratic(&self) -> Vec<f64> {
        self.osc_lower
            .iter()
            .zip(&self.radii)
            .map(|(o, r)| o / (r * r))
            .collect()
    }

    /// `osc_full / r²`.
    pub fn ratios_quadratic_full(&self) -> Vec<f64> {
        self.osc_full
            .iter()
            .zip(&self.radii)
            .map(|(o, r)| o / (r * r))
            .collect()
    }

    /// `sup_grad / r`.
    pub fn ratios_linear(&self) -> Vec<f64> {
        self.sup_grad
            .iter()
            .zip(&self.radii)
            .map(|(g, r)| g / r)
            .collect()
    }
}

/// `max / min` of a ratio ladder; infinite if the minimum is zero while the
/// maximum is not, 1 for an all-zero ladder.
pub fn spread(ratios: &[f64]) -> f64 {
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Debug, Clone, Default)]
pub struct GrowthReport {
    pub samples: Vec<GrowthSample>,
    /// Degenerate events that failed the eligibility filter.
    pub skipped: usize,
}

impl GrowthReport {
    pub fn c0(&self) -> f64 {
        max_of(self.samples.iter().flat_map(|s| s.ratios_quadratic()))
    }

    pub fn c1(&self) -> f64 {
        max_of(self.samples.iter().flat_map(|s| s.ratios_quadratic_full()))
    }

    pub fn c2(&self) -> f64 {
        max_of(self.samples.iter().flat_map(|s| s.ratios_linear()))
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Sorts radii into a strictly decreasing ladder.
pub fn radius_ladder(radii: &[f64]) -> Result<Vec<f64>> {
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::NonPositiveRadius(r));
    }
    let mut out = radii.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    Ok(out)
}

fn oscillation(sol: &SpaceTimeSolution, z: SpaceTimePoint, r: f64, kind: Cylinder) -> f64 {
    let ball = sol.grid().ball(z.index, r);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in sol.time_window(z.t_index, r, kind) {
        let u = sol.u(k);
        for &i in &ball {
            lo = lo.min(u[i]);
            hi = hi.max(u[i]);
        }
    }
    hi - lo
}

/// Degenerate jump events (`grad_norm <= grad_tol`) whose lower parabolic
/// distance to the vertical walls and to the parabolic boundary both reach
/// the largest radius. Returns `(eligible, skipped)`.
pub fn eligible_centers(
    sol: &SpaceTimeSolution,
    atlas: &FreeBoundaryAtlas,
    grad_tol: f64,
    reach: f64,
) -> (Vec<SpaceTimePoint>, usize) {
    let walls = atlas.gamma_v_points();
    let mut centers: Vec<SpaceTimePoint> = atlas
        .gamma_alpha
        .iter()
        .chain(&atlas.gamma_beta)
        .filter(|e| e.grad_norm <= grad_tol)
        .map(|e| e.location)
        .collect();
    centers.sort();
    let total = centers.len();
    centers.retain(|&z| {
        sol.parabolic_boundary_distance(z) >= reach && parabolic_distance(z, &walls, sol) >= reach
    });
    let skipped = total - centers.len();
    (centers, skipped)
}

/// Evenly strided subset of at most `max` items, keeping order.
pub(crate) fn stride_subset<T: Copy>(items: &[T], max: usize) -> Vec<T> {
    if items.len() <= max || max == 0 {
        return items.to_vec();
    }
    (0..max).map(|j| items[j * items.len() / max]).collect()
}

/// Oscillation of `u` over `Q_r⁻` and `Q_r` at each eligible degenerate
/// event, for each radius. At most `max_centers` centers are measured
/// (evenly strided over the time-ordered eligible set).
pub fn quadratic_growth(
    sol: &SpaceTimeSolution,
    atlas: &FreeBoundaryAtlas,
    grad_tol: f64,
    radii: &[f64],
    max_centers: usize,
) -> Result<GrowthReport> {
    let radii = radius_ladder(radii)?;
    let Some(&reach) = radii.first() else {
        return Ok(GrowthReport::default());
    };
    let (centers, skipped) = eligible_centers(sol, atlas, grad_tol, reach);
    let samples = stride_subset(&centers, max_centers)
        .into_iter()
        .map(|z| GrowthSample {
            center: z,
            grad_tol,
            radii: radii.clone(),
            osc_lower: radii
                .iter()
                .map(|&r| oscillation(sol, z, r, Cylinder::Lower))
                .collect(),
            osc_full: radii
                .iter()
                .map(|&r| oscillation(sol, z, r, Cylinder::Full))
                .collect(),
            sup_grad: Vec::new(),
        })
        .collect();
    Ok(GrowthReport { samples, skipped })
}

/// Fills `sup_grad` with `sup |Du|` over `Q_r(center)` for every sample.
pub fn gradient_growth(sol: &SpaceTimeSolution, report: &mut GrowthReport) -> Result<()> {
    let mut cache: HashMap<usize, SpatialField> = HashMap::new();
    for sample in &mut report.samples {
        let mut sups = Vec::with_capacity(sample.radii.len());
        for &r in &sample.radii {
            let ball = sol.grid().ball(sample.center.index, r);
            let mut sup = 0.0f64;
            for k in sol.time_window(sample.center.t_index, r, Cylinder::Full) {
                if !cache.contains_key(&k) {
                    cache.insert(k, gradient_norm(sol.u(k), sol.grid())?);
                }
                let g = &cache[&k];
                for &i in &ball {
                    sup = sup.max(g[i]);
                }
            }
            sups.push(sup);
        }
        sample.sup_grad = sups;
    }
    Ok(())
}
