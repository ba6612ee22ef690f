//! Sign of `∂ₜu` on the non-degenerate jump sets, and space-time normals.

use crate::error::{Error, Result};
use crate::free_boundary::{EventKind, FbEvent, FreeBoundaryAtlas};
use crate::grid::{gradient, parabolic_distance, SpaceTimePoint, SpaceTimeSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCheck {
    pub event: FbEvent,
    /// How far `dt_u` lies on the wrong side of `±tol`; positive means a
    /// violation.
    pub excess: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SignReport {
    pub tol: f64,
    pub checked: Vec<SignCheck>,
    /// Events within `2 sqrt(dt)` of a vertical wall.
    pub skipped_near_wall: usize,
    pub violations_alpha: usize,
    pub violations_beta: usize,
}

impl SignReport {
    pub fn violations(&self) -> usize {
        self.violations_alpha + self.violations_beta
    }

    /// Violations sorted by decreasing excess.
    pub fn worst(&self) -> Vec<SignCheck> {
        let mut v: Vec<SignCheck> = self
            .checked
            .iter()
            .copied()
            .filter(|c| c.excess > 0.0)
            .collect();
        v.sort_by(|a, b| {
            b.excess
                .total_cmp(&a.excess)
                .then(a.event.location.cmp(&b.event.location))
        });
        v
    }
}

/// Checks `∂ₜu <= tol` on the non-degenerate part of the down-jump set and
/// `∂ₜu >= -tol` on the non-degenerate part of the up-jump set, skipping
/// events whose lower parabolic distance to a vertical wall is at most
/// `2 sqrt(dt)`.
pub fn sign_conditions(sol: &SpaceTimeSolution, atlas: &FreeBoundaryAtlas, tol: f64) -> SignReport {
    let walls = atlas.gamma_v_points();
    let times = sol.times();
    let mut report = SignReport {
        tol,
        ..SignReport::default()
    };
    let mut events: Vec<FbEvent> = atlas.gamma_star.clone();
    events.sort_by_key(|e| (e.location, e.kind));
    for event in events {
        let k = event.location.t_index;
        let dt = if k == 0 {
            times[1] - times[0]
        } else {
            times[k] - times[k - 1]
        };
        if !walls.is_empty() && parabolic_distance(event.location, &walls, sol) <= 2.0 * dt.sqrt() {
            report.skipped_near_wall += 1;
            continue;
        }
        let excess = match event.kind {
            EventKind::JumpDown => event.dt_u - tol,
            EventKind::JumpUp => -event.dt_u - tol,
            EventKind::VerticalWall => continue,
        };
        if excess > 0.0 {
            match event.kind {
                EventKind::JumpDown => report.violations_alpha += 1,
                _ => report.violations_beta += 1,
            }
        }
        report.checked.push(SignCheck { event, excess });
    }
    report
}

/// `(Du, ∂ₜu) / sqrt(|Du|² + (∂ₜu)²)`.
pub fn normal_from_derivatives(du: &[f64], dt_u: f64) -> Option<Vec<f64>> {
    let norm = (du.iter().map(|v| v * v).sum::<f64>() + dt_u * dt_u).sqrt();
    if !(norm > 0.0) {
        return None;
    }
    Some(
        du.iter()
            .chain(std::iter::once(&dt_u))
            .map(|v| v / norm)
            .collect(),
    )
}

/// Unit space-time normal at a non-degenerate jump event, pointing towards
/// `h = +1`. Degenerate events (`grad_norm <= grad_tol`) are rejected.
pub fn normal_vector(
    sol: &SpaceTimeSolution,
    atlas: &FreeBoundaryAtlas,
    event: &FbEvent,
) -> Result<Vec<f64>> {
    let z = event.location;
    let fail = Error::VanishingNormal {
        t_index: z.t_index,
        index: z.index,
    };
    if event.kind == EventKind::VerticalWall || event.grad_norm <= atlas.params.grad_tol {
        return Err(fail);
    }
    let grad = gradient(sol.u(z.t_index), sol.grid())?;
    let du: Vec<f64> = grad.iter().map(|g| g[z.index]).collect();
    normal_from_derivatives(&du, event.dt_u).ok_or(fail)
}

/// Steps from `z` along `normal` by the smallest amount that moves one grid
/// cell (or one snapshot) in the dominant component, rounds to the nearest
/// grid point, and reports whether it lands in `h = +1`. `None` if the step
/// leaves the stored data.
pub fn normal_probe(
    sol: &SpaceTimeSolution,
    atlas: &FreeBoundaryAtlas,
    z: SpaceTimePoint,
    normal: &[f64],
) -> Option<bool> {
    let grid = sol.grid();
    let dim = grid.dim();
    let times = sol.times();
    let k = z.t_index;
    let tau = if k + 1 < times.len() {
        times[k + 1] - times[k]
    } else {
        times[k] - times[k - 1]
    };
    let mut cells: Vec<f64> = (0..dim).map(|d| normal[d] / grid.dx()[d]).collect();
    cells.push(normal[dim] / tau);
    let scale = cells.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return None;
    }
    let m = grid.multi(z.index);
    let mut target = [0usize; 2];
    for d in 0..dim {
        let moved = m[d] as i64 + (cells[d] / scale).round() as i64;
        if moved < 0 || moved >= grid.nx()[d] as i64 {
            return None;
        }
        target[d] = moved as usize;
    }
    let kt = k as i64 + (cells[dim] / scale).round() as i64;
    if kt < 0 || kt >= sol.len() as i64 {
        return None;
    }
    Some(atlas.in_omega_plus(SpaceTimePoint::new(grid.flat(target), kt as usize)))
}
