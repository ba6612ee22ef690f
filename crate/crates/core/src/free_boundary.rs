//! Free-boundary extraction: temporal relay flips (down-jumps at `alpha`,
//! up-jumps at `beta`), persistent vertical walls inside the band, the
//! degenerate/non-degenerate split of the jump sets, and the phase masks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{gradient_norm, SpaceTimePoint, SpaceTimeSolution, SpatialField};
use crate::relay::RelayState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    JumpDown,
    JumpUp,
    VerticalWall,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::JumpDown => "JumpDown",
            EventKind::JumpUp => "JumpUp",
            EventKind::VerticalWall => "VerticalWall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbEvent {
    pub location: SpaceTimePoint,
    pub kind: EventKind,
    pub u_value: f64,
    pub grad_norm: f64,
    pub dt_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub level_tol: f64,
    pub grad_tol: f64,
    pub wall_min_steps: usize,
}

impl ClassifyParams {
    /// Defaults derived from the discretization:
    ///
    /// * `level_tol = 2 (dt + dx²) * drift`, floored at `1e-8`, where `drift`
    ///   is the largest rate `|u_{k+1} - u_k| / dt` seen at a relay flip
    ///   (at least 1, the size of the source term);
    /// * `grad_tol = 5 dx`;
    /// * `wall_min_steps = 3`.
    pub fn defaults_for(sol: &SpaceTimeSolution) -> Self {
        let dx = sol.grid().dx_min();
        let times = sol.times();
        let mut drift = 1.0f64;
        let mut tau_max = 0.0f64;
        for k in 0..sol.len().saturating_sub(1) {
            let tau = times[k + 1] - times[k];
            tau_max = tau_max.max(tau);
            let (h0, h1) = (sol.h(k).states(), sol.h(k + 1).states());
            let (u0, u1) = (sol.u(k).values(), sol.u(k + 1).values());
            for i in 0..h0.len() {
                if h0[i] != h1[i] {
                    drift = drift.max((u1[i] - u0[i]).abs() / tau);
                }
            }
        }
        ClassifyParams {
            level_tol: (2.0 * (tau_max + dx * dx) * drift).max(1e-8),
            grad_tol: 5.0 * dx,
            wall_min_steps: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FreeBoundaryAtlas {
    pub params: ClassifyParams,
    pub gamma_alpha: Vec<FbEvent>,
    pub gamma_beta: Vec<FbEvent>,
    pub gamma_v: Vec<FbEvent>,
    /// Jump events with `grad_norm <= grad_tol`.
    pub gamma_0: Vec<FbEvent>,
    /// Jump events with `grad_norm > grad_tol`.
    pub gamma_star: Vec<FbEvent>,
    /// `omega_plus[k][i]` is true where `h = +1` at snapshot `k`.
    pub omega_plus: Vec<Vec<bool>>,
    pub omega_minus: Vec<Vec<bool>>,
}

impl FreeBoundaryAtlas {
    pub fn is_event(&self, z: SpaceTimePoint) -> bool {
        self.all_events().any(|e| e.location == z)
    }

    pub fn all_events(&self) -> impl Iterator<Item = &FbEvent> {
        self.gamma_alpha
            .iter()
            .chain(&self.gamma_beta)
            .chain(&self.gamma_v)
    }

    pub fn event_points(&self) -> BTreeSet<SpaceTimePoint> {
        self.all_events().map(|e| e.location).collect()
    }

    pub fn gamma_v_points(&self) -> Vec<SpaceTimePoint> {
        self.gamma_v.iter().map(|e| e.location).collect()
    }

    pub fn in_omega_plus(&self, z: SpaceTimePoint) -> bool {
        self.omega_plus[z.t_index][z.index]
    }

    /// CSV with columns `t_index,x_index[,y_index],kind,u_value,grad_norm,dt_u`,
    /// sorted by time, then point, then kind.
    pub fn to_csv(&self, sol: &SpaceTimeSolution) -> String {
        let grid = sol.grid();
        let mut events: Vec<&FbEvent> = self.all_events().collect();
        events.sort_by_key(|e| (e.location, e.kind));
        let mut out = String::new();
        if grid.dim() == 2 {
            out.push_str("t_index,x_index,y_index,kind,u_value,grad_norm,dt_u\n");
        } else {
            out.push_str("t_index,x_index,kind,u_value,grad_norm,dt_u\n");
        }
        for e in events {
            let m = grid.multi(e.location.index);
            let _ = write!(out, "{},{}", e.location.t_index, m[0]);
            if grid.dim() == 2 {
                let _ = write!(out, ",{}", m[1]);
            }
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                e.kind.as_str(),
                e.u_value,
                e.grad_norm,
                e.dt_u
            );
        }
        out
    }
}

/// `∂ₜu` at a snapshot: backward difference, forward at the first snapshot.
pub(crate) fn time_rate(sol: &SpaceTimeSolution, z: SpaceTimePoint) -> f64 {
    let k = z.t_index;
    let (a, b) = if k == 0 { (0, 1) } else { (k - 1, k) };
    let t = sol.times();
    (sol.u(b)[z.index] - sol.u(a)[z.index]) / (t[b] - t[a])
}

/// Builds the atlas.
///
/// A face between neighbours with different relay values is a vertical wall
/// candidate at a snapshot when both values lie strictly inside the band
/// shrunk by `level_tol`. If the interface was created by a flip of one
/// endpoint (or starts with one side already at its level), it is the trail of a moving `alpha`/`beta` front and only counts
/// while that front is stalled, i.e. while the other endpoint is not moving
/// towards the level just crossed. Candidates persisting for
/// `wall_min_steps` snapshots become wall events at both endpoints.
pub fn classify(sol: &SpaceTimeSolution, params: ClassifyParams) -> Result<FreeBoundaryAtlas> {
    if sol.len() < 2 {
        return Err(Error::DegenerateSolution);
    }
    let grid = sol.grid();
    let th = sol.thresholds();
    let n = grid.len();
    let grad_norms: Vec<SpatialField> = sol
        .u_snapshots()
        .iter()
        .map(|u| gradient_norm(u, grid))
        .collect::<Result<_>>()?;

    let mut gamma_alpha = Vec::new();
    let mut gamma_beta = Vec::new();
    for k in 0..sol.len() - 1 {
        let (h0, h1) = (sol.h(k).states(), sol.h(k + 1).states());
        for i in 0..n {
            if h0[i] == h1[i] {
                continue;
            }
            let z = SpaceTimePoint::new(i, k + 1);
            let u = sol.value(z);
            let (kind, level) = match h1[i] {
                RelayState::Minus => (EventKind::JumpDown, th.alpha()),
                RelayState::Plus => (EventKind::JumpUp, th.beta()),
            };
            if (u - level).abs() > params.level_tol {
                return Err(Error::InconsistentEvent(format!(
                    "{} at t_index={}, index={i}: u={u} is farther than level_tol={} from {level}",
                    kind.as_str(),
                    k + 1,
                    params.level_tol
                )));
            }
            let event = FbEvent {
                location: z,
                kind,
                u_value: u,
                grad_norm: grad_norms[k + 1][i],
                dt_u: time_rate(sol, z),
            };
            match kind {
                EventKind::JumpDown => gamma_alpha.push(event),
                _ => gamma_beta.push(event),
            }
        }
    }

    let lo = th.alpha() + params.level_tol;
    let hi = th.beta() - params.level_tol;
    let in_band = |v: f64| v > lo && v < hi;
    let dim = grid.dim();
    let faces: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| {
            let m = grid.multi(i);
            (0..dim).filter_map(move |d| {
                if m[d] + 1 < grid.nx()[d] {
                    let mut next = m;
                    next[d] += 1;
                    Some((i, grid.flat(next)))
                } else {
                    None
                }
            })
        })
        .collect();
    // For interfaces created by a relay flip: the endpoint that has not
    // flipped yet, and the level the front is heading for.
    let mut trail: Vec<Option<(usize, RelayState)>> = vec![None; faces.len()];
    let mut run_start: Vec<Option<usize>> = vec![None; faces.len()];
    let mut wall_points = BTreeSet::new();
    let close_run =
        |face: (usize, usize), start: usize, end: usize, out: &mut BTreeSet<SpaceTimePoint>| {
            if end - start >= params.wall_min_steps {
                for k in start..end {
                    out.insert(SpaceTimePoint::new(face.0, k));
                    out.insert(SpaceTimePoint::new(face.1, k));
                }
            }
        };
    for k in 0..sol.len() {
        let (h, u) = (sol.h(k).states(), sol.u(k).values());
        for (f, &(a, b)) in faces.iter().enumerate() {
            if h[a] == h[b] {
                trail[f] = None;
            } else if k == 0 {
                // an initial interface whose minus side sits at or below
                // alpha (plus side at or above beta) is a front as well
                let (minus, plus) = if h[a] == RelayState::Minus {
                    (a, b)
                } else {
                    (b, a)
                };
                trail[f] = if u[minus] <= lo {
                    Some((plus, RelayState::Minus))
                } else if u[plus] >= hi {
                    Some((minus, RelayState::Plus))
                } else {
                    None
                };
            } else {
                let prev = sol.h(k - 1).states();
                if prev[a] == prev[b] {
                    trail[f] = match (prev[a] != h[a], prev[b] != h[b]) {
                        (true, false) => Some((b, h[a])),
                        (false, true) => Some((a, h[b])),
                        _ => None,
                    };
                }
            }
            // a front left behind by a flip keeps advancing while the
            // unflipped side still moves towards the crossed level
            let advancing = trail[f].is_some_and(|(ahead, flipped_to)| {
                let rate = time_rate(sol, SpaceTimePoint::new(ahead, k));
                match flipped_to {
                    RelayState::Minus => rate < 0.0,
                    RelayState::Plus => rate > 0.0,
                }
            });
            let active = h[a] != h[b] && !advancing && in_band(u[a]) && in_band(u[b]);
            match (active, run_start[f]) {
                (true, None) => run_start[f] = Some(k),
                (false, Some(start)) => {
                    close_run((a, b), start, k, &mut wall_points);
                    run_start[f] = None;
                }
                _ => {}
            }
        }
    }
    for (f, start) in run_start.iter().enumerate() {
        if let Some(start) = *start {
            close_run(faces[f], start, sol.len(), &mut wall_points);
        }
    }
    let gamma_v: Vec<FbEvent> = wall_points
        .into_iter()
        .map(|z| FbEvent {
            location: z,
            kind: EventKind::VerticalWall,
            u_value: sol.value(z),
            grad_norm: grad_norms[z.t_index][z.index],
            dt_u: time_rate(sol, z),
        })
        .collect();

    let (gamma_0, gamma_star): (Vec<FbEvent>, Vec<FbEvent>) = gamma_alpha
        .iter()
        .chain(&gamma_beta)
        .partition(|e| e.grad_norm <= params.grad_tol);

    let omega_plus: Vec<Vec<bool>> = sol
        .h_snapshots()
        .iter()
        .map(|h| h.states().iter().map(|&s| s == RelayState::Plus).collect())
        .collect();
    let omega_minus = omega_plus
        .iter()
        .map(|row| row.iter().map(|&p| !p).collect())
        .collect();

    Ok(FreeBoundaryAtlas {
        params,
        gamma_alpha,
        gamma_beta,
        gamma_v,
        gamma_0,
        gamma_star,
        omega_plus,
        omega_minus,
    })
}

/// Smallest parabolic gap between `{|u - alpha| <= level_tol}` and
/// `{|u - beta| <= level_tol}` over interior points, measured as
/// `max(|x - x'|, sqrt(|t - t'|))`. Returns the domain diameter when either
/// set is empty.
pub fn separation_check(sol: &SpaceTimeSolution, level_tol: f64) -> f64 {
    let grid = sol.grid();
    let th = sol.thresholds();
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_interior(i)).collect();
    let slices = |level: f64| -> Vec<(usize, Vec<usize>)> {
        (0..sol.len())
            .filter_map(|k| {
                let u = sol.u(k);
                let pts: Vec<usize> = interior
                    .iter()
                    .copied()
                    .filter(|&i| (u[i] - level).abs() <= level_tol)
                    .collect();
                (!pts.is_empty()).then_some((k, pts))
            })
            .collect()
    };
    let near_alpha = slices(th.alpha());
    let near_beta = slices(th.beta());
    let times = sol.times();
    let mut best = sol.r_max();
    for (ka, a_pts) in &near_alpha {
        let ta = times[*ka];
        // visit beta slices by increasing time gap
        let split = near_beta.partition_point(|(kb, _)| times[*kb] < ta);
        let (mut left, mut right) = (split, split);
        loop {
            let gap_left = (left > 0).then(|| ta - times[near_beta[left - 1].0]);
            let gap_right = (right < near_beta.len()).then(|| times[near_beta[right].0] - ta);
            let (idx, gap) = match (gap_left, gap_right) {
                (None, None) => break,
                (Some(l), Some(r)) if l <= r => {
                    left -= 1;
                    (left, l)
                }
                (Some(l), None) => {
                    left -= 1;
                    (left, l)
                }
                (_, Some(r)) => {
                    right += 1;
                    (right - 1, r)
                }
            };
            let time_reach = gap.sqrt();
            if time_reach >= best {
                break;
            }
            let mut spatial = f64::INFINITY;
            'outer: for &a in a_pts {
                for &b in &near_beta[idx].1 {
                    spatial = spatial.min(grid.distance(a, b));
                    if spatial <= time_reach {
                        break 'outer;
                    }
                }
            }
            best = best.min(spatial.max(time_reach));
        }
    }
    best
}
