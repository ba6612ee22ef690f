//! Structured space-time grids, finite-difference operators, parabolic
//! cylinders and the parabolic distance.
//!
//! Points are stored row-major with axis 0 fastest: `index = j * nx[0] + i`.
//! Physical coordinates start at the origin, `x_i = i * dx[0]`.

use crate::error::{Error, Result};
use crate::relay::{relay_init, relay_step, HysteresisField, RelayState, Thresholds};

/// Slack used when comparing grid coordinates against cylinder radii.
pub const CYLINDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Fixed boundary value.
    Dirichlet(f64),
    /// Zero normal flux.
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extent: Vec<f64>,
    nx: Vec<usize>,
    dx: Vec<f64>,
    bc: BoundaryCondition,
}

impl Grid {
    pub fn new(extent: &[f64], nx: &[usize], bc: BoundaryCondition) -> Result<Self> {
        if extent.len() != nx.len() || !(1..=2).contains(&nx.len()) {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1 or 2 with matching extent/nx (got {} and {})",
                extent.len(),
                nx.len()
            )));
        }
        if let Some(&n) = nx.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!("nx must be >= 3, got {n}")));
        }
        if let Some(&l) = extent.iter().find(|&&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {l}"
            )));
        }
        if let BoundaryCondition::Dirichlet(g) = bc {
            if !g.is_finite() {
                return Err(Error::InvalidGrid("dirichlet value must be finite".into()));
            }
        }
        let dx = extent
            .iter()
            .zip(nx)
            .map(|(&l, &n)| l / (n - 1) as f64)
            .collect();
        Ok(Grid {
            extent: extent.to_vec(),
            nx: nx.to_vec(),
            dx,
            bc,
        })
    }

    pub fn dim(&self) -> usize {
        self.nx.len()
    }

    pub fn nx(&self) -> &[usize] {
        &self.nx
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.nx.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx_min(&self) -> f64 {
        self.dx.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest stable explicit Euler step, `safety * dx_min² / (2 dim)`.
    pub fn max_stable_dt(&self, safety: f64) -> f64 {
        safety * self.dx_min().powi(2) / (2.0 * self.dim() as f64)
    }

    /// Euclidean diameter of the domain.
    pub fn diameter(&self) -> f64 {
        self.extent.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn flat(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[1] * self.nx[0] + idx[0]
        }
    }

    pub fn multi(&self, index: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [index, 0]
        } else {
            [index % self.nx[0], index / self.nx[0]]
        }
    }

    /// Physical coordinates; the second entry is 0 in 1D.
    pub fn coords(&self, index: usize) -> [f64; 2] {
        let m = self.multi(index);
        let mut x = [0.0; 2];
        for d in 0..self.dim() {
            x[d] = m[d] as f64 * self.dx[d];
        }
        x
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, xb) = (self.coords(a), self.coords(b));
        ((xa[0] - xb[0]).powi(2) + (xa[1] - xb[1]).powi(2)).sqrt()
    }

    /// Distance from a grid point to the spatial boundary of the domain.
    pub fn boundary_distance(&self, index: usize) -> f64 {
        let x = self.coords(index);
        (0..self.dim())
            .map(|d| x[d].min(self.extent[d] - x[d]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Points at least `2 dx` away from the boundary along every axis.
    pub fn is_interior(&self, index: usize) -> bool {
        let m = self.multi(index);
        (0..self.dim()).all(|d| m[d] >= 2 && m[d] + 2 < self.nx[d])
    }

    /// Indices with `|x - x(center)| < r`.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        let c = self.multi(center);
        let mut out = Vec::new();
        let reach: Vec<usize> = (0..self.dim())
            .map(|d| (r / self.dx[d]).ceil() as usize + 1)
            .collect();
        let lo = |d: usize| c[d].saturating_sub(reach[d]);
        let hi = |d: usize| (c[d] + reach[d]).min(self.nx[d] - 1);
        let (j_lo, j_hi) = if self.dim() == 2 {
            (lo(1), hi(1))
        } else {
            (0, 0)
        };
        for j in j_lo..=j_hi {
            for i in lo(0)..=hi(0) {
                let idx = self.flat([i, j]);
                if self.distance(center, idx) + CYLINDER_SLACK < r {
                    out.push(idx);
                }
            }
        }
        out
    }

    fn check(&self, f: &SpatialField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Neighbor along `axis`, or `None` past the boundary.
    fn neighbor(&self, index: usize, axis: usize, forward: bool) -> Option<usize> {
        let mut m = self.multi(index);
        if forward {
            if m[axis] + 1 >= self.nx[axis] {
                return None;
            }
            m[axis] += 1;
        } else {
            if m[axis] == 0 {
                return None;
            }
            m[axis] -= 1;
        }
        Some(self.flat(m))
    }

    /// Value used for an out-of-domain neighbor: boundary data (Dirichlet) or
    /// the reflected interior value (Neumann).
    fn ghost(&self, f: &SpatialField, index: usize, axis: usize, forward: bool) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet(g) => g,
            BoundaryCondition::Neumann => match self.neighbor(index, axis, !forward) {
                Some(n) => f[n],
                None => f[index],
            },
        }
    }

    fn second_difference(&self, f: &SpatialField, index: usize, axis: usize) -> f64 {
        let plus = match self.neighbor(index, axis, true) {
            Some(n) => f[n],
            None => self.ghost(f, index, axis, true),
        };
        let minus = match self.neighbor(index, axis, false) {
            Some(n) => f[n],
            None => self.ghost(f, index, axis, false),
        };
        (plus - 2.0 * f[index] + minus) / (self.dx[axis] * self.dx[axis])
    }

    /// `(f[hi] - f[lo]) / ((hi - lo) dx)` with `lo, hi` clamped to the grid:
    /// central inside, one-sided at the boundary.
    fn first_difference(&self, f: &SpatialField, index: usize, axis: usize) -> f64 {
        let (lo, lo_steps) = match self.neighbor(index, axis, false) {
            Some(n) => (n, 1.0),
            None => (index, 0.0),
        };
        let (hi, hi_steps) = match self.neighbor(index, axis, true) {
            Some(n) => (n, 1.0),
            None => (index, 0.0),
        };
        (f[hi] - f[lo]) / ((lo_steps + hi_steps) * self.dx[axis])
    }
}

/// A real-valued field over the points of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    values: Vec<f64>,
}

impl SpatialField {
    /// Rejects NaN and infinite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(SpatialField { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        SpatialField { values }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        SpatialField {
            values: (0..grid.len()).map(|i| f(grid.coords(i))).collect(),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        SpatialField {
            values: vec![c; grid.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpatialField {
        SpatialField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for SpatialField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

pub fn laplacian(f: &SpatialField, g: &Grid) -> Result<SpatialField> {
    g.check(f)?;
    let values = (0..g.len())
        .map(|i| (0..g.dim()).map(|d| g.second_difference(f, i, d)).sum())
        .collect();
    Ok(SpatialField { values })
}

/// One field per axis.
pub fn gradient(f: &SpatialField, g: &Grid) -> Result<Vec<SpatialField>> {
    g.check(f)?;
    Ok((0..g.dim())
        .map(|d| SpatialField {
            values: (0..g.len()).map(|i| g.first_difference(f, i, d)).collect(),
        })
        .collect())
}

/// Pointwise Euclidean norm of the discrete gradient.
pub fn gradient_norm(f: &SpatialField, g: &Grid) -> Result<SpatialField> {
    let grad = gradient(f, g)?;
    Ok(SpatialField {
        values: (0..g.len())
            .map(|i| grad.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect(),
    })
}

/// Directional derivative `e · Df`.
pub fn directional_derivative(f: &SpatialField, g: &Grid, e: &[f64]) -> Result<SpatialField> {
    let grad = gradient(f, g)?;
    Ok(SpatialField {
        values: (0..g.len())
            .map(|i| grad.iter().zip(e).map(|(c, w)| w * c[i]).sum())
            .collect(),
    })
}

/// Symmetric matrix of fields, `dim x dim`.
#[derive(Debug, Clone)]
pub struct Hessian {
    dim: usize,
    entries: Vec<SpatialField>,
}

impl Hessian {
    pub fn entry(&self, a: usize, b: usize) -> &SpatialField {
        &self.entries[a * self.dim + b]
    }

    pub fn trace(&self) -> SpatialField {
        let n = self.entries[0].len();
        SpatialField {
            values: (0..n)
                .map(|i| (0..self.dim).map(|d| self.entry(d, d)[i]).sum())
                .collect(),
        }
    }

    /// Max absolute entry at each point.
    pub fn max_abs_entry(&self) -> SpatialField {
        let n = self.entries[0].len();
        SpatialField {
            values: (0..n)
                .map(|i| self.entries.iter().fold(0.0f64, |m, e| m.max(e[i].abs())))
                .collect(),
        }
    }
}

pub fn hessian(f: &SpatialField, g: &Grid) -> Result<Hessian> {
    g.check(f)?;
    let dim = g.dim();
    let mut entries = vec![SpatialField { values: Vec::new() }; dim * dim];
    for d in 0..dim {
        entries[d * dim + d] = SpatialField {
            values: (0..g.len()).map(|i| g.second_difference(f, i, d)).collect(),
        };
    }
    if dim == 2 {
        // cross stencil on clamped indices, symmetric by construction
        let cross = SpatialField {
            values: (0..g.len())
                .map(|i| {
                    let [x, y] = g.multi(i);
                    let (xm, xp) = (x.saturating_sub(1), (x + 1).min(g.nx[0] - 1));
                    let (ym, yp) = (y.saturating_sub(1), (y + 1).min(g.nx[1] - 1));
                    let at = |a: usize, b: usize| f[g.flat([a, b])];
                    let num = at(xp, yp) - at(xp, ym) - at(xm, yp) + at(xm, ym);
                    num / ((xp - xm) as f64 * g.dx[0] * (yp - ym) as f64 * g.dx[1])
                })
                .collect(),
        };
        entries[1] = cross.clone();
        entries[2] = cross;
    }
    Ok(Hessian { dim, entries })
}

/// A grid point at a stored time level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpaceTimePoint {
    pub t_index: usize,
    pub index: usize,
}

impl SpaceTimePoint {
    pub fn new(index: usize, t_index: usize) -> Self {
        SpaceTimePoint { t_index, index }
    }
}

/// Stored snapshots of `u` and the relay field over a time grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    grid: Grid,
    thresholds: Thresholds,
    times: Vec<f64>,
    u: Vec<SpatialField>,
    h: Vec<HysteresisField>,
    sup_bound: f64,
}

impl SpaceTimeSolution {
    pub fn new(
        grid: Grid,
        thresholds: Thresholds,
        times: Vec<f64>,
        u: Vec<SpatialField>,
        h: Vec<HysteresisField>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != u.len() || u.len() != h.len() {
            return Err(Error::InvalidGrid(format!(
                "snapshot count mismatch: {} times, {} u, {} h",
                times.len(),
                u.len(),
                h.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "times must be strictly increasing".into(),
            ));
        }
        for f in &u {
            grid.check(f)?;
        }
        for f in &h {
            if f.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    got: f.len(),
                });
            }
        }
        let sup_bound = u.iter().map(SpatialField::max_abs).fold(0.0, f64::max);
        Ok(SpaceTimeSolution {
            grid,
            thresholds,
            times,
            u,
            h,
            sup_bound,
        })
    }

    /// Builds a solution by sampling `u(x, t)`; the relay field is traced
    /// pointwise from `relay_init(u(x, t0), hint)`.
    pub fn from_fn(
        grid: Grid,
        thresholds: Thresholds,
        times: Vec<f64>,
        hint: RelayState,
        u: impl Fn([f64; 2], f64) -> f64,
    ) -> Result<Self> {
        let fields: Vec<SpatialField> = times
            .iter()
            .map(|&t| SpatialField::from_fn(&grid, |x| u(x, t)))
            .collect();
        let mut h = Vec::with_capacity(times.len());
        if let Some(first) = fields.first() {
            let mut cur = HysteresisField::new(
                first
                    .values()
                    .iter()
                    .map(|&v| relay_init(v, hint, thresholds))
                    .collect(),
            );
            h.push(cur.clone());
            for f in &fields[1..] {
                cur = HysteresisField::new(
                    cur.states()
                        .iter()
                        .zip(f.values())
                        .map(|(&s, &v)| relay_step(s, v, thresholds))
                        .collect(),
                );
                h.push(cur.clone());
            }
        }
        SpaceTimeSolution::new(grid, thresholds, times, fields, h)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn u(&self, k: usize) -> &SpatialField {
        &self.u[k]
    }

    pub fn h(&self, k: usize) -> &HysteresisField {
        &self.h[k]
    }

    pub fn u_snapshots(&self) -> &[SpatialField] {
        &self.u
    }

    pub fn h_snapshots(&self) -> &[HysteresisField] {
        &self.h
    }

    pub fn value(&self, z: SpaceTimePoint) -> f64 {
        self.u[z.t_index][z.index]
    }

    /// Running maximum of `|u|` over all snapshots.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Domain diameter, used as the cap for parabolic distances.
    pub fn r_max(&self) -> f64 {
        self.grid.diameter()
    }

    /// Parabolic distance to `∂U × [t0, T] ∪ U × {t0}`.
    pub fn parabolic_boundary_distance(&self, z: SpaceTimePoint) -> f64 {
        let elapsed = (self.times[z.t_index] - self.times[0]).max(0.0);
        self.grid.boundary_distance(z.index).min(elapsed.sqrt())
    }

    /// Time indices `k` with `t0 - r² <= t_k <= t0` (lower) or
    /// `|t_k - t0| <= r²` (full).
    pub fn time_window(&self, t_index: usize, r: f64, kind: Cylinder) -> std::ops::Range<usize> {
        let t0 = self.times[t_index];
        let reach = r * r + CYLINDER_SLACK;
        let start = self.times.partition_point(|&t| t0 - t > reach);
        let end = match kind {
            Cylinder::Lower => t_index + 1,
            Cylinder::Full => self.times.partition_point(|&t| t - t0 <= reach),
        };
        start..end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cylinder {
    /// `Q_r⁻`: the part of the cylinder at or below the center time.
    Lower,
    /// `Q_r`: symmetric in time about the center.
    Full,
}

/// Backward difference quotient `(u_k - u_{k-1}) / (t_k - t_{k-1})`.
pub fn time_derivative(sol: &SpaceTimeSolution, k: usize) -> Result<SpatialField> {
    if k == 0 || k >= sol.len() {
        return Err(Error::NoBackwardDifference(k));
    }
    let tau = sol.times[k] - sol.times[k - 1];
    Ok(SpatialField {
        values: sol.u[k]
            .values()
            .iter()
            .zip(sol.u[k - 1].values())
            .map(|(a, b)| (a - b) / tau)
            .collect(),
    })
}

/// Grid points of the discrete cylinder about `z0`: spatial ball `|x - x0| < r`
/// times the time window of [`SpaceTimeSolution::time_window`], clipped to
/// the stored data.
pub fn cylinder_points(
    sol: &SpaceTimeSolution,
    z0: SpaceTimePoint,
    r: f64,
    kind: Cylinder,
) -> Result<Vec<SpaceTimePoint>> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let ball = sol.grid.ball(z0.index, r);
    Ok(sol
        .time_window(z0.t_index, r, kind)
        .flat_map(|k| ball.iter().map(move |&i| SpaceTimePoint::new(i, k)))
        .collect())
}

/// `sup { r > 0 : Q_r⁻(z) ∩ set = ∅ }`, capped at the domain diameter.
///
/// A point `s` with `t_s <= t_z` enters `Q_r⁻(z)` exactly when
/// `r > max(|x_s - x_z|, sqrt(t_z - t_s))`; later points never do.
pub fn parabolic_distance(
    z: SpaceTimePoint,
    set: &[SpaceTimePoint],
    sol: &SpaceTimeSolution,
) -> f64 {
    let t0 = sol.times[z.t_index];
    set.iter()
        .filter(|s| s.t_index <= z.t_index)
        .map(|s| {
            let dx = sol.grid.distance(z.index, s.index);
            dx.max((t0 - sol.times[s.t_index]).sqrt())
        })
        .fold(sol.r_max(), f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize, len: f64, bc: BoundaryCondition) -> Grid {
        Grid::new(&[len], &[n], bc).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid::new(&[1.0], &[2], BoundaryCondition::Neumann).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[3, 3, 3], BoundaryCondition::Neumann).is_err());
        assert!(Grid::new(&[0.0], &[5], BoundaryCondition::Neumann).is_err());
        assert!(Grid::new(&[1.0], &[5, 5], BoundaryCondition::Neumann).is_err());
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = Grid::new(&[1.0, 2.0], &[7, 9], BoundaryCondition::Neumann).unwrap();
        let f = SpatialField::constant(&g, 3.5);
        assert_eq!(laplacian(&f, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let g = line(21, 2.0, BoundaryCondition::Neumann);
        let f = SpatialField::from_fn(&g, |x| x[0] * x[0]);
        let lap = laplacian(&f, &g).unwrap();
        for i in 1..20 {
            assert!((lap[i] - 2.0).abs() < 1e-9, "{}", lap[i]);
        }
    }

    #[test]
    fn laplacian_of_sine_within_truncation_bound() {
        let g = line(201, std::f64::consts::PI, BoundaryCondition::Dirichlet(0.0));
        let f = SpatialField::from_fn(&g, |x| x[0].sin());
        let lap = laplacian(&f, &g).unwrap();
        let err = (1..200)
            .map(|i| (lap[i] + g.coords(i)[0].sin()).abs())
            .fold(0.0, f64::max);
        let bound = g.dx()[0].powi(2) / 12.0;
        assert!(err <= bound && err <= 1e-3, "err={err}, bound={bound}");
    }

    #[test]
    fn gradient_examples() {
        let g = line(11, 1.0, BoundaryCondition::Neumann);
        let c = SpatialField::constant(&g, 2.0);
        assert_eq!(gradient(&c, &g).unwrap()[0].max_abs(), 0.0);
        let lin = SpatialField::from_fn(&g, |x| x[0]);
        let d = &gradient(&lin, &g).unwrap()[0];
        for i in 0..11 {
            assert!((d[i] - 1.0).abs() < 1e-12);
        }

        let g = line(201, 2.0, BoundaryCondition::Neumann);
        let cube = SpatialField::from_fn(&g, |x| x[0].powi(3));
        let d = &gradient(&cube, &g).unwrap()[0];
        // x = 1 sits at index 100; central error dx² f'''/6 = 1e-4
        assert!((d[100] - 3.0001).abs() < 1e-9);
        assert!((d[100] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn hessian_examples() {
        let g = Grid::new(&[1.0, 1.0], &[11, 11], BoundaryCondition::Neumann).unwrap();
        let f = SpatialField::from_fn(&g, |x| x[0] * x[1]);
        let h = hessian(&f, &g).unwrap();
        for i in 0..g.len() {
            if g.is_interior(i) {
                assert!((h.entry(0, 1)[i] - 1.0).abs() < 1e-9);
            }
            assert_eq!(h.entry(0, 1)[i], h.entry(1, 0)[i]);
        }
        let c = SpatialField::constant(&g, 1.0);
        assert_eq!(hessian(&c, &g).unwrap().max_abs_entry().max_abs(), 0.0);

        let g = line(101, 1.0, BoundaryCondition::Neumann);
        let quartic = SpatialField::from_fn(&g, |x| x[0].powi(4));
        let h = hessian(&quartic, &g).unwrap();
        // 12 x² = 3 at x = 0.5, stencil error dx² f''''/12 = 2e-4
        assert!((h.entry(0, 0)[50] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn hessian_trace_matches_laplacian() {
        let g = Grid::new(&[1.0, 1.5], &[9, 13], BoundaryCondition::Dirichlet(0.3)).unwrap();
        let f = SpatialField::from_fn(&g, |x| (3.0 * x[0]).sin() * (x[1] * x[1] + 1.0));
        let tr = hessian(&f, &g).unwrap().trace();
        let lap = laplacian(&f, &g).unwrap();
        for i in 0..g.len() {
            assert!((tr[i] - lap[i]).abs() <= 1e-12 * lap[i].abs().max(1.0));
        }
    }

    fn ramp_solution(n_t: usize, dt: f64) -> SpaceTimeSolution {
        let g = line(11, 1.0, BoundaryCondition::Neumann);
        let times = (0..n_t).map(|k| k as f64 * dt).collect();
        let th = Thresholds::new(-10.0, 10.0).unwrap();
        SpaceTimeSolution::from_fn(g, th, times, RelayState::Minus, |_, t| t).unwrap()
    }

    #[test]
    fn time_derivative_examples() {
        let sol = ramp_solution(3, 0.01);
        let d = time_derivative(&sol, 2).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(time_derivative(&sol, 0).is_err());

        let g = line(5, 1.0, BoundaryCondition::Neumann);
        let th = Thresholds::new(0.0, 1.0).unwrap();
        let flat = SpaceTimeSolution::from_fn(g, th, vec![0.0, 0.1], RelayState::Minus, |_, _| 0.4)
            .unwrap();
        assert_eq!(time_derivative(&flat, 1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn cylinder_examples() {
        let g = line(11, 1.0, BoundaryCondition::Neumann);
        let dt = 0.0025;
        let times: Vec<f64> = (0..41).map(|k| k as f64 * dt).collect();
        let th = Thresholds::new(0.0, 1.0).unwrap();
        let sol = SpaceTimeSolution::from_fn(g, th, times, RelayState::Minus, |_, _| 0.5).unwrap();
        let z0 = SpaceTimePoint::new(5, 30);

        let tiny = cylinder_points(&sol, z0, 0.01, Cylinder::Lower).unwrap();
        assert_eq!(tiny, vec![z0]);

        let all = cylinder_points(&sol, z0, 10.0, Cylinder::Lower).unwrap();
        assert_eq!(all.len(), 11 * 31);

        let band = cylinder_points(&sol, z0, 0.2, Cylinder::Lower).unwrap();
        let xs: std::collections::BTreeSet<_> = band.iter().map(|p| p.index).collect();
        let ts: std::collections::BTreeSet<_> = band.iter().map(|p| p.t_index).collect();
        assert_eq!(xs.into_iter().collect::<Vec<_>>(), vec![4, 5, 6]);
        assert_eq!(ts.len(), 17);
        assert_eq!(band.len(), 3 * 17);

        assert!(cylinder_points(&sol, z0, 0.0, Cylinder::Lower).is_err());
    }

    /// Independent route: bisection on the discrete cylinder predicate.
    fn distance_by_bisection(
        z: SpaceTimePoint,
        set: &[SpaceTimePoint],
        sol: &SpaceTimeSolution,
    ) -> f64 {
        let hits = |r: f64| {
            let pts = cylinder_points(sol, z, r, Cylinder::Lower).unwrap();
            pts.iter().any(|p| set.contains(p))
        };
        let (mut lo, mut hi) = (0.0, sol.r_max());
        if !hits(hi) {
            return hi;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if hits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    #[test]
    fn parabolic_distance_examples() {
        let g = line(21, 1.0, BoundaryCondition::Neumann);
        let dt = 1e-3;
        let times: Vec<f64> = (0..201).map(|k| k as f64 * dt).collect();
        let th = Thresholds::new(0.0, 1.0).unwrap();
        let sol = SpaceTimeSolution::from_fn(g, th, times, RelayState::Minus, |_, _| 0.5).unwrap();
        let z = SpaceTimePoint::new(10, 200);
        let resolution = 0.05f64.max(dt.sqrt());

        assert_eq!(parabolic_distance(z, &[], &sol), sol.r_max());

        let below = [SpaceTimePoint::new(10, 160)];
        let d = parabolic_distance(z, &below, &sol);
        assert!((d - 0.04f64.sqrt()).abs() < resolution);
        assert!((d - distance_by_bisection(z, &below, &sol)).abs() < 1e-9);

        let aside = [SpaceTimePoint::new(16, 199)];
        let d = parabolic_distance(z, &aside, &sol);
        assert!((d - 0.3).abs() < 0.05);
        assert!((d - distance_by_bisection(z, &aside, &sol)).abs() < 1e-9);

        let later = [SpaceTimePoint::new(10, 200), SpaceTimePoint::new(3, 100)];
        let d = parabolic_distance(SpaceTimePoint::new(10, 150), &later, &sol);
        assert!((d - 0.35).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn operators_are_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            fs in prop::collection::vec(-1.0f64..1.0, 35),
            gs in prop::collection::vec(-1.0f64..1.0, 35),
        ) {
            let grid = Grid::new(&[1.0, 1.0], &[5, 7], BoundaryCondition::Neumann).unwrap();
            let f = SpatialField::new(fs).unwrap();
            let g = SpatialField::new(gs).unwrap();
            let comb = SpatialField::new(
                f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect()
            ).unwrap();
            let (lf, lg, lc) = (
                laplacian(&f, &grid).unwrap(),
                laplacian(&g, &grid).unwrap(),
                laplacian(&comb, &grid).unwrap(),
            );
            let (hf, hg, hc) = (
                hessian(&f, &grid).unwrap(),
                hessian(&g, &grid).unwrap(),
                hessian(&comb, &grid).unwrap(),
            );
            let (gf, gg, gc) = (
                gradient(&f, &grid).unwrap(),
                gradient(&g, &grid).unwrap(),
                gradient(&comb, &grid).unwrap(),
            );
            for i in 0..grid.len() {
                prop_assert!((lc[i] - (a * lf[i] + b * lg[i])).abs() < 1e-9);
                prop_assert!(
                    (hc.entry(0, 1)[i] - (a * hf.entry(0, 1)[i] + b * hg.entry(0, 1)[i])).abs() < 1e-9
                );
                for d in 0..2 {
                    prop_assert!((gc[d][i] - (a * gf[d][i] + b * gg[d][i])).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn distance_of_union_is_min(
            s1 in prop::collection::vec((0usize..21, 0usize..101), 0..6),
            s2 in prop::collection::vec((0usize..21, 0usize..101), 0..6),
            zx in 0usize..21, zt in 0usize..101,
        ) {
            let g = line(21, 1.0, BoundaryCondition::Neumann);
            let times: Vec<f64> = (0..101).map(|k| k as f64 * 1e-3).collect();
            let th = Thresholds::new(0.0, 1.0).unwrap();
            let sol = SpaceTimeSolution::from_fn(g, th, times, RelayState::Minus, |_, _| 0.5).unwrap();
            let to_pts = |s: &[(usize, usize)]| -> Vec<SpaceTimePoint> {
                s.iter().map(|&(x, t)| SpaceTimePoint::new(x, t)).collect()
            };
            let (a, b) = (to_pts(&s1), to_pts(&s2));
            let mut both = a.clone();
            both.extend(&b);
            let z = SpaceTimePoint::new(zx, zt);
            let d = parabolic_distance(z, &both, &sol);
            prop_assert_eq!(d, parabolic_distance(z, &a, &sol).min(parabolic_distance(z, &b, &sol)));
        }

        #[test]
        fn cylinders_grow_with_radius(r1 in 0.01f64..0.5, extra in 0.0f64..0.5, zx in 0usize..11, zt in 0usize..41) {
            let g = line(11, 1.0, BoundaryCondition::Neumann);
            let times: Vec<f64> = (0..41).map(|k| k as f64 * 0.0025).collect();
            let th = Thresholds::new(0.0, 1.0).unwrap();
            let sol = SpaceTimeSolution::from_fn(g, th, times, RelayState::Minus, |_, _| 0.5).unwrap();
            let z = SpaceTimePoint::new(zx, zt);
            for kind in [Cylinder::Lower, Cylinder::Full] {
                let small = cylinder_points(&sol, z, r1, kind).unwrap();
                let big = cylinder_points(&sol, z, r1 + extra, kind).unwrap();
                prop_assert!(small.iter().all(|p| big.contains(p)));
            }
        }
    }
}
