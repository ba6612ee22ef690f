//! Explicit Euler integration of `u_t = Δu - h[u]` coupled to the relay field.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::grid::{laplacian, BoundaryCondition, Grid, SpaceTimeSolution, SpatialField};
use crate::relay::{field_update, HysteresisField, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub snapshot_stride: usize,
    /// Holds the relay field at its initial value (pure heat equation with a
    /// fixed ±1 source).
    pub freeze_h: bool,
}

impl SolverConfig {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        SolverConfig {
            dt: s.dt,
            t_end: s.t_end,
            cfl_safety: s.cfl_safety,
            snapshot_stride: s.snapshot_stride,
            freeze_h: s.freeze_h,
        }
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

fn check_cfl(g: &Grid, dt: f64, safety: f64) -> Result<()> {
    let limit = g.max_stable_dt(safety);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    Ok(())
}

fn apply_dirichlet(values: &mut [f64], g: &Grid) {
    if let BoundaryCondition::Dirichlet(value) = g.bc() {
        for (i, v) in values.iter_mut().enumerate() {
            if g.boundary_distance(i) == 0.0 {
                *v = value;
            }
        }
    }
}

fn advance(u: &SpatialField, h: &HysteresisField, g: &Grid, dt: f64) -> Result<SpatialField> {
    let lap = laplacian(u, g)?;
    if h.len() != u.len() {
        return Err(Error::ShapeMismatch {
            expected: u.len(),
            got: h.len(),
        });
    }
    let mut next: Vec<f64> = u
        .values()
        .iter()
        .zip(lap.values())
        .zip(h.states())
        .map(|((&v, &l), s)| v + dt * (l - s.value()))
        .collect();
    apply_dirichlet(&mut next, g);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok(SpatialField::from_vec_unchecked(next))
}

/// One explicit step: `u' = u + dt (Δu - h)`, then `h' = field_update(h, u')`.
pub fn step(
    u: &SpatialField,
    h: &HysteresisField,
    g: &Grid,
    dt: f64,
    th: Thresholds,
) -> Result<(SpatialField, HysteresisField)> {
    check_cfl(g, dt, 1.0)?;
    let next = advance(u, h, g, dt)?;
    let h_next = field_update(h, next.values(), th)?;
    Ok((next, h_next))
}

/// Integrates from the given initial state. Snapshots are kept every
/// `snapshot_stride` steps and at the final step.
pub fn integrate(
    grid: &Grid,
    th: Thresholds,
    u0: SpatialField,
    h0: HysteresisField,
    cfg: &SolverConfig,
) -> Result<SpaceTimeSolution> {
    check_cfl(grid, cfg.dt, cfg.cfl_safety)?;
    if cfg.snapshot_stride == 0 {
        return Err(Error::Config("snapshot_stride must be >= 1".into()));
    }
    let mut values = u0.into_values();
    apply_dirichlet(&mut values, grid);
    let mut u = SpatialField::new(values)?;
    let mut h = h0;

    let steps = cfg.steps();
    let mut times = vec![0.0];
    let mut us = vec![u.clone()];
    let mut hs = vec![h.clone()];
    for n in 1..=steps {
        u = advance(&u, &h, grid, cfg.dt).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { step: n },
            other => other,
        })?;
        if !cfg.freeze_h {
            h = field_update(&h, u.values(), th)?;
        }
        if n % cfg.snapshot_stride == 0 || n == steps {
            times.push(n as f64 * cfg.dt);
            us.push(u.clone());
            hs.push(h.clone());
        }
    }
    SpaceTimeSolution::new(grid.clone(), th, times, us, hs)
}

/// Runs a validated scenario.
pub fn run(scenario: &ScenarioConfig) -> Result<SpaceTimeSolution> {
    scenario.validate()?;
    let grid = scenario.grid()?;
    let th = scenario.thresholds()?;
    let (u0, hints) = scenario.initial_data(&grid)?;
    let h0 = HysteresisField::init(u0.values(), &hints, th)?;
    integrate(&grid, th, u0, h0, &SolverConfig::from_scenario(scenario))
}

/// [`run`] with the relay update disabled.
pub fn freeze_hysteresis(scenario: &ScenarioConfig) -> Result<SpaceTimeSolution> {
    let mut frozen = scenario.clone();
    frozen.freeze_h = true;
    run(&frozen)
}
