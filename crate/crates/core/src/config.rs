//! Scenario configuration: a strict JSON document describing the domain,
//! thresholds, discretization and initial data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, Grid, SpatialField};
use crate::relay::{RelayState, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcConfig {
    Dirichlet(f64),
    Neumann,
}

impl From<BcConfig> for BoundaryCondition {
    fn from(bc: BcConfig) -> Self {
        match bc {
            BcConfig::Dirichlet(g) => BoundaryCondition::Dirichlet(g),
            BcConfig::Neumann => BoundaryCondition::Neumann,
        }
    }
}

fn minus_one() -> f64 {
    -1.0
}

/// Initial-data families. `h0` is the relay branch used where the initial
/// value lies strictly inside `]alpha, beta[`; it must be `-1` or `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Homogeneous {
        u0: f64,
        h0: f64,
    },
    /// `amplitude * prod_d sin(modes * pi * x_d / L_d)`.
    Sine {
        amplitude: f64,
        modes: u32,
        #[serde(default = "minus_one")]
        h0: f64,
    },
    /// `base + amplitude * exp(-|x - center|² / (2 width²))`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
        base: f64,
        h0: f64,
    },
    /// `level + curvature * |x - domain_center|²`.
    Plateau {
        level: f64,
        curvature: f64,
        h0: f64,
    },
    /// Constant `u0` inside the band, relay `-1` for `x_0 < wall_position`
    /// and `+1` elsewhere.
    TwoPhaseWall {
        u0: f64,
        wall_position: f64,
    },
}

fn one() -> usize {
    1
}

fn unit_safety() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    pub extent: Vec<f64>,
    pub nx: Vec<usize>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub alpha: f64,
    pub beta: f64,
    pub bc: BcConfig,
    pub preset: Preset,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub freeze_h: bool,
    /// Reserved; every preset is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "unit_safety")]
    pub cfl_safety: f64,
}

fn relay_from(h0: f64, what: &str) -> Result<RelayState> {
    RelayState::from_value(h0)
        .map_err(|_| Error::Config(format!("{what}: h0 must be -1 or 1, got {h0}")))
}

impl ScenarioConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.alpha, self.beta)
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.extent.len() != self.dim || self.nx.len() != self.dim {
            return Err(Error::Config(format!(
                "dim={} but extent has {} and nx has {} entries",
                self.dim,
                self.extent.len(),
                self.nx.len()
            )));
        }
        Grid::new(&self.extent, &self.nx, self.bc.into())
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::Config(format!(
                "dim must be 1 or 2, got {}",
                self.dim
            )));
        }
        let th = self.thresholds()?;
        let grid = self.grid()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "T must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in ]0, 1], got {}",
                self.cfl_safety
            )));
        }
        let limit = grid.max_stable_dt(self.cfl_safety);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt: self.dt, limit });
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be >= 1".into()));
        }
        match &self.preset {
            Preset::Homogeneous { u0, h0 } => {
                relay_from(*h0, "homogeneous")?;
                finite(*u0, "homogeneous.u0")?;
            }
            Preset::Sine {
                amplitude,
                modes,
                h0,
            } => {
                relay_from(*h0, "sine")?;
                finite(*amplitude, "sine.amplitude")?;
                if *modes == 0 {
                    return Err(Error::Config("sine.modes must be >= 1".into()));
                }
            }
            Preset::GaussianBump {
                amplitude,
                width,
                center,
                base,
                h0,
            } => {
                relay_from(*h0, "gaussian_bump")?;
                finite(*amplitude, "gaussian_bump.amplitude")?;
                finite(*base, "gaussian_bump.base")?;
                if !(*width > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian_bump.width must be positive, got {width}"
                    )));
                }
                if center.len() != self.dim {
                    return Err(Error::Config(format!(
                        "gaussian_bump.center needs {} coordinates, got {}",
                        self.dim,
                        center.len()
                    )));
                }
            }
            Preset::Plateau {
                level,
                curvature,
                h0,
            } => {
                relay_from(*h0, "plateau")?;
                finite(*level, "plateau.level")?;
                finite(*curvature, "plateau.curvature")?;
            }
            Preset::TwoPhaseWall { u0, wall_position } => {
                if !(*u0 > th.alpha() && *u0 < th.beta()) {
                    return Err(Error::Config(format!(
                        "two_phase_wall.u0 must lie strictly inside ]alpha, beta[, got {u0}"
                    )));
                }
                if !(*wall_position > 0.0 && *wall_position < self.extent[0]) {
                    return Err(Error::Config(format!(
                        "two_phase_wall.wall_position must lie inside ]0, {}[, got {wall_position}",
                        self.extent[0]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Initial field and the per-point relay branch to use inside the band.
    pub fn initial_data(&self, grid: &Grid) -> Result<(SpatialField, Vec<RelayState>)> {
        let dim = grid.dim();
        let (u0, hints) = match &self.preset {
            Preset::Homogeneous { u0, h0 } => (
                SpatialField::constant(grid, *u0),
                vec![relay_from(*h0, "homogeneous")?; grid.len()],
            ),
            Preset::Sine {
                amplitude,
                modes,
                h0,
            } => {
                let k = *modes as f64 * std::f64::consts::PI;
                let ext = grid.extent().to_vec();
                (
                    SpatialField::from_fn(grid, |x| {
                        amplitude * (0..dim).map(|d| (k * x[d] / ext[d]).sin()).product::<f64>()
                    }),
                    vec![relay_from(*h0, "sine")?; grid.len()],
                )
            }
            Preset::GaussianBump {
                amplitude,
                width,
                center,
                base,
                h0,
            } => (
                SpatialField::from_fn(grid, |x| {
                    let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum();
                    base + amplitude * (-r2 / (2.0 * width * width)).exp()
                }),
                vec![relay_from(*h0, "gaussian_bump")?; grid.len()],
            ),
            Preset::Plateau {
                level,
                curvature,
                h0,
            } => {
                let mid: Vec<f64> = grid.extent().iter().map(|l| 0.5 * l).collect();
                (
                    SpatialField::from_fn(grid, |x| {
                        let r2: f64 = (0..dim).map(|d| (x[d] - mid[d]).powi(2)).sum();
                        level + curvature * r2
                    }),
                    vec![relay_from(*h0, "plateau")?; grid.len()],
                )
            }
            Preset::TwoPhaseWall { u0, wall_position } => (
                SpatialField::constant(grid, *u0),
                (0..grid.len())
                    .map(|i| {
                        if grid.coords(i)[0] < *wall_position {
                            RelayState::Minus
                        } else {
                            RelayState::Plus
                        }
                    })
                    .collect(),
            ),
        };
        SpatialField::new(u0.into_values()).map(|u| (u, hints))
    }
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be finite, got {v}")))
    }
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    ScenarioConfig::from_json(&text)
}
