//! On-disk formats: snapshot CSVs, PGM heatmaps and the run manifest.
//!
//! A run directory holds `u_XXXXXX.csv` / `h_XXXXXX.csv` pairs (the number is
//! the solver step), `u_final.pgm`, `h_final.pgm` and `manifest.json`. Every
//! file except the manifest is listed in the manifest with its SHA-256.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceTimeSolution, SpatialField};
use crate::relay::{HysteresisField, RelayState};

pub const SOLVER_VERSION: &str = concat!(
    "hysterm-core ",
    env!("CARGO_PKG_VERSION"),
    " explicit-euler"
);
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub solver_version: String,
    pub wall_time_seconds: f64,
    /// Solver step of each stored snapshot, in time order.
    pub steps: Vec<usize>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::CorruptData {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Snapshot CSV: a `# t=<time>` line, then one comma-separated line per grid
/// row (`x_0` varies along a line). Floats use the shortest decimal form that
/// parses back to the same value.
pub fn snapshot_csv(grid: &Grid, t: f64, values: &[f64]) -> String {
    let row = grid.nx()[0];
    let mut out = format!("# t={t}\n");
    for line in values.chunks(row) {
        for (i, v) in line.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`snapshot_csv`]: `(t, values)`.
pub fn parse_snapshot_csv(text: &str, grid: &Grid, path: &Path) -> Result<(f64, Vec<f64>)> {
    let corrupt = |message: String| Error::CorruptData {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let t = lines
        .next()
        .and_then(|l| l.strip_prefix("# t="))
        .ok_or_else(|| corrupt("missing '# t=' header".into()))?
        .parse::<f64>()
        .map_err(|e| corrupt(format!("bad time: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (n, line) in lines.enumerate() {
        let before = values.len();
        for cell in line.split(',') {
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|e| corrupt(format!("line {}: {e}", n + 2)))?;
            values.push(v);
        }
        if values.len() - before != grid.nx()[0] {
            return Err(corrupt(format!(
                "line {}: expected {} values",
                n + 2,
                grid.nx()[0]
            )));
        }
        rows += 1;
    }
    let expected_rows = if grid.dim() == 2 { grid.nx()[1] } else { 1 };
    if rows != expected_rows {
        return Err(corrupt(format!(
            "expected {expected_rows} rows, got {rows}"
        )));
    }
    Ok((t, values))
}

/// Binary 8-bit PGM (`P5`) with `[min, max]` mapped linearly onto `[0, 255]`
/// and rounded; a constant field maps to 0. Rows follow the CSV layout.
pub fn pgm(grid: &Grid, values: &[f64]) -> Vec<u8> {
    let width = grid.nx()[0];
    let height = values.len() / width;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if max > min {
            ((v - min) / (max - min) * 255.0).round() as u8
        } else {
            0
        }
    }));
    out
}

fn step_of(t: f64, t0: f64, dt: f64) -> usize {
    ((t - t0) / dt).round() as usize
}

fn remove_stale(dir: &Path) -> Result<()> {
    let entries =
        fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    for entry in entries.flatten() {
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let snapshot = (name.starts_with("u_") || name.starts_with("h_")) && name.ends_with(".csv");
        if snapshot || name == MANIFEST_FILE {
            fs::remove_file(entry.path()).map_err(|e| Error::io(format!("removing {name}"), e))?;
        }
    }
    Ok(())
}

/// Writes all snapshots, the final-state heatmaps and the manifest.
pub fn write_run(
    dir: &Path,
    config: &ScenarioConfig,
    sol: &SpaceTimeSolution,
    wall_time: f64,
) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    remove_stale(dir)?;
    let grid = sol.grid();
    let times = sol.times();
    let mut files = Vec::new();
    let mut push = |name: String, bytes: Vec<u8>| -> Result<()> {
        write_file(&dir.join(&name), &bytes)?;
        files.push(FileEntry {
            path: name,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    };
    let mut steps = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let n = step_of(t, times[0], config.dt);
        steps.push(n);
        push(
            format!("u_{n:06}.csv"),
            snapshot_csv(grid, t, sol.u(k).values()).into_bytes(),
        )?;
        push(
            format!("h_{n:06}.csv"),
            snapshot_csv(grid, t, &sol.h(k).values()).into_bytes(),
        )?;
    }
    let last = sol.len() - 1;
    push("u_final.pgm".into(), pgm(grid, sol.u(last).values()))?;
    push("h_final.pgm".into(), pgm(grid, &sol.h(last).values()))?;

    let manifest = RunManifest {
        config: config.clone(),
        solver_version: SOLVER_VERSION.into(),
        wall_time_seconds: wall_time,
        steps,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read_file(&path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::CorruptData {
        path,
        message: e.to_string(),
    })
}

/// Checks every listed file against its digest.
pub fn verify_run(dir: &Path, manifest: &RunManifest) -> Result<()> {
    for entry in &manifest.files {
        let path = dir.join(&entry.path);
        let bytes = read_file(&path)?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::DigestMismatch { path });
        }
    }
    Ok(())
}

/// Reads a run directory back into a solution after verifying digests.
pub fn load_run(dir: &Path) -> Result<(RunManifest, SpaceTimeSolution)> {
    let manifest = read_manifest(dir)?;
    verify_run(dir, &manifest)?;
    let config = &manifest.config;
    let grid = config.grid()?;
    let th = config.thresholds()?;
    let mut times = Vec::with_capacity(manifest.steps.len());
    let mut us = Vec::with_capacity(manifest.steps.len());
    let mut hs = Vec::with_capacity(manifest.steps.len());
    let listed: HashSet<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    for &n in &manifest.steps {
        let (u_name, h_name) = (format!("u_{n:06}.csv"), format!("h_{n:06}.csv"));
        let (u_path, h_path) = (dir.join(&u_name), dir.join(&h_name));
        if !listed.contains(u_name.as_str()) || !listed.contains(h_name.as_str()) {
            return Err(Error::CorruptData {
                path: dir.join(MANIFEST_FILE),
                message: format!("step {n} is not in the file inventory"),
            });
        }
        let (t, u) = parse_snapshot_csv(
            &String::from_utf8_lossy(&read_file(&u_path)?),
            &grid,
            &u_path,
        )?;
        let (_, h) = parse_snapshot_csv(
            &String::from_utf8_lossy(&read_file(&h_path)?),
            &grid,
            &h_path,
        )?;
        let states = h
            .iter()
            .map(|&v| RelayState::from_value(v))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::CorruptData {
                path: h_path.clone(),
                message: e.to_string(),
            })?;
        let u = SpatialField::new(u).map_err(|e| Error::CorruptData {
            path: u_path.clone(),
            message: e.to_string(),
        })?;
        times.push(t);
        us.push(u);
        hs.push(HysteresisField::new(states));
    }
    let sol = SpaceTimeSolution::new(grid, th, times, us, hs)?;
    Ok((manifest, sol))
}

/// Path of the run directory for a scenario: `output_dir/name`.
pub fn run_dir(config: &ScenarioConfig) -> PathBuf {
    config.output_dir.join(&config.name)
}
