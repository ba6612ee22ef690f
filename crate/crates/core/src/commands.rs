//! Run orchestration behind the command-line front end: `run`, `analyze`,
//! `sweep` and the relay-oscillator self-test.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_config, BcConfig, Preset, ScenarioConfig};
use crate::diagnostics::{
    acf_phi, gradient_growth, probe_directions, quadratic_growth, radius_ladder,
    regularity_profile, sign_conditions, spread, GrowthReport, PhiTable, ProfileOptions,
    RegularityProfile, SignReport,
};
use crate::error::{Error, Result};
use crate::free_boundary::{classify, separation_check, ClassifyParams, FreeBoundaryAtlas};
use crate::grid::{SpaceTimePoint, SpaceTimeSolution};
use crate::io::{load_run, run_dir, write_run};
use crate::relay::RelayState;
use crate::solver;

pub const REPORT_DIR: &str = "report";
pub const DEFAULT_RADII: [f64; 3] = [0.2, 0.1, 0.05];

/// Runs a scenario file and writes its run directory.
pub fn cmd_run(config_path: &Path) -> Result<PathBuf> {
    let config = load_config(config_path)?;
    run_scenario(&config)
}

/// Runs an in-memory scenario into `output_dir/name`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<PathBuf> {
    config.validate()?;
    let start = Instant::now();
    let sol = solver::run(config)?;
    let wall = start.elapsed().as_secs_f64();
    let dir = run_dir(config);
    write_run(&dir, config, &sol, wall)?;
    Ok(dir)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub grad_tol: Option<f64>,
    pub level_tol: Option<f64>,
    pub radii: Vec<f64>,
    /// Profile sample budget.
    pub sample_count: usize,
    /// Growth centers measured (evenly strided over the eligible set).
    pub max_centers: usize,
    /// Growth centers at which the monotonicity functional is tabulated.
    pub phi_centers: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            grad_tol: None,
            level_tol: None,
            radii: DEFAULT_RADII.to_vec(),
            sample_count: 20_000,
            max_centers: 64,
            phi_centers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub rho: f64,
    pub count: usize,
    pub max_dt_u: f64,
    pub max_hess: f64,
    pub max_total: f64,
}

/// Contents of `summary.json`. Non-finite numbers serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub name: String,
    pub snapshots: usize,
    pub sup_bound: f64,
    pub level_tol: f64,
    pub grad_tol: f64,
    pub wall_min_steps: usize,
    pub gamma_alpha_count: usize,
    pub gamma_beta_count: usize,
    pub gamma_v_count: usize,
    pub gamma_0_count: usize,
    pub gamma_star_count: usize,
    pub separation: f64,
    pub radii: Vec<f64>,
    pub growth_centers: usize,
    pub growth_skipped: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest max/min of `osc(Q_r⁻)/r²` across the ladder over all centers.
    pub quadratic_spread: f64,
    /// Largest max/min of `sup |Du| / r` across the ladder over all centers.
    pub linear_spread: f64,
    /// Global `max |∂ₜu|` away from the parabolic boundary.
    pub c3: f64,
    /// Global `max |D²u|` away from the parabolic boundary.
    pub c4: f64,
    pub profile_eps: f64,
    pub profile_bands: Vec<BandSummary>,
    pub sign_tol: f64,
    pub sign_checked: usize,
    pub sign_skipped_near_wall: usize,
    pub sign_violations_alpha: usize,
    pub sign_violations_beta: usize,
    pub sign_violations: usize,
    pub phi_tables: usize,
    pub n_emp_max: Option<f64>,
}

/// Everything `analyze` computes, before serialization.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub atlas: FreeBoundaryAtlas,
    pub growth: GrowthReport,
    pub phi: Vec<PhiTable>,
    pub signs: SignReport,
    pub profile: RegularityProfile,
    pub summary: AnalysisSummary,
}

/// Runs the atlas and every diagnostic on a solution.
pub fn analyze_solution(
    name: &str,
    sol: &SpaceTimeSolution,
    dt: f64,
    opts: &AnalyzeOptions,
) -> Result<Analysis> {
    let mut params = ClassifyParams::defaults_for(sol);
    if let Some(v) = opts.grad_tol {
        params.grad_tol = v;
    }
    if let Some(v) = opts.level_tol {
        params.level_tol = v;
    }
    let atlas = classify(sol, params)?;
    let radii = radius_ladder(&opts.radii)?;
    let mut growth = quadratic_growth(sol, &atlas, params.grad_tol, &radii, opts.max_centers)?;
    gradient_growth(sol, &mut growth)?;

    let mut phi = Vec::new();
    if let Some(&rho0) = radii.first() {
        let centers: Vec<SpaceTimePoint> = growth.samples.iter().map(|s| s.center).collect();
        for z in crate::diagnostics::stride_subset(&centers, opts.phi_centers) {
            for e in probe_directions(sol.grid().dim()) {
                phi.push(acf_phi(sol, z, &e, rho0, &radii)?);
            }
        }
    }

    let sign_tol = 10.0 * dt;
    let signs = sign_conditions(sol, &atlas, sign_tol);
    let eps = radii.last().copied().unwrap_or(0.0);
    let profile = regularity_profile(
        sol,
        &atlas,
        ProfileOptions {
            sample_count: opts.sample_count,
            eps,
        },
    )?;
    let global = profile.global();
    let spread_max = |f: &dyn Fn(&crate::diagnostics::GrowthSample) -> Vec<f64>| {
        growth
            .samples
            .iter()
            .map(|s| spread(&f(s)))
            .fold(0.0, f64::max)
    };
    let summary = AnalysisSummary {
        name: name.to_string(),
        snapshots: sol.len(),
        sup_bound: sol.sup_bound(),
        level_tol: params.level_tol,
        grad_tol: params.grad_tol,
        wall_min_steps: params.wall_min_steps,
        gamma_alpha_count: atlas.gamma_alpha.len(),
        gamma_beta_count: atlas.gamma_beta.len(),
        gamma_v_count: atlas.gamma_v.len(),
        gamma_0_count: atlas.gamma_0.len(),
        gamma_star_count: atlas.gamma_star.len(),
        separation: separation_check(sol, params.level_tol),
        radii: radii.clone(),
        growth_centers: growth.samples.len(),
        growth_skipped: growth.skipped,
        c0: growth.c0(),
        c1: growth.c1(),
        c2: growth.c2(),
        quadratic_spread: spread_max(&|s| s.ratios_quadratic()),
        linear_spread: spread_max(&|s| s.ratios_linear()),
        c3: global.max_dt_u,
        c4: global.max_hess,
        profile_eps: eps,
        profile_bands: profile
            .bands
            .iter()
            .map(|b| BandSummary {
                rho: b.rho,
                count: b.count,
                max_dt_u: b.max_dt_u,
                max_hess: b.max_hess,
                max_total: b.max_total,
            })
            .collect(),
        sign_tol,
        sign_checked: signs.checked.len(),
        sign_skipped_near_wall: signs.skipped_near_wall,
        sign_violations_alpha: signs.violations_alpha,
        sign_violations_beta: signs.violations_beta,
        sign_violations: signs.violations(),
        phi_tables: phi.len(),
        n_emp_max: phi.iter().filter_map(|p| p.n_emp).reduce(f64::max),
    };
    Ok(Analysis {
        atlas,
        growth,
        phi,
        signs,
        profile,
        summary,
    })
}

fn index_header(dim: usize) -> &'static str {
    if dim == 2 {
        "t_index,x_index,y_index"
    } else {
        "t_index,x_index"
    }
}

fn index_cells(sol: &SpaceTimeSolution, z: SpaceTimePoint) -> String {
    let m = sol.grid().multi(z.index);
    if sol.grid().dim() == 2 {
        format!("{},{},{}", z.t_index, m[0], m[1])
    } else {
        format!("{},{}", z.t_index, m[0])
    }
}

pub fn growth_csv(sol: &SpaceTimeSolution, growth: &GrowthReport) -> String {
    let mut out = format!(
        "{},r,osc_lower,osc_full,sup_grad,ratio_quadratic,ratio_quadratic_full,ratio_linear\n",
        index_header(sol.grid().dim())
    );
    for s in &growth.samples {
        let (q, qf, l) = (
            s.ratios_quadratic(),
            s.ratios_quadratic_full(),
            s.ratios_linear(),
        );
        for (i, r) in s.radii.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{r},{},{},{},{},{},{}",
                index_cells(sol, s.center),
                s.osc_lower[i],
                s.osc_full[i],
                s.sup_grad[i],
                q[i],
                qf[i],
                l[i]
            );
        }
    }
    out
}

pub fn phi_csv(sol: &SpaceTimeSolution, tables: &[PhiTable]) -> String {
    let dim = sol.grid().dim();
    let (coords, dirs) = if dim == 2 {
        ("t,x,y", "e_x,e_y")
    } else {
        ("t,x", "e_x")
    };
    let mut out = format!("{},{coords},{dirs},rho0,r,phi\n", index_header(dim));
    for table in tables {
        let x = sol.grid().coords(table.center.index);
        let t = sol.times()[table.center.t_index];
        let pos: Vec<String> = std::iter::once(t)
            .chain(x[..dim].iter().copied())
            .map(|v| v.to_string())
            .collect();
        let dir: Vec<String> = table.direction.iter().map(|v| v.to_string()).collect();
        for (r, phi) in table.radii.iter().zip(&table.phi_values) {
            let _ = writeln!(
                out,
                "{},{},{},{},{r},{phi}",
                index_cells(sol, table.center),
                pos.join(","),
                dir.join(","),
                table.rho0
            );
        }
    }
    out
}

pub fn signs_csv(sol: &SpaceTimeSolution, signs: &SignReport) -> String {
    let mut out = format!(
        "{},kind,dt_u,grad_norm,tol,excess,violation\n",
        index_header(sol.grid().dim())
    );
    for c in &signs.checked {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            index_cells(sol, c.event.location),
            c.event.kind.as_str(),
            c.event.dt_u,
            c.event.grad_norm,
            signs.tol,
            c.excess,
            u8::from(c.excess > 0.0)
        );
    }
    out
}

pub fn profile_csv(profile: &RegularityProfile) -> String {
    let mut out = String::from("rho,eps,count,max_dt_u,max_hess,max_total\n");
    for b in &profile.bands {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.rho, profile.eps, b.count, b.max_dt_u, b.max_hess, b.max_total
        );
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reconstructs the run, analyzes it and writes `run_dir/report`.
pub fn cmd_analyze(run_dir: &Path, opts: &AnalyzeOptions) -> Result<(PathBuf, AnalysisSummary)> {
    let (manifest, sol) = load_run(run_dir)?;
    let analysis = analyze_solution(&manifest.config.name, &sol, manifest.config.dt, opts)?;
    let out = run_dir.join(REPORT_DIR);
    fs::create_dir_all(&out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    write_text(&out.join("atlas.csv"), &analysis.atlas.to_csv(&sol))?;
    write_text(&out.join("growth.csv"), &growth_csv(&sol, &analysis.growth))?;
    write_text(&out.join("phi.csv"), &phi_csv(&sol, &analysis.phi))?;
    write_text(&out.join("signs.csv"), &signs_csv(&sol, &analysis.signs))?;
    write_text(&out.join("profile.csv"), &profile_csv(&analysis.profile))?;
    let json = serde_json::to_string_pretty(&analysis.summary).expect("summary serializes");
    write_text(&out.join("summary.json"), &(json + "\n"))?;
    Ok((out, analysis.summary))
}

/// Parses one sweep value: JSON if it parses, otherwise a bare string.
fn parse_value(raw: &str) -> serde_json::Value {
    serde_json::from_str(raw.trim())
        .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()))
}

/// Applies `pointer = value` to a config and re-validates it through the
/// strict schema.
pub fn with_parameter(
    config: &ScenarioConfig,
    pointer: &str,
    value: &serde_json::Value,
) -> Result<ScenarioConfig> {
    let mut doc = serde_json::to_value(config).expect("config serializes");
    let slot = doc
        .pointer_mut(pointer)
        .ok_or_else(|| Error::Config(format!("no parameter at {pointer:?}")))?;
    *slot = value.clone();
    let text = serde_json::to_string(&doc).expect("value serializes");
    let out = ScenarioConfig::from_json(&text)?;
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: String,
    pub run_dir: PathBuf,
    pub outcome: std::result::Result<AnalysisSummary, String>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "index,value,status,gamma_v_count,gamma_alpha_count,gamma_beta_count,gamma_0_count,\
         sign_violations,c3,c4,max_profile_total,error\n",
    );
    for row in rows {
        // values and messages are quoted CSV fields
        let value = row.value.replace('"', "\"\"");
        match &row.outcome {
            Ok(s) => {
                let total = s.profile_bands.last().map_or(0.0, |b| b.max_total);
                let _ = writeln!(
                    out,
                    "{},\"{value}\",ok,{},{},{},{},{},{},{},{},",
                    row.index,
                    s.gamma_v_count,
                    s.gamma_alpha_count,
                    s.gamma_beta_count,
                    s.gamma_0_count,
                    s.sign_violations,
                    s.c3,
                    s.c4,
                    total
                );
            }
            Err(msg) => {
                let msg = msg.replace('"', "\"\"");
                let _ = writeln!(out, "{},\"{value}\",error,,,,,,,,,\"{msg}\"", row.index);
            }
        }
    }
    out
}

/// One run + analyze per value, in parallel on the current rayon pool, each
/// in its own directory under `output_dir/<name>_sweep`. Child failures are
/// recorded per row.
pub fn cmd_sweep(
    config_path: &Path,
    pointer: &str,
    values: &[String],
    opts: &AnalyzeOptions,
) -> Result<(PathBuf, Vec<SweepRow>)> {
    if values.is_empty() {
        return Err(Error::Config("no values".into()));
    }
    let base = load_config(config_path)?;
    let sweep_dir = base.output_dir.join(format!("{}_sweep", base.name));
    fs::create_dir_all(&sweep_dir)
        .map_err(|e| Error::io(format!("creating {}", sweep_dir.display()), e))?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(index, raw)| {
            let child_name = format!("{}_{index:03}", base.name);
            let dir = sweep_dir.join(&child_name);
            let outcome = (|| {
                let mut child = with_parameter(&base, pointer, &parse_value(raw))?;
                child.name = child_name.clone();
                child.output_dir = sweep_dir.clone();
                let dir = run_scenario(&child)?;
                Ok::<_, Error>(cmd_analyze(&dir, opts)?.1)
            })()
            .map_err(|e| e.to_string());
            SweepRow {
                index,
                value: raw.trim().to_string(),
                run_dir: dir,
                outcome,
            }
        })
        .collect();
    write_text(&sweep_dir.join("sweep_summary.csv"), &sweep_csv(&rows))?;
    Ok((sweep_dir, rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorReport {
    pub measured: f64,
    pub expected: f64,
    pub tol: f64,
    pub cycles: usize,
}

impl OscillatorReport {
    pub fn passed(&self) -> bool {
        (self.measured - self.expected).abs() <= self.tol
    }
}

/// Scenario used by the self-test: a flat start at the band midpoint on the
/// `-1` branch, long enough for four full cycles.
pub fn oscillator_scenario(alpha: f64, beta: f64, dt: f64) -> ScenarioConfig {
    let period = 2.0 * (beta - alpha);
    ScenarioConfig {
        name: "selftest_oscillator".into(),
        dim: 1,
        extent: vec![1.0],
        nx: vec![5],
        dt,
        t_end: if period.is_finite() && period > 0.0 {
            4.5 * period
        } else {
            1.0
        },
        alpha,
        beta,
        bc: BcConfig::Neumann,
        preset: Preset::Homogeneous {
            u0: 0.5 * (alpha + beta),
            h0: -1.0,
        },
        snapshot_stride: 1,
        freeze_h: false,
        seed: 0,
        output_dir: PathBuf::from("."),
        cfl_safety: 1.0,
    }
}

/// Mean time between consecutive `-1 -> +1` switches at one grid point.
pub fn switching_period(sol: &SpaceTimeSolution, index: usize) -> Option<(f64, usize)> {
    let ups: Vec<f64> = (1..sol.len())
        .filter(|&k| {
            sol.h(k - 1).get(index) == RelayState::Minus && sol.h(k).get(index) == RelayState::Plus
        })
        .map(|k| sol.times()[k])
        .collect();
    let cycles = ups.len().checked_sub(1).filter(|&c| c > 0)?;
    Some(((ups[cycles] - ups[0]) / cycles as f64, cycles))
}

/// Measures the homogeneous switching period against `2 (beta - alpha)`.
/// Fails with [`Error::Assertion`] when the error exceeds `2 dt`.
pub fn cmd_oscillator_selftest(alpha: f64, beta: f64, dt: f64) -> Result<OscillatorReport> {
    let scenario = oscillator_scenario(alpha, beta, dt);
    scenario.validate()?;
    let sol = solver::run(&scenario)?;
    let expected = 2.0 * (beta - alpha);
    let (measured, cycles) = switching_period(&sol, 0)
        .ok_or_else(|| Error::Assertion("fewer than two up-switches observed".into()))?;
    let report = OscillatorReport {
        measured,
        expected,
        tol: 2.0 * dt,
        cycles,
    };
    if !report.passed() {
        return Err(Error::Assertion(format!(
            "period {measured} differs from {expected} by more than {}",
            report.tol
        )));
    }
    Ok(report)
}
