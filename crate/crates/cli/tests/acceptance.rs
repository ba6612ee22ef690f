//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use hysterm_core::commands::{analyze_solution, switching_period, AnalysisSummary, AnalyzeOptions};
use hysterm_core::config::{load_config, BcConfig, Preset, ScenarioConfig};
use hysterm_core::diagnostics::{acf_phi, heat_kernel, quadratic_growth};
use hysterm_core::free_boundary::{classify, ClassifyParams};
use hysterm_core::grid::{BoundaryCondition, Grid, SpaceTimePoint, SpaceTimeSolution};
use hysterm_core::relay::{RelayState, Thresholds};
use hysterm_core::solver;

type Outcome = Result<String, String>;

fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Summaries keyed by the scenario's JSON, shared between criteria.
fn analyzed(cfg: &ScenarioConfig) -> Result<AnalysisSummary, String> {
    static CACHE: OnceLock<Mutex<HashMap<String, AnalysisSummary>>> = OnceLock::new();
    let key = cfg.to_json();
    if let Some(hit) = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .get(&key)
    {
        return Ok(hit.clone());
    }
    let sol = solver::run(cfg).map_err(|e| e.to_string())?;
    let analysis = analyze_solution(&cfg.name, &sol, cfg.dt, &AnalyzeOptions::default())
        .map_err(|e| e.to_string())?;
    CACHE
        .get()
        .unwrap()
        .lock()
        .unwrap()
        .insert(key, analysis.summary.clone());
    Ok(analysis.summary)
}

fn relay_oscillator() -> Outcome {
    let cfg = scenario("homogeneous");
    let start = Instant::now();
    let sol = solver::run(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let (period, cycles) = switching_period(&sol, cfg.nx[0] / 2).ok_or("no full cycle")?;
    let (lo, hi) = sol
        .u_snapshots()
        .iter()
        .flat_map(|u| u.values().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let expected = 2.0 * (cfg.beta - cfg.alpha);
    check(
        (period - expected).abs() <= 2.0 * cfg.dt
            && lo >= cfg.alpha - cfg.dt
            && hi <= cfg.beta + cfg.dt
            && elapsed < 1.0,
        format!("period={period:.6} over {cycles} cycles (expected {expected}), u in [{lo:.4}, {hi:.4}], {elapsed:.3}s"),
    )
}

/// Trapezoid rule on `[-L, L]^n` with `L = 12 sqrt(t)` and step `sqrt(t)/10`.
fn kernel_mass(dim: usize, t: f64) -> f64 {
    let half = 120;
    let h = t.sqrt() / 10.0;
    let w = |i: i64| if i.abs() == half { 0.5 * h } else { h };
    let mut total = 0.0;
    for i in -half..=half {
        let x = i as f64 * h;
        if dim == 1 {
            total += w(i) * heat_kernel(&[x], t);
        } else {
            for j in -half..=half {
                total += w(i) * w(j) * heat_kernel(&[x, j as f64 * h], t);
            }
        }
    }
    total
}

fn heat_kernel_normalization() -> Outcome {
    let mut worst = 0.0f64;
    for dim in [1, 2] {
        for t in [0.01, 0.1, 1.0] {
            worst = worst.max((kernel_mass(dim, t) - 1.0).abs());
        }
    }
    let vanishes = [0.0, -1e-3, -1.0]
        .iter()
        .all(|&t| heat_kernel(&[0.0], t) == 0.0 && heat_kernel(&[0.3, -0.2], t) == 0.0);
    check(
        worst <= 1e-6 && vanishes,
        format!("max |mass - 1| = {worst:.2e}, zero for t <= 0: {vanishes}"),
    )
}

fn acf_closed_form() -> Outcome {
    // u = (x - 3)²/2 so D_x u = x - 3: theta1 = (x1)+, theta2 = (x1)- about x* = 3
    let grid = Grid::new(&[6.0], &[3001], BoundaryCondition::Neumann).map_err(|e| e.to_string())?;
    let th = Thresholds::new(-1.0, 100.0).map_err(|e| e.to_string())?;
    let steps = 1700;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * 1e-4).collect();
    let sol = SpaceTimeSolution::from_fn(grid, th, times, RelayState::Minus, |x, _| {
        0.5 * (x[0] - 3.0).powi(2)
    })
    .map_err(|e| e.to_string())?;
    let radii = [0.1, 0.2, 0.4];
    let table = acf_phi(&sol, SpaceTimePoint::new(1500, steps), &[1.0], 2.0, &radii)
        .map_err(|e| e.to_string())?;
    let worst = table
        .phi_values
        .iter()
        .map(|p| (p / 0.25 - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 0.05,
        format!(
            "phi = {:?}, max relative error {worst:.4}",
            table.phi_values
        ),
    )
}

fn fourier_oracle(x: f64, t: f64) -> f64 {
    // u_t = u_xx + 1, u(0) = u(1) = 0, u(x, 0) = sin(pi x)
    let mut u = 0.5 * x * (1.0 - x) + (PI * x).sin() * (-PI * PI * t).exp();
    for k in (1..400).step_by(2) {
        let k = k as f64;
        u -= 4.0 / (k * PI).powi(3) * (k * PI * x).sin() * (-k * k * PI * PI * t).exp();
    }
    u
}

fn convergence_error(nx: usize) -> Result<f64, String> {
    let dx = 1.0 / (nx - 1) as f64;
    let cfg = ScenarioConfig {
        name: format!("fourier_{nx}"),
        dim: 1,
        extent: vec![1.0],
        nx: vec![nx],
        dt: 0.25 * dx * dx,
        t_end: 0.1,
        alpha: -1.0,
        beta: 2.0,
        bc: BcConfig::Dirichlet(0.0),
        preset: Preset::Sine {
            amplitude: 1.0,
            modes: 1,
            h0: -1.0,
        },
        snapshot_stride: 1_000_000,
        freeze_h: true,
        seed: 0,
        output_dir: PathBuf::from("unused"),
        cfl_safety: 1.0,
    };
    let sol = solver::run(&cfg).map_err(|e| e.to_string())?;
    let last = sol.len() - 1;
    let t = sol.times()[last];
    if (t - 0.1).abs() > 1e-12 {
        return Err(format!("final time {t}"));
    }
    Ok((0..nx)
        .map(|i| (sol.u(last)[i] - fourier_oracle(i as f64 * dx, t)).abs())
        .fold(0.0, f64::max))
}

fn solver_convergence() -> Outcome {
    let start = Instant::now();
    let coarse = convergence_error(21)?;
    let fine = convergence_error(41)?;
    let elapsed = start.elapsed().as_secs_f64();
    let ratio = coarse / fine;
    check(
        ratio >= 3.0 && elapsed < 10.0,
        format!("max error {coarse:.3e} -> {fine:.3e} (ratio {ratio:.2}), {elapsed:.2}s"),
    )
}

fn quadratic_growth_criterion() -> Outcome {
    // the bundled homogeneous scenario at dt = 1e-4: osc over Q_r⁻ is r² up
    // to one time step, which needs dt << r² = 2.5e-3
    let mut cfg = scenario("homogeneous");
    cfg.dt = 1e-4;
    cfg.t_end = 2.0;
    let sol = solver::run(&cfg).map_err(|e| e.to_string())?;
    let atlas = classify(&sol, ClassifyParams::defaults_for(&sol)).map_err(|e| e.to_string())?;
    let report = quadratic_growth(&sol, &atlas, atlas.params.grad_tol, &[0.2, 0.1, 0.05], 16)
        .map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = report
        .samples
        .iter()
        .flat_map(|s| s.ratios_quadratic())
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    let homogeneous_ok = !ratios.is_empty() && lo >= 0.8 && hi <= 1.2;

    let plateau = analyzed(&scenario("plateau"))?;
    let plateau_ok = plateau.growth_centers > 0 && plateau.quadratic_spread <= 10.0;
    check(
        homogeneous_ok && plateau_ok,
        format!(
            "homogeneous osc/r² in [{lo:.4}, {hi:.4}] over {} centers; plateau spread {:.3} over {} centers",
            report.samples.len(),
            plateau.quadratic_spread,
            plateau.growth_centers
        ),
    )
}

fn gradient_growth_criterion() -> Outcome {
    let plateau = analyzed(&scenario("plateau"))?;
    check(
        plateau.growth_centers > 0 && plateau.linear_spread <= 10.0,
        format!(
            "plateau sup|Du|/r spread {:.3} over {} centers (C2 = {:.4})",
            plateau.linear_spread, plateau.growth_centers, plateau.c2
        ),
    )
}

fn sign_conditions_criterion() -> Outcome {
    let bump = analyzed(&scenario("gaussian_bump"))?;
    let plateau = analyzed(&scenario("plateau"))?;
    check(
        bump.sign_violations == 0 && plateau.sign_violations == 0 && bump.sign_checked > 0,
        format!(
            "gaussian_bump {} violations / {} checked; plateau {} violations / {} checked",
            bump.sign_violations, bump.sign_checked, plateau.sign_violations, plateau.sign_checked
        ),
    )
}

fn profile_criterion() -> Outcome {
    let wall = analyzed(&scenario("two_phase_wall"))?;
    let bands = &wall.profile_bands;
    // bands run from large to small rho, so maxima may only grow
    let monotone = bands.windows(2).all(|w| w[0].max_total <= w[1].max_total);

    let base = scenario("gaussian_bump");
    let mut fine = base.clone();
    fine.dt = base.dt / 2.0;
    fine.snapshot_stride = base.snapshot_stride * 2;
    let coarse_run = analyzed(&base)?;
    let fine_run = analyzed(&fine)?;
    let (a, b) = (
        coarse_run.profile_bands.last(),
        fine_run.profile_bands.last(),
    );
    let (a, b) = (
        a.map_or(f64::NAN, |x| x.max_total),
        b.map_or(f64::NAN, |x| x.max_total),
    );
    let stable = a.is_finite() && b.is_finite() && (b / a - 1.0).abs() <= 0.2;
    let free = coarse_run.gamma_v_count == 0 && fine_run.gamma_v_count == 0;
    check(
        monotone && wall.gamma_v_count > 0 && stable && free,
        format!(
            "two_phase_wall bands monotone: {monotone} ({} bands); gaussian_bump global max {a:.4} -> {b:.4} under dt/2",
            bands.len()
        ),
    )
}

fn wall_detection() -> Outcome {
    let wall = analyzed(&scenario("two_phase_wall"))?;
    let homogeneous = analyzed(&scenario("homogeneous"))?;
    let bump = analyzed(&scenario("gaussian_bump"))?;
    check(
        wall.gamma_v_count > 0 && homogeneous.gamma_v_count == 0 && bump.gamma_v_count == 0,
        format!(
            "gamma_v: two_phase_wall={}, homogeneous={}, gaussian_bump={}",
            wall.gamma_v_count, homogeneous.gamma_v_count, bump.gamma_v_count
        ),
    )
}

fn hysterm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hysterm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_bytes(run_dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for dir in [run_dir.to_path_buf(), run_dir.join("report")] {
        let mut names: Vec<PathBuf> = fs::read_dir(&dir)
            .unwrap()
            .flatten()
            .map(|e| e.path())
            .filter(|p| {
                p.extension().is_some_and(|x| x == "csv" || x == "json")
                    && !p.ends_with("manifest.json")
            })
            .collect();
        names.sort();
        for p in names {
            files.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    files
}

fn determinism_and_integrity() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let presets = [
        "homogeneous",
        "sine",
        "gaussian_bump",
        "plateau",
        "two_phase_wall",
    ];
    let mut compared = 0;
    for name in presets {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let mut cfg = scenario(name);
            cfg.output_dir = tmp.path().join(format!("rep{rep}"));
            let path = tmp.path().join(format!("{name}_{rep}.json"));
            fs::write(&path, cfg.to_json()).map_err(|e| e.to_string())?;
            let run = hysterm(&["run", path.to_str().unwrap()]);
            if !run.status.success() {
                return Err(format!(
                    "{name}: run failed: {}",
                    String::from_utf8_lossy(&run.stderr)
                ));
            }
            let dir = cfg.output_dir.join(name);
            let analyze = hysterm(&["analyze", dir.to_str().unwrap()]);
            if !analyze.status.success() {
                return Err(format!(
                    "{name}: analyze failed: {}",
                    String::from_utf8_lossy(&analyze.stderr)
                ));
            }
            outputs.push(report_bytes(&dir));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{name}: outputs differ between repeated runs"));
        }
        compared += outputs[0].len();
    }

    let victim = tmp.path().join("rep0/gaussian_bump/u_000100.csv");
    let mut bytes = fs::read(&victim).map_err(|e| e.to_string())?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x20;
    fs::write(&victim, bytes).map_err(|e| e.to_string())?;
    let tampered = hysterm(&[
        "analyze",
        tmp.path().join("rep0/gaussian_bump").to_str().unwrap(),
    ]);
    let code = tampered.status.code();
    check(
        code == Some(3),
        format!("{compared} files byte-identical across reruns of 5 presets; tampered snapshot exit code {code:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("relay oscillator exactness", relay_oscillator),
        ("heat-kernel normalization", heat_kernel_normalization),
        ("ACF closed form", acf_closed_form),
        ("solver convergence", solver_convergence),
        ("quadratic growth", quadratic_growth_criterion),
        ("gradient growth", gradient_growth_criterion),
        ("sign conditions", sign_conditions_criterion),
        ("profile bands", profile_criterion),
        ("vertical wall detection", wall_detection),
        ("determinism and I/O integrity", determinism_and_integrity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("acceptance {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
