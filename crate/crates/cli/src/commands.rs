//! Pipeline orchestration behind each subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use halfline_ist::io::{grid_to_csv, solution_from_csv, solution_to_csv};
use halfline_ist::kernel::KernelField;
use halfline_ist::marchenko::{reconstruct_grid, MarchenkoOptions, SolutionGrid};
use halfline_ist::scattering::{assemble_scattering_data, ScatteringData};
use halfline_ist::validate::{validate, Check, ValidationReport, ValidationTolerances};
use halfline_ist::verify::{
    pde_residual, roundtrip_boundary, roundtrip_data, rh_jump_residual, sigma_test_points,
    soliton_grid, t_rh_jump_residual, JumpSource, JUMP_OFFSET,
};
use halfline_ist::{Error, Horizon, Problem, ProblemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::failure::Failure;
use crate::manifest::{CommandKind, OutputDir, RunManifest};

pub const DATA_FILE: &str = "scattering_data.json";
pub const VALIDATION_FILE: &str = "validation_report.json";
pub const SOLUTION_FILE: &str = "q_grid.csv";
pub const KERNEL_FILE: &str = "kernel_grid.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const VERIFY_FILE: &str = "verify_report.json";
pub const ROUNDTRIP_FILE: &str = "roundtrip_report.json";
pub const CONFIG_FILE: &str = "config.json";

/// Stencil span of the boundary round trip; its one-sided derivative
/// stencils step by BOUNDARY_HX / 4, large enough that reconstruction errors
/// of ~1e-6 are not amplified past the q_xx tolerance.
const BOUNDARY_HX: f64 = 0.4;

/// Settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct Settings {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub skip_validate: bool,
    pub nystrom_n: Option<usize>,
    pub emit_kernel: bool,
}

/// Tolerances of the verification oracles.
#[derive(Clone, Copy, Debug)]
pub struct VerifyTolerances {
    pub pde: f64,
    pub initial: f64,
    pub boundary: [f64; 3],
    pub jump: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            pde: 0.1,
            initial: 1e-4,
            boundary: [1e-4, 1e-3, 1e-2],
            jump: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerifyReport {
    fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        VerifyReport { checks, overall }
    }

    fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (measured {:.3e}, tolerance {:.1e})", c.name, c.measured, c.tolerance))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub nystrom_n: usize,
    pub span: f64,
    pub tol_solve: f64,
    pub nx: usize,
    pub nt: usize,
    pub max_abs_q: f64,
    pub max_cond: f64,
    pub max_residual: f64,
    pub max_edge_value: f64,
    pub max_kernel_imag: f64,
    /// Nyström order of the comparison solve.
    pub coarse_nystrom_n: usize,
    /// max |q_n − q_coarse| over the grid.
    pub error_estimate: f64,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn config_path(s: &Settings) -> Result<&Path, Failure> {
    s.config
        .as_deref()
        .ok_or_else(|| Failure::Core(Error::InvalidConfig("--config is required".into())))
}

/// Load and resolve the configuration, applying the --nystrom-n override.
pub fn load_problem(s: &Settings) -> Result<Problem, Failure> {
    let path = config_path(s)?;
    let mut cfg = ProblemConfig::from_json(&read(path)?)?;
    if let Some(n) = s.nystrom_n {
        cfg.grids.nystrom_n = n;
    }
    Ok(cfg.resolve()?)
}

fn load_data(path: &Path) -> Result<ScatteringData, Failure> {
    Ok(ScatteringData::from_json(&read(path)?)?)
}

fn data_path(s: &Settings, given: Option<&Path>) -> PathBuf {
    given.map_or_else(|| s.out.join(DATA_FILE), Path::to_path_buf)
}

fn open_out(s: &Settings, kind: CommandKind) -> Result<OutputDir, Failure> {
    let cfg = s.config.as_ref().map_or(String::new(), |p| p.display().to_string());
    OutputDir::create(&s.out, kind, &cfg)
}

fn run_validation(data: &ScatteringData, p: &Problem) -> Result<ValidationReport, Failure> {
    Ok(validate(data, Some(p), &ValidationTolerances::default())?)
}

fn validation_failure(report: &ValidationReport) -> Failure {
    let names: Vec<String> = report.failures().iter().map(|c| c.name.clone()).collect();
    Failure::Class(format!("failed checks: {}", names.join(", ")))
}

/// Direct scattering: write the scattering data and its validation report.
/// Validation failures are recorded but do not fail the command.
pub fn forward(s: &Settings) -> Result<RunManifest, Failure> {
    let p = load_problem(s)?;
    let mut out = open_out(s, CommandKind::Forward)?;
    let data = assemble_scattering_data(&p)?;
    out.write(DATA_FILE, &data.to_json())?;
    if !s.skip_validate {
        out.write(VALIDATION_FILE, &run_validation(&data, &p)?.to_json())?;
    }
    out.finish()
}

/// Check conditions A–C; exit with a class violation if any check fails.
pub fn validate_cmd(s: &Settings, data: Option<&Path>) -> Result<RunManifest, Failure> {
    let p = load_problem(s)?;
    let data = load_data(&data_path(s, data))?;
    let mut out = open_out(s, CommandKind::Validate)?;
    let report = run_validation(&data, &p)?;
    out.write(VALIDATION_FILE, &report.to_json())?;
    let manifest = out.finish()?;
    if report.overall {
        Ok(manifest)
    } else {
        Err(validation_failure(&report))
    }
}

fn reconstruct(p: &Problem, data: &ScatteringData) -> Result<(SolutionGrid, Diagnostics, KernelField), Failure> {
    let field = KernelField::new(data)?;
    let opts = MarchenkoOptions::for_field(&field, &p.config);
    let xs = p.config.grids.x_nodes.nodes();
    let ts = p.config.grids.t_nodes.nodes();
    let grid = reconstruct_grid(&field, &xs, &ts, &opts)?;
    let coarse_n = (opts.nystrom_n / 2).max(4);
    // The comparison solve only feeds the estimate; its residual is not checked.
    let coarse_opts = MarchenkoOptions {
        nystrom_n: coarse_n,
        tol_solve: f64::INFINITY,
        ..opts
    };
    let coarse = reconstruct_grid(&field, &xs, &ts, &coarse_opts)?;
    let error_estimate = grid
        .q
        .iter()
        .flatten()
        .zip(coarse.q.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let diag = Diagnostics {
        nystrom_n: opts.nystrom_n,
        span: opts.span,
        tol_solve: opts.tol_solve,
        nx: xs.len(),
        nt: ts.len(),
        max_abs_q: grid.q.iter().flatten().fold(0.0, |m, v| m.max(v.abs())),
        max_cond: grid.max_cond,
        max_residual: grid.max_residual,
        max_edge_value: grid.max_edge_value,
        max_kernel_imag: grid.max_kernel_imag,
        coarse_nystrom_n: coarse_n,
        error_estimate,
    };
    Ok((grid, diag, field))
}

fn solve_into(out: &mut OutputDir, p: &Problem, data: &ScatteringData, s: &Settings) -> Result<SolutionGrid, Failure> {
    if !s.skip_validate {
        let report = run_validation(data, p)?;
        out.write(VALIDATION_FILE, &report.to_json())?;
        if !report.overall {
            return Err(validation_failure(&report));
        }
    }
    let (grid, diag, field) = reconstruct(p, data)?;
    out.write(SOLUTION_FILE, &solution_to_csv(&grid))?;
    out.write(DIAGNOSTICS_FILE, &serde_json::to_string_pretty(&diag).expect("diagnostics serialize"))?;
    if s.emit_kernel {
        let h: Vec<Vec<f64>> = grid
            .t
            .par_iter()
            .map(|&t| grid.x.iter().map(|&x| field.h(x, t)).collect())
            .collect();
        out.write(KERNEL_FILE, &grid_to_csv("H", &grid.x, &grid.t, &h))?;
    }
    Ok(grid)
}

/// Marchenko reconstruction of q on the configured lattice.
pub fn solve(s: &Settings, data: Option<&Path>) -> Result<RunManifest, Failure> {
    let p = load_problem(s)?;
    let data = load_data(&data_path(s, data))?;
    let mut out = open_out(s, CommandKind::Solve)?;
    let result = solve_into(&mut out, &p, &data, s);
    let manifest = out.finish()?;
    result.map(|_| manifest)
}

/// Run the verification oracles against the data and a solution grid.
pub fn verify_report(
    p: &Problem,
    data: &ScatteringData,
    sol: &SolutionGrid,
    tol: &VerifyTolerances,
) -> Result<VerifyReport, Failure> {
    let mut checks = Vec::new();

    checks.push(match pde_residual(sol, p.lambda()) {
        Ok(r) => Check::at_most("pde_residual", r, tol.pde),
        Err(Error::GridTooCoarse(m)) => Check::skipped("pde_residual", &m),
        Err(e) => return Err(e.into()),
    });

    checks.push(match sol.t.first() {
        Some(&t0) if t0 == 0.0 => {
            let err = sol
                .x
                .iter()
                .zip(&sol.q[0])
                .map(|(&x, q)| (q - p.u.eval(x)).abs())
                .fold(0.0, f64::max);
            Check::at_most("initial_roundtrip", err, tol.initial)
        }
        _ => Check::skipped("initial_roundtrip", "solution has no t = 0 row"),
    });

    let field = KernelField::new(data)?;
    let opts = MarchenkoOptions::for_field(&field, &p.config);
    let ts: Vec<f64> = sol.t.iter().copied().filter(|&t| t <= p.t_end).collect();
    let names = ["boundary_roundtrip_q", "boundary_roundtrip_qx", "boundary_roundtrip_qxx"];
    if ts.is_empty() {
        checks.extend(names.iter().map(|n| Check::skipped(n, "no solution times inside the horizon")));
    } else {
        let (e0, e1, e2) = roundtrip_boundary(&field, &ts, BOUNDARY_HX, &opts, &|t| p.boundary(t))?;
        for (n, (e, t)) in names.iter().zip([e0, e1, e2].into_iter().zip(tol.boundary)) {
            checks.push(Check::at_most(n, e, t));
        }
    }

    let ks = sigma_test_points(10, 0.3, 1.8);
    if data.has_eigenvalues() {
        checks.push(Check::skipped("x_rh_jump_residual", "data carry eigenvalues"));
    } else {
        let u = |x: f64| p.u.eval(x);
        let src = JumpSource { q: &u, x_max: p.x_max };
        let xs = [0.0, 0.5 * p.x_max.min(8.0)];
        let pairs: Vec<(f64, _)> = xs.iter().flat_map(|&x| ks.iter().map(move |&k| (x, k))).collect();
        let worst = pairs
            .par_iter()
            .map(|&(x, k)| rh_jump_residual(&src, p, data, k, x, 0.0, JUMP_OFFSET).map(|j| j.residual))
            .collect::<halfline_ist::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most("x_rh_jump_residual", worst, tol.jump).note("t = 0, q = u"));
    }

    if let Horizon::Finite(t_end) = p.horizon() {
        let pairs: Vec<(f64, _)> = [0.0, 0.5 * t_end]
            .iter()
            .flat_map(|&t| ks.iter().map(move |&k| (t, k)))
            .collect();
        let worst = pairs
            .par_iter()
            .map(|&(t, k)| t_rh_jump_residual(p, k, t, JUMP_OFFSET).map(|j| j.residual))
            .collect::<halfline_ist::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most("t_rh_jump_residual", worst, tol.jump));
    } else {
        checks.push(Check::skipped("t_rh_jump_residual", "infinite horizon"));
    }
    Ok(VerifyReport::new(checks))
}

fn report_json<T: Serialize>(r: &T) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

/// Check a solution file against the data and the configured problem.
pub fn verify(
    s: &Settings,
    data: Option<&Path>,
    solution: Option<&Path>,
    tol: &VerifyTolerances,
) -> Result<RunManifest, Failure> {
    let p = load_problem(s)?;
    let data = load_data(&data_path(s, data))?;
    let sol_path = solution.map_or_else(|| s.out.join(SOLUTION_FILE), Path::to_path_buf);
    let sol = solution_from_csv(&read(&sol_path)?)?;
    let mut out = open_out(s, CommandKind::Verify)?;
    let report = verify_report(&p, &data, &sol, tol)?;
    out.write(VERIFY_FILE, &report_json(&report))?;
    let manifest = out.finish()?;
    if report.overall {
        Ok(manifest)
    } else {
        Err(Failure::Oracle(report.failure_summary()))
    }
}

/// Write a one-soliton configuration and the exact solution on its lattice.
pub fn soliton(s: &Settings, kappa: f64, x0: f64, horizon: Horizon) -> Result<RunManifest, Failure> {
    let mut cfg = ProblemConfig::soliton(kappa, x0, horizon);
    if let Some(n) = s.nystrom_n {
        cfg.grids.nystrom_n = n;
    }
    cfg.validate()?;
    let mut out = OutputDir::create(&s.out, CommandKind::Soliton, CONFIG_FILE)?;
    out.write(CONFIG_FILE, &cfg.to_json())?;
    let grid = soliton_grid(kappa, x0, 1.0, &cfg.grids.x_nodes.nodes(), &cfg.grids.t_nodes.nodes());
    out.write("q_exact.csv", &solution_to_csv(&grid))?;
    out.finish()
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub verify: VerifyReport,
    pub data_roundtrip: Vec<Check>,
    pub overall: bool,
}

/// forward → solve → verify, plus a direct-scattering pass on the
/// reconstructed q(·, 0).
pub fn roundtrip(s: &Settings, tol: &VerifyTolerances) -> Result<RunManifest, Failure> {
    let p = load_problem(s)?;
    let mut out = open_out(s, CommandKind::Roundtrip)?;
    let data = assemble_scattering_data(&p)?;
    out.write(DATA_FILE, &data.to_json())?;
    let result = (|| {
        let sol = solve_into(&mut out, &p, &data, s)?;
        let verify = verify_report(&p, &data, &sol, tol)?;
        let field = KernelField::new(&data)?;
        let opts = MarchenkoOptions::for_field(&field, &p.config);
        let rt = roundtrip_data(&data, &field, &p, &opts, 0.05, 40)?;
        let data_roundtrip = vec![
            Check::at_most("reflection_roundtrip", rt.reflection, 1e-4),
            Check::at_most("eigenvalue_roundtrip", rt.eigenvalues, 1e-5),
        ];
        let overall = verify.overall && data_roundtrip.iter().all(|c| c.passed);
        Ok(RoundtripReport {
            verify,
            data_roundtrip,
            overall,
        })
    })();
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            out.finish()?;
            return Err(e);
        }
    };
    out.write(ROUNDTRIP_FILE, &report_json(&report))?;
    let manifest = out.finish()?;
    if report.overall {
        Ok(manifest)
    } else {
        let mut failed: Vec<String> = report.verify.checks.iter().chain(&report.data_roundtrip).filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        failed.dedup();
        Err(Failure::Oracle(failed.join(", ")))
    }
}
