//! `halfline-ist`: direct scattering, validation, Marchenko reconstruction
//! and verification for the mKdV equation on the half-line.

mod commands;
mod failure;
mod manifest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use halfline_ist::Horizon;

use commands::{Settings, VerifyTolerances};
use failure::{Failure, EXIT_FAILURE};

#[derive(Parser, Debug)]
#[command(name = "halfline-ist", version, about = "Half-line mKdV inverse scattering toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Problem configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Do not check conditions A–C before solving.
    #[arg(long, global = true)]
    skip_validate: bool,
    /// Override the Gauss–Legendre nodes per Nyström panel.
    #[arg(long, global = true)]
    nystrom_n: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HALFLINE_IST_THREADS")]
    threads: Option<usize>,
    /// Also write the kernel H(x, t) on the solution lattice.
    #[arg(long, global = true)]
    emit_kernel: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct ToleranceArgs {
    /// Tolerance of the finite-difference PDE residual.
    #[arg(long, default_value_t = VerifyTolerances::default().pde)]
    pde_tol: f64,
    /// Tolerance of the RH jump residuals.
    #[arg(long, default_value_t = VerifyTolerances::default().jump)]
    jump_tol: f64,
}

impl ToleranceArgs {
    fn tolerances(self) -> VerifyTolerances {
        VerifyTolerances {
            pde: self.pde_tol,
            jump: self.jump_tol,
            ..VerifyTolerances::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute scattering data from the initial and boundary functions.
    Forward,
    /// Check scattering data against conditions A–C.
    Validate {
        /// Scattering data (defaults to <out>/scattering_data.json).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Reconstruct q(x, t) on the configured lattice.
    Solve {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the verification oracles on a solution grid.
    Verify {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Solution CSV (defaults to <out>/q_grid.csv).
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Write a one-soliton configuration and its exact solution.
    Soliton {
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        x0: f64,
        /// Time horizon: a positive number or "inf".
        #[arg(long, default_value = "inf", value_parser = parse_horizon)]
        horizon: Horizon,
    },
    /// forward, solve and verify in one run, plus a data round trip.
    Roundtrip {
        #[command(flatten)]
        tol: ToleranceArgs,
    },
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    match s {
        "inf" | "infinity" => Ok(Horizon::Infinite),
        _ => match s.parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Horizon::Finite(t)),
            _ => Err(format!("expected a positive number or \"inf\", got {s:?}")),
        },
    }
}

fn run(cli: &Cli) -> Result<manifest::RunManifest, Failure> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    }
    let s = Settings {
        config: g.config.clone(),
        out: g.out.clone(),
        skip_validate: g.skip_validate,
        nystrom_n: g.nystrom_n,
        emit_kernel: g.emit_kernel,
    };
    match &cli.command {
        Command::Forward => commands::forward(&s),
        Command::Validate { data } => commands::validate_cmd(&s, data.as_deref()),
        Command::Solve { data } => commands::solve(&s, data.as_deref()),
        Command::Verify { data, solution, tol } => {
            commands::verify(&s, data.as_deref(), solution.as_deref(), &tol.tolerances())
        }
        Command::Soliton { kappa, x0, horizon } => commands::soliton(&s, *kappa, *x0, *horizon),
        Command::Roundtrip { tol } => commands::roundtrip(&s, &tol.tolerances()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            for f in &m.emitted {
                println!("{}  {}", f.sha256, f.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            if fs::create_dir_all(&cli.global.out).is_ok() {
                let _ = fs::write(cli.global.out.join("error.json"), e.diagnostic_json());
            }
            ExitCode::from(if code == 0 { EXIT_FAILURE } else { code })
        }
    }
}
