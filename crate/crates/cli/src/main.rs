use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weingarten_cli::{
    exit, load_config, resolve_output_dir, run_export, run_geometry, run_selftest, run_solve, run_validate, CliError,
};

/// Star-shaped hypersurfaces with prescribed Hessian-quotient curvature.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve by continuation from the unit sphere and write results.
    Solve {
        config: PathBuf,
        /// Output directory (overrides WEINGARTEN_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the structural checks on f.
        #[arg(long)]
        skip_validation: bool,
    },
    /// Check the barrier and monotonicity conditions on f.
    Validate { config: PathBuf },
    /// Run the built-in property suites.
    Selftest { config: Option<PathBuf> },
    /// Write mesh.obj for a stored rho.csv.
    Export {
        config: PathBuf,
        rho: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print bounds and monitor verdicts for a stored rho.csv.
    Geometry { config: PathBuf, rho: PathBuf },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { config, out, skip_validation } => {
            let mut cfg = load_config(&config)?;
            cfg.validation.override_checks |= skip_validation;
            let dir = resolve_output_dir(&cfg, out.as_deref());
            let report = run_solve(&cfg, &dir)?;
            let last = report.trace.steps.last().expect("t = 1 recorded");
            println!(
                "converged: t = {}, {} steps, residual {:.3e}, rho in [{:.6}, {:.6}]",
                last.t,
                report.trace.steps.len(),
                report.residual_sup,
                report.bounds.rho_min,
                report.bounds.rho_max
            );
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(exit::OK)
        }
        Command::Validate { config } => {
            let report = run_validate(&load_config(&config)?)?;
            print!("{report}");
            Ok(if report.all_pass() { exit::OK } else { exit::VALIDATION })
        }
        Command::Selftest { config } => {
            let cfg = config.as_deref().map(load_config).transpose()?;
            let results = run_selftest(cfg.as_ref())?;
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {:<24} {:>7.2}s  {}", r.name, r.seconds, r.detail);
            }
            if failed > 0 {
                return Err(CliError::SelfTest { failed });
            }
            Ok(exit::OK)
        }
        Command::Export { config, rho, out } => {
            let cfg = load_config(&config)?;
            let dir = resolve_output_dir(&cfg, out.as_deref());
            println!("wrote {}", run_export(&cfg, &rho, &dir)?.display());
            Ok(exit::OK)
        }
        Command::Geometry { config, rho } => {
            let cfg = load_config(&config)?;
            let (b, c0, positive) = run_geometry(&cfg, &rho)?;
            println!("rho_min = {}\nrho_max = {}\nu_min = {}", b.rho_min, b.rho_max, b.u_min);
            println!("grad_sup = {}\nkappa_sup = {}", b.grad_sup, b.kappa_sup);
            println!("cone_margin_min = {}\neta_min = {}", b.cone_margin_min, b.eta_min);
            println!("c0 = {} (margins {:e}, {:e})", verdict(c0.pass), c0.lower_margin, c0.upper_margin);
            println!("positivity = {}", verdict(positive));
            Ok(exit::OK)
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
