mod commands;
mod parse;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use flatcauchy::io::SCHEMA_VERSION;
use flatcauchy::verify::VerifyConfig;
use flatcauchy::C64;
use serde_json::json;

use commands::{Env, InputError};
use report::{InputHash, Report};

#[derive(Parser)]
#[command(name = "flatcauchy", version, about = "Cauchy kernels, Fay identities and zero-pole interpolation")]
struct Cli {
    /// Seed for randomized sweeps; overrides the seed in a problem file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample count for sweeps in place of the per-check defaults.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Multiplies every residual tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Tolerance override for one named check, as NAME=VALUE.
    #[arg(long = "tol", global = true, value_parser = parse::tolerance)]
    tolerances: Vec<(String, f64)>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate θ(z|Ω) or θ[a;b](z|Ω), optionally with its gradient.
    Theta {
        /// Period matrix entries, row-major and comma separated.
        #[arg(long, required = true, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        omega: Vec<C64>,
        #[arg(long, required = true, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<C64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        #[arg(long)]
        gradient: bool,
    },
    /// Solve a genus-0 interpolation problem and evaluate the result.
    SolveGenus0 {
        problem: PathBuf,
        /// Extra evaluation points.
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        at: Vec<C64>,
    },
    /// Solve a scalar problem on a torus in product and partial-fraction form.
    SolveLine {
        problem: PathBuf,
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        at: Vec<C64>,
    },
    /// Randomized Fay trisecant sweep.
    FayCheck {
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
    },
    /// Randomized matrix Fay sweep at genus 0 and on tori.
    MatrixFay {
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
    },
    /// Residue, duality, connection and collection checks for line-bundle kernels.
    KernelCheck {
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
    },
    /// Build a determinantal representation and sweep its identities.
    Detrep {
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
        /// Summand characteristic `a,b`; repeat for a direct sum.
        #[arg(long = "line", value_parser = parse::pair, allow_hyphen_values = true)]
        lines: Vec<(f64, f64)>,
        /// Write the pencil to this file.
        #[arg(long)]
        pencil_out: Option<PathBuf>,
    },
    /// Solve a concrete interpolation problem on a plane cubic.
    Conint {
        problem: Option<PathBuf>,
        /// Derive the concrete problem from an abstract torus problem and compare the two.
        #[arg(long)]
        from_absint: Option<PathBuf>,
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
    },
    /// Run the acceptance criteria.
    VerifyAll {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[arg(long, value_parser = parse::complex, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<C64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Theta { .. } => "theta",
            Command::SolveGenus0 { .. } => "solve-genus0",
            Command::SolveLine { .. } => "solve-line",
            Command::FayCheck { .. } => "fay-check",
            Command::MatrixFay { .. } => "matrix-fay",
            Command::KernelCheck { .. } => "kernel-check",
            Command::Detrep { .. } => "detrep",
            Command::Conint { .. } => "conint",
            Command::VerifyAll { .. } => "verify-all",
        }
    }

    fn taus(&self) -> Option<&[C64]> {
        match self {
            Command::FayCheck { tau }
            | Command::MatrixFay { tau }
            | Command::KernelCheck { tau }
            | Command::Detrep { tau, .. }
            | Command::Conint { tau, .. }
            | Command::VerifyAll { tau, .. } => Some(tau.as_slice()).filter(|t| !t.is_empty()),
            _ => None,
        }
    }
}

fn run(cli: &Cli, env: &mut Env) -> Result<report::Outcome, InputError> {
    let seed_flag = cli.seed.is_some();
    match &cli.command {
        Command::Theta { omega, z, a, b, gradient } => {
            commands::theta(omega, z, a.as_deref(), b.as_deref(), *gradient)
        }
        Command::SolveGenus0 { problem, at } => commands::solve_genus0_cmd(env, problem, at, seed_flag),
        Command::SolveLine { problem, at } => commands::solve_line(env, problem, at, seed_flag),
        Command::FayCheck { .. } => Ok(commands::fay_check(env)),
        Command::MatrixFay { .. } => Ok(commands::matrix_fay(env)),
        Command::KernelCheck { .. } => Ok(commands::kernel_check(env)),
        Command::Detrep { lines, pencil_out, .. } => commands::detrep(env, lines, pencil_out.as_ref()),
        Command::Conint { problem, from_absint, .. } => {
            commands::conint(env, problem.as_deref(), from_absint.as_deref(), seed_flag)
        }
        Command::VerifyAll { only, .. } => commands::verify_all(env, only),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let mut cfg = VerifyConfig { tol_scale: cli.tol_scale, samples: cli.samples, ..Default::default() };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.tolerances.extend(cli.tolerances.iter().cloned());
    cfg.taus = cli.command.taus().map(<[C64]>::to_vec);
    let mut env = Env { cfg, hash: InputHash::new(&args[1..]) };
    let outcome = match run(&cli, &mut env) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind, e.message);
            let diag = json!({
                "command": cli.command.name(),
                "schema": SCHEMA_VERSION,
                "error": { "kind": e.kind, "message": e.message },
            });
            let _ = report::write(&diag, cli.out.as_deref());
            return ExitCode::from(2);
        }
    };
    let pass = outcome.pass();
    let report = Report {
        command: cli.command.name().to_string(),
        schema: SCHEMA_VERSION,
        seed: env.cfg.seed,
        input_sha256: env.hash.hex(),
        pass,
        seconds: start.elapsed().as_secs_f64(),
        checks: outcome.checks,
        criteria: outcome.criteria,
        result: outcome.result,
    };
    if let Err(e) = report::write(&report, cli.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if !pass {
        for c in report.checks.iter().chain(report.criteria.iter().flat_map(|r| &r.checks)).filter(|c| !c.pass) {
            eprintln!("failed: {} (residual {:.3e}, tolerance {:.1e})", c.name, c.residual, c.tolerance);
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
