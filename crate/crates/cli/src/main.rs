mod commands;
mod io;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use matfix_core::{Case, Execution, Mode};
use serde_json::json;

use commands::{classify, CondOptions, SolveOptions, Status};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "matfix", version, about = "Solve and certify X - sum A_i^* X^-1 A_i = Q")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Absolute,
    Relative,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Absolute => Mode::Absolute,
            ModeArg::Relative => Mode::Relative,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Complex,
    Real,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Complex => Case::Complex,
            CaseArg::Real => Case::Real,
        }
    }
}

#[derive(Args, Clone)]
struct SolveFlags {
    /// Residual tolerance in the spectral norm.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Starting matrix: q, identity, scale:<c> or file:<path>.
    #[arg(long, default_value = "q")]
    x0: String,
    /// Run on raw matrices without Hermitian or definiteness checks.
    #[arg(long)]
    allow_nonhermitian: bool,
}

impl SolveFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            x0: self.x0.clone(),
            allow_nonhermitian: self.allow_nonhermitian,
        }
    }
}

#[derive(Args, Clone)]
struct SeedFlag {
    /// Random seed. MATFIX_SEED overrides the default.
    #[arg(long, env = "MATFIX_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equation and check the a priori intervals.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        solve: SolveFlags,
    },
    /// Scalar bounds and matrix intervals without solving.
    Bounds { input: PathBuf },
    /// Perturbation bounds, feasibility conditions, condition numbers and
    /// the first-order change for a perturbation file.
    Analyze {
        input: PathBuf,
        delta: PathBuf,
        #[command(flatten)]
        solve: SolveFlags,
        #[arg(long, value_enum, default_value_t = ModeArg::Relative)]
        mode: ModeArg,
    },
    /// Error bound for an approximate solution read from a matrix file.
    Backward { input: PathBuf, approx: PathBuf },
    /// Condition number of the solution.
    Cond {
        input: PathBuf,
        #[command(flatten)]
        solve: SolveFlags,
        #[arg(long, value_enum, default_value_t = ModeArg::Relative)]
        mode: ModeArg,
        #[arg(long = "case", value_enum, default_value_t = CaseArg::Complex)]
        case: CaseArg,
        /// Also estimate the condition number from this many perturbed solves.
        #[arg(long, default_value_t = 0)]
        oracle_trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[command(flatten)]
        seed: SeedFlag,
    },
    /// Regenerate the tables of one of the four worked examples.
    Reproduce {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        example: u8,
        #[command(flatten)]
        seed: SeedFlag,
        /// Random runs in the perturbation ensemble.
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// Run the ensemble on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Write the example instances as JSON files into a directory.
    WriteFixtures { dir: PathBuf },
}

fn settings_echo(cmd: &Command) -> serde_json::Value {
    match cmd {
        Command::Solve { solve, .. } => json!({ "solve": solve.options() }),
        Command::Analyze { solve, mode, .. } => json!({ "solve": solve.options(), "mode": format!("{mode:?}").to_lowercase() }),
        Command::Cond { solve, mode, case, oracle_trials, step, seed, .. } => json!({
            "solve": solve.options(),
            "mode": format!("{mode:?}").to_lowercase(),
            "case": format!("{case:?}").to_lowercase(),
            "oracle_trials": oracle_trials,
            "step": step,
            "seed": seed.seed,
        }),
        Command::Reproduce { seed, runs, sequential, .. } => json!({ "seed": seed.seed, "runs": runs, "sequential": sequential }),
        Command::Bounds { .. } | Command::Backward { .. } | Command::WriteFixtures { .. } => json!({}),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match &cli.command {
        Command::Solve { input, solve } => commands::cmd_solve(input, &solve.options()),
        Command::Bounds { input } => commands::cmd_bounds(input),
        Command::Analyze { input, delta, solve, mode } => {
            commands::cmd_analyze(input, delta, &solve.options(), (*mode).into())
        }
        Command::Backward { input, approx } => commands::cmd_backward(input, approx),
        Command::Cond { input, solve, mode, case, oracle_trials, step, seed } => commands::cmd_cond(
            input,
            &solve.options(),
            &CondOptions {
                mode: (*mode).into(),
                case: (*case).into(),
                oracle_trials: *oracle_trials,
                step: *step,
                seed: seed.seed,
            },
        ),
        Command::Reproduce { example, seed, runs, sequential } => commands::cmd_reproduce(
            *example,
            seed.seed,
            *runs,
            if *sequential { Execution::Sequential } else { Execution::Parallel },
        ),
        Command::WriteFixtures { dir } => {
            return match commands::write_fixtures(dir) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(Status::Invalid as u8)
                }
            };
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let (status, report, text) = match result {
        Ok(out) => (out.status, out.report, out.text),
        Err(e) => {
            let status = classify(&e);
            let msg = format!("{e:#}");
            eprintln!("error: {msg}");
            (status, json!({ "error": msg }), String::new())
        }
    };
    match cli.format {
        Format::Text => print!("{text}"),
        Format::Structured => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": argv,
                "settings": settings_echo(&cli.command),
                "format": cli.format,
                "exit_code": status as u8,
                "wall_clock_seconds": elapsed,
                "report": report,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
        }
    }
    ExitCode::from(status as u8)
}
