use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symcone_bench::instance::{parse, serialize};
use symcone_bench::{
    gen, read_file, run, sweep, to_csv, verify, write_file, BenchError, Instance, Problem, Report, RunConfig, SesDist,
    SweepSpec, Threads, VerifyOptions, MEAN_HEADER, SWEEP_HEADER,
};

#[derive(Parser)]
#[command(
    name = "symcone",
    version,
    about = "Enclosing-sphere and hard-margin SVM solvers by symmetric-cone multiplicative weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a smallest-enclosing-sphere instance.
    GenSes {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SesDist::Gaussian)]
        dist: SesDist,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate a separable two-cluster SVM instance.
    GenSvm {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Solve an instance file and write a report.
    Run {
        instance: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Check a report against the baseline solvers.
    Verify {
        instance: String,
        report: String,
        /// Largest acceptable error.
        #[arg(long, default_value_t = 0.01)]
        bound: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps_base: f64,
        #[arg(long, default_value_t = 1e-6)]
        gap_tol: f64,
    },
    /// Run a size/dimension grid and write per-run and mean CSV files.
    Sweep {
        #[arg(long, value_enum)]
        problem: Problem,
        /// Comma-separated total point counts.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sizes: Vec<usize>,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = SesDist::Gaussian)]
        dist: SesDist,
        /// SVM cluster gap.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Skip the baseline for larger instances.
        #[arg(long, default_value_t = 16_384)]
        baseline_max_n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output directory.
        #[arg(long)]
        out: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Relative change below which a progress step counts as stalled.
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    /// Consecutive stalled steps that end a test.
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `auto` or a worker count.
    #[arg(long, default_value = "auto")]
    threads: Threads,
    /// Per-test iteration cap below the theoretical bound.
    #[arg(long)]
    cap_iterations: Option<u64>,
    /// Run every test to a certified verdict or its full bound.
    #[arg(long)]
    no_early_stop: bool,
    /// Step-size horizon while early stopping is on.
    #[arg(long, default_value_t = 30)]
    horizon: u64,
    /// Iterations before a stall may end a test.
    #[arg(long, default_value_t = 10_000)]
    warmup: u64,
    /// Fraction of eps by which progress must beat a level before a test
    /// ends affirmatively under early stopping.
    #[arg(long, default_value_t = 0.5)]
    overshoot: f64,
}

impl SolverArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            eps: self.eps,
            delta: self.delta,
            patience: self.patience,
            seed: self.seed,
            threads: self.threads,
            iteration_cap: self.cap_iterations,
            early_stop: !self.no_early_stop,
            horizon: self.horizon,
            warmup: self.warmup,
            overshoot: self.overshoot,
        }
    }
}

fn emit(out: Option<&str>, text: &str) -> Result<(), BenchError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &str) -> Result<Instance, BenchError> {
    parse(&read_file(path)?)
}

fn format_rows<T: serde::Serialize>(format: Format, header: &[&str], rows: &[T]) -> Result<String, BenchError> {
    match format {
        Format::Csv => to_csv(header, rows),
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::GenSes { n, d, seed, dist, out } => {
            let inst = Instance::Ses(gen::ses(n, d, seed, dist)?);
            let note = format!("generated: dist={} seed={seed}", dist.to_possible_value().unwrap().get_name());
            emit(out.as_deref(), &serialize(&inst, &[note]))
        }
        Command::GenSvm { n1, n2, d, seed, gap, out } => {
            let (inst, dir) = gen::svm(n1, n2, d, seed, gap)?;
            let dir: Vec<String> = dir.iter().map(|x| format!("{x:.16e}")).collect();
            let notes = [format!("generated: gap={gap} seed={seed}"), format!("direction {}", dir.join(" "))];
            emit(out.as_deref(), &serialize(&Instance::Svm(inst), &notes))
        }
        Command::Run { instance, solver, format, out } => {
            let inst = load(&instance)?;
            let report = run(&inst, &solver.config())?;
            let text = match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv()?,
            };
            emit(out.as_deref(), &text)
        }
        Command::Verify { instance, report, bound, eps_base, gap_tol } => {
            let inst = load(&instance)?;
            let report = Report::from_json(&read_file(&report)?)?;
            let opts = VerifyOptions { bound, eps_base, gap_tol, ..VerifyOptions::default() };
            let v = verify(&inst, &report, &opts)?;
            let verdict = if v.pass { "PASS" } else { "FAIL" };
            println!(
                "baseline {:.12e} value {:.12e} error {:.6e} bound {bound} {verdict}",
                v.baseline, report.value_dual, v.error
            );
            if !v.baseline_converged {
                eprintln!("warning: baseline stopped at its iteration cap");
            }
            if v.pass {
                Ok(())
            } else {
                Err(BenchError::VerifyFailed)
            }
        }
        Command::Sweep { problem, sizes, dims, reps, dist, gap, baseline_max_n, solver, format, out } => {
            let spec = SweepSpec { problem, sizes, dims, reps, seed: solver.seed, dist, gap, baseline_max_n };
            let (rows, means) = sweep(&spec, &solver.config(), &VerifyOptions::default());
            std::fs::create_dir_all(&out).map_err(|source| BenchError::Io { path: out.clone(), source })?;
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let dir = Path::new(&out);
            let path = |name: &str| dir.join(format!("{name}.{ext}")).to_string_lossy().into_owned();
            write_file(&path("sweep"), &format_rows(format, &SWEEP_HEADER, &rows)?)?;
            write_file(&path("means"), &format_rows(format, &MEAN_HEADER, &means)?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
