use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdar_cli::gen::GenTarget;
use sdar_cli::{bench, gen, plan, render, CliError, CliResult, PlannerOptions};

/// Dual-arm tabletop rearrangement planner.
#[derive(Parser)]
#[command(name = "sdar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PlannerArgs {
    /// Buffer poses sampled per buffered object.
    #[arg(long, env = "SDAR_K_BUFFERS")]
    k_buffers: Option<usize>,
    /// Minimum distance between the arms, in workspace units.
    #[arg(long, env = "SDAR_CLEARANCE")]
    clearance: Option<f64>,
    /// Sampling step as a fraction of each motion's duration.
    #[arg(long, env = "SDAR_DT")]
    dt: Option<f64>,
}

impl PlannerArgs {
    fn options(&self) -> PlannerOptions {
        PlannerOptions {
            k_buffers: self.k_buffers,
            clearance: self.clearance,
            dt: self.dt,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances: a category (R, S, D, M) or the whole default suite.
    Gen {
        /// R, S, D, M or `suite`.
        target: GenTarget,
        /// Object count (R, S, D).
        n: Option<usize>,
        /// Number of instances, with consecutive seeds.
        #[arg(long, default_value_t = 1, env = "SDAR_COUNT")]
        count: usize,
        #[arg(long, default_value_t = 0, env = "SDAR_SEED")]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "instances")]
        out: PathBuf,
    },
    /// Plan and execute one instance, writing its trace.
    Plan {
        instance: PathBuf,
        #[arg(long, default_value_t = 0, env = "SDAR_SEED")]
        seed: u64,
        /// Trace path; defaults to the instance path with a `.trace` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Plan every instance of a suite and report metrics.
    Bench {
        /// Directory of `.inst` files; the default suite is generated when omitted.
        suite: Option<PathBuf>,
        /// Planner seed, and suite seed when generating.
        #[arg(long, default_value_t = 0, env = "SDAR_SEED")]
        seed: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0, env = "SDAR_JOBS")]
        jobs: usize,
        /// Report directory.
        #[arg(long, default_value = "bench-report")]
        out: PathBuf,
        /// Skip writing per-instance traces.
        #[arg(long)]
        no_traces: bool,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Render an instance (scenes and dependency graph) or a trace (frames).
    Render {
        input: PathBuf,
        #[arg(long, default_value = "render")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen { target, n, count, seed, out } => {
            let entries = gen::entries(target, n, count, seed)?;
            let instances = gen::generate(&entries)?;
            let paths = gen::write_all(&instances, &out)?;
            print!("{}", gen::manifest(&instances, &paths));
            Ok(())
        }
        Command::Plan { instance, seed, out, planner } => {
            let trace = out.unwrap_or_else(|| plan::default_trace_path(&instance));
            let outcome = plan::plan_file(&instance, seed, &planner.options(), Some(&trace))?;
            print!("{}", outcome.summary());
            outcome.failure().map_or(Ok(()), Err)
        }
        Command::Bench { suite, seed, jobs, out, no_traces, planner } => {
            let instances = match suite {
                Some(dir) => bench::load_suite_dir(&dir)?,
                None => {
                    let entries = gen::entries(GenTarget::Suite, None, 1, seed)?;
                    gen::generate(&entries)?
                }
            };
            let report = bench::run_bench(&instances, seed, &planner.options(), jobs)?;
            report.write(&out, !no_traces)?;
            print!("{}", report.summary_table());
            println!("report written to {}", out.display());
            if report.all_succeeded() {
                Ok(())
            } else {
                let failed = report.rows.iter().filter(|r| !(r.success && r.verified)).count();
                Err(CliError::Planning(format!("{failed} instance(s) failed")))
            }
        }
        Command::Render { input, out } => {
            for p in render::render_path(&input, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
