use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use dwellflee_cli::commands::{self, BoundsArgs, CmdError, LyapunovArgs, Outcome, SimulateArgs};
use dwellflee_cli::regress;
use dwellflee_cli::report::{self, AnalysisReport};

/// Dwell-time and flee-time analysis of switched linear systems with resets
/// or impulses.
#[derive(Parser)]
#[command(name = "dwellflee", version)]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Run data-parallel work on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dwell and flee times from closed-form flow bounds.
    Bounds {
        #[arg(long)]
        input: PathBuf,
        /// Per-mode dwell and flee times.
        #[arg(long)]
        mode_dependent: bool,
        /// `spectral` or `ellipsoidal:<path>` (TOML file with a `weight` matrix).
        #[arg(long)]
        norm: Option<String>,
        /// Rescale the Jordan bases first: `epsilon` or `epsilon:xi`.
        #[arg(long)]
        rescale: Option<String>,
        /// Also run this many randomized simulations at the computed bounds.
        #[arg(long)]
        probe: Option<usize>,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Multiple-Lyapunov-function certificates via LMI feasibility.
    Lyapunov {
        #[arg(long)]
        input: PathBuf,
        /// reset-dwell, impulse-dwell, geromel-colaneri, hespanha-morse or mixed-rate.
        #[arg(long)]
        template: Option<String>,
        /// Bisection range `lo:hi` for the dwell templates.
        #[arg(long)]
        tau_range: Option<String>,
        /// Check fixed per-mode dwell times instead: `mode=tau,...`.
        #[arg(long)]
        tau_map: Option<String>,
        /// Rates `lambda,mu,gamma` for the mixed-rate template.
        #[arg(long)]
        rate: Option<String>,
        /// Bisection tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        norm: Option<String>,
    },
    /// Simulate one trajectory and write it as CSV.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// CSV destination.
        #[arg(long)]
        output: PathBuf,
        /// `periodic` or `random`.
        #[arg(long, default_value = "periodic")]
        signal: String,
        /// Mode cycle for periodic signals, comma separated.
        #[arg(long)]
        modes: Option<String>,
        /// Interval lengths for periodic signals, used cyclically.
        #[arg(long)]
        durations: Option<String>,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        /// Initial state, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Sampling step; defaults to a twentieth of the shortest interval.
        #[arg(long)]
        step: Option<f64>,
        /// Apply the k-th listed impulse matrix (1-based) at every switch.
        #[arg(long)]
        impulse: Option<usize>,
        /// Dwell time for random signals (default: flow bound).
        #[arg(long)]
        dwell: Option<f64>,
        /// Flee time for random signals (default: flow bound).
        #[arg(long)]
        flee: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        norm: Option<String>,
    },
    /// Partition the graph by source stability and test the unstable part for cycles.
    GraphCheck {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the bundled reference systems against their recorded values.
    Regress {
        /// Directory of documents to use instead of the bundled set.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Override every value tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn run(cli: &Cli) -> Result<Outcome, CmdError> {
    match &cli.command {
        Command::Bounds {
            input,
            mode_dependent,
            norm,
            rescale,
            probe,
            horizon,
            seed,
        } => commands::bounds(&BoundsArgs {
            input,
            mode_dependent: *mode_dependent,
            norm: norm.as_deref(),
            rescale: rescale.as_deref(),
            probe: *probe,
            horizon: *horizon,
            seed: *seed,
            sequential: cli.sequential,
        }),
        Command::Lyapunov {
            input,
            template,
            tau_range,
            tau_map,
            rate,
            tolerance,
            norm,
        } => commands::lyapunov(&LyapunovArgs {
            input,
            template: template.as_deref(),
            tau_range: tau_range.as_deref(),
            tau_map: tau_map.as_deref(),
            rate: rate.as_deref(),
            tolerance: *tolerance,
            norm: norm.as_deref(),
            sequential: cli.sequential,
        }),
        Command::Simulate {
            input,
            output,
            signal,
            modes,
            durations,
            horizon,
            x0,
            step,
            impulse,
            dwell,
            flee,
            seed,
            norm,
        } => commands::simulate_cmd(&SimulateArgs {
            input,
            output,
            signal,
            modes: modes.as_deref(),
            durations: durations.as_deref(),
            horizon: *horizon,
            x0,
            step: *step,
            impulse: *impulse,
            dwell: *dwell,
            flee: *flee,
            seed: *seed,
            norm: norm.as_deref(),
        }),
        Command::GraphCheck { input } => commands::graph_check(input),
        Command::Regress { input, tolerance } => {
            let inputs = commands::regress_inputs(input.as_deref())?;
            let results = regress::run(&inputs, *tolerance);
            for r in &results {
                eprintln!("{}", r.line());
            }
            let ok = results.iter().all(|r| r.pass);
            let passed = results.iter().filter(|r| r.pass).count();
            let source = input.clone().unwrap_or_else(|| PathBuf::from("<bundled>"));
            let mut report = AnalysisReport::new(
                "regress",
                &source,
                "bundled reference checks",
                json!({ "passed": passed, "total": results.len(), "results": results }),
            );
            if input.is_none() {
                let all: String = regress::SUITE.iter().map(|(_, t)| *t).collect();
                report.digest = report::digest_bytes(all.as_bytes());
            }
            Ok(Outcome { report, ok })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = outcome.report.emit(cli.report.as_deref()) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
