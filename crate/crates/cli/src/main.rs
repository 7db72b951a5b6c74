use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frs_equity::output::{format_report, read_steps, read_summary, write_trajectory};
use frs_equity::plot::{render_svg, Series};
use frs_equity::{load_scenario, run, RoadId, Scenario};

/// Equitable free ride-sharing car distribution on a road network.
#[derive(Parser)]
#[command(name = "frs-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print findings.
    Validate { scenario: PathBuf },
    /// Simulate a scenario and write steps.csv and summary.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the horizon.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a finished run.
    Report { dir: PathBuf },
    /// Render one series of a finished run as SVG.
    Plot {
        dir: PathBuf,
        #[arg(long)]
        series: Series,
        /// Comma-separated road ids; all roads when omitted.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        roads: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_INVALID: u8 = 2;

enum Failure {
    Runtime(String),
    Invalid(String),
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| {
        Failure::Invalid(serde_json::to_string(&e.finding()).expect("finding serializes"))
    })
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { scenario } => {
            load(&scenario)?;
            println!("OK");
        }
        Command::Run {
            scenario,
            out,
            steps,
            seed,
        } => {
            let mut s = load(&scenario)?;
            if let Some(k) = steps {
                s.horizon = k;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let traj = run(&s).map_err(|e| Failure::Runtime(e.to_string()))?;
            let summary =
                write_trajectory(&traj, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!(
                "min x_hat {}  tiers {:?}  violations upper {} floor {} (after tier-0 {})",
                summary.min_xhat,
                summary.tier_histogram,
                summary.violation_counts.upper,
                summary.violation_counts.floor,
                summary.violation_counts.floor_after_full_tier
            );
        }
        Command::Report { dir } => {
            let summary = read_summary(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("{}", format_report(&summary));
        }
        Command::Plot {
            dir,
            series,
            roads,
            out,
        } => {
            let rows = read_steps(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            let roads: Option<Vec<RoadId>> = roads.map(|r| r.into_iter().map(RoadId).collect());
            let chart = render_svg(&rows, roads.as_deref(), series)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            fs::write(&out, chart.svg)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Invalid(msg)) => {
            println!("{msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
