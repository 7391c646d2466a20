use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use morph_cli::{
    brute_cap_from_env, load_error_report, render_report, run, Command, Format, PrioritySource, RunConfig, EXIT_ERROR,
};
use morph_core::{parse_model, McpMethod, QualityMode, Strategy, SynthesisConfig, Thresholds};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mcp {
    Greedy,
    Exact,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Aggregation {
    Extend,
    Compress,
    Median,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Quality {
    Units,
    Leaves,
}

/// Hierarchical morphological design: rank, synthesize, aggregate.
#[derive(Debug, Parser)]
#[command(name = "morph", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Model file.
    model: PathBuf,
    /// Knapsack budget; repeat for several. Defaults to the model file's budgets.
    #[arg(long = "budget", value_name = "B")]
    budgets: Vec<f64>,
    #[arg(long, value_enum, default_value = "greedy")]
    mcp: Mcp,
    #[arg(long, value_enum, default_value = "extend")]
    strategy: Aggregation,
    #[arg(long, value_enum, default_value = "file")]
    priorities: PrioritySource,
    /// Concordance threshold.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Discordance threshold (1 disables the test).
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Pareto layers promoted from each composite node.
    #[arg(long, default_value_t = 1)]
    propagate_layers: usize,
    /// How composite nodes count their parts.
    #[arg(long, value_enum, default_value = "units")]
    quality: Quality,
    /// Bound compression by the number of deleted DAs instead of their cost.
    #[arg(long, value_name = "N")]
    max_deletions: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock stage timings in the report.
    #[arg(long)]
    timing: bool,
}

fn fail(msg: impl AsRef<str>) -> ExitCode {
    eprint!("{}", msg.as_ref());
    ExitCode::from(EXIT_ERROR as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let thresholds = match Thresholds::new(args.p, args.q) {
        Ok(t) => t,
        Err(e) => return fail(format!("error {}: {e}\n", e.code())),
    };
    if args.propagate_layers == 0 {
        return fail("error INVALID_INPUT: --propagate-layers must be at least 1\n");
    }
    let brute_cap = match brute_cap_from_env() {
        Ok(c) => c,
        Err(e) => return fail(format!("error INVALID_INPUT: {e}\n")),
    };
    let ds = match parse_model(&args.model) {
        Ok(ds) => ds,
        Err(e) => return fail(load_error_report(&e)),
    };
    let cfg = RunConfig {
        command: args.command,
        budgets: args.budgets,
        mcp: match args.mcp {
            Mcp::Greedy => McpMethod::Greedy,
            Mcp::Exact => McpMethod::Exact,
        },
        strategy: match args.strategy {
            Aggregation::Extend => Strategy::Extend,
            Aggregation::Compress => Strategy::Compress,
            Aggregation::Median => Strategy::Median,
        },
        priorities: args.priorities,
        thresholds,
        synthesis: SynthesisConfig {
            propagate_layers: args.propagate_layers,
            quality_mode: match args.quality {
                Quality::Units => QualityMode::Units,
                Quality::Leaves => QualityMode::Leaves,
            },
        },
        max_deletions: args.max_deletions,
        brute_cap,
        timing: args.timing,
    };
    let outcome = run(&ds, &cfg);
    let rendered = render_report(&outcome.report, args.format);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                return fail(format!("error INVALID_INPUT: cannot write {}: {e}\n", path.display()));
            }
        }
        None => print!("{rendered}"),
    }
    if let Some(e) = &outcome.report.error {
        eprintln!("error {}: {}", e.code, e.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
