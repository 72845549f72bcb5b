//! Command-line front end for the mission simulator: single runs, batch
//! sweeps, and replay verification.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mission_core::harness::{self, SweepSpec};
use mission_core::sim::{run_mission, ScenarioConfig, Strategy};

#[derive(Parser)]
#[command(name = "mission", about = "Time-budgeted multi-agent search-and-delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single mission and print its report.
    Run(RunArgs),
    /// Run a batch sweep over strategies, time limits, and seeds.
    Sweep(SweepArgs),
    /// Verify a recorded event log and print its summary.
    Replay { log: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (flat key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mission seed.
    #[arg(long)]
    seed: u64,
    /// Strategy: proposed | random | cover-first | cover-pickup.
    #[arg(long)]
    strategy: String,
    /// Mission time limit in seconds.
    #[arg(long)]
    t0: f64,
    /// Inject a crash, as agent@time. Repeatable.
    #[arg(long = "crash")]
    crashes: Vec<String>,
    /// Write the event log here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print the event log to stdout.
    #[arg(long)]
    print_log: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario configuration file applied to every mission.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated time limits; default 100,200,...,900.
    #[arg(long)]
    t0_list: Option<String>,
    /// Trials per (strategy, t0).
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Comma-separated strategies, or "all".
    #[arg(long, default_value = "all")]
    strategies: String,
    /// Seed of the first trial; trial k uses base_seed + k.
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    /// Parallel workers.
    #[arg(long, default_value_t = 2)]
    jobs: usize,
    /// Output CSV path; aggregates go next to it with an `agg` suffix.
    #[arg(long, default_value = "scores.csv")]
    out: PathBuf,
    /// Directory to write every mission's event log into.
    #[arg(long)]
    log_dir: Option<PathBuf>,
}

fn fail_config(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn base_config(path: &Option<PathBuf>) -> Result<ScenarioConfig, ExitCode> {
    match path {
        Some(path) => harness::load_config(path).map_err(fail_config),
        None => Ok(ScenarioConfig::default()),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let mut cfg = match base_config(&args.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    cfg.seed = args.seed;
    cfg.t0 = args.t0;
    cfg.strategy = match Strategy::parse(&args.strategy) {
        Ok(s) => s,
        Err(e) => return fail_config(e),
    };
    for crash in &args.crashes {
        let Some((agent, time)) = crash.split_once('@') else {
            return fail_config(format!("crash '{crash}' is not agent@time"));
        };
        let (Ok(agent), Ok(time)) = (agent.parse::<u32>(), time.parse::<f64>()) else {
            return fail_config(format!("crash '{crash}' is not agent@time"));
        };
        if let Err(e) = cfg.inject_crash(agent, time) {
            return fail_config(e);
        }
    }
    let report = match run_mission(&cfg) {
        Ok(report) => report,
        Err(e) => return fail_config(e),
    };
    if let Some(out) = &args.out {
        if let Err(e) = std::fs::write(out, report.log_text()) {
            return fail_config(format!("writing {}: {e}", out.display()));
        }
    }
    if args.print_log {
        print!("{}", report.log_text());
    }
    println!(
        "strategy={} seed={} t0={} score={}",
        cfg.strategy, cfg.seed, cfg.t0, report.final_score
    );
    for (t, score) in &report.trace {
        println!("  t={t:.3} score={score}");
    }
    ExitCode::SUCCESS
}

fn sweep(args: SweepArgs) -> ExitCode {
    let base = match base_config(&args.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let mut spec = SweepSpec {
        base_seed: args.base_seed,
        trials_per_t0: args.trials,
        ..SweepSpec::default()
    };
    if let Some(list) = &args.t0_list {
        spec.t0_values.clear();
        for item in list.split(',') {
            match item.trim().parse::<f64>() {
                Ok(v) => spec.t0_values.push(v),
                Err(e) => return fail_config(format!("t0 '{item}': {e}")),
            }
        }
    }
    if args.strategies != "all" {
        spec.strategies.clear();
        for item in args.strategies.split(',') {
            match Strategy::parse(item.trim()) {
                Ok(s) => spec.strategies.push(s),
                Err(e) => return fail_config(e),
            }
        }
    }
    let collect_logs = args.log_dir.is_some();
    let result = match harness::run_sweep(&spec, &base, args.jobs, collect_logs) {
        Ok(result) => result,
        Err(e) => return fail_config(e),
    };
    if let Some(dir) = &args.log_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return fail_config(format!("creating {}: {e}", dir.display()));
        }
        for row in &result.rows {
            let name = format!("{}_t{}_s{}.log", row.strategy.name(), row.t0, row.seed);
            if let Err(e) = std::fs::write(dir.join(&name), row.log.as_deref().unwrap_or_default()) {
                return fail_config(format!("writing {name}: {e}"));
            }
        }
    }
    match harness::emit_csv(&result, &args.out) {
        Ok(agg) => {
            println!("wrote {} rows to {}", result.rows.len(), args.out.display());
            println!("aggregates in {}", agg.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail_config(e),
    }
}

fn replay(log: PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(&log) {
        Ok(text) => text,
        Err(e) => return fail_config(format!("reading {}: {e}", log.display())),
    };
    match harness::replay(&text) {
        Ok(summary) => {
            println!(
                "ok: score={} deliveries={} objects={} t0={}",
                summary.final_score, summary.deliveries, summary.objects, summary.t0
            );
            ExitCode::SUCCESS
        }
        Err(e @ harness::ReplayError::Parse { .. }) => fail_config(e),
        Err(e) => {
            eprintln!("replay failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Replay { log } => replay(log),
    }
}
