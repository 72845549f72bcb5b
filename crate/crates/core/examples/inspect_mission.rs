//! Runs one mission and prints its full event log.
//!
//! Usage: inspect_mission [strategy] [t0] [seed]

use mission_core::sim::{run_mission, ScenarioConfig, Strategy};

fn main() {
    let strategy = std::env::args().nth(1).unwrap_or_else(|| "proposed".into());
    let t0: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(200.0);
    let seed: u64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut cfg = ScenarioConfig::default();
    cfg.strategy = Strategy::parse(&strategy).expect("strategy name");
    cfg.t0 = t0;
    cfg.seed = seed;
    let report = run_mission(&cfg).expect("valid config");
    print!("{}", report.log_text());
    eprintln!("final score: {}", report.final_score);
}
