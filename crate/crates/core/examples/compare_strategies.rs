//! Prints mean scores per strategy over a range of mission time limits.
//!
//! Usage: compare_strategies [base_seed] [trials]

use mission_core::harness::{run_sweep, SweepSpec};
use mission_core::sim::{ScenarioConfig, Strategy};

fn main() {
    let base_seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let trials: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let spec = SweepSpec {
        t0_values: vec![100.0, 200.0, 300.0, 400.0, 500.0, 700.0, 900.0],
        trials_per_t0: trials,
        strategies: Strategy::ALL.to_vec(),
        base_seed,
    };
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
    let result = run_sweep(&spec, &ScenarioConfig::default(), jobs, false).expect("valid sweep");

    print!("{:<14}", "strategy");
    for t0 in &spec.t0_values {
        print!(" {:>7}", format!("t0={t0}"));
    }
    println!();
    for strategy in Strategy::ALL {
        print!("{:<14}", strategy.name());
        for &t0 in &spec.t0_values {
            let mean = result
                .aggregates()
                .into_iter()
                .find(|g| g.strategy == strategy && g.t0 == t0)
                .map(|g| g.mean)
                .unwrap_or(0.0);
            print!(" {mean:>7.2}");
        }
        println!();
    }
}
