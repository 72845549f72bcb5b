//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mission_core::belief::{
    measurement_update, predict_moving, predict_static, BeliefGrid, MotionKind, MotionParams, Observation,
};
use mission_core::grid::{CellIndex, GridSpec, Position};
use mission_core::harness::{self, replay, SweepSpec};
use mission_core::ids::{ObjectId, TaskId};
use mission_core::reward::{
    brute_force_multi, brute_force_single, predict_reward_single, sequential_allocation, BudgetQuantizer,
    DpInstance, DpItem, MultiInstance,
};
use mission_core::sim::{run_mission, ScenarioConfig, Strategy};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, equal_costs: bool) -> DpInstance {
    let items = (0..n)
        .map(|i| {
            let c = f64::from(rng.gen_range(1..=200));
            let cs = if equal_costs { c } else { f64::from(rng.gen_range(1..=200)) };
            DpItem {
                task_id: TaskId(i as u32),
                cost_from_box: c,
                cost_from_agent: cs,
                reward: rng.gen_range(1..=3),
            }
        })
        .collect();
    DpInstance {
        items,
        budget: f64::from(rng.gen_range(1..=400)),
    }
}

#[test]
fn criterion_1_dp_matches_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let q = BudgetQuantizer::default();
    let mut checked = 0usize;
    for _ in 0..500 {
        let n = rng.gen_range(0..=12);
        let inst = random_instance(&mut rng, n, false);
        let dp = predict_reward_single(&inst, &q).value;
        let exact = brute_force_single(&inst).expect("instance within oracle bounds");
        assert_eq!(dp, exact, "instance {inst:?}");
        checked += 1;
    }
    let elapsed = start.elapsed();
    verdict(
        "1 (dp-vs-oracle equivalence)",
        checked == 500 && elapsed.as_secs_f64() < 10.0,
        &format!("{checked} instances equal in {:.2}s", elapsed.as_secs_f64()),
    );
}

/// NOTE: this criterion is expected to fail, and the failure is genuine
/// rather than a bug. The budgeted-selection value is monotone in both the
/// task set and the budget (those halves hold with zero violations), but it
/// is NOT submodular: with budget 4 and tasks a(cost 3, reward 3),
/// b(cost 2, reward 2), e(cost 2, reward 2), adding e to {a} gains nothing
/// (it cannot fit beside a) while adding e to {a, b} gains 1 (the pair
/// {b, e} fills the budget and beats a). Marginal gains can grow with the
/// set, so no implementation of this value function can satisfy the
/// zero-violation requirement. The test reports the first counterexample it
/// finds and fails honestly.
#[test]
fn criterion_2_monotonicity_and_submodularity() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut monotone_violations = 0usize;
    let mut budget_violations = 0usize;
    let mut submodular_violations = 0usize;
    let mut triples = 0usize;
    let mut example: Option<String> = None;
    for _ in 0..300 {
        let n = rng.gen_range(1..=8usize);
        let inst = random_instance(&mut rng, n, true);
        // Oracle value for every subset of the universe at the instance
        // budget.
        let subset_value = |mask: u32, budget: f64| -> u32 {
            let items: Vec<DpItem> = inst
                .items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, item)| item.clone())
                .collect();
            brute_force_single(&DpInstance { items, budget }).expect("small instance")
        };
        let full = (1u32 << n) - 1;
        let values: Vec<u32> = (0..=full).map(|mask| subset_value(mask, inst.budget)).collect();

        // Budget monotonicity on the full task set.
        let t1 = f64::from(rng.gen_range(0..=400));
        let t2 = t1 + f64::from(rng.gen_range(0..=200));
        if subset_value(full, t1) > subset_value(full, t2) {
            budget_violations += 1;
        }

        for b in 0..=full {
            // Iterate proper submasks a of b.
            let mut a = b;
            loop {
                a = (a.wrapping_sub(1)) & b;
                if values[a as usize] > values[b as usize] {
                    monotone_violations += 1;
                }
                for e in 0..n {
                    let bit = 1u32 << e;
                    if b & bit == 0 {
                        triples += 1;
                        let gain_small = values[(a | bit) as usize] - values[a as usize];
                        let gain_large = values[(b | bit) as usize] - values[b as usize];
                        if gain_small < gain_large {
                            submodular_violations += 1;
                            if example.is_none() {
                                example = Some(format!(
                                    "budget {}, A mask {a:#b} gains {gain_small}, B mask {b:#b} gains {gain_large} from task {e}; items {:?}",
                                    inst.budget,
                                    inst.items
                                        .iter()
                                        .map(|i| (i.cost_from_box, i.reward))
                                        .collect::<Vec<_>>()
                                ));
                            }
                        }
                    }
                }
                if a == 0 {
                    break;
                }
            }
        }
    }
    verdict(
        "2 (value-function property suites)",
        monotone_violations == 0 && budget_violations == 0 && submodular_violations == 0,
        &format!(
            "300 instances: monotonicity {monotone_violations} and budget {budget_violations} violations; \
             submodularity fails on {submodular_violations}/{triples} marginal-gain triples — the value \
             function is monotone but provably not submodular (two cheap tasks can jointly displace one \
             expensive one only once both are available). First counterexample: {}",
            example.unwrap_or_else(|| "none".into())
        ),
    );
}

#[test]
fn criterion_3_belief_filter_stability() {
    let spec = GridSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let params = MotionParams::new(0.1, 1.0).expect("valid params");
    let mut grids = [
        BeliefGrid::uniform(ObjectId(0), MotionKind::Static, &spec),
        BeliefGrid::uniform(ObjectId(1), MotionKind::Moving, &spec),
        BeliefGrid::point_mass(ObjectId(2), MotionKind::Moving, &spec, CellIndex::new(4, 4)),
    ];
    let mut ops = 0usize;
    for _ in 0..1000 {
        let which = rng.gen_range(0..grids.len());
        let grid = &grids[which];
        let next = match rng.gen_range(0..3) {
            0 if grid.kind == MotionKind::Static => {
                let out = predict_static(grid).expect("static grid");
                assert_eq!(out, *grid, "static prediction must be the identity");
                out
            }
            0 | 1 if grid.kind == MotionKind::Moving => {
                let before = grid.total_mass();
                let out = predict_moving(grid, &params).expect("moving grid");
                assert!((out.total_mass() - before).abs() <= 1e-12, "mass conservation");
                out
            }
            _ => {
                let cell = CellIndex::new(rng.gen_range(0..spec.cols()), rng.gen_range(0..spec.rows()));
                let detect = rng.gen_bool(0.1);
                let detections: BTreeMap<ObjectId, CellIndex> =
                    detect.then_some((grid.object_id, cell)).into_iter().collect();
                let obs = Observation::new([cell].into_iter().collect(), detections, 0.0).expect("valid obs");
                measurement_update(grid, &obs).expect("valid update")
            }
        };
        assert!((next.total_mass() - 1.0).abs() <= 1e-9, "grid sums to one after every op");
        grids[which] = next;
        ops += 1;
    }
    verdict("3 (belief filter stability)", ops == 1000, &format!("{ops} random filter operations"));
}

#[test]
fn criterion_4_sequential_near_optimality() {
    let grid = GridSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let q = BudgetQuantizer::default();
    let mut worst: f64 = 1.0;
    let mut violations = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8usize);
        let m = rng.gen_range(1..=3usize);
        let rewards: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
        let task_pos: Vec<Position> = (0..n)
            .map(|_| {
                Position::new(
                    (f64::from(rng.gen_range(0..10)) + 0.5) * 10.0,
                    (f64::from(rng.gen_range(0..6)) + 0.5) * 10.0,
                )
            })
            .collect();
        let agent_pos: Vec<Position> = (0..m)
            .map(|_| Position::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..60.0)))
            .collect();
        let cost = mission_core::tasks::CostParams::default();
        let pickup = |from: Position, to: Position, moving: bool| {
            from.distance_to(to) / cost.uav_speed
                + if moving { cost.t_pick_moving } else { cost.t_pick_static }
                + to.distance_to(grid.drop_box) / cost.uav_speed
                + if moving { cost.t_drop_moving } else { cost.t_drop_static }
        };
        let moving: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let inst = MultiInstance {
            rewards,
            cost_from_box: (0..n).map(|i| pickup(grid.drop_box, task_pos[i], moving[i])).collect(),
            cost_from_agent: (0..m)
                .map(|j| (0..n).map(|i| pickup(agent_pos[j], task_pos[i], moving[i])).collect())
                .collect(),
            budgets: (0..m).map(|_| f64::from(rng.gen_range(50..=500))).collect(),
        };
        let seq = sequential_allocation(&inst, &q);
        let exact = brute_force_multi(&inst).expect("instance within oracle bounds");
        if exact > 0 {
            let ratio = f64::from(seq) / f64::from(exact);
            worst = worst.min(ratio);
            if ratio < 1.0 - 1.0 / std::f64::consts::E {
                violations += 1;
            }
        }
    }
    verdict(
        "4 (sequential near-optimality)",
        violations == 0,
        &format!("100 instances, worst sequential/optimal ratio {worst:.3}"),
    );
}

fn benchmark_sweep(t0_values: &[f64], seeds: usize) -> BTreeMap<(&'static str, u64), f64> {
    let spec = SweepSpec {
        t0_values: t0_values.to_vec(),
        trials_per_t0: seeds,
        strategies: Strategy::ALL.to_vec(),
        base_seed: 0,
    };
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
    let result = harness::run_sweep(&spec, &ScenarioConfig::default(), jobs, false).expect("valid sweep");
    result
        .aggregates()
        .into_iter()
        .map(|g| ((g.strategy.name(), g.t0.to_bits()), g.mean))
        .collect()
}

#[test]
fn criterion_5_benchmark_reproduction() {
    let start = Instant::now();
    let seeds = 60;
    let budgets = [100.0, 200.0, 300.0, 400.0, 700.0, 800.0, 900.0];
    let means = benchmark_sweep(&budgets, seeds);
    let mean = |strategy: &str, t0: f64| means[&(strategy, t0.to_bits())];

    let cover_first_blank = mean("cover-first", 100.0) == 0.0;

    let mut short_ok = true;
    let mut short_detail = String::new();
    for t0 in [200.0, 300.0, 400.0] {
        let ours = mean("proposed", t0);
        for rival in ["random", "cover-first", "cover-pickup"] {
            let theirs = mean(rival, t0);
            if ours < theirs {
                short_ok = false;
            }
            short_detail.push_str(&format!("{t0}s {rival} {theirs:.2} vs {ours:.2}; "));
        }
    }

    let mut long_ok = true;
    for t0 in [700.0, 800.0, 900.0] {
        if mean("proposed", t0) < 0.9 * mean("cover-pickup", t0) {
            long_ok = false;
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let within_time = elapsed < 300.0;
    verdict(
        "5 (benchmark reproduction)",
        cover_first_blank && short_ok && long_ok && within_time,
        &format!(
            "cover-first@100s mean {:.2}; short-limit margins [{}]; long-limit ratios {:.3}/{:.3}/{:.3}; sweep in {elapsed:.0}s",
            mean("cover-first", 100.0),
            short_detail.trim_end_matches("; "),
            mean("proposed", 700.0) / mean("cover-pickup", 700.0),
            mean("proposed", 800.0) / mean("cover-pickup", 800.0),
            mean("proposed", 900.0) / mean("cover-pickup", 900.0),
        ),
    );
}

#[test]
fn criterion_6_determinism() {
    let spec = SweepSpec::default();
    let base = ScenarioConfig::default();
    let a = harness::run_sweep(&spec, &base, 2, true).expect("valid sweep");
    let b = harness::run_sweep(&spec, &base, 2, true).expect("valid sweep");
    let csv_equal = harness::scores_csv(&a) == harness::scores_csv(&b)
        && harness::aggregates_csv(&a) == harness::aggregates_csv(&b);
    let logs_equal = a
        .rows
        .iter()
        .zip(b.rows.iter())
        .all(|(x, y)| x.log == y.log && x.log.is_some());
    verdict(
        "6 (sweep determinism)",
        csv_equal && logs_equal,
        &format!("{} missions byte-identical across two runs", a.rows.len()),
    );
}

#[test]
fn criterion_7_late_accrual_shape() {
    let seeds = 60u64;
    let t0 = 200.0;
    let cutoff = t0 * 2.0 / 3.0;
    let mut late: BTreeMap<&'static str, f64> = BTreeMap::new();
    for strategy in Strategy::ALL {
        let mut total = 0.0;
        for seed in 0..seeds {
            let mut cfg = ScenarioConfig::default();
            cfg.t0 = t0;
            cfg.seed = seed;
            cfg.strategy = strategy;
            let report = run_mission(&cfg).expect("valid config");
            total += f64::from(report.final_score - report.score_at(cutoff));
        }
        late.insert(strategy.name(), total / seeds as f64);
    }
    let ours = late["proposed"];
    let pass = ["random", "cover-first", "cover-pickup"].iter().all(|r| ours > late[r]);
    verdict(
        "7 (late-mission accrual)",
        pass,
        &format!(
            "final-third points: proposed {ours:.2}, random {:.2}, cover-first {:.2}, cover-pickup {:.2}",
            late["random"], late["cover-first"], late["cover-pickup"]
        ),
    );
}

#[test]
fn criterion_8_crash_adaptation() {
    let mut all_positive = true;
    let mut replays_clean = true;
    let mut min_score = u32::MAX;
    for seed in 0..20u64 {
        let mut cfg = ScenarioConfig::default();
        cfg.t0 = 600.0;
        cfg.seed = seed;
        cfg.strategy = Strategy::Proposed;
        cfg.inject_crash(0, cfg.t0 / 2.0).expect("valid crash");
        let report = run_mission(&cfg).expect("valid config");
        min_score = min_score.min(report.final_score);
        if report.final_score == 0 {
            all_positive = false;
        }
        // The replay checker rejects duplicate claims and broken invariants.
        if let Err(e) = replay(&report.log_text()) {
            replays_clean = false;
            eprintln!("seed {seed}: {e}");
        }
    }
    verdict(
        "8 (crash adaptation)",
        all_positive && replays_clean,
        &format!("20 seeds, 1 of 3 agents lost at t0/2, min score {min_score}, logs verified"),
    );
}

// Shared-world sanity that the criteria lean on: paired placements across
// strategies for the same trial.
#[test]
fn paired_seeding_across_strategies() {
    let mut placements: Vec<Vec<String>> = Vec::new();
    for strategy in Strategy::ALL {
        let mut cfg = ScenarioConfig::default();
        cfg.t0 = 50.0;
        cfg.seed = 12345;
        cfg.strategy = strategy;
        let report = run_mission(&cfg).expect("valid config");
        placements.push(
            report
                .log
                .iter()
                .filter(|l| l.contains(" place "))
                .cloned()
                .collect(),
        );
    }
    assert!(placements.windows(2).all(|w| w[0] == w[1]));
}

// The spec's count identity for observations: every detection cell is in the
// observed set, exercised through a mission's own observations.
#[test]
fn observations_stay_inside_fov() {
    let mut cfg = ScenarioConfig::default();
    cfg.t0 = 50.0;
    cfg.seed = 3;
    let report = run_mission(&cfg).expect("valid config");
    let found = report.log.iter().filter(|l| l.contains(" found ")).count();
    let _ = found; // the sim would have panicked on an out-of-FoV detection
    let set: BTreeSet<&String> = report.log.iter().collect();
    assert_eq!(set.len(), report.log.len(), "log lines are unique events");
}
