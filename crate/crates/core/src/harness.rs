//! Experiment harness: batch sweeps over time limits and seeds, CSV
//! emission, replay verification of event logs, and the scenario
//! configuration file format.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::grid::{GridSpec, Position};
use crate::sim::{run_mission, ConfigError, ScenarioConfig, Strategy};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config file {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invariant violated at line {line}: {message}")]
    Violation { line: usize, message: String },
    #[error("log ends without an end record")]
    Truncated,
}

/// What to sweep: one mission per (strategy, time limit, trial).
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub t0_values: Vec<f64>,
    pub trials_per_t0: usize,
    pub strategies: Vec<Strategy>,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            t0_values: (1..=9).map(|k| f64::from(k) * 100.0).collect(),
            trials_per_t0: 5,
            strategies: Strategy::ALL.to_vec(),
            base_seed: 1,
        }
    }
}

/// One finished mission in a sweep. `runtime_ms` is the simulated time of
/// the mission's last event, which keeps the CSV reproducible byte for byte.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub t0: f64,
    pub seed: u64,
    pub score: u32,
    pub runtime_ms: u64,
    pub log: Option<String>,
    pub trace: Vec<(f64, u32)>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub strategy: Strategy,
    pub t0: f64,
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

impl SweepResult {
    /// Per-(strategy, t0) mean/min/max in stable order.
    pub fn aggregates(&self) -> Vec<GroupStats> {
        let mut groups: BTreeMap<(&'static str, u64), Vec<u32>> = BTreeMap::new();
        for row in &self.rows {
            groups
                .entry((row.strategy.name(), row.t0.to_bits()))
                .or_default()
                .push(row.score);
        }
        let mut out = Vec::with_capacity(groups.len());
        for ((name, t0_bits), scores) in groups {
            let total: u32 = scores.iter().sum();
            out.push(GroupStats {
                strategy: Strategy::parse(name).expect("round-trips"),
                t0: f64::from_bits(t0_bits),
                mean: f64::from(total) / scores.len() as f64,
                min: *scores.iter().min().expect("nonempty group"),
                max: *scores.iter().max().expect("nonempty group"),
            });
        }
        out
    }
}

/// Runs every (strategy, t0, trial) mission of the spec. Seeds are
/// `base_seed + trial`, so all strategies and all time limits see identical
/// object layouts for the same trial. Workers run in parallel up to `jobs`;
/// rows come back sorted by (strategy, t0, seed) regardless.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &ScenarioConfig,
    jobs: usize,
    collect_logs: bool,
) -> Result<SweepResult, HarnessError> {
    let mut configs = Vec::new();
    for strategy in &spec.strategies {
        for &t0 in &spec.t0_values {
            for trial in 0..spec.trials_per_t0 {
                let mut cfg = base.clone();
                cfg.strategy = *strategy;
                cfg.t0 = t0;
                cfg.seed = spec.base_seed + trial as u64;
                cfg.validate()?;
                configs.push(cfg);
            }
        }
    }

    let jobs = jobs.max(1);
    let cursor = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SweepRow>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(configs.len().max(1)) {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                if index >= configs.len() {
                    break;
                }
                let cfg = &configs[index];
                let report = run_mission(cfg).expect("configs validated above");
                let row = SweepRow {
                    strategy: cfg.strategy,
                    t0: cfg.t0,
                    seed: cfg.seed,
                    score: report.final_score,
                    runtime_ms: (report.sim_end * 1000.0).round() as u64,
                    log: collect_logs.then(|| report.log_text()),
                    trace: report.trace,
                };
                *slots[index].lock().expect("no poisoned slots") = Some(row);
            });
        }
    });

    let mut rows: Vec<SweepRow> = slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("no poisoned slots").expect("every slot filled"))
        .collect();
    rows.sort_by(|a, b| {
        a.strategy
            .name()
            .cmp(b.strategy.name())
            .then(a.t0.total_cmp(&b.t0))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(SweepResult { rows })
}

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    std::fs::write(path, content).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Renders the per-mission CSV.
pub fn scores_csv(result: &SweepResult) -> String {
    let mut out = String::from("strategy,t0,seed,score,runtime_ms\n");
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.strategy.name(),
            row.t0,
            row.seed,
            row.score,
            row.runtime_ms
        ));
    }
    out
}

/// Renders the per-group aggregate CSV.
pub fn aggregates_csv(result: &SweepResult) -> String {
    let mut out = String::from("strategy,t0,mean,min,max\n");
    for g in result.aggregates() {
        out.push_str(&format!("{},{},{:.3},{},{}\n", g.strategy.name(), g.t0, g.mean, g.min, g.max));
    }
    out
}

/// Writes the mission CSV at `path` and the aggregates next to it with an
/// `agg` suffix. Returns the aggregate file path.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<std::path::PathBuf, HarnessError> {
    write_file(path, &scores_csv(result))?;
    let agg_path = match path.extension() {
        Some(ext) => path.with_extension(format!("agg.{}", ext.to_string_lossy())),
        None => path.with_extension("agg"),
    };
    write_file(&agg_path, &aggregates_csv(result))?;
    Ok(agg_path)
}

/// A parsed event-log line.
#[derive(Debug, Clone)]
pub struct LogRecord {
    pub t: f64,
    pub kind: String,
    pub agent: Option<u32>,
    fields: Vec<(String, String)>,
}

impl LogRecord {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_line(index: usize, line: &str) -> Result<LogRecord, ReplayError> {
    let mut tokens = line.split_whitespace();
    let err = |message: String| ReplayError::Parse {
        line: index + 1,
        message,
    };
    let t: f64 = tokens
        .next()
        .ok_or_else(|| err("empty line".into()))?
        .parse()
        .map_err(|e| err(format!("bad timestamp: {e}")))?;
    let kind = tokens.next().ok_or_else(|| err("missing kind".into()))?.to_string();
    let agent_token = tokens.next().ok_or_else(|| err("missing agent".into()))?;
    let agent = if agent_token == "-" {
        None
    } else {
        Some(
            agent_token
                .parse()
                .map_err(|e| err(format!("bad agent '{agent_token}': {e}")))?,
        )
    };
    let mut fields = Vec::new();
    for token in tokens {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| err(format!("field '{token}' is not key=value")))?;
        fields.push((k.to_string(), v.to_string()));
    }
    Ok(LogRecord { t, kind, agent, fields })
}

/// Summary of a verified replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub final_score: u32,
    pub deliveries: usize,
    pub objects: usize,
    pub t0: f64,
}

/// Re-derives the score from a mission log and checks the simulator's
/// invariants against it: timestamps never go backwards, no points accrue
/// after the time limit, the running score matches the deliveries, no task
/// is claimed twice at once, every delivered object was found first, and the
/// end-of-mission object counts conserve the initial inventory.
pub fn replay(log_text: &str) -> Result<ReplaySummary, ReplayError> {
    let mut records = Vec::new();
    for (i, line) in log_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push((i, parse_line(i, line)?));
    }
    let violation = |line: usize, message: String| ReplayError::Violation {
        line: line + 1,
        message,
    };

    let (first_line, config) = records
        .first()
        .filter(|(_, r)| r.kind == "config")
        .ok_or(ReplayError::Parse {
            line: 1,
            message: "log must start with a config record".into(),
        })?;
    let t0: f64 = config
        .field("t0")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| violation(*first_line, "config record lacks t0".into()))?;
    let declared_objects: usize = config
        .field("objects")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| violation(*first_line, "config record lacks objects".into()))?;

    let mut placed = 0usize;
    let mut found: BTreeSet<String> = BTreeSet::new();
    let mut claims: BTreeMap<String, u32> = BTreeMap::new();
    let mut score = 0u32;
    let mut deliveries = 0usize;
    let mut delivered_objects = 0usize;
    let mut lost_objects = 0usize;
    let mut last_t = f64::NEG_INFINITY;
    let mut end: Option<(usize, u32)> = None;

    for (line, record) in records.iter().skip(1) {
        if end.is_some() {
            return Err(violation(*line, "records after the end of the mission".into()));
        }
        if record.t < last_t {
            return Err(violation(*line, format!("time went backwards: {} after {last_t}", record.t)));
        }
        last_t = record.t;
        let need = |key: &str| {
            record
                .field(key)
                .map(str::to_string)
                .ok_or_else(|| violation(*line, format!("{} record lacks {key}", record.kind)))
        };
        match record.kind.as_str() {
            "place" => placed += 1,
            "found" => {
                found.insert(need("task")?);
            }
            "claim" => {
                let task = need("task")?;
                let agent = record.agent.ok_or_else(|| violation(*line, "claim lacks agent".into()))?;
                if let Some(owner) = claims.get(&task) {
                    return Err(violation(
                        *line,
                        format!("task {task} claimed by {agent} while owned by {owner}"),
                    ));
                }
                claims.insert(task, agent);
            }
            "release" | "abort" => {
                if let Some(task) = record.field("task") {
                    claims.remove(task);
                }
            }
            "deliver" => {
                if record.t > t0 {
                    return Err(violation(*line, format!("delivery at {} after t0 {t0}", record.t)));
                }
                let object = need("object")?;
                if !found.contains(&object) {
                    return Err(violation(*line, format!("object {object} delivered but never found")));
                }
                let points: u32 = need("points")?
                    .parse()
                    .map_err(|e| violation(*line, format!("bad points: {e}")))?;
                let claimed_score: u32 = need("score")?
                    .parse()
                    .map_err(|e| violation(*line, format!("bad score: {e}")))?;
                score += points;
                if claimed_score != score {
                    return Err(violation(
                        *line,
                        format!("running score {claimed_score} does not match recomputed {score}"),
                    ));
                }
                deliveries += 1;
                delivered_objects += 1;
                claims.remove(&object);
            }
            "lost" => {
                lost_objects += 1;
                if let Some(object) = record.field("object") {
                    claims.remove(object);
                }
            }
            "crash" | "expire" | "pickup" | "carry" | "decide" => {}
            "end" => {
                let end_score: u32 = need("score")?
                    .parse()
                    .map_err(|e| violation(*line, format!("bad end score: {e}")))?;
                if end_score != score {
                    return Err(violation(
                        *line,
                        format!("end score {end_score} does not match recomputed {score}"),
                    ));
                }
                let grab = |key: &str| -> Result<usize, ReplayError> {
                    need(key)?.parse().map_err(|e| violation(*line, format!("bad {key}: {e}")))
                };
                let (delivered, lost, infield, carried) =
                    (grab("delivered")?, grab("lost")?, grab("infield")?, grab("carried")?);
                if delivered + lost + infield + carried != placed {
                    return Err(violation(
                        *line,
                        format!(
                            "object conservation broken: {delivered}+{lost}+{infield}+{carried} != {placed} placed"
                        ),
                    ));
                }
                if delivered != delivered_objects || lost != lost_objects {
                    return Err(violation(*line, "end tallies disagree with the event stream".into()));
                }
                end = Some((*line, end_score));
            }
            other => {
                return Err(ReplayError::Parse {
                    line: *line + 1,
                    message: format!("unknown record kind '{other}'"),
                });
            }
        }
    }

    if placed != declared_objects {
        return Err(ReplayError::Violation {
            line: 1,
            message: format!("config declares {declared_objects} objects, {placed} placed"),
        });
    }
    let (_, final_score) = end.ok_or(ReplayError::Truncated)?;
    Ok(ReplaySummary {
        final_score,
        deliveries,
        objects: placed,
        t0,
    })
}

/// Reads a replay log from disk and verifies it.
pub fn replay_file(path: &Path) -> Result<ReplaySummary, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    replay(&text).map_err(|e| HarnessError::ConfigFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses the flat `key = value` scenario configuration format. Unknown keys
/// are rejected; omitted keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut grid_width = cfg.grid.width_m;
    let mut grid_height = cfg.grid.height_m;
    let mut cell = cfg.grid.cell_size_m;
    let mut drop_x = cfg.grid.drop_box.x;
    let mut drop_y = cfg.grid.drop_box.y;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |e: String| ConfigError::Invalid(format!("line {}: {key}: {e}", i + 1));
        match key {
            "width_m" => grid_width = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "height_m" => grid_height = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "cell_size_m" => cell = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "drop_box_x" => drop_x = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "drop_box_y" => drop_y = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "static_1pt" => cfg.objects.static_1pt = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "static_2pt" => cfg.objects.static_2pt = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "static_3pt" => cfg.objects.static_3pt = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "moving_3pt" => cfg.objects.moving_3pt = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "object_speed" => cfg.object_speed = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "uav_count" => cfg.uav_count = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "uav_speed" => cfg.cost.uav_speed = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "t_pick_static" => cfg.cost.t_pick_static = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "t_pick_moving" => cfg.cost.t_pick_moving = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "t_drop_static" => cfg.cost.t_drop_static = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "t_drop_moving" => cfg.cost.t_drop_moving = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "t0" => cfg.t0 = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "tracking_timeout" => cfg.tracking_timeout = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "calc_time" => cfg.calc_time = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "p_out" => cfg.p_out = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "horizon" => cfg.horizon = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "seed" => cfg.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "strategy" => cfg.strategy = Strategy::parse(value)?,
            "crashes" => {
                for spec in value.split(',').filter(|s| !s.trim().is_empty()) {
                    let (agent, time) = spec
                        .trim()
                        .split_once('@')
                        .ok_or_else(|| bad(format!("crash '{spec}' is not agent@time")))?;
                    let agent: u32 = agent.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                    let time: f64 = time.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
                    cfg.crashes.push((agent, time));
                }
            }
            other => return Err(ConfigError::Invalid(format!("line {}: unknown key '{other}'", i + 1))),
        }
    }
    cfg.grid = GridSpec::new(grid_width, grid_height, cell, Position::new(drop_x, drop_y))
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a scenario configuration file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text).map_err(|e| HarnessError::ConfigFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
