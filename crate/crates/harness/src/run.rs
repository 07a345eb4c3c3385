use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::Instant;

use arena_core::config::GameConfig;
use arena_core::engine::run_game;
use arena_core::metrics::{summarize, MetricsSummary};
use arena_core::world::new_game;
use arena_core::GameLog;
use arena_gateway::GatewayConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{info, warn};

use crate::policies::PolicySpec;
use crate::report::Report;
use crate::HarnessError;

pub const LOG_FILE: &str = "game.log.jsonl";
pub const CONFIG_FILE: &str = "config.flat";
pub const RECORD_FILE: &str = "record.json";

#[derive(Debug, Clone)]
pub struct RunSettings {
    /// Parent of the per-experiment directories.
    pub out_dir: PathBuf,
    /// Required for LLM policies.
    pub gateway: Option<GatewayConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub policies: String,
    pub config: GameConfig,
    /// `sha256` of the log as a git blob (`blob <len>\0<bytes>`).
    pub log_hash: String,
    pub summary: MetricsSummary,
    pub wall_clock_secs: f64,
    pub dir: PathBuf,
}

/// Content hash of `bytes` as git computes it for a blob in a SHA-256
/// repository.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `<parent>/<id>-<timestamp>`, adding a numeric suffix if that
/// directory already exists.
fn experiment_dir(parent: &Path, id: &str) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let stem = format!("{id}-{stamp}");
    for n in 0.. {
        let name = if n == 0 {
            stem.clone()
        } else {
            format!("{stem}-{n}")
        };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    unreachable!("unbounded suffix search")
}

/// Plays one game to termination and persists its log, resolved config,
/// summary and record.
pub fn run_experiment(
    id: &str,
    config: &GameConfig,
    policy: &PolicySpec,
    settings: &RunSettings,
) -> Result<ExperimentRecord, HarnessError> {
    config.validate()?;
    let mut policies = policy.build(config, settings.gateway.as_ref())?;
    let started = Instant::now();
    let mut state = new_game(config.clone())?;
    info!(experiment = id, policies = %policy, "starting game");
    let log = run_game(&mut state, policies.as_mut(), Some(id.to_string()))?;
    let wall_clock_secs = started.elapsed().as_secs_f64();
    let summary = summarize(&log)?;
    let jsonl = log.to_jsonl();
    let log_hash = blob_hash(jsonl.as_bytes());
    info!(
        experiment = id,
        duration = summary.duration,
        survivors = summary.survivors,
        trades = summary.trades_completed,
        hash = %log_hash,
        "game finished"
    );

    let dir = experiment_dir(&settings.out_dir, id)?;
    let write = |name: &str, contents: &[u8]| -> Result<(), HarnessError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))
    };
    write(LOG_FILE, jsonl.as_bytes())?;
    write(CONFIG_FILE, config.to_flat().as_bytes())?;
    let report = Report::from_logs(&[(id.to_string(), log)])?;
    write("summary.csv", report.table1_csv.as_bytes())?;
    write("summary.md", report.table1_md.as_bytes())?;

    let record = ExperimentRecord {
        experiment_id: id.to_string(),
        policies: policy.to_string(),
        config: config.clone(),
        log_hash,
        summary,
        wall_clock_secs,
        dir: dir.clone(),
    };
    let json = serde_json::to_vec_pretty(&record).expect("record serializes");
    write(RECORD_FILE, &json)?;
    Ok(record)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub value: String,
    pub experiment_id: String,
    pub result: Result<ExperimentRecord, HarnessError>,
}

/// One experiment per value of `parameter`, each starting from `base`.
/// Runs are independent: a failed run is recorded and the rest continue.
/// `parallel` bounds the number of games played at once.
pub fn sweep(
    prefix: &str,
    base: &GameConfig,
    parameter: &str,
    values: &[String],
    policy: &PolicySpec,
    settings: &RunSettings,
    parallel: usize,
) -> Result<Vec<SweepOutcome>, HarnessError> {
    if base.get(parameter).is_none() {
        return Err(HarnessError::UnknownSweepParameter(parameter.to_string()));
    }
    if values.is_empty() {
        warn!(parameter, "sweep has no values; nothing to run");
        return Ok(Vec::new());
    }
    let run_one = |value: &String| {
        let experiment_id = format!("{prefix}-{parameter}{value}");
        let result = (|| {
            let mut config = base.clone();
            config.set(parameter, value)?;
            run_experiment(&experiment_id, &config, policy, settings)
        })();
        if let Err(e) = &result {
            warn!(experiment = %experiment_id, error = %e, "sweep run failed");
        }
        SweepOutcome {
            value: value.clone(),
            experiment_id,
            result,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(pool.install(|| values.par_iter().map(run_one).collect()))
}

/// Reads a log written by [`run_experiment`].
pub fn read_log(path: &Path) -> Result<GameLog, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    GameLog::from_jsonl(&text).map_err(|source| HarnessError::Log {
        path: path.to_path_buf(),
        source,
    })
}
