//! Report tables computed from finished game logs.

use std::fs;
use std::path::{Path, PathBuf};

use arena_core::action::ActionKind;
use arena_core::config::EngineVariant;
use arena_core::metrics::{
    mean_turn_entropy, per_turn_entropy, summarize, MetricsError, MetricsSummary,
};
use arena_core::GameLog;
use rayon::prelude::*;
use thiserror::Error;

use crate::run::read_log;
use crate::HarnessError;

/// Row order of the action-distribution table.
pub const ACTION_ROWS: [ActionKind; 8] = [
    ActionKind::Gather,
    ActionKind::Move,
    ActionKind::Attack,
    ActionKind::Train,
    ActionKind::Trade,
    ActionKind::Rest,
    ActionKind::Communicate,
    ActionKind::Reproduce,
];

pub const TABLE1_HEADER: [&str; 8] = [
    "Upkeep", "Expt.", "Trades", "Attacks", "Surv.", "Dur.", "Soc.%", "Entropy",
];
pub const TABLE2_HEADER: [&str; 7] = [
    "Expt.",
    "Type",
    "Agents",
    "Surv.",
    "Attacks",
    "Trades",
    "REPRO/COMM",
];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no logs to analyze")]
    Empty,
    #[error("{}: {source}", path.display())]
    Load {
        path: PathBuf,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("{name}: {source}")]
    Metrics {
        name: String,
        #[source]
        source: MetricsError,
    },
}

/// One analyzed game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRow {
    pub name: String,
    pub upkeep: u32,
    pub variant: EngineVariant,
    pub initial_agents: u32,
    pub summary: MetricsSummary,
    pub mean_turn_entropy: f64,
}

/// All report outputs, as text.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<GameRow>,
    /// Indices of rows holding the maximum trade count, if it is non-zero.
    pub peak_trades: Vec<usize>,
    pub table1_csv: String,
    pub table1_md: String,
    pub table2_csv: String,
    pub table2_md: String,
    pub table5_csv: String,
    pub table5_md: String,
    pub curve_csv: String,
    pub turn_entropy_csv: String,
    pub confound_csv: String,
}

pub const REPORT_FILES: [&str; 9] = [
    "table1.csv",
    "table1.md",
    "table2.csv",
    "table2.md",
    "table5.csv",
    "table5.md",
    "curve.csv",
    "turn_entropy.csv",
    "entropy_confound.csv",
];

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn md_text(header: &[&str], align: &str, rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n|", header.join(" | "));
    for (i, _) in header.iter().enumerate() {
        out.push_str(if i == 0 { "---|" } else { align });
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out
}

fn variant_label(v: EngineVariant) -> &'static str {
    match v {
        EngineVariant::Survival => "Survival",
        EngineVariant::SexualSelection => "Sexual sel.",
    }
}

impl Report {
    pub fn from_logs(logs: &[(String, GameLog)]) -> Result<Self, AnalysisError> {
        if logs.is_empty() {
            return Err(AnalysisError::Empty);
        }
        let rows = logs
            .iter()
            .map(|(name, log)| {
                let summary = summarize(log).map_err(|source| AnalysisError::Metrics {
                    name: name.clone(),
                    source,
                })?;
                Ok(GameRow {
                    name: name.clone(),
                    upkeep: log.config.upkeep,
                    variant: log.config.engine_variant,
                    initial_agents: log.config.n_agents,
                    mean_turn_entropy: mean_turn_entropy(&per_turn_entropy(log)),
                    summary,
                })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;

        let max_trades = rows
            .iter()
            .map(|r| r.summary.trades_completed)
            .max()
            .unwrap_or(0);
        let peak_trades: Vec<usize> = (0..rows.len())
            .filter(|&i| max_trades > 0 && rows[i].summary.trades_completed == max_trades)
            .collect();

        let t1 = |bold_peak: bool| -> Vec<Vec<String>> {
            rows.iter()
                .enumerate()
                .map(|(i, r)| {
                    let s = &r.summary;
                    let trades = if bold_peak && peak_trades.contains(&i) {
                        format!("**{}**", s.trades_completed)
                    } else {
                        s.trades_completed.to_string()
                    };
                    vec![
                        r.upkeep.to_string(),
                        r.name.clone(),
                        trades,
                        s.attacks.to_string(),
                        s.survivors.to_string(),
                        s.duration.to_string(),
                        format!("{:.1}", s.social_action_pct),
                        format!("{:.3}", s.entropy_norm),
                    ]
                })
                .collect()
        };

        let t2: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let s = &r.summary;
                let sexual = r.variant == EngineVariant::SexualSelection;
                vec![
                    r.name.clone(),
                    variant_label(r.variant).to_string(),
                    if sexual {
                        format!(
                            "{}->{}",
                            r.initial_agents,
                            u64::from(r.initial_agents) + s.births
                        )
                    } else {
                        r.initial_agents.to_string()
                    },
                    s.survivors.to_string(),
                    s.attacks.to_string(),
                    s.trades_completed.to_string(),
                    if sexual {
                        format!("{} / {}", s.reproduction_attempts, s.communications)
                    } else {
                        "--- / ---".to_string()
                    },
                ]
            })
            .collect();

        let shown: Vec<ActionKind> = ACTION_ROWS
            .into_iter()
            .filter(|k| {
                ActionKind::SURVIVAL.contains(k)
                    || rows.iter().any(|r| r.summary.action_counts.get(*k) > 0)
            })
            .collect();
        let t5_header: Vec<String> = std::iter::once("Action".to_string())
            .chain(rows.iter().map(|r| format!("u={} {}", r.upkeep, r.name)))
            .collect();
        let t5_header: Vec<&str> = t5_header.iter().map(String::as_str).collect();
        let mut t5: Vec<Vec<String>> = shown
            .iter()
            .map(|k| {
                std::iter::once(k.keyword().to_string())
                    .chain(
                        rows.iter()
                            .map(|r| format!("{:.1}", r.summary.action_distribution[k.index()])),
                    )
                    .collect()
            })
            .collect();
        t5.push(
            std::iter::once("Total actions".to_string())
                .chain(rows.iter().map(|r| r.summary.total_actions.to_string()))
                .collect(),
        );

        let mut curve: Vec<&GameRow> = rows.iter().collect();
        curve.sort_by_key(|r| r.upkeep);
        let curve_rows: Vec<Vec<String>> = curve
            .iter()
            .map(|r| {
                vec![
                    r.upkeep.to_string(),
                    r.summary.trades_completed.to_string(),
                    r.summary.duration.to_string(),
                ]
            })
            .collect();

        let turn_rows: Vec<Vec<String>> = logs
            .iter()
            .flat_map(|(name, log)| {
                per_turn_entropy(log).into_iter().map(move |t| {
                    vec![
                        name.clone(),
                        t.turn.to_string(),
                        format!("{:.6}", t.entropy),
                        t.alive.to_string(),
                    ]
                })
            })
            .collect();

        let confound_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.upkeep.to_string(),
                    r.summary.duration.to_string(),
                    r.summary.total_actions.to_string(),
                    format!("{:.6}", r.summary.entropy_norm),
                    format!("{:.6}", r.mean_turn_entropy),
                ]
            })
            .collect();

        Ok(Report {
            table1_csv: csv_text(&TABLE1_HEADER, &t1(false)),
            table1_md: md_text(&TABLE1_HEADER, "---:|", &t1(true)),
            table2_csv: csv_text(&TABLE2_HEADER, &t2),
            table2_md: md_text(&TABLE2_HEADER, "---:|", &t2),
            table5_csv: csv_text(&t5_header, &t5),
            table5_md: md_text(&t5_header, "---:|", &t5),
            curve_csv: csv_text(&["upkeep", "trades", "duration"], &curve_rows),
            turn_entropy_csv: csv_text(&["experiment", "turn", "entropy", "alive"], &turn_rows),
            confound_csv: csv_text(
                &[
                    "experiment",
                    "upkeep",
                    "duration",
                    "total_actions",
                    "pooled_entropy",
                    "mean_turn_entropy",
                ],
                &confound_rows,
            ),
            rows,
            peak_trades,
        })
    }

    /// Writes every output into `dir`, named as in [`REPORT_FILES`].
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let contents = [
            &self.table1_csv,
            &self.table1_md,
            &self.table2_csv,
            &self.table2_md,
            &self.table5_csv,
            &self.table5_md,
            &self.curve_csv,
            &self.turn_entropy_csv,
            &self.confound_csv,
        ];
        for (name, text) in REPORT_FILES.iter().zip(contents) {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })?;
        }
        Ok(())
    }
}

/// A log's display name: its label, else its file stem, else the name of
/// its directory when the file has the standard log name.
pub fn log_name(path: &Path, log: &GameLog) -> String {
    if let Some(label) = &log.label {
        return label.clone();
    }
    let stem = path.file_name().and_then(|n| n.to_str()).unwrap_or("log");
    if stem == crate::run::LOG_FILE {
        if let Some(parent) = path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|n| n.to_str())
        {
            return parent.to_string();
        }
    }
    stem.split('.').next().unwrap_or(stem).to_string()
}

/// Loads the given logs (in parallel) and builds the report, keeping the
/// input order.
pub fn analyze(paths: &[PathBuf]) -> Result<Report, AnalysisError> {
    let logs = paths
        .par_iter()
        .map(|p| {
            let log = read_log(p).map_err(|e| AnalysisError::Load {
                path: p.clone(),
                source: Box::new(e),
            })?;
            Ok((log_name(p, &log), log))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Report::from_logs(&logs)
}
