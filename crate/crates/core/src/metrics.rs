//! Game-level behavioral metrics computed from a [`GameLog`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionKind;
use crate::engine::Outcome;
use crate::log::{GameLog, TurnLog};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("entropy of an empty distribution is undefined")]
    NoActions,
    #[error("distribution weights must be finite and non-negative")]
    BadWeight,
    #[error("log is truncated: no end record")]
    Truncated,
}

/// `-(1/ln k) * sum p_i ln p_i` over the `k` non-zero weights; 0 when `k = 1`.
/// Weights need not be normalized (counts or percentages both work).
pub fn normalized_entropy<I>(weights: I) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = f64>,
{
    let weights: Vec<f64> = weights.into_iter().collect();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(MetricsError::BadWeight);
    }
    let support: Vec<f64> = weights.into_iter().filter(|w| *w > 0.0).collect();
    let total: f64 = support.iter().sum();
    if support.is_empty() {
        return Err(MetricsError::NoActions);
    }
    if support.len() == 1 {
        return Ok(0.0);
    }
    let h: f64 = support
        .iter()
        .map(|w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum();
    Ok((h / (support.len() as f64).ln()).clamp(0.0, 1.0))
}

/// Number of actions of each kind, indexed by [`ActionKind::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts(pub [u64; 8]);

impl ActionCounts {
    pub fn add(&mut self, kind: ActionKind) {
        self.0[kind.index()] += 1;
    }

    pub fn get(&self, kind: ActionKind) -> u64 {
        self.0[kind.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn entropy(&self) -> Result<f64, MetricsError> {
        normalized_entropy(self.0.iter().map(|&c| c as f64))
    }

    /// Percentage share of each kind.
    pub fn percentages(&self) -> [f64; 8] {
        let total = self.total();
        let mut out = [0.0; 8];
        if total > 0 {
            for (o, c) in out.iter_mut().zip(self.0) {
                *o = 100.0 * c as f64 / total as f64;
            }
        }
        out
    }
}

/// Actions that were actually taken: everything except entries cancelled
/// because the actor died earlier in the turn.
pub fn turn_counts(turn: &TurnLog) -> ActionCounts {
    let mut counts = ActionCounts::default();
    for e in turn
        .entries
        .iter()
        .filter(|e| e.outcome != Outcome::CancelledDead)
    {
        counts.add(e.action.kind());
    }
    counts
}

pub fn game_counts(log: &GameLog) -> ActionCounts {
    let mut counts = ActionCounts::default();
    for t in &log.turns {
        for (c, n) in counts.0.iter_mut().zip(turn_counts(t).0) {
            *c += n;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnEntropy {
    pub turn: u32,
    pub entropy: f64,
    pub alive: u32,
}

/// Normalized entropy of each turn's own action multiset; turns with at most
/// one action score 0.
pub fn per_turn_entropy(log: &GameLog) -> Vec<TurnEntropy> {
    log.turns
        .iter()
        .map(|t| {
            let counts = turn_counts(t);
            let entropy = if counts.total() <= 1 {
                0.0
            } else {
                counts.entropy().unwrap_or(0.0)
            };
            TurnEntropy {
                turn: t.turn,
                entropy,
                alive: t.alive,
            }
        })
        .collect()
}

/// Mean of the per-turn entropies (0 for an empty game).
pub fn mean_turn_entropy(series: &[TurnEntropy]) -> f64 {
    if series.is_empty() {
        0.0
    } else {
        series.iter().map(|t| t.entropy).sum::<f64>() / series.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub trades_completed: u64,
    pub trade_attempts: u64,
    pub attacks: u64,
    pub survivors: u32,
    pub duration: u32,
    pub social_action_pct: f64,
    /// Whole-game normalized entropy; 0 when no action was taken.
    pub entropy_norm: f64,
    pub total_actions: u64,
    pub action_counts: ActionCounts,
    pub action_distribution: [f64; 8],
    pub births: u64,
    pub reproduction_attempts: u64,
    pub communications: u64,
    pub fallbacks: u64,
    pub policy_faults: u64,
}

/// Summarizes a finished game. Trades count accepted trades; social share
/// counts TRADE and COMMUNICATE attempts.
pub fn summarize(log: &GameLog) -> Result<MetricsSummary, MetricsError> {
    let end = log.end.ok_or(MetricsError::Truncated)?;
    let counts = game_counts(log);
    let taken = || {
        log.entries()
            .filter(|e| e.outcome != Outcome::CancelledDead)
    };
    let trades_completed = taken()
        .filter(|e| e.outcome == Outcome::TradeAccepted)
        .count() as u64;
    let attacks = taken()
        .filter(|e| matches!(e.outcome, Outcome::Hit { .. }))
        .count() as u64;
    let births = log.turns.iter().map(|t| t.births.len() as u64).sum();
    let fallbacks = taken()
        .filter(|e| e.decision == crate::log::DecisionStatus::Fallback)
        .count() as u64;
    let policy_faults = log.entries().filter(|e| e.fault.is_some()).count() as u64;
    let total = counts.total();
    let social = counts.get(ActionKind::Trade) + counts.get(ActionKind::Communicate);
    Ok(MetricsSummary {
        trades_completed,
        trade_attempts: counts.get(ActionKind::Trade),
        attacks,
        survivors: end.survivors,
        duration: end.turn,
        social_action_pct: if total == 0 {
            0.0
        } else {
            100.0 * social as f64 / total as f64
        },
        entropy_norm: if total == 0 { 0.0 } else { counts.entropy()? },
        total_actions: total,
        action_counts: counts,
        action_distribution: counts.percentages(),
        births,
        reproduction_attempts: counts.get(ActionKind::Reproduce),
        communications: counts.get(ActionKind::Communicate),
        fallbacks,
        policy_faults,
    })
}
