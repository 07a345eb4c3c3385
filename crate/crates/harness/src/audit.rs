//! Integrity audit of a game log: replays every change and checks the
//! accounting identities turn by turn.

use std::collections::{HashMap, HashSet};

use arena_core::engine::Outcome;
use arena_core::log::{replay, Change};
use arena_core::world::{new_game, GameState};
use arena_core::{AgentId, GameLog};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("turn {turn}: {message}")]
pub struct AuditError {
    pub turn: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub turns: u32,
    pub trades_checked: u64,
    pub births_checked: u64,
    pub deaths: u64,
    pub final_digest: String,
}

/// Food and token deltas of an entry up to the first change of the given
/// marker kind.
fn sums_until(changes: &[Change], stop: impl Fn(&Change) -> bool) -> (i64, i64) {
    let mut sums = (0, 0);
    for c in changes {
        if stop(c) {
            break;
        }
        match c {
            Change::Food { delta, .. } => sums.0 += delta,
            Change::Tokens { delta, .. } => sums.1 += delta,
            _ => {}
        }
    }
    sums
}

fn crowded(state: &GameState) -> Option<String> {
    let mut cells: HashMap<_, u32> = HashMap::new();
    for a in state.alive() {
        *cells.entry(a.position).or_default() += 1;
    }
    cells
        .into_iter()
        .find(|(_, n)| *n > state.config.cell_capacity)
        .map(|(pos, n)| format!("{n} agents at {pos}"))
}

/// Checks, for every turn: the food and token ledgers balance exactly;
/// accepted trades move resources without creating any; each accepted
/// reproduction removes 18 food and 8 tokens from the parents (with the
/// configured costs); population changes equal births minus deaths; no
/// cell exceeds capacity after any resolution step; dead agents never act.
/// Finally the whole log must replay to the logged digests.
pub fn audit(log: &GameLog) -> Result<AuditReport, AuditError> {
    let fail = |turn: u32, message: String| AuditError { turn, message };
    let mut state = new_game(log.config.clone()).map_err(|e| fail(0, e.to_string()))?;
    let m = log.config.mating;
    let mating_cost = (
        -i64::from(m.provider_food_cost + m.chooser_food_cost),
        -i64::from(m.provider_token_cost + m.chooser_token_cost),
    );
    let mut report = AuditReport::default();
    let mut dead: HashSet<AgentId> = HashSet::new();
    let mut alive = state.alive_count() as i64;

    for t in &log.turns {
        let turn = t.turn;
        let before = state.totals();
        for c in &t.upkeep {
            c.apply(&mut state).map_err(|e| fail(turn, e))?;
        }
        for e in &t.entries {
            if dead.contains(&e.agent) {
                return Err(fail(turn, format!("agent {} acted after dying", e.agent)));
            }
            for c in &e.changes {
                c.apply(&mut state).map_err(|err| fail(turn, err))?;
            }
            if let Some(msg) = crowded(&state) {
                return Err(fail(turn, msg));
            }
            match e.outcome {
                Outcome::TradeAccepted => {
                    let sums = sums_until(&e.changes, |c| matches!(c, Change::Death { .. }));
                    if sums != (0, 0) {
                        return Err(fail(
                            turn,
                            format!("trade by {} changed totals by {sums:?}", e.agent),
                        ));
                    }
                    report.trades_checked += 1;
                }
                Outcome::Reproduced { .. } => {
                    let sums = sums_until(&e.changes, |c| matches!(c, Change::Birth { .. }));
                    if sums != mating_cost {
                        return Err(fail(
                            turn,
                            format!("reproduction by {} cost {sums:?}", e.agent),
                        ));
                    }
                    report.births_checked += 1;
                }
                _ => {}
            }
        }
        for c in &t.regen {
            c.apply(&mut state).map_err(|e| fail(turn, e))?;
        }
        state.turn = turn;

        let after = state.totals();
        let food = after.0 as i64 - before.0 as i64;
        let tokens = after.1 as i64 - before.1 as i64;
        if food != t.ledger.food.net() || tokens != t.ledger.tokens.net() {
            return Err(fail(
                turn,
                format!(
                    "ledger mismatch: food {food} vs {}, tokens {tokens} vs {}",
                    t.ledger.food.net(),
                    t.ledger.tokens.net()
                ),
            ));
        }
        alive += t.births.len() as i64 - t.deaths.len() as i64;
        if alive != i64::from(t.alive) || state.alive_count() as u32 != t.alive {
            return Err(fail(
                turn,
                format!(
                    "population {alive} (state {}) vs logged {}",
                    state.alive_count(),
                    t.alive
                ),
            ));
        }
        for d in &t.deaths {
            if !dead.insert(d.agent) {
                return Err(fail(turn, format!("agent {} died twice", d.agent)));
            }
        }
        report.deaths += t.deaths.len() as u64;
        report.turns = turn;
    }

    let replayed = replay(log).map_err(|e| fail(report.turns, e.to_string()))?;
    report.final_digest = replayed.digest();
    Ok(report)
}
