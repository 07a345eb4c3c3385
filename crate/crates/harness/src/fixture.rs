//! Synthetic logs that reproduce the reference controlled-sweep counts, for
//! exercising the analysis path without model calls.

use std::fs;
use std::path::{Path, PathBuf};

use arena_core::agent::{Attr, Direction};
use arena_core::engine::{EndReason, Outcome};
use arena_core::log::{ActionEntry, EndRecord};
use arena_core::{Action, AgentId, Bundle, GameLog, MovePath, TurnLog};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::preset::{PhasePreset, PresetName};
use crate::HarnessError;

/// Reference outcome of one run: action shares in the order GATHER, MOVE,
/// ATTACK, TRAIN, TRADE, REST.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRun {
    pub id: &'static str,
    pub upkeep: u32,
    pub trades: u64,
    pub attacks: u64,
    pub survivors: u32,
    pub duration: u32,
    pub total_actions: u64,
    pub shares: [f64; 6],
    pub entropy: f64,
    pub social_pct: f64,
}

/// The six controlled-sweep runs. EXP-020a's action total is not given;
/// 742 is the only total that reproduces all six of its shares to one
/// decimal with exactly 85 attacks.
pub const P2B_REFERENCE: [ReferenceRun; 6] = [
    ReferenceRun {
        id: "EXP-020b",
        upkeep: 2,
        trades: 11,
        attacks: 76,
        survivors: 3,
        duration: 60,
        total_actions: 648,
        shares: [44.6, 29.5, 11.7, 9.6, 2.8, 1.9],
        entropy: 0.764,
        social_pct: 2.8,
    },
    ReferenceRun {
        id: "EXP-020a",
        upkeep: 2,
        trades: 12,
        attacks: 85,
        survivors: 4,
        duration: 60,
        total_actions: 742,
        shares: [43.1, 29.9, 11.5, 8.8, 4.4, 2.3],
        entropy: 0.787,
        social_pct: 4.4,
    },
    ReferenceRun {
        id: "EXP-020c",
        upkeep: 4,
        trades: 12,
        attacks: 63,
        survivors: 2,
        duration: 60,
        total_actions: 537,
        shares: [45.6, 26.6, 11.7, 8.6, 3.9, 3.5],
        entropy: 0.791,
        social_pct: 3.9,
    },
    ReferenceRun {
        id: "EXP-020d",
        upkeep: 5,
        trades: 29,
        attacks: 61,
        survivors: 2,
        duration: 60,
        total_actions: 419,
        shares: [40.6, 22.7, 14.6, 9.8, 8.4, 4.1],
        entropy: 0.864,
        social_pct: 8.4,
    },
    ReferenceRun {
        id: "EXP-020e",
        upkeep: 6,
        trades: 16,
        attacks: 39,
        survivors: 1,
        duration: 58,
        total_actions: 308,
        shares: [42.2, 22.7, 12.7, 7.8, 6.5, 8.1],
        entropy: 0.861,
        social_pct: 6.5,
    },
    ReferenceRun {
        id: "EXP-020f",
        upkeep: 7,
        trades: 8,
        attacks: 19,
        survivors: 1,
        duration: 20,
        total_actions: 201,
        shares: [38.8, 23.4, 9.5, 10.0, 9.5, 9.0],
        entropy: 0.892,
        social_pct: 9.5,
    },
];

/// Splits `total` into integer counts proportional to `shares`
/// (largest-remainder rounding, ties to the earlier entry).
pub fn apportion(shares: &[f64], total: u64) -> Vec<u64> {
    let sum: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<u64>();
    for &i in order.iter().take(short as usize) {
        counts[i] += 1;
    }
    counts
}

/// Agents acting in each turn: everyone alive acts once, the population
/// starts at `start`, ends at `survivors`, and drops in one step so that
/// exactly `total` actions are taken.
fn population_profile(start: u32, survivors: u32, duration: u32, total: u64) -> Vec<u32> {
    let mut profile = vec![survivors; duration as usize];
    let mut excess = total - u64::from(survivors) * u64::from(duration);
    for slot in profile.iter_mut().take(duration as usize - 1) {
        let add = excess.min(u64::from(start - survivors));
        *slot += add as u32;
        excess -= add;
    }
    assert_eq!(excess, 0, "{total} actions do not fit in {duration} turns");
    profile
}

#[derive(Clone, Copy)]
enum Slot {
    Gather,
    Move,
    Attack,
    Train,
    Trade,
    Rest,
}

const SLOTS: [Slot; 6] = [
    Slot::Gather,
    Slot::Move,
    Slot::Attack,
    Slot::Train,
    Slot::Trade,
    Slot::Rest,
];

/// A log whose action counts, accepted trades, survivors and duration match
/// the reference run. Every attack lands; action order is a seeded shuffle.
pub fn fixture_log(run: &ReferenceRun) -> GameLog {
    let preset = PhasePreset::get(PresetName::P2b);
    let config = preset
        .experiment(run.id)
        .map(|e| e.config.clone())
        .unwrap_or_else(|| preset.base.clone());
    let counts = apportion(&run.shares, run.total_actions);
    let mut slots: Vec<Slot> = SLOTS
        .iter()
        .zip(&counts)
        .flat_map(|(s, &n)| std::iter::repeat_n(*s, n as usize))
        .collect();
    let seed = run
        .id
        .bytes()
        .fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let profile = population_profile(
        config.n_agents,
        run.survivors,
        run.duration,
        run.total_actions,
    );
    let mut log = GameLog::new(config, Some(run.id.to_string()));
    let mut next = slots.into_iter();
    let mut trades_left = run.trades;
    for (t, &acting) in profile.iter().enumerate() {
        let entries = (0..acting)
            .map(|i| {
                let agent = AgentId(i);
                let other = AgentId((i + 1) % acting.max(2));
                let (action, outcome) = match next.next().expect("profile matches total") {
                    Slot::Gather => (Action::Gather, Outcome::Gathered { amount: 3 }),
                    Slot::Move => (
                        Action::Move(MovePath::one(Direction::N)),
                        Outcome::Moved {
                            steps: 1,
                            halted: false,
                        },
                    ),
                    Slot::Attack => (
                        Action::Attack(other),
                        Outcome::Hit {
                            damage: 5,
                            killed: false,
                        },
                    ),
                    Slot::Train => (Action::Train(Attr::Str), Outcome::Trained { raised: true }),
                    Slot::Trade => {
                        let outcome = if trades_left > 0 {
                            trades_left -= 1;
                            Outcome::TradeAccepted
                        } else {
                            Outcome::TradeRejected
                        };
                        let trade = Action::Trade {
                            target: other,
                            offer: Bundle { food: 2, tokens: 0 },
                            request: Bundle { food: 0, tokens: 1 },
                        };
                        (trade, outcome)
                    }
                    Slot::Rest => (Action::Rest, Outcome::Rested { recovered: 0 }),
                };
                ActionEntry::bare(agent, action, outcome)
            })
            .collect();
        let alive = profile.get(t + 1).copied().unwrap_or(run.survivors);
        log.turns.push(TurnLog::bare(t as u32 + 1, entries, alive));
    }
    assert_eq!(
        trades_left, 0,
        "{}: fewer trade attempts than accepted trades",
        run.id
    );
    log.end = Some(EndRecord {
        turn: run.duration,
        reason: if run.survivors <= 1 {
            EndReason::LastSurvivor
        } else {
            EndReason::MaxTurns
        },
        survivors: run.survivors,
    });
    log
}

/// Writes one `<id>.log.jsonl` per reference run into `dir`.
pub fn write_fixtures(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    P2B_REFERENCE
        .iter()
        .map(|run| {
            let path = dir.join(format!("{}.log.jsonl", run.id));
            fs::write(&path, fixture_log(run).to_jsonl()).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_sums_and_rounds() {
        assert_eq!(apportion(&[50.0, 50.0], 3), vec![2, 1]);
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 9), vec![3, 3, 3]);
        let c = apportion(&[44.6, 29.5, 11.7, 9.6, 2.8, 1.9], 648);
        assert_eq!(c.iter().sum::<u64>(), 648);
    }

    #[test]
    fn profile_shape() {
        let p = population_profile(16, 3, 60, 648);
        assert_eq!(p.iter().map(|&x| u64::from(x)).sum::<u64>(), 648);
        assert_eq!(*p.last().unwrap(), 3);
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert!(p.iter().all(|&x| x <= 16));
    }
}
