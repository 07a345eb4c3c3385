//! Conservation, accounting and replay properties over randomized scripted games.

use std::collections::{HashMap, HashSet};

use arena_core::config::{EngineVariant, GameConfig};
use arena_core::engine::{run_game, Outcome};
use arena_core::log::{replay, Change, GameLog};
use arena_core::policy::{PolicyMap, ScriptedKind};
use arena_core::world::{new_game, GameState};
use arena_core::AgentId;
use proptest::prelude::*;

const KINDS: [ScriptedKind; 6] = [
    ScriptedKind::GreedyGatherer,
    ScriptedKind::RandomWalker,
    ScriptedKind::Trader,
    ScriptedKind::Aggressor,
    ScriptedKind::Rester,
    ScriptedKind::Courter,
];

fn arb_config() -> impl Strategy<Value = GameConfig> {
    (
        (3u32..=9, 3u32..=9, 0u32..=8, 0u32..=5, 1u32..=4, 1u32..=3),
        (
            0u32..=8,
            5u32..=40,
            1u32..=8,
            any::<bool>(),
            1u32..=3,
            any::<u64>(),
        ),
    )
        .prop_map(
            |((w, h, nf, nt, rf, rt), (u, turns, half, sexual, cap, seed))| {
                let cells = w * h;
                let n_food_nodes = nf.min(cells);
                GameConfig {
                    grid_width: w,
                    grid_height: h,
                    n_food_nodes,
                    n_token_nodes: nt.min(cells - n_food_nodes),
                    food_regen: rf,
                    token_regen: rt,
                    upkeep: u,
                    max_turns: turns,
                    n_agents: (2 * half).min(cells * cap / 2 * 2),
                    engine_variant: if sexual {
                        EngineVariant::SexualSelection
                    } else {
                        EngineVariant::Survival
                    },
                    cell_capacity: cap,
                    seed,
                    ..GameConfig::default()
                }
            },
        )
}

fn arb_rotation() -> impl Strategy<Value = Vec<ScriptedKind>> {
    prop::sample::subsequence(KINDS.to_vec(), 1..=KINDS.len()).prop_shuffle()
}

fn play(config: &GameConfig, kinds: &[ScriptedKind]) -> GameLog {
    let mut state = new_game(config.clone()).unwrap();
    let mut policies = PolicyMap::scripted(kinds, config);
    run_game(&mut state, &mut policies, None).unwrap()
}

fn occupancy_ok(state: &GameState) -> Result<(), String> {
    let mut cells: HashMap<_, u32> = HashMap::new();
    for a in state.alive() {
        *cells.entry(a.position).or_default() += 1;
    }
    match cells
        .into_iter()
        .find(|(_, n)| *n > state.config.cell_capacity)
    {
        Some((pos, n)) => Err(format!("{n} agents at {pos}")),
        None => Ok(()),
    }
}

/// Food and token deltas of a trade before any reaping it triggered.
fn swap_sums(changes: &[Change]) -> (i64, i64) {
    let mut sums = (0, 0);
    for c in changes {
        match c {
            Change::Food { delta, .. } => sums.0 += delta,
            Change::Tokens { delta, .. } => sums.1 += delta,
            Change::Death { .. } => break,
            _ => {}
        }
    }
    sums
}

fn check_game(config: &GameConfig, log: &GameLog) -> Result<(), TestCaseError> {
    let mut state = new_game(config.clone()).unwrap();
    let mut dead: HashSet<AgentId> = HashSet::new();
    let mut alive = state.alive_count() as i64;
    prop_assert!(log.end.is_some());

    for t in &log.turns {
        let before = state.totals();
        for c in &t.upkeep {
            c.apply(&mut state).unwrap();
        }
        for e in &t.entries {
            prop_assert!(
                !dead.contains(&e.agent),
                "agent {} acted after dying",
                e.agent
            );
            for c in &e.changes {
                c.apply(&mut state).unwrap();
            }
            occupancy_ok(&state).map_err(TestCaseError::fail)?;
            if e.outcome == Outcome::TradeAccepted {
                prop_assert_eq!(swap_sums(&e.changes), (0, 0));
            }
            if let Outcome::Reproduced { .. } = e.outcome {
                let (food, tokens) = parental_costs(&e.changes);
                prop_assert_eq!((food, tokens), (-18, -8));
            }
        }
        for c in &t.regen {
            c.apply(&mut state).unwrap();
        }
        state.turn = t.turn;

        let after = state.totals();
        prop_assert_eq!(
            after.0 as i64 - before.0 as i64,
            t.ledger.food.net(),
            "food ledger, turn {}",
            t.turn
        );
        prop_assert_eq!(
            after.1 as i64 - before.1 as i64,
            t.ledger.tokens.net(),
            "token ledger, turn {}",
            t.turn
        );

        alive += t.births.len() as i64 - t.deaths.len() as i64;
        prop_assert_eq!(alive, i64::from(t.alive));
        prop_assert_eq!(state.alive_count() as u32, t.alive);
        for d in &t.deaths {
            prop_assert!(dead.insert(d.agent), "agent {} died twice", d.agent);
        }
        prop_assert_eq!(state.digest(), t.digest.clone());
    }

    let replayed = replay(log).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(replayed.digest(), state.digest());
    Ok(())
}

/// Net food and token change of the two parents in a successful REPRODUCE,
/// excluding the offspring's endowment and any later reaping.
fn parental_costs(changes: &[Change]) -> (i64, i64) {
    let mut sums = (0, 0);
    for c in changes {
        match c {
            Change::Food { delta, .. } => sums.0 += delta,
            Change::Tokens { delta, .. } => sums.1 += delta,
            Change::Birth { .. } => break,
            _ => {}
        }
    }
    sums
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scripted_games_conserve_and_replay(config in arb_config(), kinds in arb_rotation()) {
        let log = play(&config, &kinds);
        check_game(&config, &log)?;
    }

    #[test]
    fn jsonl_round_trips(config in arb_config(), kinds in arb_rotation()) {
        let log = play(&config, &kinds);
        let text = log.to_jsonl();
        let parsed = GameLog::from_jsonl(&text).unwrap();
        prop_assert_eq!(parsed.to_jsonl(), text);
        prop_assert_eq!(parsed, log);
    }
}

#[test]
fn mating_preset_accounts_for_every_birth() {
    let config = GameConfig {
        grid_width: 7,
        grid_height: 7,
        max_turns: 40,
        engine_variant: EngineVariant::SexualSelection,
        ..GameConfig::default()
    };
    let kinds = [ScriptedKind::Courter];
    let log = play(&config, &kinds);
    check_game(&config, &log).unwrap();
    let births: usize = log.turns.iter().map(|t| t.births.len()).sum();
    assert!(births > 0, "courters should produce offspring");
}
