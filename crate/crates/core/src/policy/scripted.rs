//! Deterministic non-LLM baselines.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::action::{Action, Bundle, MovePath};
use crate::agent::{Attr, Direction, Pos, Role};
use crate::config::{GameConfig, MatingConfig};
use crate::engine::FAST_SPD;
use crate::observe::Observation;
use crate::policy::{Policy, PolicyDecision, PolicyError, PromptContext, ProposalContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScriptedKind {
    /// Gathers where it stands, otherwise walks to the nearest visible stocked node.
    GreedyGatherer,
    RandomWalker,
    /// Offers 2 food for 1 token to the token-richest neighbour when food is plentiful.
    Trader,
    /// Attacks the poorest same-cell agent while it has tokens.
    Aggressor,
    /// REST every turn.
    Rester,
    /// Providers court visible choosers; choosers gather and judge by vitality.
    Courter,
}

impl ScriptedKind {
    pub const ALL: [ScriptedKind; 6] = [
        ScriptedKind::GreedyGatherer,
        ScriptedKind::RandomWalker,
        ScriptedKind::Trader,
        ScriptedKind::Aggressor,
        ScriptedKind::Rester,
        ScriptedKind::Courter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedKind::GreedyGatherer => "greedy",
            ScriptedKind::RandomWalker => "walker",
            ScriptedKind::Trader => "trader",
            ScriptedKind::Aggressor => "aggressor",
            ScriptedKind::Rester => "rester",
            ScriptedKind::Courter => "courter",
        }
    }
}

impl fmt::Display for ScriptedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScriptedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScriptedKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScriptedKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown scripted policy `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedPolicy {
    pub kind: ScriptedKind,
    pub seed: u64,
    /// Upkeep of the game, used by the trader's surplus rule.
    pub upkeep: u32,
    pub mating: MatingConfig,
    /// Agents per cell, so courters can tell whether an offspring fits.
    pub cell_capacity: u32,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ScriptedPolicy {
    pub fn new(kind: ScriptedKind, config: &GameConfig) -> Self {
        Self {
            kind,
            seed: config.seed,
            upkeep: config.upkeep,
            mating: config.mating,
            cell_capacity: config.cell_capacity,
        }
    }

    /// RNG keyed by (seed, agent, turn), so a decision depends only on its context.
    fn rng_for(&self, obs: &Observation) -> ChaCha8Rng {
        let key = splitmix(
            self.seed
                ^ splitmix(u64::from(obs.self_state.id.0))
                ^ splitmix(u64::from(obs.turn) << 32),
        );
        ChaCha8Rng::seed_from_u64(key)
    }

    fn choose(&self, ctx: &PromptContext) -> Action {
        let obs = &ctx.observation;
        match self.kind {
            ScriptedKind::GreedyGatherer => self.gather_or_seek(obs),
            ScriptedKind::RandomWalker => {
                random_step(obs, &mut self.rng_for(obs)).unwrap_or(Action::Rest)
            }
            ScriptedKind::Rester => Action::Rest,
            ScriptedKind::Trader => {
                let me = &obs.self_state;
                let surplus = 2 * self.upkeep * 5;
                let partner = obs
                    .nearby
                    .iter()
                    .filter(|n| n.approx_tokens >= 1)
                    .max_by_key(|n| (n.approx_tokens, std::cmp::Reverse(n.id)));
                match partner {
                    Some(n) if me.food > surplus => Action::Trade {
                        target: n.id,
                        offer: Bundle::new(2, 0),
                        request: Bundle::new(0, 1),
                    },
                    _ => self.gather_or_seek(obs),
                }
            }
            ScriptedKind::Aggressor => {
                let me = &obs.self_state;
                let victim = obs
                    .nearby
                    .iter()
                    .filter(|n| n.position == me.position)
                    .min_by_key(|n| (n.approx_food, n.id));
                match victim {
                    Some(v) if me.tokens >= 1 => Action::Attack(v.id),
                    _ => self.gather_or_seek(obs),
                }
            }
            ScriptedKind::Courter => self.court(obs),
        }
    }

    fn court(&self, obs: &Observation) -> Action {
        let me = &obs.self_state;
        let m = &self.mating;
        if me.role == Role::Chooser {
            // A solvent chooser with a provider in view waits to be courted.
            let solvent = me.food > m.chooser_food_cost + 2 * self.upkeep
                && me.tokens >= m.chooser_token_cost;
            let courted = obs.nearby.iter().any(|n| n.role == Some(Role::Provider));
            let on_node = obs
                .nodes
                .iter()
                .any(|n| n.position == me.position && n.stock > 0);
            if solvent && courted && !on_node {
                return Action::Rest;
            }
        }
        if me.role != Role::Provider {
            return self.gather_or_seek(obs);
        }
        // Proposing is pointless where the offspring would not fit.
        let others_here = obs
            .nearby
            .iter()
            .filter(|n| n.position == me.position)
            .count() as u32;
        let room_here = 1 + others_here < self.cell_capacity;
        let choosers: Vec<_> = obs
            .nearby
            .iter()
            .filter(|n| n.role == Some(Role::Chooser))
            .collect();
        let here = choosers
            .iter()
            .filter(|n| room_here && n.position == me.position)
            .min_by_key(|n| n.id);
        // Keep a food margin so paying the proposal cost never starves us.
        let can_propose =
            me.food > m.provider_food_cost + 2 * self.upkeep && me.tokens >= m.provider_token_cost;
        if let (Some(c), true) = (here, can_propose) {
            return Action::Reproduce(c.id);
        }
        let nearest = choosers
            .iter()
            .min_by_key(|n| (n.position.manhattan(me.position), n.id));
        if let Some(c) = nearest {
            let revealed = me.is_revealed_at(obs.turn);
            if !revealed && me.tokens >= m.communicate_token_cost + m.provider_token_cost {
                return Action::Communicate(format!(
                    "Agent {} here, vitality {}",
                    me.id, me.vitality
                ));
            }
            if c.position != me.position {
                if let Some(path) = path_towards(me.position, c.position, fast(obs)) {
                    return Action::Move(path);
                }
            }
        }
        self.gather_or_seek(obs)
    }

    fn gather_or_seek(&self, obs: &Observation) -> Action {
        let me = &obs.self_state;
        let here = obs.nodes.iter().find(|n| n.position == me.position);
        if here.is_some_and(|n| n.stock > 0) {
            return Action::Gather;
        }
        let target = obs.nodes.iter().filter(|n| n.stock > 0).min_by_key(|n| {
            (
                n.position.manhattan(me.position),
                n.kind != crate::world::NodeKind::Food,
                n.position.y,
                n.position.x,
            )
        });
        match target {
            Some(n) => {
                path_towards(me.position, n.position, fast(obs)).map_or(Action::Rest, Action::Move)
            }
            // Stay on an empty node; it refills.
            None if here.is_some() => Action::Rest,
            None => random_step(obs, &mut self.rng_for(obs)).unwrap_or(Action::Rest),
        }
    }
}

fn fast(obs: &Observation) -> bool {
    obs.self_state.attrs.get(Attr::Spd) >= FAST_SPD
}

/// First direction in N, E, S, W order that shortens the Manhattan distance.
fn greedy_dir(from: Pos, to: Pos) -> Option<Direction> {
    Direction::ALL.into_iter().find(|d| match d {
        Direction::N => to.y < from.y,
        Direction::E => to.x > from.x,
        Direction::S => to.y > from.y,
        Direction::W => to.x < from.x,
    })
}

fn advance(p: Pos, d: Direction) -> Pos {
    match d {
        Direction::N => Pos::new(p.x, p.y - 1),
        Direction::E => Pos::new(p.x + 1, p.y),
        Direction::S => Pos::new(p.x, p.y + 1),
        Direction::W => Pos::new(p.x - 1, p.y),
    }
}

/// Manhattan-greedy path of one step, or two when fast and far enough.
pub(crate) fn path_towards(from: Pos, to: Pos, fast: bool) -> Option<MovePath> {
    let first = greedy_dir(from, to)?;
    let mid = advance(from, first);
    let second = if fast { greedy_dir(mid, to) } else { None };
    Some(MovePath { first, second })
}

fn random_step(obs: &Observation, rng: &mut ChaCha8Rng) -> Option<Action> {
    let me = obs.self_state.position;
    let options: Vec<Direction> = Direction::ALL
        .into_iter()
        .filter(|d| me.step(*d, obs.grid_width, obs.grid_height).is_some())
        .collect();
    options.choose(rng).map(|d| Action::Move(MovePath::one(*d)))
}

impl Policy for ScriptedPolicy {
    fn decide(&self, ctx: &PromptContext) -> Result<PolicyDecision, PolicyError> {
        Ok(PolicyDecision::scripted(self.choose(ctx)))
    }

    fn evaluate_proposal(&self, ctx: &ProposalContext) -> Result<bool, PolicyError> {
        Ok(ctx.provider.vitality >= 5)
    }
}
