//! The turn loop.
//!
//! Per turn: upkeep, observations from one snapshot, one batch of decisions,
//! sequential resolution in a seeded permutation, node regeneration, a final
//! death sweep, then the turn counter advances.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::agent::{AgentId, Attr, ATTR_MAX, TRAIN_THRESHOLD};
use crate::log::{
    ActionEntry, Change, DeathCause, DeathRecord, DecisionStatus, EndRecord, GameLog, Ledger,
    TurnLog,
};
use crate::mating::{resolve_communicate, resolve_reproduce, MessageEvent, ReproductionEvent};
use crate::observe::observe;
use crate::policy::{ParseStatus, PolicySet, PromptContext};
use crate::world::GameState;

/// Interaction range for TRADE and visibility (Chebyshev).
pub const NEARBY_RANGE: u32 = 2;
/// SPD needed for two-step moves.
pub const FAST_SPD: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Gathered { amount: u32 },
    Moved { steps: u32, halted: bool },
    Hit { damage: u32, killed: bool },
    TradeAccepted,
    TradeRejected,
    Rested { recovered: u32 },
    Trained { raised: bool },
    Communicated { recipients: u32 },
    Reproduced { offspring: AgentId },
    ProposalRejected,
    ChooserInsolvent,
    CancelledDead,
    FailedNoNode,
    FailedEmpty,
    FailedBlocked,
    FailedNoTokens,
    FailedBadTarget,
    FailedNotSameCell,
    FailedOutOfRange,
    FailedBadParams,
    FailedInsolvent,
    FailedTargetInsolvent,
    FailedRole,
    FailedCellFull,
    FailedWrongVariant,
}

impl Outcome {
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            Outcome::CancelledDead
                | Outcome::FailedNoNode
                | Outcome::FailedEmpty
                | Outcome::FailedBlocked
                | Outcome::FailedNoTokens
                | Outcome::FailedBadTarget
                | Outcome::FailedNotSameCell
                | Outcome::FailedOutOfRange
                | Outcome::FailedBadParams
                | Outcome::FailedInsolvent
                | Outcome::FailedTargetInsolvent
                | Outcome::FailedRole
                | Outcome::FailedCellFull
                | Outcome::FailedWrongVariant
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    LastSurvivor,
    Extinction,
    MaxTurns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Running,
    Ended(EndReason),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("game already ended ({0:?})")]
    Terminated(EndReason),
    #[error("policy set returned {got} decisions for {expected} agents")]
    DecisionCount { expected: usize, got: usize },
}

/// Mutations of one resolution step, applied as they are recorded.
pub(crate) struct Tx<'a> {
    pub state: &'a mut GameState,
    pub changes: Vec<Change>,
    pub ledger: Ledger,
    pub deaths: Vec<DeathRecord>,
    pub births: Vec<AgentId>,
    pub message: Option<MessageEvent>,
    pub reproduction: Option<ReproductionEvent>,
    pub fault: Option<String>,
}

impl<'a> Tx<'a> {
    pub fn new(state: &'a mut GameState) -> Self {
        Self {
            state,
            changes: Vec::new(),
            ledger: Ledger::default(),
            deaths: Vec::new(),
            births: Vec::new(),
            message: None,
            reproduction: None,
            fault: None,
        }
    }

    /// Number of the turn being played.
    pub fn turn(&self) -> u32 {
        self.state.turn + 1
    }

    pub fn commit(&mut self, change: Change) {
        change
            .apply(self.state)
            .expect("engine only emits applicable changes");
        self.changes.push(change);
    }

    pub fn add_food(&mut self, agent: AgentId, delta: i64) {
        if delta != 0 {
            self.commit(Change::Food { agent, delta });
        }
    }

    pub fn add_tokens(&mut self, agent: AgentId, delta: i64) {
        if delta != 0 {
            self.commit(Change::Tokens { agent, delta });
        }
    }

    /// Charges a cost that leaves the economy.
    pub fn pay(&mut self, agent: AgentId, food: u32, tokens: u32) {
        self.add_food(agent, -i64::from(food));
        self.add_tokens(agent, -i64::from(tokens));
        self.ledger.food.costs += u64::from(food);
        self.ledger.tokens.costs += u64::from(tokens);
    }

    /// Marks an agent dead; whatever it still holds leaves the economy.
    pub fn kill(&mut self, agent: AgentId, cause: DeathCause) {
        let a = &self.state.agents[agent.index()];
        debug_assert!(a.alive);
        let (food, tokens) = (a.food, a.tokens);
        self.ledger.food.death_loss += u64::from(food);
        self.ledger.tokens.death_loss += u64::from(tokens);
        self.commit(Change::Death {
            agent,
            food,
            tokens,
        });
        self.deaths.push(DeathRecord { agent, cause });
    }

    /// Kills any of `ids` that are alive with no food or no health left.
    pub fn reap_depleted(&mut self, ids: &[AgentId]) {
        for &id in ids {
            let a = &self.state.agents[id.index()];
            if a.alive && (a.food == 0 || a.health == 0) {
                let cause = if a.health == 0 {
                    DeathCause::Combat
                } else {
                    DeathCause::Starvation
                };
                self.kill(id, cause);
            }
        }
    }
}

/// Result of applying a phase or an action to the state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Effects {
    pub changes: Vec<Change>,
    pub ledger: Ledger,
    pub deaths: Vec<DeathRecord>,
    pub births: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub outcome: Outcome,
    pub effects: Effects,
    pub message: Option<MessageEvent>,
    pub reproduction: Option<ReproductionEvent>,
    pub fault: Option<String>,
}

impl Tx<'_> {
    fn into_effects(
        self,
    ) -> (
        Effects,
        Option<MessageEvent>,
        Option<ReproductionEvent>,
        Option<String>,
    ) {
        (
            Effects {
                changes: self.changes,
                ledger: self.ledger,
                deaths: self.deaths,
                births: self.births,
            },
            self.message,
            self.reproduction,
            self.fault,
        )
    }
}

/// Charges upkeep to every alive agent (never below zero food) and kills
/// those left with none.
pub fn apply_upkeep(state: &mut GameState) -> Effects {
    let upkeep = state.config.upkeep;
    let ids: Vec<AgentId> = state.alive().map(|a| a.id).collect();
    let mut tx = Tx::new(state);
    for id in ids {
        let food = tx.state.agents[id.index()].food;
        let paid = food.min(upkeep);
        tx.add_food(id, -i64::from(paid));
        tx.ledger.food.upkeep += u64::from(paid);
        if food == paid {
            tx.kill(id, DeathCause::Starvation);
        }
    }
    tx.into_effects().0
}

/// Adds each node's regeneration, capped at its stock cap.
pub fn regen_nodes(state: &mut GameState) -> Effects {
    let mut tx = Tx::new(state);
    for i in 0..tx.state.nodes.len() {
        let n = &tx.state.nodes[i];
        let added = n.regen.min(n.stock_cap - n.stock);
        let kind = n.kind;
        if added > 0 {
            tx.commit(Change::Stock {
                node: i as u32,
                delta: i64::from(added),
            });
            tx.ledger.flows_mut(kind).regen += u64::from(added);
        }
    }
    tx.into_effects().0
}

pub fn check_termination(state: &GameState) -> Termination {
    match state.alive_count() {
        0 => Termination::Ended(EndReason::Extinction),
        1 => Termination::Ended(EndReason::LastSurvivor),
        _ if state.turn >= state.config.max_turns => Termination::Ended(EndReason::MaxTurns),
        _ => Termination::Running,
    }
}

/// Units a GATHER yields before the node stock limit: `1 + ceil(STR / 2)`.
pub fn gather_yield(strength: u8) -> u32 {
    1 + u32::from(strength).div_ceil(2)
}

/// Trade acceptance chance for a proposer's CHA.
pub fn trade_acceptance(charisma: u8) -> f64 {
    (0.5 + 0.06 * (f64::from(charisma) - 4.5)).clamp(0.10, 0.95)
}

/// Applies one action of `agent` to the state.
pub fn resolve_action(
    state: &mut GameState,
    agent: AgentId,
    action: &Action,
    policies: &mut dyn PolicySet,
) -> Resolution {
    let mut tx = Tx::new(state);
    let alive = tx.state.agent(agent).is_some_and(|a| a.alive);
    let outcome = if !alive {
        Outcome::CancelledDead
    } else {
        match action {
            Action::Gather => gather(&mut tx, agent),
            Action::Move(path) => move_agent(&mut tx, agent, path.steps().collect()),
            Action::Attack(target) => attack(&mut tx, agent, *target),
            Action::Trade {
                target,
                offer,
                request,
            } => trade(&mut tx, agent, *target, *offer, *request),
            Action::Rest => rest(&mut tx, agent),
            Action::Train(attr) => train(&mut tx, agent, *attr),
            Action::Communicate(text) => resolve_communicate(&mut tx, agent, text),
            Action::Reproduce(target) => resolve_reproduce(&mut tx, agent, *target, policies),
        }
    };
    let (effects, message, reproduction, fault) = tx.into_effects();
    Resolution {
        outcome,
        effects,
        message,
        reproduction,
        fault,
    }
}

fn gather(tx: &mut Tx<'_>, agent: AgentId) -> Outcome {
    let a = &tx.state.agents[agent.index()];
    let Some(node_idx) = tx.state.node_at(a.position) else {
        return Outcome::FailedNoNode;
    };
    let node = &tx.state.nodes[node_idx];
    if node.stock == 0 {
        return Outcome::FailedEmpty;
    }
    let amount = node.stock.min(gather_yield(a.attrs.get(Attr::Str)));
    let kind = node.kind;
    tx.commit(Change::Stock {
        node: node_idx as u32,
        delta: -i64::from(amount),
    });
    match kind {
        crate::world::NodeKind::Food => tx.add_food(agent, i64::from(amount)),
        crate::world::NodeKind::Token => tx.add_tokens(agent, i64::from(amount)),
    }
    Outcome::Gathered { amount }
}

fn move_agent(tx: &mut Tx<'_>, agent: AgentId, dirs: Vec<crate::agent::Direction>) -> Outcome {
    let cfg = &tx.state.config;
    let (w, h, cap) = (cfg.grid_width, cfg.grid_height, cfg.cell_capacity as usize);
    let fast = tx.state.agents[agent.index()].attrs.get(Attr::Spd) >= FAST_SPD;
    let allowed = if fast { 2 } else { 1 };
    let mut steps = 0u32;
    let mut halted = dirs.len() > allowed;
    for dir in dirs.into_iter().take(allowed) {
        let here = tx.state.agents[agent.index()].position;
        match here.step(dir, w, h) {
            Some(next) if tx.state.occupancy(next) < cap => {
                tx.commit(Change::Position { agent, to: next });
                steps += 1;
            }
            _ => {
                halted = true;
                break;
            }
        }
    }
    if steps == 0 {
        Outcome::FailedBlocked
    } else {
        Outcome::Moved { steps, halted }
    }
}

fn live_target(tx: &Tx<'_>, agent: AgentId, target: AgentId) -> bool {
    target != agent && tx.state.agent(target).is_some_and(|t| t.alive)
}

fn attack(tx: &mut Tx<'_>, agent: AgentId, target: AgentId) -> Outcome {
    if !live_target(tx, agent, target) {
        return Outcome::FailedBadTarget;
    }
    let a = &tx.state.agents[agent.index()];
    let t = &tx.state.agents[target.index()];
    if a.tokens < 1 {
        return Outcome::FailedNoTokens;
    }
    if a.position != t.position {
        return Outcome::FailedNotSameCell;
    }
    let damage = u32::from(a.attrs.get(Attr::Str)).min(t.health);
    tx.pay(agent, 0, 1);
    tx.commit(Change::Health {
        agent: target,
        delta: -i64::from(damage),
    });
    let killed = tx.state.agents[target.index()].health == 0;
    if killed {
        tx.kill(target, DeathCause::Combat);
    }
    tx.reap_depleted(&[agent]);
    Outcome::Hit { damage, killed }
}

fn trade(
    tx: &mut Tx<'_>,
    agent: AgentId,
    target: AgentId,
    offer: crate::action::Bundle,
    request: crate::action::Bundle,
) -> Outcome {
    if !live_target(tx, agent, target) {
        return Outcome::FailedBadTarget;
    }
    let a = &tx.state.agents[agent.index()];
    let t = &tx.state.agents[target.index()];
    if a.position.chebyshev(t.position) > NEARBY_RANGE {
        return Outcome::FailedOutOfRange;
    }
    if offer.is_empty() && request.is_empty() {
        return Outcome::FailedBadParams;
    }
    if a.food < offer.food || a.tokens < offer.tokens {
        return Outcome::FailedInsolvent;
    }
    if t.food < request.food || t.tokens < request.tokens {
        return Outcome::FailedTargetInsolvent;
    }
    let p = trade_acceptance(a.attrs.get(Attr::Cha));
    if !tx.state.rng.random_bool(p) {
        return Outcome::TradeRejected;
    }
    let food = i64::from(request.food) - i64::from(offer.food);
    let tokens = i64::from(request.tokens) - i64::from(offer.tokens);
    tx.add_food(agent, food);
    tx.add_tokens(agent, tokens);
    tx.add_food(target, -food);
    tx.add_tokens(target, -tokens);
    tx.reap_depleted(&[agent, target]);
    Outcome::TradeAccepted
}

fn rest(tx: &mut Tx<'_>, agent: AgentId) -> Outcome {
    let a = &tx.state.agents[agent.index()];
    let recovered = u32::from(a.attrs.get(Attr::End)).min(a.max_health() - a.health);
    if recovered > 0 {
        tx.commit(Change::Health {
            agent,
            delta: i64::from(recovered),
        });
    }
    Outcome::Rested { recovered }
}

fn train(tx: &mut Tx<'_>, agent: AgentId, attr: Attr) -> Outcome {
    let a = &tx.state.agents[agent.index()];
    let progress = a.train_progress[attr.index()] + u32::from(a.attrs.get(Attr::Int));
    let current = a.attrs.get(attr);
    if progress >= TRAIN_THRESHOLD {
        let raised = current < ATTR_MAX;
        if raised {
            tx.commit(Change::Attr {
                agent,
                attr,
                value: current + 1,
            });
        }
        tx.commit(Change::Progress {
            agent,
            attr,
            value: 0,
        });
        Outcome::Trained { raised }
    } else {
        tx.commit(Change::Progress {
            agent,
            attr,
            value: progress,
        });
        Outcome::Trained { raised: false }
    }
}

/// Agent, chosen action, parse status, raw response, policy error.
type Chosen = (
    AgentId,
    Action,
    DecisionStatus,
    Option<String>,
    Option<String>,
);

/// Plays one full turn.
pub fn step(state: &mut GameState, policies: &mut dyn PolicySet) -> Result<TurnLog, EngineError> {
    if let Termination::Ended(reason) = check_termination(state) {
        return Err(EngineError::Terminated(reason));
    }
    let turn = state.turn + 1;
    let mut ledger = Ledger::default();
    let mut deaths = Vec::new();
    let mut births = Vec::new();

    let upkeep = apply_upkeep(state);
    ledger.merge(&upkeep.ledger);
    deaths.extend(upkeep.deaths);

    let actors: Vec<AgentId> = state.alive().map(|a| a.id).collect();
    let contexts: Vec<PromptContext> = actors
        .iter()
        .map(|&id| PromptContext::new(observe(state, id)))
        .collect();
    for inbox in &mut state.inbox {
        inbox.clear();
    }

    let decisions = policies.decide_all(&contexts);
    if decisions.len() != actors.len() {
        return Err(EngineError::DecisionCount {
            expected: actors.len(),
            got: decisions.len(),
        });
    }
    let mut chosen: Vec<Chosen> = actors
        .iter()
        .zip(decisions)
        .map(|(&id, d)| match d {
            Ok(d) => {
                let status = match d.parse_status {
                    ParseStatus::Ok => DecisionStatus::Ok,
                    ParseStatus::Fallback => DecisionStatus::Fallback,
                };
                let raw = (!d.raw_response.is_empty()).then_some(d.raw_response);
                (id, d.action, status, raw, None)
            }
            Err(e) => (
                id,
                Action::Rest,
                DecisionStatus::PolicyFault,
                None,
                Some(e.to_string()),
            ),
        })
        .collect();
    chosen.shuffle(&mut state.rng);

    let mut entries = Vec::with_capacity(chosen.len());
    for (agent, action, decision, raw, fault) in chosen {
        let r = resolve_action(state, agent, &action, policies);
        if r.outcome != Outcome::CancelledDead {
            state.remember_action(agent, action.clone());
        }
        ledger.merge(&r.effects.ledger);
        deaths.extend(r.effects.deaths);
        births.extend(r.effects.births);
        entries.push(ActionEntry {
            agent,
            action,
            outcome: r.outcome,
            decision,
            raw,
            fault: fault.or(r.fault),
            changes: r.effects.changes,
            message: r.message,
            reproduction: r.reproduction,
        });
    }

    let mut regen = regen_nodes(state);
    ledger.merge(&regen.ledger);

    // Final sweep; resolution already reaps, so this normally finds nothing.
    let leftover: Vec<AgentId> = state
        .alive()
        .filter(|a| a.health == 0 || a.food == 0)
        .map(|a| a.id)
        .collect();
    if !leftover.is_empty() {
        let mut tx = Tx::new(state);
        tx.reap_depleted(&leftover);
        let (fx, ..) = tx.into_effects();
        ledger.merge(&fx.ledger);
        deaths.extend(fx.deaths);
        regen.changes.extend(fx.changes);
    }

    state.turn = turn;
    Ok(TurnLog {
        turn,
        upkeep: upkeep.changes,
        entries,
        regen: regen.changes,
        deaths,
        births,
        ledger,
        alive: state.alive_count() as u32,
        digest: state.digest(),
    })
}

/// Plays turns until termination, collecting the full log.
pub fn run_game(
    state: &mut GameState,
    policies: &mut dyn PolicySet,
    label: Option<String>,
) -> Result<GameLog, EngineError> {
    let mut log = GameLog::new(state.config.clone(), label);
    loop {
        if let Termination::Ended(reason) = check_termination(state) {
            log.end = Some(EndRecord {
                turn: state.turn,
                reason,
                survivors: state.alive_count() as u32,
            });
            return Ok(log);
        }
        log.turns.push(step(state, policies)?);
    }
}
