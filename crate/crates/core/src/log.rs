//! Append-only game log and its line-delimited JSON form.
//!
//! Every state mutation the engine performs is a [`Change`]; folding the
//! changes of a log over `new_game(config)` reproduces the final state. Each
//! line of the serialized log is one [`Record`] with a fixed field order and
//! integer-only state, so identical games produce identical bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::agent::{AgentId, AgentState, Attr, Pos};
use crate::config::{ConfigError, GameConfig};
use crate::engine::{EndReason, Outcome};
use crate::mating::{MessageEvent, ReproductionEvent};
use crate::world::{new_game, GameState, NodeKind};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Change {
    Food {
        agent: AgentId,
        delta: i64,
    },
    Tokens {
        agent: AgentId,
        delta: i64,
    },
    Health {
        agent: AgentId,
        delta: i64,
    },
    Position {
        agent: AgentId,
        to: Pos,
    },
    Attr {
        agent: AgentId,
        attr: Attr,
        value: u8,
    },
    Progress {
        agent: AgentId,
        attr: Attr,
        value: u32,
    },
    Reveal {
        agent: AgentId,
        until: u32,
    },
    Stock {
        node: u32,
        delta: i64,
    },
    /// The agent dies; whatever it still holds is forfeited.
    Death {
        agent: AgentId,
        food: u32,
        tokens: u32,
    },
    Birth {
        state: AgentState,
    },
}

fn shifted(value: u32, delta: i64) -> Result<u32, String> {
    u32::try_from(i64::from(value) + delta).map_err(|_| format!("{value} {delta:+} out of range"))
}

impl Change {
    pub fn apply(&self, state: &mut GameState) -> Result<(), String> {
        fn agent_mut(agents: &mut [AgentState], id: AgentId) -> Result<&mut AgentState, String> {
            agents
                .get_mut(id.index())
                .ok_or_else(|| format!("unknown agent {id}"))
        }
        macro_rules! agent {
            ($id:expr) => {
                agent_mut(&mut state.agents, $id)?
            };
        }
        match self {
            Change::Food { agent, delta } => {
                let a = agent!(*agent);
                a.food = shifted(a.food, *delta)?;
            }
            Change::Tokens { agent, delta } => {
                let a = agent!(*agent);
                a.tokens = shifted(a.tokens, *delta)?;
            }
            Change::Health { agent, delta } => {
                let a = agent!(*agent);
                a.health = shifted(a.health, *delta)?;
            }
            Change::Position { agent, to } => agent!(*agent).position = *to,
            Change::Attr { agent, attr, value } => agent!(*agent).attrs.set(*attr, *value),
            Change::Progress { agent, attr, value } => {
                agent!(*agent).train_progress[attr.index()] = *value
            }
            Change::Reveal { agent, until } => agent!(*agent).revealed_until = *until,
            Change::Stock { node, delta } => {
                let n = state
                    .nodes
                    .get_mut(*node as usize)
                    .ok_or_else(|| format!("unknown node {node}"))?;
                n.stock = shifted(n.stock, *delta)?;
            }
            Change::Death {
                agent,
                food,
                tokens,
            } => {
                let a = agent!(*agent);
                if !a.alive || a.food != *food || a.tokens != *tokens {
                    return Err(format!("death of {agent} does not match its state"));
                }
                a.alive = false;
                a.food = 0;
                a.tokens = 0;
            }
            Change::Birth { state: child } => {
                if child.id.index() != state.agents.len() {
                    return Err(format!("birth of {} out of sequence", child.id));
                }
                state.agents.push(child.clone());
                state.recent_actions.push(Default::default());
                state.inbox.push(Vec::new());
                state.next_agent_id = state.next_agent_id.max(child.id.0 + 1);
            }
        }
        Ok(())
    }
}

/// Sources and sinks of one resource over some span of play.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flows {
    pub regen: u64,
    pub endowment: u64,
    pub upkeep: u64,
    pub costs: u64,
    pub death_loss: u64,
}

impl Flows {
    pub fn net(&self) -> i64 {
        (self.regen + self.endowment) as i64 - (self.upkeep + self.costs + self.death_loss) as i64
    }

    fn add(&mut self, other: &Flows) {
        self.regen += other.regen;
        self.endowment += other.endowment;
        self.upkeep += other.upkeep;
        self.costs += other.costs;
        self.death_loss += other.death_loss;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub food: Flows,
    pub tokens: Flows,
}

impl Ledger {
    pub fn merge(&mut self, other: &Ledger) {
        self.food.add(&other.food);
        self.tokens.add(&other.tokens);
    }

    pub fn flows_mut(&mut self, kind: NodeKind) -> &mut Flows {
        match kind {
            NodeKind::Food => &mut self.food,
            NodeKind::Token => &mut self.tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathCause {
    Starvation,
    Combat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeathRecord {
    pub agent: AgentId,
    pub cause: DeathCause,
}

/// How the action of an entry was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionStatus {
    Ok,
    /// Response could not be parsed; REST was substituted.
    Fallback,
    /// The policy itself failed; REST was substituted.
    PolicyFault,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionEntry {
    pub agent: AgentId,
    pub action: Action,
    pub outcome: Outcome,
    pub decision: DecisionStatus,
    pub raw: Option<String>,
    pub fault: Option<String>,
    pub changes: Vec<Change>,
    pub message: Option<MessageEvent>,
    pub reproduction: Option<ReproductionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnLog {
    pub turn: u32,
    pub upkeep: Vec<Change>,
    /// In resolution order.
    pub entries: Vec<ActionEntry>,
    pub regen: Vec<Change>,
    pub deaths: Vec<DeathRecord>,
    pub births: Vec<AgentId>,
    pub ledger: Ledger,
    pub alive: u32,
    pub digest: String,
}

impl ActionEntry {
    /// An entry with no state changes, as used for hand-built logs.
    pub fn bare(agent: AgentId, action: Action, outcome: Outcome) -> Self {
        Self {
            agent,
            action,
            outcome,
            decision: DecisionStatus::Ok,
            raw: None,
            fault: None,
            changes: Vec::new(),
            message: None,
            reproduction: None,
        }
    }
}

impl TurnLog {
    /// A turn holding only the given entries; state fields are left empty.
    pub fn bare(turn: u32, entries: Vec<ActionEntry>, alive: u32) -> Self {
        Self {
            turn,
            upkeep: Vec::new(),
            entries,
            regen: Vec::new(),
            deaths: Vec::new(),
            births: Vec::new(),
            ledger: Ledger::default(),
            alive,
            digest: String::new(),
        }
    }

    pub fn changes(&self) -> impl Iterator<Item = &Change> {
        self.upkeep
            .iter()
            .chain(self.entries.iter().flat_map(|e| e.changes.iter()))
            .chain(self.regen.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndRecord {
    pub turn: u32,
    pub reason: EndReason,
    pub survivors: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameLog {
    pub label: Option<String>,
    pub config: GameConfig,
    pub turns: Vec<TurnLog>,
    pub end: Option<EndRecord>,
}

/// One line of the serialized log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Header {
        format: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        config: GameConfig,
    },
    Upkeep {
        turn: u32,
        changes: Vec<Change>,
    },
    Action {
        turn: u32,
        agent: AgentId,
        action: Action,
        outcome: Outcome,
        decision: DecisionStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        raw: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fault: Option<String>,
        changes: Vec<Change>,
    },
    Message(MessageEvent),
    Reproduction(ReproductionEvent),
    Regen {
        turn: u32,
        changes: Vec<Change>,
    },
    TurnEnd {
        turn: u32,
        alive: u32,
        deaths: Vec<DeathRecord>,
        births: Vec<AgentId>,
        ledger: Ledger,
        digest: String,
    },
    End(EndRecord),
}

#[derive(Debug, Error, PartialEq)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("log has no header")]
    MissingHeader,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("turn {turn}: change rejected: {message}")]
    BadChange { turn: u32, message: String },
    #[error("turn {turn}: state digest mismatch (logged {logged}, replayed {replayed})")]
    DigestMismatch {
        turn: u32,
        logged: String,
        replayed: String,
    },
    #[error("turn {turn}: logged alive count {logged} but replay has {replayed}")]
    AliveMismatch {
        turn: u32,
        logged: u32,
        replayed: u32,
    },
}

impl TurnLog {
    fn records(&self) -> Vec<Record> {
        let turn = self.turn;
        let mut out = Vec::with_capacity(self.entries.len() + 3);
        out.push(Record::Upkeep {
            turn,
            changes: self.upkeep.clone(),
        });
        for e in &self.entries {
            out.push(Record::Action {
                turn,
                agent: e.agent,
                action: e.action.clone(),
                outcome: e.outcome.clone(),
                decision: e.decision,
                raw: e.raw.clone(),
                fault: e.fault.clone(),
                changes: e.changes.clone(),
            });
            if let Some(m) = &e.message {
                out.push(Record::Message(m.clone()));
            }
            if let Some(r) = &e.reproduction {
                out.push(Record::Reproduction(r.clone()));
            }
        }
        out.push(Record::Regen {
            turn,
            changes: self.regen.clone(),
        });
        out.push(Record::TurnEnd {
            turn,
            alive: self.alive,
            deaths: self.deaths.clone(),
            births: self.births.clone(),
            ledger: self.ledger,
            digest: self.digest.clone(),
        });
        out
    }
}

impl GameLog {
    pub fn new(config: GameConfig, label: Option<String>) -> Self {
        Self {
            label,
            config,
            turns: Vec::new(),
            end: None,
        }
    }

    pub fn records(&self) -> Vec<Record> {
        let mut out = vec![Record::Header {
            format: LOG_FORMAT_VERSION,
            label: self.label.clone(),
            config: self.config.clone(),
        }];
        for t in &self.turns {
            out.extend(t.records());
        }
        if let Some(end) = self.end {
            out.push(Record::End(end));
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for record in self.records() {
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LogError> {
        let mut log: Option<GameLog> = None;
        let mut open: Option<TurnLog> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let bad = |message: String| LogError::Malformed { line, message };
            if raw.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
            if let Record::Header {
                format,
                label,
                config,
            } = record
            {
                if log.is_some() {
                    return Err(bad("second header".into()));
                }
                if format != LOG_FORMAT_VERSION {
                    return Err(bad(format!("unsupported log format {format}")));
                }
                log = Some(GameLog::new(config, label));
                continue;
            }
            let game = log.as_mut().ok_or(LogError::MissingHeader)?;
            if game.end.is_some() {
                return Err(bad("record after end".into()));
            }
            match record {
                Record::Header { .. } => unreachable!(),
                Record::Upkeep { turn, changes } => {
                    if open.is_some() {
                        return Err(bad("turn started before previous turn ended".into()));
                    }
                    let expected = game.turns.last().map_or(1, |t| t.turn + 1);
                    if turn != expected {
                        return Err(bad(format!("expected turn {expected}, got {turn}")));
                    }
                    open = Some(TurnLog {
                        turn,
                        upkeep: changes,
                        entries: Vec::new(),
                        regen: Vec::new(),
                        deaths: Vec::new(),
                        births: Vec::new(),
                        ledger: Ledger::default(),
                        alive: 0,
                        digest: String::new(),
                    });
                }
                Record::Action {
                    turn,
                    agent,
                    action,
                    outcome,
                    decision,
                    raw,
                    fault,
                    changes,
                } => {
                    let t = open
                        .as_mut()
                        .filter(|t| t.turn == turn)
                        .ok_or_else(|| bad("action outside its turn".into()))?;
                    t.entries.push(ActionEntry {
                        agent,
                        action,
                        outcome,
                        decision,
                        raw,
                        fault,
                        changes,
                        message: None,
                        reproduction: None,
                    });
                }
                Record::Message(m) => {
                    let entry = open
                        .as_mut()
                        .filter(|t| t.turn == m.turn)
                        .and_then(|t| t.entries.last_mut())
                        .filter(|e| e.agent == m.sender && e.message.is_none())
                        .ok_or_else(|| bad("message without matching action".into()))?;
                    entry.message = Some(m);
                }
                Record::Reproduction(r) => {
                    let entry = open
                        .as_mut()
                        .filter(|t| t.turn == r.turn)
                        .and_then(|t| t.entries.last_mut())
                        .filter(|e| e.agent == r.proposer && e.reproduction.is_none())
                        .ok_or_else(|| bad("reproduction without matching action".into()))?;
                    entry.reproduction = Some(r);
                }
                Record::Regen { turn, changes } => {
                    let t = open
                        .as_mut()
                        .filter(|t| t.turn == turn)
                        .ok_or_else(|| bad("regen outside its turn".into()))?;
                    t.regen = changes;
                }
                Record::TurnEnd {
                    turn,
                    alive,
                    deaths,
                    births,
                    ledger,
                    digest,
                } => {
                    let mut t = open
                        .take()
                        .filter(|t| t.turn == turn)
                        .ok_or_else(|| bad("turn end without turn".into()))?;
                    t.alive = alive;
                    t.deaths = deaths;
                    t.births = births;
                    t.ledger = ledger;
                    t.digest = digest;
                    game.turns.push(t);
                }
                Record::End(end) => {
                    if open.is_some() {
                        return Err(bad("end inside an unfinished turn".into()));
                    }
                    game.end = Some(end);
                }
            }
        }
        if let Some(t) = open {
            return Err(LogError::Malformed {
                line: text.lines().count(),
                message: format!("turn {} never ended", t.turn),
            });
        }
        log.ok_or(LogError::MissingHeader)
    }

    /// Every action entry of the game, in order.
    pub fn entries(&self) -> impl Iterator<Item = &ActionEntry> {
        self.turns.iter().flat_map(|t| t.entries.iter())
    }
}

/// Rebuilds the state by folding every logged change over the initial
/// state, checking the logged digest after each turn.
pub fn replay(log: &GameLog) -> Result<GameState, ReplayError> {
    let mut state = new_game(log.config.clone())?;
    for t in &log.turns {
        for change in t.changes() {
            change
                .apply(&mut state)
                .map_err(|message| ReplayError::BadChange {
                    turn: t.turn,
                    message,
                })?;
        }
        state.turn = t.turn;
        let alive = state.alive_count() as u32;
        if alive != t.alive {
            return Err(ReplayError::AliveMismatch {
                turn: t.turn,
                logged: t.alive,
                replayed: alive,
            });
        }
        let digest = state.digest();
        if digest != t.digest {
            return Err(ReplayError::DigestMismatch {
                turn: t.turn,
                logged: t.digest.clone(),
                replayed: digest,
            });
        }
    }
    Ok(state)
}
