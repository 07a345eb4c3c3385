//! Decision boundary between the engine and whatever chooses actions.

mod prompt;
mod scripted;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, Action, ActionKind};
use crate::agent::{AgentId, AgentState, Attributes, Pos, Role};
use crate::config::{EngineVariant, GameConfig};
use crate::observe::Observation;

pub use prompt::{build_prompt, build_proposal_prompt, parse_verdict, BANNED_HINT_WORDS};
pub use scripted::{ScriptedKind, ScriptedPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDecision {
    pub action: Action,
    /// Empty for scripted policies.
    pub raw_response: String,
    pub parse_status: ParseStatus,
}

impl PolicyDecision {
    pub fn scripted(action: Action) -> Self {
        Self {
            action,
            raw_response: String::new(),
            parse_status: ParseStatus::Ok,
        }
    }

    /// Parses a free-text response; unparseable text becomes REST.
    pub fn from_response(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        match parse_action(&raw) {
            Ok(action) => Self {
                action,
                raw_response: raw,
                parse_status: ParseStatus::Ok,
            },
            Err(_) => Self {
                action: Action::Rest,
                raw_response: raw,
                parse_status: ParseStatus::Fallback,
            },
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("policy failed: {0}")]
pub struct PolicyError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContext {
    pub observation: Observation,
    pub available_actions: Vec<ActionKind>,
    pub turn: u32,
}

impl PromptContext {
    pub fn new(observation: Observation) -> Self {
        let available_actions = available_actions(observation.variant, observation.self_state.role);
        Self {
            turn: observation.turn,
            observation,
            available_actions,
        }
    }

    pub fn agent(&self) -> AgentId {
        self.observation.self_state.id
    }
}

/// Survival actions, plus COMMUNICATE in the sexual-selection variant and
/// REPRODUCE for its providers.
pub fn available_actions(variant: EngineVariant, role: Role) -> Vec<ActionKind> {
    let mut out = ActionKind::SURVIVAL.to_vec();
    if variant == EngineVariant::SexualSelection {
        out.push(ActionKind::Communicate);
        if role == Role::Provider {
            out.push(ActionKind::Reproduce);
        }
    }
    out
}

/// Everything a chooser is shown about a proposing provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderView {
    pub id: AgentId,
    pub position: Pos,
    pub food: u32,
    pub tokens: u32,
    pub health: u32,
    pub max_health: u32,
    pub attrs: Attributes,
    pub vitality: u8,
}

impl ProviderView {
    pub fn of(a: &AgentState) -> Self {
        Self {
            id: a.id,
            position: a.position,
            food: a.food,
            tokens: a.tokens,
            health: a.health,
            max_health: a.max_health(),
            attrs: a.attrs,
            vitality: a.vitality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposalContext {
    pub turn: u32,
    pub chooser: AgentState,
    pub provider: ProviderView,
    pub chooser_food_cost: u32,
    pub chooser_token_cost: u32,
    pub pays_on_reject: bool,
}

/// One agent's decision function. Implementations must depend only on the
/// context and their own configuration, so replaying the same contexts
/// replays the same decisions.
pub trait Policy: Send + Sync {
    fn decide(&self, ctx: &PromptContext) -> Result<PolicyDecision, PolicyError>;

    /// Chooser's verdict on a reproduction proposal.
    fn evaluate_proposal(&self, ctx: &ProposalContext) -> Result<bool, PolicyError> {
        Ok(ctx.provider.vitality >= 5)
    }
}

/// What the engine talks to: a batch of decisions per turn plus the
/// occasional synchronous proposal evaluation.
pub trait PolicySet {
    /// One result per context, in the same order.
    fn decide_all(
        &mut self,
        contexts: &[PromptContext],
    ) -> Vec<Result<PolicyDecision, PolicyError>>;

    fn evaluate_proposal(&mut self, ctx: &ProposalContext) -> Result<bool, PolicyError>;
}

/// Per-agent policies: explicit assignments first, otherwise
/// `rotation[id % rotation.len()]`. Offspring fall through to the rotation.
#[derive(Clone)]
pub struct PolicyMap {
    assigned: BTreeMap<AgentId, Arc<dyn Policy>>,
    rotation: Vec<Arc<dyn Policy>>,
}

impl PolicyMap {
    pub fn uniform(policy: impl Policy + 'static) -> Self {
        Self::rotation(vec![Arc::new(policy)])
    }

    pub fn rotation(rotation: Vec<Arc<dyn Policy>>) -> Self {
        assert!(!rotation.is_empty(), "policy rotation cannot be empty");
        Self {
            assigned: BTreeMap::new(),
            rotation,
        }
    }

    /// Round-robin of scripted baselines configured for `config`.
    pub fn scripted(kinds: &[ScriptedKind], config: &GameConfig) -> Self {
        Self::rotation(
            kinds
                .iter()
                .map(|&k| Arc::new(ScriptedPolicy::new(k, config)) as Arc<dyn Policy>)
                .collect(),
        )
    }

    pub fn assign(mut self, agent: AgentId, policy: Arc<dyn Policy>) -> Self {
        self.assigned.insert(agent, policy);
        self
    }

    pub fn policy_for(&self, agent: AgentId) -> &Arc<dyn Policy> {
        self.assigned
            .get(&agent)
            .unwrap_or_else(|| &self.rotation[agent.index() % self.rotation.len()])
    }
}

impl PolicySet for PolicyMap {
    fn decide_all(
        &mut self,
        contexts: &[PromptContext],
    ) -> Vec<Result<PolicyDecision, PolicyError>> {
        contexts
            .iter()
            .map(|ctx| self.policy_for(ctx.agent()).decide(ctx))
            .collect()
    }

    fn evaluate_proposal(&mut self, ctx: &ProposalContext) -> Result<bool, PolicyError> {
        self.policy_for(ctx.chooser.id).evaluate_proposal(ctx)
    }
}
