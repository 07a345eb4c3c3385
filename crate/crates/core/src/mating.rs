//! Sexual-selection extension: provider/chooser roles, vitality endowments,
//! COMMUNICATE, and REPRODUCE proposals with chooser evaluation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::action::single_line;
use crate::agent::{
    AgentId, AgentState, Attr, Attributes, Role, ATTR_MAX, ATTR_MIN, VITALITY_MAX, VITALITY_MIN,
};
use crate::config::{ConfigError, EngineVariant};
use crate::engine::{Outcome, Tx};
use crate::log::Change;
use crate::policy::{PolicySet, ProposalContext, ProviderView};
use crate::world::Message;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproductionEvent {
    pub turn: u32,
    pub proposer: AgentId,
    pub chooser: AgentId,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offspring: Option<AgentId>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub chooser_insolvent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageEvent {
    pub turn: u32,
    pub sender: AgentId,
    pub text: String,
    pub recipients: Vec<AgentId>,
}

/// Tags exactly half the agents as providers and half as choosers.
pub fn assign_roles<R: Rng + ?Sized>(
    agents: &mut [AgentState],
    rng: &mut R,
) -> Result<(), ConfigError> {
    if !agents.len().is_multiple_of(2) {
        return Err(ConfigError::Invalid(vec![format!(
            "role assignment needs an even population, got {}",
            agents.len()
        )]));
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.shuffle(rng);
    let half = agents.len() / 2;
    for (rank, idx) in order.into_iter().enumerate() {
        agents[idx].role = if rank < half {
            Role::Provider
        } else {
            Role::Chooser
        };
    }
    Ok(())
}

/// Starting `(food, tokens)` for a vitality level: `30 + 3v` food, `8 + v` tokens.
pub fn vitality_endowment(vitality: u8) -> Result<(u32, u32), ConfigError> {
    if !(VITALITY_MIN..=VITALITY_MAX).contains(&vitality) {
        return Err(ConfigError::Invalid(vec![format!(
            "vitality {vitality} outside {VITALITY_MIN}..={VITALITY_MAX}"
        )]));
    }
    let v = u32::from(vitality);
    Ok((30 + 3 * v, 8 + v))
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Child of two parents: attributes are the parental mean plus Gaussian
/// noise, rounded half-up and clipped to `[1, 10]`; vitality is the rounded
/// parental mean; role is a fair coin.
pub fn make_offspring<R: Rng + ?Sized>(
    parent_a: &AgentState,
    parent_b: &AgentState,
    id: AgentId,
    sigma: f64,
    rng: &mut R,
) -> AgentState {
    let noise = Normal::new(0.0, sigma).expect("sigma validated positive");
    let mut attrs = Attributes::uniform(ATTR_MIN);
    for attr in Attr::ALL {
        let mean =
            (f64::from(parent_a.attrs.get(attr)) + f64::from(parent_b.attrs.get(attr))) / 2.0;
        let value =
            round_half_up(mean + noise.sample(rng)).clamp(f64::from(ATTR_MIN), f64::from(ATTR_MAX));
        attrs.set(attr, value as u8);
    }
    let vitality =
        round_half_up((f64::from(parent_a.vitality) + f64::from(parent_b.vitality)) / 2.0) as u8;
    let role = if rng.random_bool(0.5) {
        Role::Provider
    } else {
        Role::Chooser
    };
    let (food, tokens) = vitality_endowment(vitality).expect("mean of valid vitalities is valid");
    AgentState::new(id, parent_a.position, attrs, food, tokens, role, vitality)
}

/// Pays the token cost, reveals the sender's stats, and queues the message
/// for every alive agent within SOC (Chebyshev) cells.
pub(crate) fn resolve_communicate(tx: &mut Tx<'_>, sender: AgentId, text: &str) -> Outcome {
    let cfg = tx.state.config.mating;
    let turn = tx.turn();
    let s = &tx.state.agents[sender.index()];
    if tx.state.config.engine_variant != EngineVariant::SexualSelection {
        return Outcome::FailedWrongVariant;
    }
    if s.tokens < cfg.communicate_token_cost {
        return Outcome::FailedNoTokens;
    }
    let (origin, range) = (s.position, u32::from(s.attrs.get(Attr::Soc)));
    tx.pay(sender, 0, cfg.communicate_token_cost);
    tx.commit(Change::Reveal {
        agent: sender,
        until: turn + cfg.reveal_duration,
    });
    let recipients: Vec<AgentId> = tx
        .state
        .alive()
        .filter(|a| a.id != sender && a.position.chebyshev(origin) <= range)
        .map(|a| a.id)
        .collect();
    let text = single_line(text);
    for r in &recipients {
        tx.state.inbox[r.index()].push(Message {
            sender,
            text: text.clone(),
        });
    }
    let count = recipients.len() as u32;
    tx.message = Some(MessageEvent {
        turn,
        sender,
        text,
        recipients,
    });
    Outcome::Communicated { recipients: count }
}

/// Provider `proposer` asks `chooser` (same cell) to reproduce.
pub(crate) fn resolve_reproduce(
    tx: &mut Tx<'_>,
    proposer: AgentId,
    chooser: AgentId,
    policies: &mut dyn PolicySet,
) -> Outcome {
    let cfg = tx.state.config.mating;
    let turn = tx.turn();
    if tx.state.config.engine_variant != EngineVariant::SexualSelection {
        return Outcome::FailedWrongVariant;
    }
    let p = &tx.state.agents[proposer.index()];
    let Some(c) = tx
        .state
        .agent(chooser)
        .filter(|c| c.alive && c.id != proposer)
    else {
        return Outcome::FailedBadTarget;
    };
    if p.role != Role::Provider || c.role != Role::Chooser {
        return Outcome::FailedRole;
    }
    if p.position != c.position {
        return Outcome::FailedNotSameCell;
    }
    if p.food < cfg.provider_food_cost || p.tokens < cfg.provider_token_cost {
        return Outcome::FailedInsolvent;
    }
    let cell = p.position;
    if tx.state.occupancy(cell) >= tx.state.config.cell_capacity as usize {
        return Outcome::FailedCellFull;
    }
    let chooser_solvent = c.food >= cfg.chooser_food_cost && c.tokens >= cfg.chooser_token_cost;
    let context = ProposalContext {
        turn,
        chooser: c.clone(),
        provider: ProviderView::of(p),
        chooser_food_cost: cfg.chooser_food_cost,
        chooser_token_cost: cfg.chooser_token_cost,
        pays_on_reject: cfg.chooser_pays_on_reject,
    };

    tx.pay(proposer, cfg.provider_food_cost, cfg.provider_token_cost);

    let mut event = ReproductionEvent {
        turn,
        proposer,
        chooser,
        accepted: false,
        offspring: None,
        chooser_insolvent: !chooser_solvent,
    };
    let outcome = if !chooser_solvent {
        Outcome::ChooserInsolvent
    } else {
        let accepted = match policies.evaluate_proposal(&context) {
            Ok(verdict) => verdict,
            Err(e) => {
                tx.fault = Some(format!("chooser {chooser}: {e}"));
                false
            }
        };
        if accepted || cfg.chooser_pays_on_reject {
            tx.pay(chooser, cfg.chooser_food_cost, cfg.chooser_token_cost);
        }
        if accepted {
            let id = AgentId(tx.state.next_agent_id);
            let sigma = cfg.mutation_sigma;
            let (a, b) = (
                &tx.state.agents[proposer.index()],
                &tx.state.agents[chooser.index()],
            );
            let (a, b) = (a.clone(), b.clone());
            let child = make_offspring(&a, &b, id, sigma, &mut tx.state.rng);
            tx.ledger.food.endowment += u64::from(child.food);
            tx.ledger.tokens.endowment += u64::from(child.tokens);
            tx.commit(Change::Birth { state: child });
            tx.births.push(id);
            event.accepted = true;
            event.offspring = Some(id);
            Outcome::Reproduced { offspring: id }
        } else {
            Outcome::ProposalRejected
        }
    };
    tx.reproduction = Some(event);
    tx.reap_depleted(&[proposer, chooser]);
    outcome
}
