use std::collections::VecDeque;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::Action;
use crate::agent::{
    generate_attributes, AgentId, AgentState, Pos, Role, VITALITY_MAX, VITALITY_MIN,
};
use crate::config::{ConfigError, EngineVariant, GameConfig};
use crate::mating::{assign_roles, vitality_endowment};

pub const SURVIVAL_START_FOOD: u32 = 60;
pub const SURVIVAL_START_TOKENS: u32 = 10;
pub const SURVIVAL_VITALITY: u8 = 5;
/// Node stock cap as a multiple of the regeneration rate.
pub const STOCK_CAP_FACTOR: u32 = 5;
pub const RECENT_ACTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Food,
    Token,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Food => "food",
            NodeKind::Token => "token",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceNode {
    pub position: Pos,
    pub kind: NodeKind,
    pub stock: u32,
    pub regen: u32,
    pub stock_cap: u32,
}

/// A message waiting to be shown in the recipient's next observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    /// Completed turns.
    pub turn: u32,
    pub agents: Vec<AgentState>,
    pub nodes: Vec<ResourceNode>,
    pub config: GameConfig,
    pub rng: ChaCha8Rng,
    pub next_agent_id: u32,
    pub(crate) recent_actions: Vec<VecDeque<Action>>,
    pub(crate) inbox: Vec<Vec<Message>>,
}

/// Places food nodes then token nodes on distinct cells, each starting full.
pub fn place_nodes<R: Rng + ?Sized>(
    rng: &mut R,
    config: &GameConfig,
) -> Result<Vec<ResourceNode>, ConfigError> {
    let cells = config.cells();
    let wanted = u64::from(config.n_food_nodes) + u64::from(config.n_token_nodes);
    if wanted > cells {
        return Err(ConfigError::Invalid(vec![format!(
            "n_food_nodes + n_token_nodes = {wanted} exceeds {cells} cells"
        )]));
    }
    let picks = sample(rng, cells as usize, wanted as usize);
    let width = config.grid_width;
    Ok(picks
        .into_iter()
        .enumerate()
        .map(|(i, cell)| {
            let (kind, regen) = if (i as u32) < config.n_food_nodes {
                (NodeKind::Food, config.food_regen)
            } else {
                (NodeKind::Token, config.token_regen)
            };
            let stock_cap = STOCK_CAP_FACTOR * regen;
            ResourceNode {
                position: Pos::new(cell as u32 % width, cell as u32 / width),
                kind,
                stock: stock_cap,
                regen,
                stock_cap,
            }
        })
        .collect())
}

/// Builds the initial state. Identical configs give identical states.
pub fn new_game(config: GameConfig) -> Result<GameState, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nodes = place_nodes(&mut rng, &config)?;

    let n = config.n_agents as usize;
    let capacity = config.cell_capacity as usize;
    let mut occupancy = vec![0usize; config.cells() as usize];
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let attrs = generate_attributes(&mut rng);
        let cell = loop {
            let c = rng.random_range(0..occupancy.len());
            if occupancy[c] < capacity {
                break c;
            }
        };
        occupancy[cell] += 1;
        let position = Pos::new(
            cell as u32 % config.grid_width,
            cell as u32 / config.grid_width,
        );
        let agent = match config.engine_variant {
            EngineVariant::Survival => AgentState::new(
                AgentId(i as u32),
                position,
                attrs,
                SURVIVAL_START_FOOD,
                SURVIVAL_START_TOKENS,
                Role::None,
                SURVIVAL_VITALITY,
            ),
            EngineVariant::SexualSelection => {
                let vitality = rng.random_range(VITALITY_MIN..=VITALITY_MAX);
                let (food, tokens) =
                    vitality_endowment(vitality).expect("vitality drawn within range");
                AgentState::new(
                    AgentId(i as u32),
                    position,
                    attrs,
                    food,
                    tokens,
                    Role::None,
                    vitality,
                )
            }
        };
        agents.push(agent);
    }
    if config.engine_variant == EngineVariant::SexualSelection {
        assign_roles(&mut agents, &mut rng)?;
    }

    Ok(GameState {
        turn: 0,
        recent_actions: vec![VecDeque::new(); n],
        inbox: vec![Vec::new(); n],
        next_agent_id: n as u32,
        agents,
        nodes,
        config,
        rng,
    })
}

#[derive(Serialize)]
struct DigestView<'a> {
    turn: u32,
    agents: &'a [AgentState],
    nodes: &'a [ResourceNode],
}

impl GameState {
    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.get(id.index())
    }

    pub fn alive(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.iter().filter(|a| a.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn occupancy(&self, pos: Pos) -> usize {
        self.alive().filter(|a| a.position == pos).count()
    }

    pub fn node_at(&self, pos: Pos) -> Option<usize> {
        self.nodes.iter().position(|n| n.position == pos)
    }

    /// Food and tokens held by agents plus node stocks.
    pub fn totals(&self) -> (u64, u64) {
        let mut food: u64 = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Food)
            .map(|n| u64::from(n.stock))
            .sum();
        let mut tokens: u64 = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Token)
            .map(|n| u64::from(n.stock))
            .sum();
        for a in &self.agents {
            food += u64::from(a.food);
            tokens += u64::from(a.tokens);
        }
        (food, tokens)
    }

    pub fn recent_actions(&self, id: AgentId) -> Vec<Action> {
        self.recent_actions
            .get(id.index())
            .map(|q| q.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub(crate) fn remember_action(&mut self, id: AgentId, action: Action) {
        let q = &mut self.recent_actions[id.index()];
        if q.len() == RECENT_ACTIONS {
            q.pop_front();
        }
        q.push_back(action);
    }

    /// SHA-256 over the canonical JSON of turn, agents and nodes.
    pub fn digest(&self) -> String {
        let view = DigestView {
            turn: self.turn,
            agents: &self.agents,
            nodes: &self.nodes,
        };
        let bytes = serde_json::to_vec(&view).expect("state serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
