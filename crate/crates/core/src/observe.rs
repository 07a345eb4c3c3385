use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::agent::{AgentId, AgentState, Attr, Attributes, Pos, Role};
use crate::config::EngineVariant;
use crate::engine::NEARBY_RANGE;
use crate::world::{GameState, Message, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearbyAgent {
    pub id: AgentId,
    pub position: Pos,
    pub approx_food: u32,
    pub approx_tokens: u32,
    /// Roles are public in the sexual-selection variant.
    pub role: Option<Role>,
    /// Present only while the agent's stats are revealed.
    pub attrs: Option<Attributes>,
    pub vitality: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub position: Pos,
    pub kind: NodeKind,
    pub stock: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    /// Turn about to be played.
    pub turn: u32,
    pub variant: EngineVariant,
    pub grid_width: u32,
    pub grid_height: u32,
    pub self_state: AgentState,
    pub nearby: Vec<NearbyAgent>,
    pub nodes: Vec<NodeView>,
    pub recent_actions: Vec<Action>,
    pub messages: Vec<Message>,
}

/// Resource reading granularity for an observer: `max(1, 8 - SOC)`.
pub fn bucket_width(soc: u8) -> u32 {
    8u32.saturating_sub(u32::from(soc)).max(1)
}

/// Rounds `value` to the nearest multiple of `width`, halves rounding up.
pub fn quantize(value: u32, width: u32) -> u32 {
    (value + width / 2) / width * width
}

/// What `agent` sees at the start of the coming turn.
pub fn observe(state: &GameState, agent: AgentId) -> Observation {
    let me = &state.agents[agent.index()];
    let turn = state.turn + 1;
    let width = bucket_width(me.attrs.get(Attr::Soc));
    let sexual = state.config.engine_variant == EngineVariant::SexualSelection;
    let nearby = state
        .alive()
        .filter(|o| o.id != agent && o.position.chebyshev(me.position) <= NEARBY_RANGE)
        .map(|o| {
            let revealed = o.is_revealed_at(turn);
            NearbyAgent {
                id: o.id,
                position: o.position,
                approx_food: quantize(o.food, width),
                approx_tokens: quantize(o.tokens, width),
                role: sexual.then_some(o.role),
                attrs: revealed.then_some(o.attrs),
                vitality: revealed.then_some(o.vitality),
            }
        })
        .collect();
    let nodes = state
        .nodes
        .iter()
        .filter(|n| n.position.chebyshev(me.position) <= NEARBY_RANGE)
        .map(|n| NodeView {
            position: n.position,
            kind: n.kind,
            stock: n.stock,
        })
        .collect();
    Observation {
        turn,
        variant: state.config.engine_variant,
        grid_width: state.config.grid_width,
        grid_height: state.config.grid_height,
        self_state: me.clone(),
        nearby,
        nodes,
        recent_actions: state.recent_actions(agent),
        messages: state.inbox.get(agent.index()).cloned().unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_widths() {
        assert_eq!(bucket_width(8), 1);
        assert_eq!(bucket_width(10), 1);
        assert_eq!(bucket_width(2), 6);
        assert_eq!(bucket_width(1), 7);
    }

    #[test]
    fn quantization_rounds_to_nearest_bucket() {
        // Oracle: nearest multiple of the width, ties upward.
        let oracle = |v: u32, w: u32| -> u32 {
            (0..=v + w)
                .step_by(w as usize)
                .min_by_key(|m| (m.abs_diff(v), u32::MAX - m))
                .unwrap()
        };
        assert_eq!(quantize(37, 6), 36);
        for w in 1..=7 {
            for v in 0..200 {
                assert_eq!(quantize(v, w), oracle(v, w), "v={v} w={w}");
            }
        }
        for v in 0..100 {
            assert_eq!(quantize(v, 1), v);
        }
    }
}
