//! Deterministic multi-agent survival arena: world model, turn engine,
//! reproduction rules, policy boundary, structured logs and metrics.

pub mod action;
pub mod agent;
pub mod config;
pub mod engine;
pub mod log;
pub mod mating;
pub mod metrics;
pub mod observe;
pub mod policy;
pub mod world;

pub use action::{parse_action, Action, ActionKind, Bundle, MovePath};
pub use agent::{AgentId, AgentState, Attr, Attributes, Direction, Pos, Role};
pub use config::{ConfigError, EngineVariant, GameConfig, MatingConfig};
pub use engine::{run_game, step, EndReason, EngineError, Outcome, Termination};
pub use log::{replay, GameLog, TurnLog};
pub use metrics::{normalized_entropy, summarize, MetricsSummary};
pub use policy::{Policy, PolicyDecision, PolicyError, PolicyMap, PolicySet, PromptContext};
pub use world::{new_game, GameState};
