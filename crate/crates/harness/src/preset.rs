//! Phase presets: the base configuration, experiment inventory and default
//! sweep of each experimental phase.

use std::fmt;
use std::str::FromStr;

use arena_core::config::{EngineVariant, GameConfig};
use serde::{Deserialize, Serialize};

use crate::policies::PolicySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetName {
    P1,
    P2,
    P2b,
    V7,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::P1,
        PresetName::P2,
        PresetName::P2b,
        PresetName::V7,
    ];
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::P1 => "P1",
            PresetName::P2 => "P2",
            PresetName::P2b => "P2b",
            PresetName::V7 => "V7",
        })
    }
}

impl FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset `{s}` (expected P1, P2, P2b or V7)"))
    }
}

/// One named run of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: String,
    pub config: GameConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePreset {
    pub name: PresetName,
    pub base: GameConfig,
    pub sweep: Option<SweepSpec>,
    pub experiments: Vec<Experiment>,
    pub policy: PolicySpec,
}

/// 9x9 grid, 8 food and 5 token nodes regenerating 3 and 2, 16 agents,
/// 60 turns, seed 42.
fn survival_base() -> GameConfig {
    GameConfig {
        grid_width: 9,
        grid_height: 9,
        n_food_nodes: 8,
        n_token_nodes: 5,
        food_regen: 3,
        token_regen: 2,
        upkeep: 2,
        max_turns: 60,
        n_agents: 16,
        engine_variant: EngineVariant::Survival,
        seed: 42,
        ..GameConfig::default()
    }
}

fn variant(base: &GameConfig, upkeep: u32, food_nodes: u32, token_nodes: u32) -> GameConfig {
    GameConfig {
        upkeep,
        n_food_nodes: food_nodes,
        n_token_nodes: token_nodes,
        ..base.clone()
    }
}

/// Upkeep and food/token node counts of the broad pressure sweep.
const P2_RUNS: [(&str, u32, u32, u32); 13] = [
    ("EXP-011a", 0, 8, 5),
    ("EXP-011b", 1, 8, 5),
    ("EXP-011c", 2, 8, 5),
    ("EXP-011d", 2, 6, 4),
    ("EXP-011e", 3, 6, 3),
    ("EXP-011f", 4, 4, 2),
    ("EXP-011g", 5, 3, 1),
    ("EXP-011h", 7, 2, 1),
    ("EXP-011i", 10, 1, 1),
    ("EXP-011j", 15, 1, 1),
    ("EXP-011k", 6, 3, 1),
    ("EXP-011l", 8, 2, 1),
    ("EXP-011m", 9, 1, 1),
];

const P2B_RUNS: [(&str, u32); 6] = [
    ("EXP-020a", 2),
    ("EXP-020b", 2),
    ("EXP-020c", 4),
    ("EXP-020d", 5),
    ("EXP-020e", 6),
    ("EXP-020f", 7),
];

impl PhasePreset {
    pub fn get(name: PresetName) -> Self {
        match name {
            PresetName::P1 => {
                let base = survival_base();
                let experiments = ["EXP-010a", "EXP-010b"]
                    .into_iter()
                    .map(|id| Experiment {
                        id: id.into(),
                        config: base.clone(),
                    })
                    .collect();
                Self {
                    name,
                    base,
                    sweep: None,
                    experiments,
                    policy: PolicySpec::Llm,
                }
            }
            PresetName::P2 => {
                let base = GameConfig {
                    seed: 7,
                    ..survival_base()
                };
                let experiments = P2_RUNS
                    .iter()
                    .map(|&(id, u, nf, nt)| Experiment {
                        id: id.into(),
                        config: variant(&base, u, nf, nt),
                    })
                    .collect();
                Self {
                    name,
                    base,
                    sweep: Some(SweepSpec {
                        parameter: "upkeep".into(),
                        values: ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "15"]
                            .map(String::from)
                            .to_vec(),
                    }),
                    experiments,
                    policy: PolicySpec::Llm,
                }
            }
            PresetName::P2b => {
                let base = survival_base();
                let experiments = P2B_RUNS
                    .iter()
                    .map(|&(id, u)| Experiment {
                        id: id.into(),
                        config: GameConfig {
                            upkeep: u,
                            ..base.clone()
                        },
                    })
                    .collect();
                Self {
                    name,
                    base,
                    sweep: Some(SweepSpec {
                        parameter: "upkeep".into(),
                        values: ["2", "4", "5", "6", "7"].map(String::from).to_vec(),
                    }),
                    experiments,
                    policy: PolicySpec::Llm,
                }
            }
            PresetName::V7 => {
                let base = GameConfig {
                    grid_width: 7,
                    grid_height: 7,
                    max_turns: 40,
                    engine_variant: EngineVariant::SexualSelection,
                    ..survival_base()
                };
                Self {
                    name,
                    experiments: vec![Experiment {
                        id: "EXP-V7-01a".into(),
                        config: base.clone(),
                    }],
                    base,
                    sweep: None,
                    policy: PolicySpec::Llm,
                }
            }
        }
    }

    pub fn experiment(&self, id: &str) -> Option<&Experiment> {
        self.experiments
            .iter()
            .find(|e| e.id.eq_ignore_ascii_case(id))
    }
}
