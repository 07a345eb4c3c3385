use arena_core::config::{EngineVariant, GameConfig, CONFIG_KEYS};
use arena_core::ConfigError;
use arena_harness::fixture::P2B_REFERENCE;
use arena_harness::{resolve, HarnessError, Overrides, PhasePreset, PresetName};

fn overrides(set: &[(&str, &str)], seed: Option<u64>, ack: bool) -> Overrides {
    Overrides {
        set: set
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        seed,
        acknowledged: ack,
    }
}

fn assert_controlled_arena(c: &GameConfig) {
    assert_eq!((c.grid_width, c.grid_height), (9, 9));
    assert_eq!((c.n_food_nodes, c.n_token_nodes), (8, 5));
    assert_eq!((c.food_regen, c.token_regen), (3, 2));
    assert_eq!((c.seed, c.n_agents, c.max_turns), (42, 16, 60));
    assert_eq!(c.engine_variant, EngineVariant::Survival);
}

#[test]
fn controlled_sweep_preset_pins_the_arena() {
    let p = PhasePreset::get(PresetName::P2b);
    assert_controlled_arena(&p.base);
    let sweep = p.sweep.as_ref().unwrap();
    assert_eq!(sweep.parameter, "upkeep");
    assert_eq!(sweep.values, ["2", "4", "5", "6", "7"]);
    assert_eq!(p.experiments.len(), 6);
    for run in &P2B_REFERENCE {
        let e = p.experiment(run.id).unwrap();
        assert_controlled_arena(&e.config);
        assert_eq!(e.config.upkeep, run.upkeep, "{}", run.id);
    }
}

#[test]
fn sexual_selection_preset() {
    let p = PhasePreset::get(PresetName::V7);
    let c = &p.experiments[0].config;
    assert_eq!(p.experiments[0].id, "EXP-V7-01a");
    assert_eq!(
        (c.grid_width, c.grid_height, c.upkeep, c.max_turns),
        (7, 7, 2, 40)
    );
    assert_eq!(c.engine_variant, EngineVariant::SexualSelection);
    assert_eq!((c.seed, c.n_agents), (42, 16));
}

#[test]
fn broad_sweep_inventory_matches_the_reference_node_counts() {
    // Experiment, upkeep, "food/token" nodes as listed in the experiment inventory.
    let reference = [
        ("EXP-011a", 0, "8/5"),
        ("EXP-011b", 1, "8/5"),
        ("EXP-011c", 2, "8/5"),
        ("EXP-011d", 2, "6/4"),
        ("EXP-011e", 3, "6/3"),
        ("EXP-011f", 4, "4/2"),
        ("EXP-011g", 5, "3/1"),
        ("EXP-011h", 7, "2/1"),
        ("EXP-011i", 10, "1/1"),
        ("EXP-011j", 15, "1/1"),
        ("EXP-011k", 6, "3/1"),
        ("EXP-011l", 8, "2/1"),
        ("EXP-011m", 9, "1/1"),
    ];
    let p = PhasePreset::get(PresetName::P2);
    assert_eq!(p.experiments.len(), reference.len());
    for (id, u, nodes) in reference {
        let c = &p.experiment(id).unwrap().config;
        assert_eq!(
            format!("{}/{}", c.n_food_nodes, c.n_token_nodes),
            nodes,
            "{id}"
        );
        assert_eq!(c.upkeep, u, "{id}");
        assert_eq!(c.seed, 7, "{id}");
    }

    let p1 = PhasePreset::get(PresetName::P1);
    assert_eq!(p1.experiments.len(), 2);
    for e in &p1.experiments {
        assert_controlled_arena(&e.config);
        assert_eq!(e.config.upkeep, 2);
    }
}

#[test]
fn unknown_override_key_is_named() {
    let base = PhasePreset::get(PresetName::P2b).base;
    for ack in [false, true] {
        let err = resolve(
            &base,
            &overrides(&[("upkeep", "5"), ("upkeeep", "5")], None, ack),
        )
        .unwrap_err();
        assert!(matches!(&err, HarnessError::Config(ConfigError::UnknownKey(k)) if k == "upkeeep"));
        assert!(err.to_string().contains("upkeeep"));
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn overrides_need_acknowledgment() {
    let base = PhasePreset::get(PresetName::P2b).base;
    assert_eq!(resolve(&base, &Overrides::default()).unwrap(), base);

    let err = resolve(&base, &overrides(&[("upkeep", "3")], None, false)).unwrap_err();
    assert!(matches!(&err, HarnessError::UnacknowledgedOverrides(keys) if keys == &["upkeep"]));
    assert_eq!(err.exit_code(), 2);
    let err = resolve(&base, &overrides(&[], Some(9), false)).unwrap_err();
    assert!(matches!(&err, HarnessError::UnacknowledgedOverrides(keys) if keys == &["seed"]));

    let c = resolve(&base, &overrides(&[("upkeep", "3")], Some(9), true)).unwrap();
    assert_eq!((c.upkeep, c.seed), (3, 9));
    assert_eq!(
        GameConfig {
            upkeep: 2,
            seed: 42,
            ..c
        },
        base
    );
}

#[test]
fn bad_values_and_inconsistent_configs_abort() {
    let base = PhasePreset::get(PresetName::P2b).base;
    let err = resolve(&base, &overrides(&[("upkeep", "lots")], None, true)).unwrap_err();
    assert!(err.to_string().contains("upkeep"));
    let err = resolve(&base, &overrides(&[("n_agents", "300")], None, true)).unwrap_err();
    assert!(
        matches!(err, HarnessError::Config(ConfigError::Invalid(_))),
        "{err}"
    );
}

#[test]
fn flat_snapshot_lists_every_key() {
    for name in PresetName::ALL {
        for e in PhasePreset::get(name).experiments {
            let flat = e.config.to_flat();
            for key in CONFIG_KEYS {
                assert_eq!(
                    flat.lines()
                        .filter(|l| l.starts_with(&format!("{key} = ")))
                        .count(),
                    1,
                    "{key}"
                );
            }
            assert_eq!(GameConfig::from_flat(&flat).unwrap(), e.config);
        }
    }
}
