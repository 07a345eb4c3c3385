use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use arena_core::config::GameConfig;
use arena_core::policy::ScriptedKind;
use arena_gateway::GatewayConfig;
use arena_harness::run::{CONFIG_FILE, LOG_FILE, RECORD_FILE};
use arena_harness::{
    analyze, audit, run_experiment, sweep, ExperimentRecord, HarnessError, PhasePreset, PolicySpec,
    PresetName, RunSettings,
};
use arena_llm_stub::StubServer;

fn settings(dir: &Path) -> RunSettings {
    RunSettings {
        out_dir: dir.to_path_buf(),
        gateway: None,
    }
}

fn p2b() -> GameConfig {
    PhasePreset::get(PresetName::P2b).base
}

fn mixed() -> PolicySpec {
    "mixed:greedy,trader,aggressor,walker".parse().unwrap()
}

fn values(v: &[u32]) -> Vec<String> {
    v.iter().map(u32::to_string).collect()
}

#[test]
fn rest_only_sweep_lasts_ceil_sixty_over_upkeep() {
    let tmp = tempfile::tempdir().unwrap();
    let upkeeps = [2, 4, 5, 6, 7];
    let out = sweep(
        "rest",
        &p2b(),
        "upkeep",
        &values(&upkeeps),
        &PolicySpec::Scripted(ScriptedKind::Rester),
        &settings(tmp.path()),
        2,
    )
    .unwrap();
    let durations: Vec<u32> = out
        .iter()
        .map(|o| o.result.as_ref().unwrap().summary.duration)
        .collect();
    let horizon: Vec<u32> = upkeeps.iter().map(|u| 60u32.div_ceil(*u)).collect();
    assert_eq!(durations, horizon);
    assert_eq!(durations, [30, 15, 12, 10, 9]);
    for o in &out {
        let r = o.result.as_ref().unwrap();
        assert_eq!(r.summary.survivors, 0);
        assert_eq!(r.config.upkeep.to_string(), o.value);
    }
}

/// Hash of the file as computed by git in a SHA-256 object-format repository.
fn git_sha256(path: &Path) -> Option<String> {
    let repo = tempfile::tempdir().ok()?;
    let init = Command::new("git")
        .args(["init", "-q", "--object-format=sha256"])
        .arg(repo.path())
        .status()
        .ok()?;
    if !init.success() {
        return None;
    }
    let out = Command::new("git")
        .arg("-C")
        .arg(repo.path())
        .arg("hash-object")
        .arg(path)
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

#[test]
fn reruns_are_byte_identical_with_stable_hashes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = PhasePreset::get(PresetName::P2b)
        .experiment("EXP-020d")
        .unwrap()
        .config
        .clone();
    let r1 = run_experiment("EXP-020d", &config, &mixed(), &settings(a.path())).unwrap();
    let r2 = run_experiment("EXP-020d", &config, &mixed(), &settings(b.path())).unwrap();
    assert_eq!(r1.log_hash, r2.log_hash);
    assert_eq!(r1.summary, r2.summary);
    let (l1, l2) = (r1.dir.join(LOG_FILE), r2.dir.join(LOG_FILE));
    assert_eq!(fs::read(&l1).unwrap(), fs::read(&l2).unwrap());
    if let Some(git) = git_sha256(&l1) {
        assert_eq!(git, r1.log_hash);
    }

    let (rep1, rep2) = (analyze(&[l1]).unwrap(), analyze(&[l2]).unwrap());
    assert_eq!(rep1, rep2);
    assert!(r1.summary.duration <= 60);
}

#[test]
fn experiment_directory_holds_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let config = GameConfig {
        max_turns: 12,
        ..p2b()
    };
    let r = run_experiment("EXP-test", &config, &mixed(), &settings(tmp.path())).unwrap();
    let name = r.dir.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("EXP-test-"), "{name}");
    for f in [
        LOG_FILE,
        CONFIG_FILE,
        RECORD_FILE,
        "summary.csv",
        "summary.md",
    ] {
        assert!(r.dir.join(f).is_file(), "missing {f}");
    }
    let flat = fs::read_to_string(r.dir.join(CONFIG_FILE)).unwrap();
    assert_eq!(GameConfig::from_flat(&flat).unwrap(), config);
    let record: ExperimentRecord =
        serde_json::from_slice(&fs::read(r.dir.join(RECORD_FILE)).unwrap()).unwrap();
    assert_eq!(record, r);
    let summary = fs::read_to_string(r.dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("Upkeep,Expt.,Trades,Attacks,Surv.,Dur.,Soc.%,Entropy\n"));
    assert!(summary.contains(",EXP-test,"));
    let log = arena_harness::run::read_log(&r.dir.join(LOG_FILE)).unwrap();
    audit(&log).unwrap();
}

#[test]
fn sweep_order_does_not_change_any_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let hashes = |dir: &Path, vals: &[u32], parallel| -> BTreeMap<String, String> {
        sweep(
            "iso",
            &p2b(),
            "upkeep",
            &values(vals),
            &mixed(),
            &settings(dir),
            parallel,
        )
        .unwrap()
        .into_iter()
        .map(|o| (o.value, o.result.unwrap().log_hash))
        .collect()
    };
    let forward = hashes(a.path(), &[2, 5, 7], 1);
    let backward = hashes(b.path(), &[7, 2, 5], 3);
    assert_eq!(forward.len(), 3);
    assert_eq!(forward, backward);
}

#[test]
fn empty_and_failing_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let s = settings(tmp.path());
    assert!(sweep("e", &p2b(), "upkeep", &[], &mixed(), &s, 1)
        .unwrap()
        .is_empty());

    let err = sweep("e", &p2b(), "upkep", &values(&[1]), &mixed(), &s, 1).unwrap_err();
    assert!(matches!(&err, HarnessError::UnknownSweepParameter(p) if p == "upkep"));
    assert_eq!(err.exit_code(), 2);

    // A width of 0 is invalid; the other runs still complete.
    let base = GameConfig {
        max_turns: 5,
        ..p2b()
    };
    let out = sweep(
        "e",
        &base,
        "grid_width",
        &values(&[9, 0, 7]),
        &mixed(),
        &s,
        2,
    )
    .unwrap();
    let ok: Vec<bool> = out.iter().map(|o| o.result.is_ok()).collect();
    assert_eq!(ok, [true, false, true]);
    assert_eq!(out[1].result.as_ref().unwrap_err().exit_code(), 2);
}

#[test]
fn sexual_selection_without_aggressors_has_no_attacks() {
    let tmp = tempfile::tempdir().unwrap();
    let preset = PhasePreset::get(PresetName::V7);
    let e = &preset.experiments[0];
    let policy = PolicySpec::Scripted(ScriptedKind::Courter);
    assert!(!policy.uses(ScriptedKind::Aggressor));
    let r = run_experiment(&e.id, &e.config, &policy, &settings(tmp.path())).unwrap();
    let text = fs::read_to_string(r.dir.join(LOG_FILE)).unwrap();
    let attack_lines = text
        .lines()
        .filter(|l| l.contains(r#""action":"ATTACK"#))
        .count();
    let reproduction_lines = text
        .lines()
        .filter(|l| l.starts_with(r#"{"kind":"reproduction""#))
        .count();
    let births = text
        .lines()
        .filter(|l| l.starts_with(r#"{"kind":"reproduction""#) && l.contains(r#""accepted":true"#))
        .count();
    assert_eq!(attack_lines, 0);
    assert!(reproduction_lines > 0);
    assert_eq!(births as u64, r.summary.births);
    assert_eq!(r.summary.attacks, 0);
    assert_eq!(r.summary.duration, 40);
}

fn gateway_for(stub: &StubServer, env: &str) -> GatewayConfig {
    let mut g = GatewayConfig::new(stub.openai_url(), "stub-model", env);
    g.backoff_base = Duration::from_millis(5);
    g
}

#[test]
fn llm_runs_need_credentials_before_any_turn() {
    let tmp = tempfile::tempdir().unwrap();
    let stub = StubServer::fixed("GATHER");
    let s = RunSettings {
        out_dir: tmp.path().join("runs"),
        gateway: Some(gateway_for(&stub, "ARENA_HARNESS_TEST_UNSET_KEY")),
    };
    let err = run_experiment("x", &p2b(), &PolicySpec::Llm, &s).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("ARENA_HARNESS_TEST_UNSET_KEY"));
    assert_eq!(stub.request_count(), 0);
    assert!(!tmp.path().join("runs").exists());

    let no_endpoint =
        run_experiment("x", &p2b(), &PolicySpec::Llm, &settings(tmp.path())).unwrap_err();
    assert!(matches!(no_endpoint, HarnessError::NoEndpoint));
}

#[test]
fn llm_run_against_stub_keeps_the_key_out_of_artifacts() {
    const ENV: &str = "ARENA_HARNESS_TEST_KEY";
    const KEY: &str = "sk-harness-7c1e93ab55";
    std::env::set_var(ENV, KEY);
    let tmp = tempfile::tempdir().unwrap();
    let stub = StubServer::canned(vec![
        "GATHER".into(),
        "MOVE E".into(),
        "REST".into(),
        "TRAIN STR".into(),
    ]);
    let s = RunSettings {
        out_dir: tmp.path().to_path_buf(),
        gateway: Some(gateway_for(&stub, ENV)),
    };
    let config = GameConfig {
        max_turns: 4,
        ..p2b()
    };
    let r = run_experiment("llm", &config, &PolicySpec::Llm, &s).unwrap();
    assert_eq!(r.summary.policy_faults, 0);
    assert!(stub.request_count() >= 16);
    assert!(stub.max_in_flight() <= 4);
    assert!(stub
        .requests()
        .iter()
        .all(|q| q.credential.as_deref() == Some(KEY)));
    for entry in fs::read_dir(&r.dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains(KEY), "key leaked into {}", path.display());
    }
    assert!(!serde_json::to_string(&r).unwrap().contains(KEY));
}
