//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use arena_core::action::parse_action;
use arena_core::agent::{AgentState, Attr, Attributes, Direction, Pos, Role};
use arena_core::config::{EngineVariant, GameConfig};
use arena_core::engine::{run_game, Outcome};
use arena_core::mating::make_offspring;
use arena_core::metrics::{mean_turn_entropy, normalized_entropy, per_turn_entropy, summarize};
use arena_core::observe::observe;
use arena_core::policy::{
    build_prompt, PolicyDecision, PolicyError, PolicyMap, PolicySet, PromptContext,
    ProposalContext, ScriptedKind, BANNED_HINT_WORDS,
};
use arena_core::world::new_game;
use arena_core::{Action, AgentId, Bundle, GameLog, MovePath};
use arena_gateway::{Gateway, GatewayConfig};
use arena_harness::{
    audit, blob_hash, run_experiment, PhasePreset, PolicySpec, PresetName, Report, RunSettings,
};
use arena_llm_stub::{StubReply, StubServer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn play(config: &GameConfig, kinds: &[ScriptedKind]) -> Result<GameLog, String> {
    let mut state = new_game(config.clone()).map_err(|e| e.to_string())?;
    let mut policies = PolicyMap::scripted(kinds, config);
    run_game(&mut state, &mut policies, None).map_err(|e| e.to_string())
}

fn p2b(upkeep: u32) -> GameConfig {
    GameConfig {
        upkeep,
        ..PhasePreset::get(PresetName::P2b).base
    }
}

fn entropy_cross_validation() -> Verdict {
    let low = normalized_entropy([44.6, 29.5, 11.7, 9.6, 2.8, 1.9]).map_err(|e| e.to_string())?;
    let high = normalized_entropy([38.8, 23.4, 9.5, 10.0, 9.5, 9.0]).map_err(|e| e.to_string())?;
    ensure((low - 0.764).abs() <= 0.004, || {
        format!("u=2 gives {low:.4}, expected 0.764")
    })?;
    ensure((high - 0.892).abs() <= 0.004, || {
        format!("u=7 gives {high:.4}, expected 0.892")
    })?;
    Ok(format!("u=2 {low:.4} (0.764), u=7 {high:.4} (0.892)"))
}

fn survival_horizon() -> Verdict {
    let mut seen = Vec::new();
    for u in [2u32, 5] {
        let config = p2b(u);
        let state = new_game(config.clone()).map_err(|e| e.to_string())?;
        ensure(state.agents.iter().all(|a| a.food == 60), || {
            "initial food is not 60".into()
        })?;
        let end = play(&config, &[ScriptedKind::Rester])?
            .end
            .ok_or("no end record")?;
        let expected = 60u32.div_ceil(u);
        ensure(end.turn == expected && end.survivors == 0, || {
            format!(
                "u={u}: lasted {} turns with {} survivors, expected {expected}",
                end.turn, end.survivors
            )
        })?;
        seen.push(format!("u={u} -> {}", end.turn));
    }
    Ok(seen.join(", "))
}

fn preset_policy(name: PresetName) -> Vec<ScriptedKind> {
    match name {
        PresetName::V7 => vec![ScriptedKind::Courter, ScriptedKind::GreedyGatherer],
        _ => vec![
            ScriptedKind::GreedyGatherer,
            ScriptedKind::Trader,
            ScriptedKind::Aggressor,
            ScriptedKind::RandomWalker,
        ],
    }
}

fn determinism() -> Verdict {
    let mut games = 0;
    for name in PresetName::ALL {
        let kinds = preset_policy(name);
        for e in PhasePreset::get(name).experiments {
            let a = play(&e.config, &kinds)?.to_jsonl();
            let b = play(&e.config, &kinds)?.to_jsonl();
            ensure(a == b, || format!("{}: logs differ", e.id))?;
            ensure(blob_hash(a.as_bytes()) == blob_hash(b.as_bytes()), || {
                format!("{}: hashes differ", e.id)
            })?;
            games += 1;
        }
    }
    Ok(format!("{games} preset games replayed byte-identically"))
}

fn random_config(rng: &mut ChaCha8Rng) -> GameConfig {
    let (w, h) = (rng.random_range(3..=9u32), rng.random_range(3..=9u32));
    let cells = w * h;
    let cap = rng.random_range(1..=3u32);
    let n_food_nodes = rng.random_range(0..=8u32).min(cells);
    GameConfig {
        grid_width: w,
        grid_height: h,
        n_food_nodes,
        n_token_nodes: rng.random_range(0..=5u32).min(cells - n_food_nodes),
        food_regen: rng.random_range(1..=4),
        token_regen: rng.random_range(1..=3),
        upkeep: rng.random_range(0..=8),
        max_turns: rng.random_range(5..=40),
        n_agents: (2 * rng.random_range(1..=8u32)).min(cells * cap / 2 * 2),
        engine_variant: if rng.random_bool(0.5) {
            EngineVariant::SexualSelection
        } else {
            EngineVariant::Survival
        },
        cell_capacity: cap,
        seed: rng.random(),
        ..GameConfig::default()
    }
}

fn conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let configs: Vec<(GameConfig, Vec<ScriptedKind>)> = (0..128)
        .map(|_| {
            let config = random_config(&mut rng);
            let mut kinds = ScriptedKind::ALL.to_vec();
            rand::seq::SliceRandom::shuffle(kinds.as_mut_slice(), &mut rng);
            kinds.truncate(rng.random_range(1..=kinds.len()));
            (config, kinds)
        })
        .collect();
    let reports = configs
        .par_iter()
        .map(|(config, kinds)| {
            let log = play(config, kinds)?;
            let r = audit(&log).map_err(|e| format!("seed {}: {e}", config.seed))?;
            let v7_turns = if config.engine_variant == EngineVariant::SexualSelection {
                r.turns
            } else {
                0
            };
            Ok((r, v7_turns))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let trades: u64 = reports.iter().map(|(r, _)| r.trades_checked).sum();
    let births: u64 = reports.iter().map(|(r, _)| r.births_checked).sum();
    let v7_turns: u32 = reports.iter().map(|(_, t)| t).sum();
    ensure(trades > 0 && births > 0, || {
        format!("suite exercised {trades} trades and {births} births")
    })?;
    Ok(format!(
        "{} configs: ledgers, occupancy, {trades} trades, {births} births, {v7_turns} mating-variant turns",
        reports.len()
    ))
}

fn entropy_confound() -> Verdict {
    let mut totals = Vec::new();
    let mut truncated = Vec::new();
    for u in [2u32, 4, 5, 6, 7] {
        let log = play(&p2b(u), &[ScriptedKind::GreedyGatherer])?;
        let s = summarize(&log).map_err(|e| e.to_string())?;
        let per_turn = mean_turn_entropy(&per_turn_entropy(&log));
        if s.duration < log.config.max_turns {
            ensure(s.entropy_norm > per_turn, || {
                format!(
                    "u={u}: pooled {:.3} <= per-turn mean {per_turn:.3}",
                    s.entropy_norm
                )
            })?;
            truncated.push(format!("u={u} {:.3}>{per_turn:.3}", s.entropy_norm));
        }
        totals.push((u, s.total_actions));
    }
    ensure(!truncated.is_empty(), || "no game ended early".into())?;
    ensure(totals.windows(2).all(|w| w[1].1 < w[0].1), || {
        format!("total actions not decreasing: {totals:?}")
    })?;
    let counts: Vec<String> = totals.iter().map(|(_, n)| n.to_string()).collect();
    Ok(format!(
        "total actions {}; pooled vs per-turn: {}",
        counts.join(" > "),
        truncated.join(", ")
    ))
}

fn mating_mechanics() -> Verdict {
    let parent = |v: u8| {
        AgentState::new(
            AgentId(0),
            Pos::new(0, 0),
            Attributes::uniform(v),
            50,
            10,
            Role::Provider,
            5,
        )
    };
    let (a, b) = (parent(4), parent(6));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 10_000;
    let mut sums = [0.0f64; 6];
    let mut squares = [0.0f64; 6];
    for i in 0..n {
        let child = make_offspring(&a, &b, AgentId(i), 1.0, &mut rng);
        for attr in Attr::ALL {
            let v = child.attrs.get(attr);
            ensure((1..=10).contains(&v), || format!("offspring {attr} = {v}"))?;
            sums[attr.index()] += f64::from(v);
            squares[attr.index()] += f64::from(v).powi(2);
        }
    }
    for attr in Attr::ALL {
        let mean = sums[attr.index()] / f64::from(n);
        let var = squares[attr.index()] / f64::from(n) - mean * mean;
        let bound = 3.0 * (var / f64::from(n)).sqrt();
        ensure((mean - 5.0).abs() <= bound, || {
            format!("{attr} mean {mean:.4} outside 5 +/- {bound:.4}")
        })?;
    }

    let preset = PhasePreset::get(PresetName::V7);
    let log = play(&preset.experiments[0].config, &[ScriptedKind::Courter])?;
    let report = audit(&log).map_err(|e| e.to_string())?;
    let births = log
        .entries()
        .filter(|e| matches!(e.outcome, Outcome::Reproduced { .. }))
        .count();
    ensure(births > 0 && report.births_checked == births as u64, || {
        format!("{births} births, {} cost-checked", report.births_checked)
    })?;
    let attacks = log
        .entries()
        .filter(|e| matches!(e.action, Action::Attack(_)))
        .count();
    ensure(attacks == 0, || {
        format!("{attacks} ATTACK actions without an aggressor")
    })?;
    Ok(format!(
        "10000 offspring within 3 sigma of the parental mean; {births} births each cost 18 food + 8 tokens; 0 attacks"
    ))
}

fn canonical_actions() -> Vec<Action> {
    let dirs = [Direction::N, Direction::E, Direction::S, Direction::W];
    let mut out = vec![Action::Gather, Action::Rest];
    for d in dirs {
        out.push(Action::Move(MovePath::one(d)));
        for d2 in dirs {
            out.push(Action::Move(MovePath {
                first: d,
                second: Some(d2),
            }));
        }
    }
    for id in 0..20 {
        out.push(Action::Attack(AgentId(id)));
        out.push(Action::Reproduce(AgentId(id)));
        for (f, t) in [(0, 1), (2, 0), (4, 3), (10, 10)] {
            out.push(Action::Trade {
                target: AgentId(id),
                offer: Bundle { food: f, tokens: t },
                request: Bundle {
                    food: t,
                    tokens: f + 1,
                },
            });
        }
    }
    out.extend(Attr::ALL.into_iter().map(Action::Train));
    for text in ["hello", "meet at 3 4", "Agent 2 here, vitality 9"] {
        out.push(Action::Communicate(text.into()));
    }
    out
}

/// Records every decision prompt while delegating to scripted policies.
struct PromptRecorder {
    inner: PolicyMap,
    prompts: Vec<String>,
}

impl PolicySet for PromptRecorder {
    fn decide_all(
        &mut self,
        contexts: &[PromptContext],
    ) -> Vec<Result<PolicyDecision, PolicyError>> {
        self.prompts.extend(contexts.iter().map(build_prompt));
        self.inner.decide_all(contexts)
    }

    fn evaluate_proposal(&mut self, ctx: &ProposalContext) -> Result<bool, PolicyError> {
        self.inner.evaluate_proposal(ctx)
    }
}

fn has_word(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_ascii_alphabetic())
        .map(str::to_ascii_lowercase)
        .any(|w| w == word || w.strip_suffix('s') == Some(word))
}

fn prompt_and_parse() -> Verdict {
    let actions = canonical_actions();
    for a in &actions {
        let text = a.to_string();
        let back = parse_action(&text).map_err(|e| format!("`{text}`: {e}"))?;
        ensure(&back == a, || format!("`{text}` parsed as `{back}`"))?;
    }

    let config = p2b(2);
    let render = || -> Result<String, String> {
        let state = new_game(config.clone()).map_err(|e| e.to_string())?;
        Ok(build_prompt(&PromptContext::new(observe(
            &state,
            AgentId(3),
        ))))
    };
    let (first, second) = (render()?, render()?);
    ensure(first == second, || "prompt rendering is not stable".into())?;
    let skeleton = [
        "You are Agent 3 in a survival arena.\n\nYOUR STATUS:\n- Position: (",
        "\n- Attributes: STR=",
        "\n\nNEARBY AGENTS (within 2 cells):\n",
        "AVAILABLE ACTIONS:\nGATHER, MOVE [direction], ATTACK [target_id],\nTRADE [target_id] [offer] [request], REST, TRAIN [attribute]\n",
        "Choose exactly ONE action. Respond with the action name\nand parameters only.\n",
    ];
    let mut at = 0;
    for piece in skeleton {
        let found = first[at..]
            .find(piece)
            .ok_or_else(|| format!("template piece missing: {piece:?}"))?;
        at += found + piece.len();
    }

    let mut scanned = 0;
    for variant in [EngineVariant::Survival, EngineVariant::SexualSelection] {
        let config = GameConfig {
            max_turns: 15,
            engine_variant: variant,
            ..p2b(2)
        };
        let mut state = new_game(config.clone()).map_err(|e| e.to_string())?;
        let mut rec = PromptRecorder {
            inner: PolicyMap::scripted(&ScriptedKind::ALL, &config),
            prompts: Vec::new(),
        };
        run_game(&mut state, &mut rec, None).map_err(|e| e.to_string())?;
        for p in &rec.prompts {
            for w in BANNED_HINT_WORDS {
                ensure(!has_word(p, w), || {
                    format!("banned word `{w}` in prompt:\n{p}")
                })?;
            }
        }
        scanned += rec.prompts.len();
    }
    ensure(has_word("you should", "should"), || {
        "scanner misses planted words".into()
    })?;
    Ok(format!(
        "{} canonical actions round-trip; template stable; {scanned} prompts free of hint words",
        actions.len()
    ))
}

fn gateway_contract() -> Verdict {
    let rt = tokio_runtime()?;
    let stub = StubServer::start(|req| {
        let i: u64 = req.prompt.trim_start_matches('p').parse().unwrap_or(0);
        StubReply::text(format!("echo {}", req.prompt))
            .after(Duration::from_millis(2 * (16 - i.min(16))))
    });
    let gw = gateway(stub.openai_url())?;
    ensure(gw.config().max_concurrency == 4, || {
        "default concurrency is not 4".into()
    })?;
    let prompts: Vec<String> = (0..16).map(|i| format!("p{i}")).collect();
    let replies = rt.block_on(gw.batch_complete(&prompts));
    for (p, r) in prompts.iter().zip(&replies) {
        ensure(r.as_deref() == Ok(format!("echo {p}").as_str()), || {
            format!("{p}: {r:?}")
        })?;
    }
    let peak = stub.max_in_flight();
    ensure(peak <= 4, || format!("{peak} requests in flight"))?;

    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let flaky = StubServer::start(move |_| match seen.fetch_add(1, Ordering::SeqCst) {
        0 | 1 => StubReply::status(429),
        _ => StubReply::text("GATHER"),
    });
    let reply = rt
        .block_on(gateway(flaky.openai_url())?.complete("go"))
        .map_err(|e| e.to_string())?;
    ensure(reply == "GATHER" && flaky.request_count() == 3, || {
        format!(
            "retry transcript: {} requests, reply {reply:?}",
            flaky.request_count()
        )
    })?;
    Ok(format!(
        "16 prompts in order with peak {peak} in flight; 429, 429, 200 -> success on attempt 3"
    ))
}

fn tokio_runtime() -> Result<tokio::runtime::Runtime, String> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())
}

fn gateway(url: String) -> Result<Gateway, String> {
    let mut c = GatewayConfig::new(url, "stub-model", "ARENA_ACCEPTANCE_KEY");
    c.backoff_base = Duration::from_millis(5);
    Gateway::with_key(c, "acceptance-key".into()).map_err(|e| e.to_string())
}

const CANNED: [&str; 11] = [
    "GATHER",
    "GATHER",
    "MOVE N",
    "MOVE E S",
    "REST",
    "TRAIN STR",
    "ATTACK 2",
    "TRADE 3 2f0t 0f1t",
    "COMMUNICATE anyone near the food node?",
    "REPRODUCE 1",
    "Let me think about this.",
];

fn stub_end_to_end() -> Verdict {
    const ENV: &str = "ARENA_ACCEPTANCE_STUB_KEY";
    std::env::set_var(ENV, "stub-key-not-secret");
    let stub = StubServer::canned(CANNED.iter().map(|s| s.to_string()).collect());
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut gw = GatewayConfig::new(stub.openai_url(), "stub-model", ENV);
    gw.backoff_base = Duration::from_millis(5);
    let settings = RunSettings {
        out_dir: out.path().to_path_buf(),
        gateway: Some(gw),
    };
    let runs: Vec<_> = PresetName::ALL
        .iter()
        .flat_map(|&name| PhasePreset::get(name).experiments)
        .collect();
    let records = runs
        .par_iter()
        .map(|e| {
            run_experiment(&e.id, &e.config, &PolicySpec::Llm, &settings)
                .map_err(|err| format!("{}: {err}", e.id))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut logs = Vec::new();
    let mut by_phase: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        ensure(r.summary.policy_faults == 0, || {
            format!(
                "{}: {} policy faults",
                r.experiment_id, r.summary.policy_faults
            )
        })?;
        let log = arena_harness::run::read_log(&r.dir.join(arena_harness::run::LOG_FILE))
            .map_err(|e| e.to_string())?;
        audit(&log).map_err(|e| format!("{}: {e}", r.experiment_id))?;
        *by_phase.entry(phase_of(&r.experiment_id)).or_default() += 1;
        logs.push((r.experiment_id.clone(), log));
    }
    let report = Report::from_logs(&logs).map_err(|e| e.to_string())?;
    ensure(
        report.table1_csv.lines().count() == records.len() + 1,
        || "table 1 rows missing".into(),
    )?;
    ensure(
        report
            .table2_md
            .contains("| EXP-V7-01a | Sexual sel. | 16->"),
        || "table 2 lacks the V7 row".into(),
    )?;
    let phases: Vec<String> = by_phase.iter().map(|(p, n)| format!("{p}:{n}")).collect();
    Ok(format!(
        "{} stub-LLM games ({}) without fault, {} model calls; Table 1/2 rendered",
        records.len(),
        phases.join(" "),
        stub.request_count()
    ))
}

fn phase_of(id: &str) -> &'static str {
    if id.starts_with("EXP-010") {
        "P1"
    } else if id.starts_with("EXP-011") {
        "P2"
    } else if id.starts_with("EXP-020") {
        "P2b"
    } else {
        "V7"
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("entropy cross-validation", entropy_cross_validation),
        ("survival horizon", survival_horizon),
        ("determinism", determinism),
        ("conservation suite", conservation),
        ("entropy confound", entropy_confound),
        ("mating mechanics", mating_mechanics),
        ("prompt and parse", prompt_and_parse),
        ("gateway contract", gateway_contract),
        ("stub-LLM end to end", stub_end_to_end),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} [{name}]: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
