use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use arena_core::config::GameConfig;
use arena_gateway::{Adapter, GatewayConfig};
use arena_harness::run::{read_log, LOG_FILE};
use arena_harness::{
    analyze, audit, echo_config, exit, fixture, parse_assignment, resolve, run_experiment, sweep,
    HarnessError, Overrides, PhasePreset, PolicySpec, PresetName, Report, RunSettings,
};
use clap::{Args, Parser, Subcommand};
use tracing::info;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "arena",
    version,
    about = "Run, sweep and analyze survival-arena experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a preset (all, or those named with --experiment).
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Experiment id within the preset, e.g. EXP-020d. Repeatable.
        #[arg(long = "experiment")]
        experiments: Vec<String>,
    },
    /// One run per value of a config parameter, starting from the preset base.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter to vary; defaults to the preset's sweep parameter.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values; defaults to the preset's sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        /// Games played at once.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Build report tables from one or more game logs.
    Analyze {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Parse and validate a flat config file.
    ValidateConfig { path: PathBuf },
    /// Recompute the state from a log and audit every turn.
    Replay { log: PathBuf },
    /// Write synthetic logs reproducing the reference controlled-sweep counts.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    preset: PresetName,
    /// Override a config value (key=value). Repeatable; unknown keys are fatal.
    #[arg(long = "set", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
    #[arg(long)]
    seed: Option<u64>,
    /// Confirm that --set/--seed replace preset values.
    #[arg(long)]
    ack_overrides: bool,
    /// llm, scripted:<name> or mixed:<name>,<name>,...; defaults to the preset's.
    #[arg(long)]
    policies: Option<PolicySpec>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[command(flatten)]
    gateway: GatewayArgs,
}

#[derive(Args)]
struct GatewayArgs {
    /// Chat-completion endpoint URL (LLM policies only).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long, default_value = "ARENA_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value = "openai")]
    adapter: Adapter,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 256)]
    max_tokens: u32,
}

impl GatewayArgs {
    fn config(&self) -> Option<GatewayConfig> {
        let (endpoint, model) = (self.endpoint.as_ref()?, self.model.as_ref()?);
        let mut c = GatewayConfig::new(endpoint.clone(), model.clone(), self.api_key_env.clone());
        c.adapter = self.adapter;
        c.max_retries = self.max_retries;
        c.request_timeout = Duration::from_secs(self.timeout_secs);
        c.temperature = self.temperature;
        c.max_tokens = self.max_tokens;
        Some(c)
    }
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            set: self.set.clone(),
            seed: self.seed,
            acknowledged: self.ack_overrides,
        }
    }

    fn settings(&self) -> RunSettings {
        RunSettings {
            out_dir: self.out.clone(),
            gateway: self.gateway.config(),
        }
    }

    fn policy(&self, preset: &PhasePreset) -> PolicySpec {
        self.policies
            .clone()
            .unwrap_or_else(|| preset.policy.clone())
    }
}

fn stamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string()
}

fn write_combined(dir: &Path, logs: &[PathBuf]) -> Result<Report, HarnessError> {
    let report = analyze(logs)?;
    report.write(dir)?;
    Ok(report)
}

fn cmd_run(common: &CommonArgs, selected: &[String]) -> Result<(), HarnessError> {
    let preset = PhasePreset::get(common.preset);
    let experiments = if selected.is_empty() {
        preset.experiments.clone()
    } else {
        selected
            .iter()
            .map(|id| {
                preset
                    .experiment(id)
                    .cloned()
                    .ok_or_else(|| HarnessError::UnknownExperiment {
                        preset: preset.name.to_string(),
                        id: id.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let overrides = common.overrides();
    let resolved: Vec<(String, GameConfig, GameConfig)> = experiments
        .into_iter()
        .map(|e| Ok((e.id, resolve(&e.config, &overrides)?, e.config)))
        .collect::<Result<_, HarnessError>>()?;
    let policy = common.policy(&preset);
    let settings = common.settings();

    let mut logs = Vec::new();
    for (id, config, preset_config) in &resolved {
        print!("{}", echo_config(id, config, preset_config));
        println!("# policies = {policy}");
        let record = run_experiment(id, config, &policy, &settings)?;
        println!(
            "{id}: {} turns, {} survivors, {} trades, log sha256 {}\n  -> {}",
            record.summary.duration,
            record.summary.survivors,
            record.summary.trades_completed,
            record.log_hash,
            record.dir.display()
        );
        logs.push(record.dir.join(LOG_FILE));
    }
    if logs.len() > 1 {
        let dir = common.out.join(format!("{}-run-{}", preset.name, stamp()));
        let report = write_combined(&dir, &logs)?;
        println!("\n{}", report.table1_md);
        println!("combined report in {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    param: Option<&str>,
    values: Option<&[String]>,
    parallel: usize,
) -> Result<(), HarnessError> {
    let preset = PhasePreset::get(common.preset);
    let base = resolve(&preset.base, &common.overrides())?;
    let param = param
        .map(String::from)
        .or_else(|| preset.sweep.as_ref().map(|s| s.parameter.clone()))
        .ok_or_else(|| {
            HarnessError::UnknownSweepParameter("(none given and preset has no sweep)".into())
        })?;
    let values: Vec<String> = values
        .map(<[String]>::to_vec)
        .or_else(|| preset.sweep.as_ref().map(|s| s.values.clone()))
        .unwrap_or_default();
    let policy = common.policy(&preset);
    print!(
        "{}",
        echo_config(&format!("{} sweep base", preset.name), &base, &preset.base)
    );
    println!(
        "# sweep {param} over [{}], policies = {policy}",
        values.join(", ")
    );

    let outcomes = sweep(
        &preset.name.to_string(),
        &base,
        &param,
        &values,
        &policy,
        &common.settings(),
        parallel,
    )?;
    let mut logs = Vec::new();
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(r) => {
                println!(
                    "{}: log sha256 {} -> {}",
                    o.experiment_id,
                    r.log_hash,
                    r.dir.display()
                );
                logs.push(r.dir.join(LOG_FILE));
            }
            Err(e) => {
                failed += 1;
                println!("{}: FAILED: {e}", o.experiment_id);
            }
        }
    }
    if !logs.is_empty() {
        let dir = common
            .out
            .join(format!("{}-sweep-{param}-{}", preset.name, stamp()));
        let report = write_combined(&dir, &logs)?;
        println!("\n{}", report.table1_md);
        println!("combined report in {}", dir.display());
    }
    if failed > 0 {
        return Err(HarnessError::Runtime(format!(
            "{failed} of {} sweep runs failed",
            outcomes.len()
        )));
    }
    Ok(())
}

fn cmd_analyze(logs: &[PathBuf], out: &Path) -> Result<(), HarnessError> {
    let report = analyze(logs)?;
    report.write(out)?;
    println!("{}", report.table1_md);
    println!("{}", report.table5_md);
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = GameConfig::from_flat(&text).map_err(HarnessError::from)?;
    config.validate().map_err(HarnessError::from)?;
    println!("{}: ok", path.display());
    Ok(())
}

fn cmd_replay(path: &Path) -> Result<(), HarnessError> {
    let log = read_log(path)?;
    let report = audit(&log)?;
    println!(
        "{}: {} turns replayed, {} trades and {} births checked, {} deaths, final digest {}",
        path.display(),
        report.turns,
        report.trades_checked,
        report.births_checked,
        report.deaths,
        report.final_digest
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<HarnessError>())
        .map(HarnessError::exit_code)
        .unwrap_or(if err.is::<std::io::Error>() {
            exit::RUNTIME
        } else {
            exit::CONFIG
        })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result: anyhow::Result<()> = match &cli.command {
        Command::Run {
            common,
            experiments,
        } => cmd_run(common, experiments).map_err(Into::into),
        Command::Sweep {
            common,
            param,
            values,
            parallel,
        } => cmd_sweep(common, param.as_deref(), values.as_deref(), *parallel).map_err(Into::into),
        Command::Analyze { logs, out } => cmd_analyze(logs, out).map_err(Into::into),
        Command::ValidateConfig { path } => cmd_validate(path),
        Command::Replay { log } => cmd_replay(log).map_err(Into::into),
        Command::Fixtures { out } => fixture::write_fixtures(out)
            .map(|paths| {
                for p in paths {
                    println!("{}", p.display());
                }
            })
            .map_err(Into::into),
    };
    match result {
        Ok(()) => {
            info!("done");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
