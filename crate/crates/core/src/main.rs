use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ethiplan::agent::{LaneKeepPolicy, Policy, RandomPolicy, ScriptedPolicy};
use ethiplan::scenario::library;
use ethiplan::scenario::{
    emit_metrics, load_scenario, run_episode, EpisodeLog, MetricsFormat, RunConfig, RunMode, Scenario,
};
use ethiplan::{Error, Result};

#[derive(Parser)]
#[command(name = "ethiplan", version, about = "Risk-aware planning episodes and metrics")]
struct Cli {
    /// JSON run configuration; unspecified fields keep their defaults.
    #[arg(long, global = true, env = "ETHIPLAN_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// `lane_keep`, `random` or a script name defined by the scenario.
        #[arg(long, default_value = "lane_keep")]
        policy: String,
        #[arg(long, default_value = "ethical")]
        mode: RunMode,
        #[arg(long)]
        cost_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every scenario in a directory for seeds `0..N`, then write metrics.
    Batch {
        #[arg(long)]
        scenario_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Policies to run; defaults to `lane_keep` plus every scenario script.
        #[arg(long = "policy")]
        policies: Vec<String>,
        #[arg(long, default_value = "ethical")]
        mode: RunMode,
        #[arg(long)]
        cost_limit: Option<f64>,
        #[arg(long, default_value = "csv")]
        format: MetricsFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute metric tables from a directory of episode logs.
    Metrics {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, default_value = "csv")]
        format: MetricsFormat,
        /// Output directory; defaults to the log directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write the bundled scenario files.
    ExportScenarios {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>, cost_limit: Option<f64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(limit) = cost_limit {
        cfg.lagrange.cost_limit = limit;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn make_policy(name: &str, scenario: &Scenario, cfg: &RunConfig, seed: u64) -> Result<Box<dyn Policy>> {
    match name {
        "lane_keep" => Ok(Box::new(LaneKeepPolicy {
            lane_offset: scenario.spec.lane_center_offset_m,
            v_des: cfg.reward.v_des,
        })),
        "random" => Ok(Box::new(RandomPolicy {
            seed,
            bounds: cfg.bounds,
        })),
        script => match scenario.script(script) {
            Some(actions) => Ok(Box::new(ScriptedPolicy {
                name: script.to_string(),
                actions,
            })),
            None => Err(Error::validation(
                "policy",
                format!("`{script}` is neither built in nor a script of `{}`", scenario.name()),
            )),
        },
    }
}

fn write_log(log: &EpisodeLog, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", log.file_stem()));
    let mut text = serde_json::to_string_pretty(log).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

fn read_logs(dir: &Path) -> Result<Vec<EpisodeLog>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect()
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::validation("scenario_dir", "holds no .json scenarios"));
    }
    Ok(files)
}

fn execute(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Run {
            scenario,
            policy,
            mode,
            cost_limit,
            seed,
            out,
        } => {
            let cfg = load_config(config, cost_limit)?;
            let sc = load_scenario(&scenario)?;
            let pol = make_policy(&policy, &sc, &cfg, seed)?;
            let log = run_episode(&sc, pol.as_ref(), &cfg, mode, seed)?;
            let path = write_log(&log, &out)?;
            println!(
                "{}: {} after {} steps, return {:.3}, cost {:.4}, lambda {:.4} -> {}",
                sc.name(),
                log.terminal.label(),
                log.steps.len(),
                log.episode_return,
                log.episode_cost,
                log.lambda_after,
                path.display()
            );
        }
        Command::Batch {
            scenario_dir,
            seeds,
            policies,
            mode,
            cost_limit,
            format,
            out,
        } => {
            let cfg = load_config(config, cost_limit)?;
            let log_dir = out.join("logs");
            let mut logs = Vec::new();
            for file in scenario_files(&scenario_dir)? {
                let sc = load_scenario(&file)?;
                let names = if policies.is_empty() {
                    std::iter::once("lane_keep".to_string())
                        .chain(sc.spec.scripts.keys().cloned())
                        .collect()
                } else {
                    policies.clone()
                };
                for name in &names {
                    for seed in 0..seeds {
                        let pol = make_policy(name, &sc, &cfg, seed)?;
                        let log = run_episode(&sc, pol.as_ref(), &cfg, mode, seed)?;
                        write_log(&log, &log_dir)?;
                        println!("{} {} seed {}: {}", sc.name(), name, seed, log.terminal.label());
                        logs.push(log);
                    }
                }
            }
            for p in emit_metrics(&logs, &out, format)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Metrics { logs, format, out } => {
            let all = read_logs(&logs)?;
            for p in emit_metrics(&all, out.as_deref().unwrap_or(&logs), format)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario)?;
            println!(
                "{}: ok ({} agents, path {:.1} m, {:.1} s)",
                sc.name(),
                sc.spec.agents.len(),
                sc.path.length(),
                sc.spec.duration_s
            );
        }
        Command::ExportScenarios { out } => {
            std::fs::create_dir_all(&out)?;
            for spec in library::bundled() {
                let path = out.join(format!("{}.json", spec.name));
                std::fs::write(&path, library::to_json(&spec))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
