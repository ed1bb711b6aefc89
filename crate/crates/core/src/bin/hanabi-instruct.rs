use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hanabi_instruct::harness::{self, Fig5Config};
use hanabi_instruct::instructor::{instruct, DEFAULT_EPSILON};
use hanabi_instruct::policy::{agreement, Profile, StrategyVector};
use hanabi_instruct::service::{self, ServiceConfig};
use hanabi_instruct::store::{self, StoreError};
use hanabi_instruct::training::{
    default_schedule, selfplay_eval, train, Humanness, PartnerScore, SelfPlayScore, TrainOptions,
    DEFAULT_GAMES_PER_CONFIG,
};

#[derive(Parser)]
#[command(name = "hanabi-instruct", version, about = "Linear-factor Hanabi agents and strategy instruction")]
struct Cli {
    /// Worker threads for game simulation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a strategy with itself or with a partner.
    Selfplay {
        /// Profile name or weights file.
        #[arg(long)]
        weights: String,
        #[arg(long)]
        opponent: Option<String>,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        games: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write per-game scores as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Log player 0's decisions from self-play as JSON Lines.
    GenDecisions {
        #[arg(long)]
        weights: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Keep the hidden deck order in each state.
        #[arg(long)]
        include_deck: bool,
        /// Leave factor matrices out; readers recompute them.
        #[arg(long)]
        no_matrix: bool,
    },
    /// Factorial search maximizing self-play (or partner) score.
    TrainFactorial {
        #[arg(long)]
        weights: String,
        /// Train alongside this fixed partner instead of a copy of itself.
        #[arg(long)]
        partner: Option<String>,
        #[arg(long, default_value_t = DEFAULT_GAMES_PER_CONFIG as u64, value_parser = clap::value_parser!(u64).range(1..))]
        games_per_config: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = TrainOptions::default().max_epochs)]
        max_epochs: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Factorial search maximizing agreement with a decision log.
    FitHumanness {
        #[arg(long)]
        weights: String,
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = TrainOptions::default().max_epochs)]
        max_epochs: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Explain a decision log as sparse changes to an ideal strategy.
    Instruct {
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long, default_value = "self-play")]
        ideal: String,
        /// Quality threshold; defaults to the ideal's own agreement with the log.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Print the rendered instructions instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Iterative emulation of the self-play agent from an inflated discard weight.
    Fig5 {
        #[arg(long, default_value_t = 40)]
        batches: usize,
        #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
        g: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Trajectory as JSON Lines.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Pair every shipped profile with the human-like profile.
    CrossPlay {
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        games: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the HTTP session server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Write finished sessions' decision logs here.
        #[arg(long)]
        persist_dir: Option<PathBuf>,
    },
}

/// Failures split by exit code: 2 for bad invocations, 3 for bad data.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", path.display())))
    }
}

fn resolve_weights(spec: &str) -> Result<StrategyVector, Failure> {
    if let Ok(profile) = spec.parse::<Profile>() {
        return Ok(profile.strategy());
    }
    let path = Path::new(spec);
    require_file(path).map_err(|_| usage(format!("{spec:?} is neither a profile name nor a weights file")))?;
    Ok(store::load_weights(path).with_context(|| format!("loading {spec}"))?)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).context("serializing output")?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn read_log(path: &Path) -> Result<hanabi_instruct::DecisionSet, Failure> {
    require_file(path)?;
    store::read_decisions(path).map_err(|e: StoreError| Failure::Data(anyhow::Error::new(e).context(format!("reading {}", path.display()))))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Selfplay {
            weights,
            opponent,
            games,
            seed,
            csv,
        } => {
            let a = resolve_weights(&weights)?;
            let b = match opponent {
                Some(o) => resolve_weights(&o)?,
                None => a.clone(),
            };
            let stats = selfplay_eval(&a, &b, games as usize, seed).context("simulating games")?;
            if let Some(path) = csv {
                let mut text = String::from("game,score\n");
                for (i, s) in stats.scores.iter().enumerate() {
                    text.push_str(&format!("{i},{s}\n"));
                }
                write_text(&path, &text)?;
            }
            print_json(&serde_json::json!({
                "weights": a.name,
                "opponent": b.name,
                "seed": seed,
                "games": stats.games,
                "mean": stats.mean,
                "stddev": stats.stddev,
                "histogram": stats.histogram,
            }))
        }
        Command::GenDecisions {
            weights,
            count,
            seed,
            out,
            include_deck,
            no_matrix,
        } => {
            let w = resolve_weights(&weights)?;
            let records = harness::generate_records(&w, count as usize, seed, include_deck, !no_matrix)
                .context("simulating games")?;
            let n = store::write_decisions(&out, &records).map_err(|e| usage(e.to_string()))?;
            print_json(&serde_json::json!({ "written": n, "out": out }))
        }
        Command::TrainFactorial {
            weights,
            partner,
            games_per_config,
            seed,
            step,
            max_epochs,
            trace,
            out,
        } => {
            let base = resolve_weights(&weights)?;
            let games = games_per_config as usize;
            let options = TrainOptions { max_epochs };
            let outcome = match partner {
                Some(p) => {
                    let objective = PartnerScore {
                        partner: resolve_weights(&p)?,
                        games,
                        seed,
                    };
                    train(&base, &default_schedule(step), &objective, options)
                }
                None => train(&base, &default_schedule(step), &SelfPlayScore { games, seed }, options),
            }
            .context("training")?;
            finish_training(outcome, trace, out)
        }
        Command::FitHumanness {
            weights,
            decisions,
            step,
            max_epochs,
            trace,
            out,
        } => {
            let base = resolve_weights(&weights)?;
            let log = read_log(&decisions)?;
            let objective = Humanness { decisions: &log };
            let outcome = train(&base, &default_schedule(step), &objective, TrainOptions { max_epochs })
                .context("training")?;
            finish_training(outcome, trace, out)
        }
        Command::Instruct {
            decisions,
            ideal,
            alpha,
            epsilon,
            text,
        } => {
            let ideal = resolve_weights(&ideal)?;
            let log = read_log(&decisions)?;
            let alpha = alpha.unwrap_or_else(|| agreement(&ideal, &log));
            if !(0.0..=1.0).contains(&alpha) {
                return Err(usage("--alpha must lie in [0, 1]"));
            }
            if !(epsilon > 0.0) {
                return Err(usage("--epsilon must be positive"));
            }
            let result = instruct(&log, &ideal, alpha, epsilon).context("computing instruction")?;
            if text {
                print!("{}", result.to_text());
                Ok(())
            } else {
                print_json(&result)
            }
        }
        Command::Fig5 {
            batches,
            g,
            seed,
            epsilon,
            step,
            out,
            csv,
        } => {
            if batches == 0 {
                return Err(usage("--batches must be at least 1"));
            }
            let report = harness::fig5(&Fig5Config {
                batches,
                g: g as usize,
                seed,
                epsilon,
                step,
                ..Fig5Config::default()
            })
            .context("running emulation")?;
            if let Some(path) = out {
                store::write_jsonl(&path, &report.trajectory).map_err(|e| usage(e.to_string()))?;
            }
            if let Some(path) = csv {
                write_text(&path, &report.to_csv())?;
            }
            print_json(&serde_json::json!({
                "agreement_start": report.agreement_start,
                "agreement_end": report.agreement_end,
                "discard_start": report.discard_start,
                "discard_end": report.discard_end,
                "drifted": report.drifted,
            }))
        }
        Command::CrossPlay { games, seed } => {
            let report = harness::cross_play(games as usize, seed).context("simulating games")?;
            print_json(&report)
        }
        Command::Serve {
            port,
            host,
            persist_dir,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| usage(format!("bad address {host}:{port}: {e}")))?;
            if let Some(dir) = &persist_dir {
                std::fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
            }
            let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
            runtime
                .block_on(service::serve(addr, ServiceConfig { persist_dir }))
                .context("serving")?;
            Ok(())
        }
    }
}

fn finish_training(
    outcome: hanabi_instruct::training::TrainOutcome,
    trace: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if let Some(path) = trace {
        store::write_jsonl(&path, &outcome.epochs).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(path) = out {
        store::save_weights(&path, &outcome.weights).map_err(|e| usage(e.to_string()))?;
    }
    print_json(&serde_json::json!({
        "epochs": outcome.epochs.len(),
        "capped": outcome.capped,
        "objective": outcome.objective_trace().last(),
        "weights": store::WeightsFile::from_strategy(&outcome.weights),
    }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
