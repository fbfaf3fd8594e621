use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gandi::domains::DomainKind;
use gandi::harness::{cmd_collect, cmd_eval, cmd_toy, cmd_train, cmd_verify, ExperimentConfig, Method};
use gandi::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gandi", version, about = "Learn action samplers for best-first planning from search experience")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_parser = ["gan", "gandi"])]
    method: Option<String>,
    #[arg(long, global = true, value_parser = ["gmm", "binpack", "reconfig"])]
    domain: Option<String>,
    /// Directory with collected datasets (train); defaults to --out.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Directory with trained models (eval); defaults to --out.
    #[arg(long, global = true)]
    models: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the planner with the uniform sampler and record its experience.
    Collect,
    /// Train a sampler for each configured episode count.
    Train,
    /// Compare samplers on fresh instances.
    Eval,
    /// Check the importance-estimation bounds on random discrete instances.
    Verify,
    /// Run the two-dimensional mixture example end to end.
    Toy,
}

fn load_config(cli: &Cli) -> gandi::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::parse(
            &std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?,
        )?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(m) = &cli.method {
        cfg.method = m.parse::<Method>()?;
    }
    if let Some(d) = &cli.domain {
        cfg.domain = d.parse::<DomainKind>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> gandi::Result<u8> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match cli.command {
        Command::Collect => {
            let s = cmd_collect(&cfg, out)?;
            println!(
                "solved {} of {} attempts: {} on-target, {} off-target samples",
                s.solved, s.attempts, s.on_target, s.off_target
            );
        }
        Command::Train => {
            let data = cli.data.as_ref().unwrap_or(out);
            for s in cmd_train(&cfg, data, out)? {
                println!("{} on {} episodes: selected epoch {}", s.method, s.episodes, s.selected_epoch);
            }
        }
        Command::Eval => {
            let models = cli.models.as_ref().unwrap_or(out);
            for r in cmd_eval(&cfg, models, out)? {
                let s = r.stats;
                println!(
                    "{:<8} episodes={:<3} {}/{} = {:.3} [{:.3}, {:.3}]",
                    r.sampler.tag(),
                    r.episodes,
                    s.successes,
                    s.trials,
                    s.rate,
                    s.ci_low,
                    s.ci_high
                );
            }
        }
        Command::Verify => {
            let s = cmd_verify(&cfg, out)?;
            println!("{} rows, {} rejected, {} violations", s.rows.len() + s.lemma_errors.len(), s.rejected, s.violations);
            if s.violations > 0 {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::Toy => {
            let s = cmd_toy(&cfg, out)?;
            println!(
                "ratio spearman {:.3}, tv raw {:.3} vs bootstrap {:.3}, generated near (2,2) {:.3}",
                s.spearman, s.tv_raw, s.tv_bootstrap, s.near_center
            );
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            })
        }
    }
}
