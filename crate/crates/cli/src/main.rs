// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use engagegraph::synthetic::SyntheticParams;
use engagegraph_cli::config::{parse_formats, ConfigLoadError, FieldError};
use engagegraph_cli::{synth, CliError, Pipeline, RunConfig};

#[derive(Parser)]
#[command(name = "engagegraph", version, about = "Engagement graph analysis pipeline")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    min_community_size: Option<usize>,
    #[arg(long, global = true)]
    damping: Option<f64>,
    /// Comma-separated report formats: csv, json.
    #[arg(long, global = true)]
    formats: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage from ingest to report.
    Run,
    Ingest,
    Graph,
    Communities,
    Influence,
    Demographics,
    Topics,
    Report,
    /// Stratified sample of topics for manual review.
    ReviewSample {
        #[arg(long, default_value_t = 30)]
        n: usize,
    },
    /// Writes the synthetic fixture and its run.conf.
    Synth {
        #[arg(long, default_value_t = SyntheticParams::default().users)]
        users: usize,
        #[arg(long, default_value_t = SyntheticParams::default().tweets)]
        tweets: usize,
        #[arg(long, default_value_t = SyntheticParams::default().seed)]
        corpus_seed: u64,
    },
}

fn config_error(key: &str, message: String) -> CliError {
    CliError::Config(vec![FieldError {
        line: 0,
        key: key.into(),
        message,
    }])
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let Some(path) = &cli.config else {
        return Err(config_error("--config", "required for this command".into()));
    };
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(ConfigLoadError::Unreadable(m)) => return Err(config_error("--config", m)),
        Err(ConfigLoadError::Invalid(errors)) => return Err(CliError::Config(errors)),
    };
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.threads {
        cfg.threads = v;
    }
    if let Some(v) = cli.k {
        cfg.k = v;
    }
    if let Some(v) = cli.min_community_size {
        cfg.min_community_size = v;
    }
    if let Some(v) = cli.damping {
        cfg.damping = v;
    }
    if let Some(v) = &cli.formats {
        cfg.formats = parse_formats(v).map_err(|m| config_error("--formats", m))?;
    }
    let errors = cfg.check();
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Command::Synth {
        users,
        tweets,
        corpus_seed,
    } = cli.command
    {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("fixtures/synthetic"));
        let params = SyntheticParams {
            users,
            tweets,
            seed: corpus_seed,
        };
        let files = synth::write(&dir, params, cli.seed.unwrap_or(synth::DEFAULT_PIPELINE_SEED)).map_err(|e| {
            CliError::Stage {
                stage: "synth",
                message: e.to_string(),
            }
        })?;
        for f in files {
            println!("{}", f.display());
        }
        return Ok(());
    }

    let cfg = load_config(&cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| config_error("threads", e.to_string()))?;
    let p = Pipeline::new(cfg);
    match cli.command {
        Command::Run => p.run(),
        Command::Ingest => p.ingest(),
        Command::Graph => p.build_graph(),
        Command::Communities => p.communities(),
        Command::Influence => p.influence(),
        Command::Demographics => p.demographics(),
        Command::Topics => p.topics(),
        Command::Report => p.report(),
        Command::ReviewSample { n } => p.review_sample(n).map(|path| println!("{}", path.display())),
        Command::Synth { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
