use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, warn};

use coordnet::config::PipelineConfig;
use coordnet::corpus::InputFormat;
use coordnet::pipeline::{self, InputSource};
use coordnet::synth::ScenarioConfig;
use coordnet::Error;

/// Detect coordinated link sharing between groups and find the communities
/// it forms.
#[derive(Parser)]
#[command(name = "coordnet", version)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config file (JSON). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Working directory holding stage outputs.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, de-duplicate and filter a dataset into posts.jsonl.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        format: Option<InputFormat>,
        #[arg(long)]
        input: PathBuf,
    },
    /// Find coordination chains in posts.jsonl.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "estimate_threshold")]
        window_seconds: Option<u64>,
        /// Derive the window from the gap distribution instead.
        #[arg(long)]
        estimate_threshold: bool,
        #[arg(long, requires = "estimate_threshold")]
        quantile: Option<f64>,
    },
    /// Build and filter the group graph from chains.jsonl.
    Graph {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        min_degree: Option<u64>,
        /// Apply the degree filter once instead of to a fixed point.
        #[arg(long)]
        no_iterate: bool,
    },
    /// Partition the filtered graph with Louvain.
    Communities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        best_of: Option<usize>,
    },
    /// Write graph.gexf, narratives.json and summary.json.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        top_n: Option<usize>,
    },
    /// Generate a synthetic corpus with planted campaigns.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario file (JSON); defaults apply when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run every stage; `--input synthetic` uses the config's scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: String,
    },
}

fn load_config(common: &Common) -> coordnet::Result<PipelineConfig> {
    match &common.config {
        Some(path) => PipelineConfig::load(path),
        None => Ok(PipelineConfig::default()),
    }
}

fn output_dir(common: &Common, config: &PipelineConfig) -> PathBuf {
    // An explicit flag wins over the config file.
    if common.output_dir != Path::new(".") {
        return common.output_dir.clone();
    }
    config
        .report
        .output_dir
        .clone()
        .unwrap_or_else(|| common.output_dir.clone())
}

fn ensure_dir(dir: &Path) -> coordnet::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn execute(command: Command) -> coordnet::Result<()> {
    match command {
        Command::Ingest { common, format, input } => {
            let mut config = load_config(&common)?;
            if let Some(format) = format {
                config.ingest.format = format;
            }
            config.validate()?;
            let dir = output_dir(&common, &config);
            ensure_dir(&dir)?;
            pipeline::ingest_stage(&config, &input, &dir)?;
        }
        Command::Detect { common, window_seconds, estimate_threshold, quantile } => {
            let mut config = load_config(&common)?;
            if let Some(w) = window_seconds {
                config.detection.window_seconds = w;
                config.threshold_estimation.enabled = false;
            }
            if estimate_threshold {
                config.threshold_estimation.enabled = true;
            }
            if let Some(q) = quantile {
                config.threshold_estimation.quantile = q;
            }
            config.validate()?;
            let report = pipeline::detect_stage(&config, &output_dir(&common, &config))?;
            if report.chains == 0 {
                warn!("zero chains: later stages will produce empty outputs");
            }
        }
        Command::Graph { common, min_degree, no_iterate } => {
            let mut config = load_config(&common)?;
            if let Some(d) = min_degree {
                config.graph.min_degree = d;
            }
            if no_iterate {
                config.graph.iterative = false;
            }
            config.validate()?;
            pipeline::graph_stage(&config, &output_dir(&common, &config))?;
        }
        Command::Communities { common, resolution, seed, best_of } => {
            let mut config = load_config(&common)?;
            if let Some(r) = resolution {
                config.communities.resolution = r;
            }
            if let Some(s) = seed {
                config.communities.seed = s;
            }
            if let Some(k) = best_of {
                config.communities.best_of_k = k;
            }
            config.validate()?;
            pipeline::communities_stage(&config, &output_dir(&common, &config))?;
        }
        Command::Report { common, top_n } => {
            let mut config = load_config(&common)?;
            if let Some(n) = top_n {
                config.report.top_n = n;
            }
            config.validate()?;
            pipeline::report_stage(&config, &output_dir(&common, &config))?;
        }
        Command::Simulate { common, scenario } => {
            let config = load_config(&common)?;
            let scenario = match scenario {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Error::Config(format!("cannot read scenario {}: {e}", path.display()))
                    })?;
                    serde_json::from_str::<ScenarioConfig>(&text)
                        .map_err(|e| Error::Config(format!("scenario file: {e}")))?
                }
                None => config.scenario.clone().unwrap_or_default(),
            };
            scenario.validate()?;
            let dir = output_dir(&common, &config);
            ensure_dir(&dir)?;
            pipeline::simulate_stage(&scenario, &dir)?;
        }
        Command::Run { common, input } => {
            let config = load_config(&common)?;
            let dir = output_dir(&common, &config);
            let outcome = pipeline::run_pipeline(&config, &InputSource::parse(&input), &dir)?;
            if outcome.empty {
                warn!("run finished without any coordination chain");
            }
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COORDNET_LOG", "info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            error!("--jobs must be at least 1");
            return ExitCode::from(2);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            error!("cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            error!("{err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
