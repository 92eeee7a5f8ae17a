use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shoplens::pipeline::{ModelInputs, Pipeline, PipelineConfig, PipelineError, QueryRequest, DATASET_FILE};

#[derive(Parser)]
#[command(name = "shoplens", version, about = "Harvest, model and analyse illicit online shops")]
struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Dataset file; defaults to dataset.ndjson in the output directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Model file; defaults to model.json in the output directory.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Topic-term relevance weight.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl forums and fetch the shops they advertise.
    Harvest {
        /// Replay recorded responses from this directory.
        #[arg(long, env = shoplens::pipeline::FIXTURE_DIR_ENV)]
        fixture_dir: Option<PathBuf>,
        #[arg(long)]
        live: bool,
    },
    /// Train one LDA model.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Train one model per k and keep the most coherent.
    Sweep {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Comma-separated topic counts.
        #[arg(long, value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        top_n: Option<usize>,
    },
    /// Topic table, sample products and market statistics.
    Report {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// List products matching a topic's most salient terms.
    Query {
        #[command(flatten)]
        inputs: Inputs,
        /// 0-based topic id.
        #[arg(long)]
        topic: usize,
        /// Number of salient terms to query with.
        #[arg(long)]
        terms: Option<usize>,
        /// Extra query terms (repeatable).
        #[arg(long)]
        augment: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.apply_env();
    if let Some(seed) = cli.seed {
        config.lda.master_seed = seed;
    }
    if let Some(out) = cli.out {
        config.output.dir = out;
    }
    let model_inputs = |config: &PipelineConfig, inputs: &Inputs| {
        let mut m = ModelInputs::in_dir(&config.output.dir);
        if let Some(d) = &inputs.dataset {
            m.dataset = d.clone();
        }
        if let Some(p) = &inputs.model {
            m.model = p.clone();
        }
        m
    };
    match cli.command {
        Command::Harvest { fixture_dir, live } => {
            if fixture_dir.is_some() {
                config.harvest.fixture_dir = fixture_dir;
            }
            config.harvest.live |= live;
            Pipeline::new(config)?.harvest()?;
        }
        Command::Train { dataset, k, iterations } => {
            config.lda.k = k.unwrap_or(config.lda.k);
            config.lda.iterations = iterations.unwrap_or(config.lda.iterations);
            let dataset = dataset.unwrap_or_else(|| config.output.dir.join(DATASET_FILE));
            Pipeline::new(config)?.train(&dataset)?;
        }
        Command::Sweep {
            dataset,
            k_values,
            iterations,
            top_n,
        } => {
            config.lda.k_values = k_values.unwrap_or(config.lda.k_values);
            config.lda.iterations = iterations.unwrap_or(config.lda.iterations);
            config.coherence.top_n = top_n.unwrap_or(config.coherence.top_n);
            let dataset = dataset.unwrap_or_else(|| config.output.dir.join(DATASET_FILE));
            Pipeline::new(config)?.sweep(&dataset)?;
        }
        Command::Report { inputs } => {
            config.termrank.lambda = inputs.lambda.unwrap_or(config.termrank.lambda);
            let m = model_inputs(&config, &inputs);
            Pipeline::new(config)?.report(&m)?;
        }
        Command::Query {
            inputs,
            topic,
            terms,
            augment,
        } => {
            config.termrank.lambda = inputs.lambda.unwrap_or(config.termrank.lambda);
            let m = model_inputs(&config, &inputs);
            let request = QueryRequest {
                topic,
                n_terms: terms,
                augment: (!augment.is_empty()).then_some(augment),
            };
            let result = Pipeline::new(config)?.query(&m, &request)?;
            log::info!("query: {} products matched", result.matches.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
