use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use textcnn::config::{GraphConfig, RunConfig};
use textcnn::pipeline::{self, AnalysisSource};
use textcnn::{Error, Result};
use textcnn_core::analysis::KernelId;

#[derive(Parser)]
#[command(name = "textcnn", version, about = "Train a TextCNN and analyze what its kernels respond to")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train and write model.ckpt, metrics.csv and manifest.json.
    Train(Common),
    /// Probe every kernel and write activations.tsv.
    ProbeExport {
        #[command(flatten)]
        common: Common,
        /// Defaults to model.ckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write the report bundle: class table, top n-grams, pairs, bridges.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Defaults to model.ckpt in the output directory.
        #[arg(long, conflicts_with = "activations")]
        checkpoint: Option<PathBuf>,
        /// Analyze an existing activation export instead of a checkpoint.
        #[arg(long)]
        activations: Option<PathBuf>,
    },
    /// Plot the activation graph of two kernels of one group as SVG.
    Plot {
        /// Activation export written by probe-export or analyze.
        #[arg(long)]
        activations: PathBuf,
        /// Two kernels, e.g. `2-4/#11 2-4/#30`.
        #[arg(long, num_args = 2, required = true)]
        kernels: Vec<KernelId>,
        /// Supplies graph.limit and graph.slices.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        slices: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a synthetic TREC-format corpus and random embeddings.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        train: usize,
        #[arg(long, default_value_t = 500)]
        test: usize,
        #[arg(long, default_value_t = 0.0)]
        label_noise: f64,
        #[arg(long, default_value_t = 300)]
        dim: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            let out = pipeline::cmd_train(&cfg)?;
            match out.manifest.test_accuracy {
                Some(a) => println!("test accuracy {a:.4}; wrote {}", cfg.out_dir.display()),
                None => println!("wrote {}", cfg.out_dir.display()),
            }
        }
        Command::ProbeExport { common, checkpoint } => {
            let cfg = common.load()?;
            let path = pipeline::cmd_probe_export(&cfg, checkpoint.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Analyze {
            common,
            checkpoint,
            activations,
        } => {
            let cfg = common.load()?;
            let source = match activations {
                Some(p) => AnalysisSource::Activations(p),
                None => AnalysisSource::Checkpoint(checkpoint),
            };
            let a = pipeline::cmd_analyze(&cfg, &source)?;
            for l in &a.summary.layers {
                println!("layer {}: pairs {:?}, bridges {}", l.layer, l.pairs, l.bridges);
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Plot {
            activations,
            kernels,
            config,
            limit,
            slices,
            out,
        } => {
            let mut graph = match config {
                Some(p) => RunConfig::load(&p)?.graph,
                None => GraphConfig::default(),
            };
            graph.limit = limit.unwrap_or(graph.limit);
            graph.slices = slices.unwrap_or(graph.slices);
            if graph.limit == 0 || graph.slices == 0 {
                return Err(Error::Usage("--limit and --slices must be positive".into()));
            }
            let path = pipeline::cmd_plot(&activations, kernels[0], kernels[1], &graph, &out)?;
            println!("wrote {}", path.display());
        }
        Command::GenSynthetic {
            out,
            seed,
            train,
            test,
            label_noise,
            dim,
        } => {
            for p in pipeline::gen_synthetic(&out, train, test, label_noise, dim, seed)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
