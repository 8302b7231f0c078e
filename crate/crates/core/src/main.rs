use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sentilab::cli::{self, RunConfig};
use sentilab::traineval::Label;

#[derive(Parser)]
#[command(name = "sentilab", version, about = "Tweet sentiment classification for Spanish dialects")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key=value run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Label counts per dialect.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Dataset files; defaults to the configured train and dev files.
        files: Vec<PathBuf>,
    },
    /// Train a model and write its artifacts.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score a labeled dataset with a trained model.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Add one row per dialect.
        #[arg(long)]
        group: bool,
    },
    /// Classify tweets.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "file")]
        text: Option<String>,
        /// One tweet per line.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Train with and without hashtag segmentation and compare.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> Result<()> {
    let args = Cli::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    match args.command {
        Command::Stats { common, files } => {
            let cfg = common.run_config()?;
            let files = if files.is_empty() { cfg.train_file.iter().chain(&cfg.dev_file).cloned().collect() } else { files };
            if files.is_empty() {
                bail!("no dataset files given");
            }
            let records = cli::load_records(&files)?;
            let stats = cli::cmd_stats(&records, common.out.as_deref())?;
            write!(out, "{}", stats.to_text())?;
        }
        Command::Train { common } => {
            let cfg = common.run_config()?;
            let outcome = cli::cmd_train(&cfg)?;
            writeln!(
                out,
                "seed {}: {} epochs, best epoch {}, train accuracy {:.4}, validation accuracy {:.4}; artifacts in {}",
                cfg.train.seed,
                outcome.history.len(),
                outcome.best_epoch.map_or("-".to_string(), |e| e.to_string()),
                outcome.train_accuracy,
                outcome.val_accuracy,
                cfg.out_dir.display()
            )?;
        }
        Command::Eval { common, model, data, group } => {
            if common.seed.is_some() {
                log::warn!("--seed has no effect on evaluation");
            }
            let res_cfg = common.config.as_ref().map(|_| common.run_config()).transpose()?;
            let dest = common.out.clone().unwrap_or_else(|| model.clone());
            let report = cli::cmd_eval(&model, &data, group, &dest, res_cfg.as_ref())?;
            let seed = cli::load_run(&model)?.model.state.config.seed;
            write!(out, "{}", cli::eval_table_text(&report, seed))?;
        }
        Command::Predict { common, model, text, file } => {
            let texts: Vec<String> = match (text, file) {
                (Some(t), _) => vec![t],
                (None, Some(f)) => {
                    let reader = std::io::BufReader::new(std::fs::File::open(&f).with_context(|| format!("opening {}", f.display()))?);
                    reader.lines().collect::<Result<_, _>>()?
                }
                (None, None) => bail!("give --text or --file"),
            };
            let res_cfg = common.config.as_ref().map(|_| common.run_config()).transpose()?;
            let preds = cli::cmd_predict(&model, &texts, res_cfg.as_ref())?;
            let header: Vec<&str> = Label::ALL.iter().map(|l| l.as_str()).collect();
            writeln!(out, "label\t{}\ttext", header.join("\t"))?;
            for (p, t) in preds.iter().zip(&texts) {
                let probs: Vec<String> = p.probs.iter().map(|x| format!("{x:.4}")).collect();
                writeln!(out, "{}\t{}\t{}", p.label, probs.join("\t"), t)?;
            }
        }
        Command::Ablate { common } => {
            let cfg = common.run_config()?;
            let result = cli::cmd_ablate(&cfg)?;
            write!(out, "{}", cli::ablation_text(result.without, result.with))?;
        }
    }
    Ok(())
}
