use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use curriculum::harness::{
    read_report, render_table, run_experiment, write_report, BlobSpec, DataFormat, DataSource, EpochBudget, Experiment,
    ExperimentConfig, Method, ScoringSpec, TextSpec,
};

#[derive(Parser)]
#[command(name = "curriculum", version, about = "Curriculum learning experiments on small dense and text models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a score vector and write it as `index<TAB>score` lines.
    Score {
        #[command(flatten)]
        common: Common,
        /// Scoring recipe, e.g. ECVST, anti-ORACLE, UG-high, ST+TL.
        #[arg(long)]
        scoring: String,
        /// Output file (defaults to <out>/scores.tsv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train one method for the configured number of trials.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: String,
    },
    /// Run the configured methods plus baselines and write the report.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated methods; replaces the config's list.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Skip the vanilla and rand-cl baselines.
        #[arg(long)]
        no_baselines: bool,
    },
    /// Re-render table and curves from a saved report.json.
    Report {
        report: PathBuf,
        #[arg(long, env = "CURRICULUM_OUT_DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training data file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    /// IDX label file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Built-in synthetic data instead of a file: `blobs` or `text`.
    #[arg(long, conflicts_with = "data")]
    synthetic: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Fixed epoch budget; skips calibration.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden: Vec<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    ensemble_runs: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, env = "CURRICULUM_OUT_DIR", default_value = "curriculum-out")]
    out: PathBuf,
}

impl Common {
    fn config(&self, methods: Vec<Method>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::new(
                self.data_source()?.context("no data: pass --config, --data or --synthetic")?,
                vec![],
            ),
        };
        if self.config.is_some() {
            if let Some(source) = self.data_source()? {
                cfg.data = source;
            }
        }
        if !methods.is_empty() {
            cfg.methods = methods;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(epochs) = self.epochs {
            cfg.epoch_budget = EpochBudget::Fixed { epochs };
        }
        if !self.hidden.is_empty() {
            cfg.hidden = self.hidden.clone();
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
        }
        if let Some(bs) = self.batch_size {
            cfg.train.batch_size = bs;
        }
        if let Some(runs) = self.ensemble_runs {
            cfg.ensemble_runs = runs;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }

    fn data_source(&self) -> Result<Option<DataSource>> {
        if let Some(path) = &self.data {
            return Ok(Some(DataSource::File {
                path: path.clone(),
                format: self.format,
                labels: self.labels.clone(),
                test_path: self.test.clone(),
                test_labels: self.test_labels.clone(),
                holdout_fraction: 0.2,
            }));
        }
        Ok(match self.synthetic.as_deref() {
            None => None,
            Some("blobs") => Some(DataSource::GaussianBlobs {
                spec: BlobSpec { classes: 4, per_class: 150, dim: 10, sigma: 0.3, noise_fraction: 0.2 },
                test_per_class: 250,
            }),
            Some("text") => Some(DataSource::SyntheticText { spec: TextSpec::default(), holdout_fraction: 0.2 }),
            Some(other) => bail!("unknown synthetic source {other:?} (expected blobs or text)"),
        })
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    names.iter().map(|m| m.parse::<Method>().with_context(|| format!("method {m:?}"))).collect()
}

fn finish(report: &curriculum::harness::Report, out: &Path) -> Result<()> {
    let files = write_report(report, out)?;
    print!("{}", render_table(report));
    for f in &report.failures {
        log::warn!("{} trial {:?}: {}", f.method, f.trial, f.error);
    }
    eprintln!("wrote {}", files.json.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score { common, scoring, output } => {
            let spec: ScoringSpec = scoring.parse()?;
            let experiment = Experiment::prepare(common.config(vec![])?)?;
            let scores = experiment.scores(&spec)?;
            let path = output.unwrap_or_else(|| common.out.join("scores.tsv"));
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            scores.save(&path)?;
            eprintln!("wrote {} scores to {}", scores.len(), path.display());
        }
        Command::Train { common, method } => {
            let mut cfg = common.config(parse_methods(&[method])?)?;
            cfg.baselines = false;
            finish(&run_experiment(&cfg)?, &common.out)?;
        }
        Command::Experiment { common, methods, no_baselines } => {
            let mut cfg = common.config(parse_methods(&methods)?)?;
            if no_baselines {
                cfg.baselines = false;
            }
            finish(&run_experiment(&cfg)?, &common.out)?;
        }
        Command::Report { report, out } => {
            let r = read_report(&report)?;
            match out {
                Some(dir) => finish(&r, &dir)?,
                None => print!("{}", render_table(&r)),
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
