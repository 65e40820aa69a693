//! Multi-trial method comparisons.
//!
//! Every random choice derives from the master seed through named paths
//! (`"<method>/trial=<t>/init"`, `"scores/<source>"`, ...), so a config and
//! master seed fully determine the report.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_holdout, validate_dataset, Dataset};
use crate::error::{Error, Result};
use crate::harness::loaders::{load_dataset, load_tsv_pair, DataFormat};
use crate::harness::methods::{Method, ScoreSource, ScoringSpec, TrainerKind};
use crate::harness::report::{Calibration, MethodReport, Report, RunFailure, TrialResult};
use crate::harness::stats::{mean, sign_flip_p_value, std_dev};
use crate::harness::synth::{synth_dataset, synth_text, BlobSpec, TextSpec};
use crate::nn::{evaluate, init_model, ModelSpec, Optimizer, TrainConfig, Trainer};
use crate::rng::{derive_seed, Rng, STREAM_INIT, STREAM_SPLIT};
use crate::scores::{uniform_scores, ScoreVector};
use crate::scoring_model::{ensemble_scores, invert_scores, model_scores, ScorerFamily, ScoringRunConfig};
use crate::scoring_text::{ngram_scores, sentence_length_scores, Sentence};
use crate::trainers::{gcl_train, pcl_train, vanilla_train, RunConfig, RunSeeds, TrainingTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Noisy training blobs; the test set is drawn noise-free.
    GaussianBlobs { spec: BlobSpec, test_per_class: usize },
    /// Synthetic labelled sentences, split by a stratified holdout.
    SyntheticText {
        #[serde(default)]
        spec: TextSpec,
        #[serde(default = "default_holdout")]
        holdout_fraction: f64,
    },
    File {
        path: PathBuf,
        format: DataFormat,
        /// Label file, for IDX.
        #[serde(default)]
        labels: Option<PathBuf>,
        #[serde(default)]
        test_path: Option<PathBuf>,
        #[serde(default)]
        test_labels: Option<PathBuf>,
        /// Used when no test file is given.
        #[serde(default = "default_holdout")]
        holdout_fraction: f64,
    },
}

fn default_holdout() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EpochBudget {
    Fixed {
        epochs: usize,
    },
    /// Train until validation accuracy stalls for `patience` epochs, then
    /// use `multiplier` times the best epoch.
    Calibrated {
        multiplier: usize,
        patience: usize,
        max_epochs: usize,
    },
}

impl Default for EpochBudget {
    fn default() -> Self {
        EpochBudget::Calibrated { multiplier: 3, patience: 5, max_epochs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { batch_size: 32, learning_rate: 0.01, optimizer: Optimizer::default() }
    }
}

impl TrainSettings {
    fn config(&self, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            seed,
        }
    }
}

fn default_trials() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_hidden() -> Vec<usize> {
    vec![32]
}
fn default_transfer_hidden() -> Vec<usize> {
    vec![96, 96]
}
fn default_embedding_dim() -> usize {
    16
}
fn default_ensemble_runs() -> usize {
    5
}
fn default_eval_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub methods: Vec<Method>,
    /// Prepend `vanilla` and `rand-cl` when not listed.
    #[serde(default = "default_true")]
    pub baselines: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Hidden widths of the trainee (and of self-thought scorers).
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Hidden widths of transfer scorers.
    #[serde(default = "default_transfer_hidden")]
    pub transfer_hidden: Vec<usize>,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub epoch_budget: EpochBudget,
    #[serde(default = "default_ensemble_runs")]
    pub ensemble_runs: usize,
    #[serde(default = "default_eval_stride")]
    pub eval_stride: usize,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(data: DataSource, methods: Vec<Method>) -> Self {
        Self {
            data,
            methods,
            baselines: true,
            trials: default_trials(),
            master_seed: 0,
            hidden: default_hidden(),
            transfer_hidden: default_transfer_hidden(),
            embedding_dim: default_embedding_dim(),
            train: TrainSettings::default(),
            epoch_budget: EpochBudget::default(),
            ensemble_runs: default_ensemble_runs(),
            eval_stride: default_eval_stride(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.methods.is_empty() && !self.baselines {
            return Err(Error::InvalidConfig("no methods to run".into()));
        }
        if self.ensemble_runs == 0 || self.eval_stride == 0 {
            return Err(Error::InvalidConfig("ensemble_runs and eval_stride must be at least 1".into()));
        }
        match self.epoch_budget {
            EpochBudget::Fixed { epochs } if epochs < 3 => {
                Err(Error::InvalidConfig("a fixed budget needs at least 3 epochs".into()))
            }
            EpochBudget::Calibrated { multiplier: 0, .. } | EpochBudget::Calibrated { patience: 0, .. } => {
                Err(Error::InvalidConfig("multiplier and patience must be positive".into()))
            }
            _ => self.train.config(1, 0).validate(),
        }
    }

    /// Methods in run order: baselines first (when enabled), then the
    /// listed ones, without duplicates.
    pub fn method_list(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        if self.baselines {
            out.push(Method::Vanilla);
            out.push(Method::RandCl);
        }
        for m in &self.methods {
            if !out.contains(m) {
                out.push(m.clone());
            }
        }
        out
    }
}

/// Training and evaluation data plus, for synthetic sources, the
/// clean-sample mask.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub clean_mask: Option<Vec<bool>>,
}

fn align_classes(train: Dataset, test: Dataset) -> Result<(Dataset, Dataset)> {
    if train.class_count() == test.class_count() {
        return Ok((train, test));
    }
    let classes = train.class_count().max(test.class_count());
    let rebuild = |d: Dataset| Dataset::new(d.samples().to_vec(), classes, d.kind().clone());
    Ok((rebuild(train)?, rebuild(test)?))
}

fn holdout_split(full: Dataset, fraction: f64, seed: u64, mask: Option<Vec<bool>>) -> Result<PreparedData> {
    let (train_idx, test_idx) = stratified_holdout(&full, fraction, &mut Rng::new(seed, STREAM_SPLIT))?;
    let clean_mask = mask.map(|m| train_idx.iter().map(|&i| m[i]).collect());
    Ok(PreparedData {
        train: validate_dataset(full.subset(&train_idx))?,
        test: validate_dataset(full.subset(&test_idx))?,
        clean_mask,
    })
}

pub fn prepare_data(source: &DataSource, master_seed: u64) -> Result<PreparedData> {
    let holdout_seed = derive_seed(master_seed, "data/holdout");
    match source {
        DataSource::GaussianBlobs { spec, test_per_class } => {
            let train = synth_dataset(spec, &mut Rng::new(derive_seed(master_seed, "data/train"), "data"))?;
            let test_spec = BlobSpec { per_class: *test_per_class, noise_fraction: 0.0, ..spec.clone() };
            let test = synth_dataset(&test_spec, &mut Rng::new(derive_seed(master_seed, "data/test"), "data"))?;
            Ok(PreparedData { train: train.dataset, test: test.dataset, clean_mask: Some(train.clean_mask) })
        }
        DataSource::SyntheticText { spec, holdout_fraction } => {
            let full = synth_text(spec, &mut Rng::new(derive_seed(master_seed, "data/text"), "data"))?;
            holdout_split(full.dataset, *holdout_fraction, holdout_seed, Some(full.clean_mask))
        }
        DataSource::File { path, format, labels, test_path, test_labels, holdout_fraction } => match test_path {
            Some(test_path) => {
                let (train, test) = if *format == DataFormat::TsvText {
                    load_tsv_pair(path, test_path)?
                } else {
                    (
                        load_dataset(path, *format, labels.as_deref())?,
                        load_dataset(test_path, *format, test_labels.as_deref())?,
                    )
                };
                let (train, test) = align_classes(train, test)?;
                Ok(PreparedData { train, test, clean_mask: None })
            }
            None => {
                holdout_split(load_dataset(path, *format, labels.as_deref())?, *holdout_fraction, holdout_seed, None)
            }
        },
    }
}

/// Trains on a stratified 80% of `d` while tracking accuracy on the other
/// 20%, stopping once accuracy has not improved for `patience` epochs (or
/// at `max_epochs`). The budget is `multiplier` times the first epoch that
/// reached the best accuracy, and never below 3.
pub fn calibrate_epochs(
    d: &Dataset,
    spec: &ModelSpec,
    settings: &TrainSettings,
    multiplier: usize,
    patience: usize,
    max_epochs: usize,
    seed: u64,
) -> Result<Calibration> {
    let (train_idx, val_idx) = stratified_holdout(d, 0.2, &mut Rng::new(seed, STREAM_SPLIT))?;
    let validation = d.subset(&val_idx);
    let params = init_model(spec, &mut Rng::new(seed, STREAM_INIT))?;
    let mut trainer = Trainer::new(params, settings.config(max_epochs.max(1), seed))?;
    let (mut best, mut best_epoch) = (f64::NEG_INFINITY, 0);
    let mut curve = Vec::new();
    for epoch in 1..=max_epochs.max(1) {
        trainer.run_epoch(d, &train_idx)?;
        let acc = evaluate(trainer.params(), &validation)?;
        curve.push(acc);
        if acc > best {
            best = acc;
            best_epoch = epoch;
        } else if epoch - best_epoch >= patience {
            break;
        }
    }
    Ok(Calibration {
        best_epoch,
        epochs_run: curve.len(),
        budget: (multiplier * best_epoch).max(3),
        validation_accuracy: curve,
    })
}

type ScoreKey = (String, u64, u64);

/// A prepared experiment: data loaded, epoch budget fixed, scores cached.
pub struct Experiment {
    cfg: ExperimentConfig,
    data: PreparedData,
    trainee_spec: ModelSpec,
    budget: usize,
    calibration: Option<Calibration>,
    cache: Mutex<HashMap<ScoreKey, ScoreVector>>,
    warnings: Mutex<Vec<String>>,
}

impl Experiment {
    pub fn prepare(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let data = prepare_data(&cfg.data, cfg.master_seed)?;
        Self::with_data(cfg, data)
    }

    /// Uses already-loaded data instead of `cfg.data`.
    pub fn with_data(cfg: ExperimentConfig, data: PreparedData) -> Result<Self> {
        cfg.validate()?;
        let trainee_spec = ModelSpec::for_dataset(&data.train, &cfg.hidden, cfg.embedding_dim);
        trainee_spec.check_dataset(&data.train)?;
        trainee_spec.check_dataset(&data.test)?;
        let (budget, calibration) = match cfg.epoch_budget {
            EpochBudget::Fixed { epochs } => (epochs, None),
            EpochBudget::Calibrated { multiplier, patience, max_epochs } => {
                let c = calibrate_epochs(
                    &data.train,
                    &trainee_spec,
                    &cfg.train,
                    multiplier,
                    patience,
                    max_epochs,
                    derive_seed(cfg.master_seed, "calibration"),
                )?;
                log::info!("calibrated budget {} (best validation epoch {})", c.budget, c.best_epoch);
                (c.budget, Some(c))
            }
        };
        Ok(Self {
            cfg,
            data,
            trainee_spec,
            budget,
            calibration,
            cache: Mutex::new(HashMap::new()),
            warnings: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn data(&self) -> &PreparedData {
        &self.data
    }

    pub fn epoch_budget(&self) -> usize {
        self.budget
    }

    pub fn trainee_spec(&self) -> &ModelSpec {
        &self.trainee_spec
    }

    fn scorer_config(&self, family: ScorerFamily, cross_validated: bool) -> ScoringRunConfig {
        let scorer_spec = match family {
            ScorerFamily::SelfThought => self.trainee_spec.clone(),
            ScorerFamily::Transfer => {
                ModelSpec::for_dataset(&self.data.train, &self.cfg.transfer_hidden, self.cfg.embedding_dim)
            }
        };
        ScoringRunConfig {
            scorer_spec,
            train_cfg: self.cfg.train.config(self.budget, 0),
            ensemble_runs: self.cfg.ensemble_runs,
            cross_validated,
        }
    }

    fn sentences(&self, source: &ScoreSource) -> Result<Vec<Sentence>> {
        let raw =
            self.data.train.sentences().ok_or_else(|| Error::Unsupported(source.to_string(), "text dataset".into()))?;
        raw.into_iter().map(Sentence::new).collect()
    }

    fn compute_source(&self, source: &ScoreSource, seed: u64) -> Result<ScoreVector> {
        let d = &self.data.train;
        match *source {
            ScoreSource::Model { family, cross_validated, ensemble } => {
                let cfg = self.scorer_config(family, cross_validated);
                if family == ScorerFamily::Transfer && cfg.scorer_spec.param_count() <= self.trainee_spec.param_count()
                {
                    self.warnings.lock().unwrap().push(format!(
                        "{source}: scorer has {} parameters, trainee {}",
                        cfg.scorer_spec.param_count(),
                        self.trainee_spec.param_count()
                    ));
                }
                model_scores(d, &cfg, family, &self.trainee_spec, ensemble, seed)
            }
            ScoreSource::Oracle => {
                let mask =
                    self.data.clean_mask.as_ref().ok_or_else(|| {
                        Error::Unsupported(source.to_string(), "synthetic data with a clean mask".into())
                    })?;
                if mask.iter().all(|&c| c) {
                    return uniform_scores(mask.len());
                }
                ScoreVector::normalize(mask.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect())
            }
            ScoreSource::SentenceLength(dir) => sentence_length_scores(&self.sentences(source)?, dir),
            ScoreSource::Ngram(order, dir) => ngram_scores(&self.sentences(source)?, order, dir),
        }
    }

    /// Scores for one source, computed once per (source, dataset, seed).
    pub fn source_scores(&self, source: &ScoreSource) -> Result<ScoreVector> {
        let label = source.to_string();
        let seed = derive_seed(self.cfg.master_seed, &format!("scores/{label}"));
        let key = (label, self.data.train.digest(), seed);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let scores = self.compute_source(source, seed)?;
        self.cache.lock().unwrap().insert(key, scores.clone());
        Ok(scores)
    }

    /// Averaged (and optionally inverted) scores for a recipe.
    pub fn scores(&self, spec: &ScoringSpec) -> Result<ScoreVector> {
        let runs = spec.sources.iter().map(|s| self.source_scores(s)).collect::<Result<Vec<_>>>()?;
        let merged = if runs.len() == 1 { runs.into_iter().next().unwrap() } else { ensemble_scores(&runs)? };
        Ok(if spec.anti { invert_scores(&merged) } else { merged })
    }

    /// Seeds of one (method, trial) run.
    pub fn run_seeds(&self, method: &Method, trial: usize) -> RunSeeds {
        let path = |stream: &str| derive_seed(self.cfg.master_seed, &format!("{method}/trial={trial}/{stream}"));
        RunSeeds { init: path("init"), shuffle: path("shuffle"), selection: path("selection") }
    }

    fn run_config(&self, seeds: RunSeeds) -> RunConfig {
        RunConfig {
            spec: self.trainee_spec.clone(),
            train: self.cfg.train.config(self.budget, seeds.shuffle),
            seeds,
            eval_stride: self.cfg.eval_stride,
        }
    }

    fn run_one(&self, method: &Method, scores: Option<&ScoreVector>, seeds: RunSeeds) -> Result<TrainingTrace> {
        let cfg = self.run_config(seeds);
        let (train, test) = (&self.data.train, &self.data.test);
        match method {
            Method::Vanilla => vanilla_train(train, &cfg, test),
            Method::RandCl => pcl_train(train, scores.expect("rand-cl scores"), &cfg, test),
            Method::Curriculum { trainer: TrainerKind::Gcl, .. } => {
                gcl_train(train, scores.expect("scores"), &cfg, test)
            }
            Method::Curriculum { trainer: TrainerKind::Pcl, .. } => {
                pcl_train(train, scores.expect("scores"), &cfg, test)
            }
        }
    }

    /// Runs every method for `cfg.trials` trials and aggregates a report.
    /// A failing run is recorded in `failures` and the rest continue.
    pub fn run(&self, methods: &[Method]) -> Report {
        match self.cfg.threads {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| self.run_inner(methods)),
                Err(e) => {
                    log::warn!("thread pool: {e}; using the global pool");
                    self.run_inner(methods)
                }
            },
            None => self.run_inner(methods),
        }
    }

    fn run_inner(&self, methods: &[Method]) -> Report {
        let trials = self.cfg.trials;
        let mut failures = Vec::new();

        // Scores first, sequentially; each scoring run parallelizes inside.
        let mut method_scores: Vec<Option<std::result::Result<ScoreVector, String>>> = Vec::new();
        for m in methods {
            let s = match m {
                Method::Vanilla => None,
                Method::RandCl => Some(uniform_scores(self.data.train.len()).map_err(|e| e.to_string())),
                Method::Curriculum { scoring, .. } => Some(self.scores(scoring).map_err(|e| e.to_string())),
            };
            if let Some(Err(e)) = &s {
                failures.push(RunFailure { method: m.to_string(), trial: None, error: e.clone() });
            }
            method_scores.push(s);
        }

        let runs: Vec<(usize, usize, RunSeeds)> = methods
            .iter()
            .enumerate()
            .flat_map(|(mi, m)| (0..trials).map(move |t| (mi, t, self.run_seeds(m, t))))
            .collect();
        let mut unique = HashSet::new();
        for (_, _, s) in &runs {
            for v in [s.init, s.shuffle, s.selection] {
                assert!(unique.insert(v), "seed collision across (method, trial, stream)");
            }
        }

        let results: Vec<Option<Result<TrainingTrace>>> = runs
            .par_iter()
            .map(|&(mi, _, seeds)| match &method_scores[mi] {
                Some(Err(_)) => None,
                Some(Ok(s)) => Some(self.run_one(&methods[mi], Some(s), seeds)),
                None => Some(self.run_one(&methods[mi], None, seeds)),
            })
            .collect();

        let mut per_method: Vec<Vec<TrialResult>> = vec![Vec::new(); methods.len()];
        for ((mi, t, seeds), result) in runs.into_iter().zip(results) {
            match result {
                None => {}
                Some(Ok(trace)) => {
                    per_method[mi].push(TrialResult { trial: t, seeds, max_accuracy: trace.max_accuracy, trace })
                }
                Some(Err(e)) => {
                    log::warn!("{} trial {t} failed: {e}", methods[mi]);
                    failures.push(RunFailure { method: methods[mi].to_string(), trial: Some(t), error: e.to_string() })
                }
            }
        }

        let vanilla = methods.iter().position(|m| *m == Method::Vanilla).map(|i| per_method[i].clone());
        let vanilla_mean = vanilla
            .as_ref()
            .filter(|v| !v.is_empty())
            .map(|v| mean(&v.iter().map(|t| t.max_accuracy).collect::<Vec<_>>()));
        let mut reports = Vec::new();
        for (m, trials) in methods.iter().zip(per_method) {
            if trials.is_empty() {
                continue;
            }
            let accs: Vec<f64> = trials.iter().map(|t| t.max_accuracy).collect();
            let mean_acc = mean(&accs);
            let p_value = vanilla.as_ref().and_then(|v| {
                let pairs: Vec<(f64, f64)> = trials
                    .iter()
                    .filter_map(|t| v.iter().find(|b| b.trial == t.trial).map(|b| (t.max_accuracy, b.max_accuracy)))
                    .collect();
                if pairs.is_empty() {
                    return None;
                }
                let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                let mut rng = Rng::new(derive_seed(self.cfg.master_seed, &format!("permutation/{m}")), "permutation");
                Some(sign_flip_p_value(&a, &b, &mut rng))
            });
            reports.push(MethodReport {
                method: m.to_string(),
                mean_max_accuracy: mean_acc,
                std_max_accuracy: std_dev(&accs),
                delta_vs_vanilla: vanilla_mean.map(|v| mean_acc - v),
                p_value,
                trials,
            });
        }

        Report {
            master_seed: self.cfg.master_seed,
            trials,
            epoch_budget: self.budget,
            calibration: self.calibration.clone(),
            dataset_digest: format!("{:016x}", self.data.train.digest()),
            methods: reports,
            failures,
            warnings: self.warnings.lock().unwrap().clone(),
        }
    }
}

/// Prepares the experiment and runs [`ExperimentConfig::method_list`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let experiment = Experiment::prepare(cfg.clone())?;
    let methods = cfg.method_list();
    Ok(experiment.run(&methods))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DataSource {
        DataSource::GaussianBlobs {
            spec: BlobSpec { classes: 3, per_class: 30, dim: 6, sigma: 0.3, noise_fraction: 0.2 },
            test_per_class: 20,
        }
    }

    fn small(methods: &str) -> ExperimentConfig {
        let methods = methods.split(',').map(|m| m.parse().unwrap()).collect();
        let mut cfg = ExperimentConfig::new(blobs(), methods);
        cfg.trials = 2;
        cfg.master_seed = 7;
        cfg.hidden = vec![8];
        cfg.transfer_hidden = vec![16];
        cfg.ensemble_runs = 2;
        cfg.epoch_budget = EpochBudget::Fixed { epochs: 6 };
        cfg
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small("ORACLE-GCL,ECVST-PCL");
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"data":{"kind":"synthetic_text"},"methods":["SL-long-PCL"]}"#).unwrap();
        assert_eq!(cfg.trials, 5);
        assert!(cfg.baselines);
        assert_eq!(cfg.method_list().len(), 3);
    }

    #[test]
    fn baselines_come_first_without_duplicates() {
        let cfg = small("vanilla,ORACLE-GCL");
        let names: Vec<String> = cfg.method_list().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["vanilla", "rand-cl", "ORACLE-GCL"]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small("ORACLE-GCL");
        cfg.trials = 0;
        assert!(Experiment::prepare(cfg).is_err());
        let mut cfg = small("ORACLE-GCL");
        cfg.epoch_budget = EpochBudget::Fixed { epochs: 2 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_is_deterministic_and_complete() {
        let cfg = small("ORACLE-GCL,anti-ORACLE-PCL,ST-GCL");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert!(a.failures.is_empty(), "{:?}", a.failures);
        assert_eq!(a.methods.len(), 5);
        for m in &a.methods {
            assert_eq!(m.trials.len(), 2);
            assert_eq!(m.trials[0].trace.epochs.len(), 6);
        }
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.method("vanilla").unwrap().delta_vs_vanilla, Some(0.0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = small("ORACLE-PCL");
        cfg.threads = Some(1);
        let a = run_experiment(&cfg).unwrap();
        cfg.threads = Some(4);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn text_sources_fail_on_dense_data_without_stopping_the_run() {
        let report = run_experiment(&small("UG-high-GCL")).unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].trial, None);
        assert!(report.method("vanilla").is_some());
        assert!(report.method("UG-high-GCL").is_none());
    }

    #[test]
    fn oracle_scores_favour_clean_samples() {
        let exp = Experiment::prepare(small("ORACLE-GCL")).unwrap();
        let s = exp.scores(&"ORACLE".parse().unwrap()).unwrap();
        let mask = exp.data().clean_mask.clone().unwrap();
        for (i, &clean) in mask.iter().enumerate() {
            assert_eq!(s.get(i) > 0.0, clean);
        }
        let anti = exp.scores(&"anti-ORACLE".parse().unwrap()).unwrap();
        let noisy = mask.iter().position(|&c| !c).unwrap();
        let clean = mask.iter().position(|&c| c).unwrap();
        assert!(anti.get(noisy) > anti.get(clean));
    }

    #[test]
    fn calibration_budget_is_a_multiple_of_best_epoch() {
        let data = prepare_data(&blobs(), 3).unwrap();
        let spec = ModelSpec::for_dataset(&data.train, &[8], 4);
        let c = calibrate_epochs(&data.train, &spec, &TrainSettings::default(), 3, 5, 60, 11).unwrap();
        assert!(c.best_epoch >= 1);
        assert_eq!(c.budget, (3 * c.best_epoch).max(3));
        assert!(c.epochs_run <= 60);
        assert!(c.epochs_run == 60 || c.epochs_run == c.best_epoch + 5);
    }

    #[test]
    fn seeds_differ_by_method_and_trial() {
        let exp = Experiment::prepare(small("ORACLE-GCL")).unwrap();
        let a = exp.run_seeds(&Method::Vanilla, 0);
        let b = exp.run_seeds(&Method::Vanilla, 1);
        let c = exp.run_seeds(&Method::RandCl, 0);
        assert_ne!(a.init, b.init);
        assert_ne!(a.init, c.init);
        assert_ne!(a.init, a.shuffle);
    }
}
