//! Vanilla, greedy-curriculum (GCL) and probabilistic-curriculum (PCL)
//! training loops.
//!
//! Both curriculum selectors keep each epoch's subset class-stratified: a
//! subset of size `k` holds `stratified_quota(class_sizes, k)` samples per
//! class. GCL takes the highest-scoring samples of each class; PCL draws
//! them without replacement with probability proportional to score, fresh
//! every epoch.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{evaluate, init_model, ModelParams, ModelSpec, TrainConfig, Trainer};
use crate::pacing::{staircase_pacing, PacingSchedule};
use crate::rng::{hash64, Rng, STREAM_INIT, STREAM_PCL};
use crate::scores::ScoreVector;

pub use crate::data::stratified_quota;

fn class_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

fn check_selection_inputs(scores: &ScoreVector, labels: &[usize], k: usize) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if k == 0 || k > labels.len() {
        return Err(Error::Infeasible { k, n: labels.len() });
    }
    Ok(())
}

/// Per class, the `quota` highest-scoring samples (ties to the lower
/// index). Returned ascending by index.
pub fn gcl_select(scores: &ScoreVector, labels: &[usize], k: usize) -> Result<Vec<usize>> {
    check_selection_inputs(scores, labels, k)?;
    let members = class_members(labels);
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = stratified_quota(&sizes, k)?;
    let w = scores.weights();
    let mut picked = Vec::with_capacity(k);
    for (mut class, quota) in members.into_iter().zip(quotas) {
        class.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        picked.extend_from_slice(&class[..quota]);
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Draws `quota` members without replacement by successive proportional
/// draws. Zero-weight members are taken uniformly once the positive ones
/// run out.
fn draw_proportional(class: &[usize], weights: &[f64], quota: usize, rng: &mut Rng) -> Vec<usize> {
    let (mut positive, mut zero): (Vec<usize>, Vec<usize>) = class.iter().partition(|&&i| weights[i] > 0.0);
    let mut picked = Vec::with_capacity(quota);
    while picked.len() < quota && !positive.is_empty() {
        let total: f64 = positive.iter().map(|&i| weights[i]).sum();
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut slot = positive.len() - 1;
        for (pos, &i) in positive.iter().enumerate() {
            acc += weights[i];
            if target < acc {
                slot = pos;
                break;
            }
        }
        picked.push(positive.remove(slot));
    }
    if picked.len() < quota {
        rng.shuffle(&mut zero);
        picked.extend_from_slice(&zero[..quota - picked.len()]);
    }
    picked
}

/// Per class, `quota` samples drawn without replacement with probability
/// proportional to score. Returned ascending by index.
pub fn pcl_select(scores: &ScoreVector, labels: &[usize], k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    check_selection_inputs(scores, labels, k)?;
    let members = class_members(labels);
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = stratified_quota(&sizes, k)?;
    let mut picked = Vec::with_capacity(k);
    for (class, quota) in members.iter().zip(quotas) {
        picked.extend(draw_proportional(class, scores.weights(), quota, rng));
    }
    picked.sort_unstable();
    Ok(picked)
}

/// How each epoch's subset is chosen.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'a> {
    /// Every sample, every epoch.
    Full,
    Greedy(&'a ScoreVector),
    Probabilistic(&'a ScoreVector),
}

/// Seeds for the three random streams of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub init: u64,
    pub shuffle: u64,
    pub selection: u64,
}

impl RunSeeds {
    pub fn single(seed: u64) -> Self {
        Self { init: seed, shuffle: seed, selection: seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ModelSpec,
    /// `epochs` is the run length T; `seed` is ignored in favour of `seeds`.
    pub train: TrainConfig,
    pub seeds: RunSeeds,
    /// Evaluate every this many epochs; the last epoch is always evaluated.
    pub eval_stride: usize,
}

impl RunConfig {
    pub fn new(spec: ModelSpec, train: TrainConfig) -> Self {
        let seeds = RunSeeds::single(train.seed);
        Self { spec, train, seeds, eval_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub subset_size: usize,
    /// Hex digest of the sorted subset indices.
    pub subset_digest: String,
    pub train_loss: f64,
    pub eval_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    pub final_params: ModelParams,
    pub max_accuracy: f64,
}

impl TrainingTrace {
    pub fn subset_sizes(&self) -> Vec<usize> {
        self.epochs.iter().map(|e| e.subset_size).collect()
    }

    pub fn presentations(&self) -> usize {
        self.epochs.iter().map(|e| e.subset_size).sum()
    }
}

pub fn subset_digest(indices: &[usize]) -> String {
    let bytes: Vec<u8> = indices.iter().flat_map(|&i| (i as u64).to_le_bytes()).collect();
    format!("{:016x}", hash64(&bytes))
}

/// Runs one continuous training: parameters and optimizer state carry over
/// between epochs while the subset follows `schedule`.
pub fn train_with_schedule(
    d: &Dataset,
    selection: Selection<'_>,
    schedule: &PacingSchedule,
    cfg: &RunConfig,
    eval_set: &Dataset,
) -> Result<TrainingTrace> {
    if cfg.eval_stride == 0 {
        return Err(Error::InvalidConfig("eval_stride must be at least 1".into()));
    }
    if let Selection::Greedy(s) | Selection::Probabilistic(s) = selection {
        if s.len() != d.len() {
            return Err(Error::LengthMismatch(s.len(), d.len()));
        }
    }
    cfg.spec.check_dataset(d)?;
    cfg.spec.check_dataset(eval_set)?;
    let labels = d.labels();
    let all: Vec<usize> = (0..d.len()).collect();
    let params = init_model(&cfg.spec, &mut Rng::new(cfg.seeds.init, STREAM_INIT))?;
    let train_cfg = TrainConfig { epochs: schedule.epochs(), seed: cfg.seeds.shuffle, ..cfg.train.clone() };
    let mut trainer = Trainer::new(params, train_cfg)?;
    let mut pcl_rng = Rng::new(cfg.seeds.selection, STREAM_PCL);

    let mut records = Vec::with_capacity(schedule.epochs());
    let mut max_accuracy = f64::NEG_INFINITY;
    for (e, &k) in schedule.sizes().iter().enumerate() {
        let indices = match selection {
            Selection::Full if k == d.len() => all.clone(),
            Selection::Full => {
                return Err(Error::InvalidConfig("full selection needs a full-size schedule".into()));
            }
            Selection::Greedy(s) => gcl_select(s, &labels, k)?,
            Selection::Probabilistic(s) => pcl_select(s, &labels, k, &mut pcl_rng)?,
        };
        let train_loss = trainer.run_epoch(d, &indices)?;
        let last = e + 1 == schedule.epochs();
        let eval_accuracy = if (e + 1) % cfg.eval_stride == 0 || last {
            let acc = evaluate(trainer.params(), eval_set)?;
            max_accuracy = max_accuracy.max(acc);
            Some(acc)
        } else {
            None
        };
        log::debug!("epoch {} size {k} loss {train_loss:.5} acc {eval_accuracy:?}", e + 1);
        records.push(EpochRecord {
            epoch: e + 1,
            subset_size: k,
            subset_digest: subset_digest(&indices),
            train_loss,
            eval_accuracy,
        });
    }
    Ok(TrainingTrace { epochs: records, final_params: trainer.into_params(), max_accuracy })
}

/// Greedy curriculum over the staircase schedule for `cfg.train.epochs`.
pub fn gcl_train(d: &Dataset, scores: &ScoreVector, cfg: &RunConfig, eval_set: &Dataset) -> Result<TrainingTrace> {
    let schedule = staircase_pacing(d.len(), cfg.train.epochs)?;
    train_with_schedule(d, Selection::Greedy(scores), &schedule, cfg, eval_set)
}

/// Probabilistic curriculum over the staircase schedule.
pub fn pcl_train(d: &Dataset, scores: &ScoreVector, cfg: &RunConfig, eval_set: &Dataset) -> Result<TrainingTrace> {
    let schedule = staircase_pacing(d.len(), cfg.train.epochs)?;
    train_with_schedule(d, Selection::Probabilistic(scores), &schedule, cfg, eval_set)
}

/// Full dataset every epoch.
pub fn vanilla_train(d: &Dataset, cfg: &RunConfig, eval_set: &Dataset) -> Result<TrainingTrace> {
    let schedule = PacingSchedule::full(d.len(), cfg.train.epochs);
    train_with_schedule(d, Selection::Full, &schedule, cfg, eval_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::scores::uniform_scores;
    use proptest::prelude::*;

    fn sv(w: &[f64]) -> ScoreVector {
        ScoreVector::normalize(w.to_vec()).unwrap()
    }

    fn blobs(n_per: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed, "blobs");
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per {
            let c = i % 2;
            let center = if c == 0 { -1.0 } else { 1.0 };
            rows.push(vec![center + 0.6 * rng.normal(), 0.6 * rng.normal()]);
            labels.push(c);
        }
        Dataset::dense(rows, labels, 2).unwrap()
    }

    fn run_cfg(epochs: usize, seed: u64) -> RunConfig {
        let train = TrainConfig { epochs, batch_size: 8, learning_rate: 0.02, seed, ..Default::default() };
        RunConfig::new(ModelSpec::dense(vec![2, 6, 2]), train)
    }

    #[test]
    fn gcl_picks_top_per_class() {
        let s = sv(&[0.4, 0.3, 0.2, 0.1]);
        assert_eq!(gcl_select(&s, &[0, 0, 1, 1], 2).unwrap(), vec![0, 2]);
        assert_eq!(gcl_select(&s, &[0, 0, 1, 1], 4).unwrap(), vec![0, 1, 2, 3]);
        let tied = sv(&[1.0; 6]);
        assert_eq!(gcl_select(&tied, &[0, 0, 0, 1, 1, 1], 2).unwrap(), vec![0, 3]);
    }

    #[test]
    fn selection_rejects_bad_k() {
        let s = sv(&[1.0; 4]);
        assert!(matches!(gcl_select(&s, &[0, 0, 1, 1], 5), Err(Error::Infeasible { .. })));
        assert!(matches!(gcl_select(&s, &[0, 0, 1, 1], 0), Err(Error::Infeasible { .. })));
        assert!(matches!(
            pcl_select(&s, &[0, 0, 1], 1, &mut Rng::new(0, STREAM_PCL)),
            Err(Error::LengthMismatch(4, 3))
        ));
    }

    #[test]
    fn pcl_degenerate_distribution() {
        let s = sv(&[1.0, 0.0]);
        let mut rng = Rng::new(1, STREAM_PCL);
        for _ in 0..200 {
            assert_eq!(pcl_select(&s, &[0, 0], 1, &mut rng).unwrap(), vec![0]);
        }
        // Zero-weight sample is taken once the positive one is exhausted.
        assert_eq!(pcl_select(&s, &[0, 0], 2, &mut rng).unwrap(), vec![0, 1]);
    }

    #[test]
    fn pcl_full_quota_takes_whole_class() {
        let s = sv(&[0.5, 0.1, 0.1, 0.3]);
        let mut rng = Rng::new(2, STREAM_PCL);
        assert_eq!(pcl_select(&s, &[0, 1, 0, 1], 4, &mut rng).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn pcl_frequency_matches_weights() {
        let s = sv(&[0.75, 0.25]);
        let mut rng = Rng::new(3, STREAM_PCL);
        let hits = (0..10_000).filter(|_| pcl_select(&s, &[0, 0], 1, &mut rng).unwrap() == vec![0]).count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.75).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn gcl_trace_follows_staircase() {
        let d = blobs(15, 1);
        let eval = blobs(10, 2);
        let scores = uniform_scores(d.len()).unwrap();
        let trace = gcl_train(&d, &scores, &run_cfg(9, 0), &eval).unwrap();
        assert_eq!(trace.subset_sizes(), staircase_pacing(30, 9).unwrap().sizes());
        assert_eq!(trace.presentations(), staircase_pacing(30, 9).unwrap().presentations());
        // Greedy keeps the same subset within a stage.
        assert_eq!(trace.epochs[0].subset_digest, trace.epochs[1].subset_digest);
        assert_ne!(trace.epochs[2].subset_digest, trace.epochs[3].subset_digest);
    }

    #[test]
    fn pcl_trace_is_deterministic_and_redraws() {
        let d = blobs(15, 3);
        let eval = blobs(10, 4);
        let scores = sv(&(1..=30).map(|i| i as f64).collect::<Vec<_>>());
        let a = pcl_train(&d, &scores, &run_cfg(9, 5), &eval).unwrap();
        let b = pcl_train(&d, &scores, &run_cfg(9, 5), &eval).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.subset_sizes(), staircase_pacing(30, 9).unwrap().sizes());
        assert_ne!(a.epochs[0].subset_digest, a.epochs[1].subset_digest);
    }

    #[test]
    fn vanilla_uses_everything() {
        let d = blobs(15, 6);
        let eval = blobs(10, 7);
        let trace = vanilla_train(&d, &run_cfg(6, 1), &eval).unwrap();
        assert!(trace.subset_sizes().iter().all(|&k| k == 30));
        assert!(trace.max_accuracy >= trace.epochs[0].eval_accuracy.unwrap());
        let again = vanilla_train(&d, &run_cfg(6, 1), &eval).unwrap();
        assert_eq!(trace, again);
        let best = trace.epochs.iter().filter_map(|e| e.eval_accuracy).fold(f64::MIN, f64::max);
        assert_eq!(best, trace.max_accuracy);
    }

    #[test]
    fn greedy_full_schedule_matches_vanilla() {
        let d = blobs(15, 8);
        let eval = blobs(10, 9);
        let cfg = run_cfg(5, 2);
        let scores = uniform_scores(d.len()).unwrap();
        let full = PacingSchedule::full(d.len(), 5);
        let greedy = train_with_schedule(&d, Selection::Greedy(&scores), &full, &cfg, &eval).unwrap();
        let vanilla = vanilla_train(&d, &cfg, &eval).unwrap();
        for (g, v) in greedy.epochs.iter().zip(&vanilla.epochs) {
            assert_eq!(g.subset_digest, v.subset_digest);
        }
        // Same sets and same shuffle stream: identical runs.
        assert_eq!(greedy, vanilla);
    }

    #[test]
    fn eval_stride_skips_but_keeps_last() {
        let d = blobs(15, 10);
        let eval = blobs(10, 11);
        let mut cfg = run_cfg(7, 3);
        cfg.eval_stride = 3;
        let trace = vanilla_train(&d, &cfg, &eval).unwrap();
        let evaluated: Vec<usize> =
            trace.epochs.iter().filter(|e| e.eval_accuracy.is_some()).map(|e| e.epoch).collect();
        assert_eq!(evaluated, vec![3, 6, 7]);
    }

    #[test]
    fn misaligned_scores_rejected() {
        let d = blobs(5, 0);
        let scores = uniform_scores(3).unwrap();
        assert!(matches!(gcl_train(&d, &scores, &run_cfg(3, 0), &d), Err(Error::LengthMismatch(3, 10))));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, usize)> {
        (2usize..40)
            .prop_flat_map(|n| (prop::collection::vec(0.0f64..1.0, n), prop::collection::vec(0usize..4, n), 1..=n))
    }

    proptest! {
        #[test]
        fn gcl_dominates_within_class((raw, labels, k) in instance()) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let s = sv(&raw);
            let picked = gcl_select(&s, &labels, k).unwrap();
            prop_assert_eq!(picked.len(), k);
            let mut chosen = vec![false; raw.len()];
            picked.iter().for_each(|&i| chosen[i] = true);
            for i in 0..raw.len() {
                for j in 0..raw.len() {
                    if chosen[i] && !chosen[j] && labels[i] == labels[j] {
                        prop_assert!(s.get(i) >= s.get(j));
                    }
                }
            }
        }

        #[test]
        fn pcl_preserves_class_ratios((raw, labels, k) in instance(), seed in any::<u64>()) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let s = sv(&raw);
            let picked = pcl_select(&s, &labels, k, &mut Rng::new(seed, STREAM_PCL)).unwrap();
            let mut dedup = picked.clone();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), k);
            let n = labels.len() as f64;
            for c in 0..4 {
                let nc = labels.iter().filter(|&&l| l == c).count() as f64;
                let got = picked.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((got - k as f64 * nc / n).abs() < 1.0);
            }
        }
    }
}
