//! Model-based easiness scores.
//!
//! A scorer network is trained, its per-sample losses are inverted and
//! normalized, and the result ranks low-loss samples as easy. Self-thought
//! scoring uses the trainee's own architecture; transfer scoring uses a
//! larger one. The cross-validated variants score each half of a
//! stratified split with a model trained only on the other half.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_halves, Dataset};
use crate::error::{Error, Result};
use crate::nn::{init_model, per_sample_loss, train, ModelParams, ModelSpec, TrainConfig};
use crate::rng::{derive_seed, Rng, STREAM_INIT, STREAM_SPLIT};
use crate::scores::ScoreVector;

/// Losses below this are raised to it before inversion.
pub const LOSS_FLOOR: f64 = 1e-8;
/// Scores below this are raised to it before inversion.
pub const INVERT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringRunConfig {
    pub scorer_spec: ModelSpec,
    pub train_cfg: TrainConfig,
    #[serde(default = "default_ensemble_runs")]
    pub ensemble_runs: usize,
    #[serde(default)]
    pub cross_validated: bool,
}

fn default_ensemble_runs() -> usize {
    5
}

impl ScoringRunConfig {
    pub fn new(scorer_spec: ModelSpec, train_cfg: TrainConfig) -> Self {
        Self { scorer_spec, train_cfg, ensemble_runs: default_ensemble_runs(), cross_validated: false }
    }

    fn validate(&self) -> Result<()> {
        if self.ensemble_runs == 0 {
            return Err(Error::InvalidConfig("ensemble_runs must be at least 1".into()));
        }
        self.scorer_spec.validate()?;
        self.train_cfg.validate()
    }
}

/// `k_i = 1 / max(loss_i, 1e-8)`, normalized to sum to one.
pub fn losses_to_scores(losses: &[f64]) -> Result<ScoreVector> {
    if losses.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = losses.iter().position(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidScores(format!("loss {i} is {}", losses[i])));
    }
    ScoreVector::normalize(losses.iter().map(|&l| 1.0 / l.max(LOSS_FLOOR)).collect())
}

/// Trains a fresh scorer on `d`. Initialization and batch order both
/// derive from `seed`.
fn fit_scorer(spec: &ModelSpec, train_cfg: &TrainConfig, d: &Dataset, seed: u64) -> Result<ModelParams> {
    spec.check_dataset(d)?;
    let params = init_model(spec, &mut Rng::new(seed, STREAM_INIT))?;
    let cfg = TrainConfig { seed, ..train_cfg.clone() };
    train(params, d, &cfg, None)
}

/// Trains the scorer on all of `d` and scores `d` with the final weights.
/// A trainee that later consumes these scores must start from fresh
/// initial weights.
pub fn self_thought_scores(d: &Dataset, cfg: &ScoringRunConfig, seed: u64) -> Result<ScoreVector> {
    cfg.validate()?;
    let params = fit_scorer(&cfg.scorer_spec, &cfg.train_cfg, d, seed)?;
    losses_to_scores(&per_sample_loss(&params, d)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoringWarning {
    /// The transfer scorer has no more parameters than the trainee.
    SpecNotLarger { scorer_params: usize, trainee_params: usize },
}

#[derive(Debug, Clone)]
pub struct TransferScores {
    pub scores: ScoreVector,
    pub warning: Option<ScoringWarning>,
}

fn larger_check(scorer: &ModelSpec, trainee: &ModelSpec) -> Option<ScoringWarning> {
    let (scorer_params, trainee_params) = (scorer.param_count(), trainee.param_count());
    (scorer_params <= trainee_params).then(|| {
        log::warn!("transfer scorer has {scorer_params} parameters, trainee has {trainee_params}");
        ScoringWarning::SpecNotLarger { scorer_params, trainee_params }
    })
}

/// Self-thought pipeline run with `cfg.scorer_spec`, which should have more
/// capacity than `trainee_spec`. A scorer that is not larger still produces
/// scores, flagged with a warning.
pub fn transfer_scores(
    d: &Dataset,
    cfg: &ScoringRunConfig,
    trainee_spec: &ModelSpec,
    seed: u64,
) -> Result<TransferScores> {
    let warning = larger_check(&cfg.scorer_spec, trainee_spec);
    let scores = self_thought_scores(d, cfg, seed)?;
    Ok(TransferScores { scores, warning })
}

/// Which sample indices each half-model was trained on and which it scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossValidationAudit {
    pub trained_on: [Vec<usize>; 2],
    pub scored: [Vec<usize>; 2],
}

impl CrossValidationAudit {
    /// True when no model scored a sample it was trained on and every
    /// sample of an `n`-sample dataset was scored exactly once.
    pub fn is_sound(&self, n: usize) -> bool {
        let mut seen = vec![0u8; n];
        for model in 0..2 {
            let mut trained = vec![false; n];
            for &i in &self.trained_on[model] {
                trained[i] = true;
            }
            for &i in &self.scored[model] {
                if trained[i] {
                    return false;
                }
                seen[i] += 1;
            }
        }
        seen.iter().all(|&c| c == 1)
    }
}

#[derive(Debug, Clone)]
pub struct CrossValidatedScores {
    pub scores: ScoreVector,
    pub audit: CrossValidationAudit,
}

/// Splits `d` into stratified halves, trains one scorer per half and scores
/// each half with the model trained on the other one.
pub fn cross_validated_scores(d: &Dataset, cfg: &ScoringRunConfig, seed: u64) -> Result<CrossValidatedScores> {
    cfg.validate()?;
    let halves = stratified_halves(d, &mut Rng::new(seed, STREAM_SPLIT))?;
    let (model_a, model_b) = rayon::join(
        || fit_scorer(&cfg.scorer_spec, &cfg.train_cfg, &halves.a, derive_seed(seed, "half-a")),
        || fit_scorer(&cfg.scorer_spec, &cfg.train_cfg, &halves.b, derive_seed(seed, "half-b")),
    );
    let (model_a, model_b) = (model_a?, model_b?);

    let mut losses = vec![f64::NAN; d.len()];
    for (loss, &i) in per_sample_loss(&model_b, &halves.a)?.into_iter().zip(&halves.a_indices) {
        losses[i] = loss;
    }
    for (loss, &i) in per_sample_loss(&model_a, &halves.b)?.into_iter().zip(&halves.b_indices) {
        losses[i] = loss;
    }
    let audit = CrossValidationAudit {
        trained_on: [halves.a_indices.clone(), halves.b_indices.clone()],
        scored: [halves.b_indices, halves.a_indices],
    };
    assert!(audit.is_sound(d.len()), "cross-validation scored a sample with its own model");
    Ok(CrossValidatedScores { scores: losses_to_scores(&losses)?, audit })
}

/// Entrywise arithmetic mean of the runs, renormalized.
pub fn ensemble_scores(runs: &[ScoreVector]) -> Result<ScoreVector> {
    let first = runs.first().ok_or(Error::EmptyList)?;
    let n = first.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch(n, bad.len()));
    }
    let mut mean = vec![0.0; n];
    for r in runs {
        mean.iter_mut().zip(r.weights()).for_each(|(m, w)| *m += w);
    }
    let k = runs.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    ScoreVector::normalize(mean)
}

/// Anti-curriculum: reciprocal of each score (floored at 1e-12),
/// renormalized. Reverses the easiness ranking.
pub fn invert_scores(s: &ScoreVector) -> ScoreVector {
    ScoreVector::normalize(s.weights().iter().map(|&w| 1.0 / w.max(INVERT_FLOOR)).collect())
        .expect("reciprocals of valid scores are positive and finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScorerFamily {
    SelfThought,
    Transfer,
}

/// One scoring run, or `cfg.ensemble_runs` of them averaged when
/// `ensemble` is set. Ensemble member `r` uses seed
/// `derive_seed(seed, "run=r")`, so cross-validated members differ in both
/// initial weights and split.
pub fn model_scores(
    d: &Dataset,
    cfg: &ScoringRunConfig,
    family: ScorerFamily,
    trainee_spec: &ModelSpec,
    ensemble: bool,
    seed: u64,
) -> Result<ScoreVector> {
    if family == ScorerFamily::Transfer {
        larger_check(&cfg.scorer_spec, trainee_spec);
    }
    let single = |s: u64| -> Result<ScoreVector> {
        if cfg.cross_validated {
            Ok(cross_validated_scores(d, cfg, s)?.scores)
        } else {
            self_thought_scores(d, cfg, s)
        }
    };
    if !ensemble {
        return single(seed);
    }
    cfg.validate()?;
    let runs = (0..cfg.ensemble_runs)
        .into_par_iter()
        .map(|r| single(derive_seed(seed, &format!("run={r}"))))
        .collect::<Result<Vec<_>>>()?;
    ensemble_scores(&runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn sv(w: &[f64]) -> ScoreVector {
        ScoreVector::normalize(w.to_vec()).unwrap()
    }

    fn blobs(seed: u64) -> Dataset {
        let mut rng = Rng::new(seed, "blobs");
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let c = i % 2;
            let center = if c == 0 { -1.0 } else { 1.0 };
            rows.push(vec![center + 0.3 * rng.normal(), 0.3 * rng.normal()]);
            labels.push(c);
        }
        Dataset::dense(rows, labels, 2).unwrap()
    }

    fn quick_cfg() -> ScoringRunConfig {
        let cfg = TrainConfig { epochs: 5, batch_size: 4, learning_rate: 0.05, ..Default::default() };
        ScoringRunConfig::new(ModelSpec::dense(vec![2, 4, 2]), cfg)
    }

    #[test]
    fn losses_invert_and_normalize() {
        let s = losses_to_scores(&[1.0, 0.5, 0.25]).unwrap();
        for (got, want) in s.weights().iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let s = losses_to_scores(&[0.3, 0.3, 0.3]).unwrap();
        assert!(s.weights().iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn zero_loss_uses_floor() {
        let s = losses_to_scores(&[0.0, 1.0]).unwrap();
        let total = 1e8 + 1.0;
        assert!((s.get(0) - 1e8 / total).abs() < 1e-15);
        assert!((s.get(1) - 1.0 / total).abs() < 1e-15);
        assert!((s.get(0) - 0.99999999).abs() < 1e-9);
    }

    #[test]
    fn bad_losses_rejected() {
        assert!(matches!(losses_to_scores(&[]), Err(Error::EmptyInput)));
        assert!(losses_to_scores(&[-1.0]).is_err());
        assert!(losses_to_scores(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let e = ensemble_scores(&[sv(&[0.2, 0.8]), sv(&[0.6, 0.4])]).unwrap();
        assert!((e.get(0) - 0.4).abs() < 1e-15 && (e.get(1) - 0.6).abs() < 1e-15);
        let v = sv(&[0.1, 0.2, 0.7]);
        assert_eq!(ensemble_scores(std::slice::from_ref(&v)).unwrap(), v);
        let five = ensemble_scores(&vec![v.clone(); 5]).unwrap();
        for (a, b) in five.weights().iter().zip(v.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(ensemble_scores(&[]), Err(Error::EmptyList)));
        assert!(matches!(ensemble_scores(&[sv(&[1.0]), sv(&[1.0, 1.0])]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn invert_examples() {
        let inv = invert_scores(&sv(&[0.2, 0.8]));
        assert!((inv.get(0) - 0.8).abs() < 1e-12 && (inv.get(1) - 0.2).abs() < 1e-12);
        let u = sv(&[1.0; 4]);
        assert_eq!(invert_scores(&u), u);
        assert_eq!(invert_scores(&sv(&[0.5, 0.3, 0.2])).argsort_desc(), vec![2, 1, 0]);
    }

    #[test]
    fn self_thought_is_normalized_and_deterministic() {
        let d = blobs(1);
        let a = self_thought_scores(&d, &quick_cfg(), 3).unwrap();
        let b = self_thought_scores(&d, &quick_cfg(), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), d.len());
        assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transfer_flags_small_scorer() {
        let d = blobs(2);
        let trainee = ModelSpec::dense(vec![2, 4, 2]);
        let same = transfer_scores(&d, &quick_cfg(), &trainee, 0).unwrap();
        assert!(matches!(same.warning, Some(ScoringWarning::SpecNotLarger { .. })));
        let mut big = quick_cfg();
        big.scorer_spec = ModelSpec::dense(vec![2, 32, 32, 2]);
        let larger = transfer_scores(&d, &big, &trainee, 0).unwrap();
        assert!(larger.warning.is_none());
        assert!((larger.scores.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let again = transfer_scores(&d, &big, &trainee, 0).unwrap();
        assert_eq!(again.scores, larger.scores);
    }

    #[test]
    fn cross_validated_covers_every_sample_once() {
        let d = blobs(3);
        let cv = cross_validated_scores(&d, &quick_cfg(), 5).unwrap();
        assert!(cv.audit.is_sound(d.len()));
        assert_eq!(cv.scores.len(), 10);
        let again = cross_validated_scores(&d, &quick_cfg(), 5).unwrap();
        assert_eq!(again.scores, cv.scores);
        assert_eq!(again.audit, cv.audit);
    }

    #[test]
    fn audit_detects_leak() {
        let audit = CrossValidationAudit { trained_on: [vec![0, 1], vec![2, 3]], scored: [vec![2, 1], vec![0, 3]] };
        assert!(!audit.is_sound(4));
        let ok = CrossValidationAudit { trained_on: [vec![0, 1], vec![2, 3]], scored: [vec![2, 3], vec![0, 1]] };
        assert!(ok.is_sound(4));
    }

    #[test]
    fn cross_validation_needs_two_per_class() {
        let d = Dataset::dense(vec![vec![0.0, 0.0]; 3], vec![0, 0, 1], 2).unwrap();
        assert!(matches!(cross_validated_scores(&d, &quick_cfg(), 0), Err(Error::ClassTooSmall(1))));
    }

    #[test]
    fn ensemble_runs_differ_from_single() {
        let d = blobs(4);
        let mut cfg = quick_cfg();
        cfg.ensemble_runs = 3;
        cfg.cross_validated = true;
        let trainee = cfg.scorer_spec.clone();
        let e = model_scores(&d, &cfg, ScorerFamily::SelfThought, &trainee, true, 9).unwrap();
        let e2 = model_scores(&d, &cfg, ScorerFamily::SelfThought, &trainee, true, 9).unwrap();
        assert_eq!(e, e2);
        let single = model_scores(&d, &cfg, ScorerFamily::SelfThought, &trainee, false, 9).unwrap();
        assert_ne!(e, single);
    }

    proptest! {
        #[test]
        fn scores_reverse_loss_order(losses in prop::collection::vec(1e-6f64..50.0, 2..40)) {
            let s = losses_to_scores(&losses).unwrap();
            for i in 0..losses.len() {
                for j in 0..losses.len() {
                    if losses[i] < losses[j] {
                        prop_assert!(s.get(i) > s.get(j));
                    }
                }
            }
        }

        #[test]
        fn ranking_is_scale_invariant(losses in prop::collection::vec(1e-3f64..50.0, 2..40), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = losses.iter().map(|l| l * c).collect();
            prop_assert_eq!(
                losses_to_scores(&losses).unwrap().argsort_desc(),
                losses_to_scores(&scaled).unwrap().argsort_desc()
            );
        }

        #[test]
        fn double_inversion_keeps_ranking(raw in prop::collection::vec(1e-3f64..1.0, 1..40)) {
            let s = sv(&raw);
            prop_assert_eq!(invert_scores(&invert_scores(&s)).argsort_desc(), s.argsort_desc());
        }
    }
}
