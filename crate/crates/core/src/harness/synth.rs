//! Synthetic datasets with a known difficulty oracle.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::loaders::text_dataset;
use crate::rng::Rng;

/// Isotropic Gaussian classes around simplex vertices, with a fraction of
/// labels flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub sigma: f64,
    #[serde(default)]
    pub noise_fraction: f64,
}

/// A generated dataset plus `clean_mask[i] == true` for samples that kept
/// their true label (or, for text, carry no planted rare tokens).
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    pub clean_mask: Vec<bool>,
}

/// Class means are `e_c / sqrt(2)` (unit pairwise distance), samples are
/// interleaved by class, and exactly `round(noise_fraction * N)` labels are
/// moved to a uniformly chosen other class.
pub fn synth_dataset(spec: &BlobSpec, rng: &mut Rng) -> Result<SynthData> {
    if spec.classes < 2 || spec.per_class < 2 {
        return Err(Error::BadSpec("need at least 2 classes of at least 2 samples".into()));
    }
    if spec.dim < spec.classes {
        return Err(Error::BadSpec(format!("dim {} cannot hold {} simplex vertices", spec.dim, spec.classes)));
    }
    if !(0.0..0.5).contains(&spec.noise_fraction) {
        return Err(Error::BadSpec(format!("noise_fraction {} outside [0, 0.5)", spec.noise_fraction)));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::BadSpec(format!("sigma {} must be nonnegative", spec.sigma)));
    }
    let vertex = std::f64::consts::FRAC_1_SQRT_2;
    let n = spec.classes * spec.per_class;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.per_class {
        for c in 0..spec.classes {
            let x: Vec<f64> =
                (0..spec.dim).map(|j| if j == c { vertex } else { 0.0 } + spec.sigma * rng.normal()).collect();
            rows.push(x);
            labels.push(c);
        }
    }
    let flips = (spec.noise_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut clean_mask = vec![true; n];
    for &i in &order[..flips] {
        labels[i] = (labels[i] + 1 + rng.below(spec.classes - 1)) % spec.classes;
        clean_mask[i] = false;
    }
    let dataset = Dataset::dense(rows, labels, spec.classes)?;
    Ok(SynthData { dataset, clean_mask })
}

/// Labelled token sentences: each class has its own topic words, all
/// classes share filler words, and a fraction of sentences carry planted
/// tokens that occur nowhere else in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSpec {
    pub sentences: usize,
    pub classes: usize,
    pub topic_words: usize,
    pub shared_words: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub rare_fraction: f64,
}

impl Default for TextSpec {
    fn default() -> Self {
        Self {
            sentences: 500,
            classes: 4,
            topic_words: 12,
            shared_words: 30,
            min_len: 3,
            max_len: 14,
            rare_fraction: 0.1,
        }
    }
}

pub fn synth_text(spec: &TextSpec, rng: &mut Rng) -> Result<SynthData> {
    if spec.classes < 2 || spec.sentences < 2 * spec.classes {
        return Err(Error::BadSpec("need at least 2 classes and 2 sentences per class".into()));
    }
    if spec.min_len == 0 || spec.min_len > spec.max_len || spec.topic_words == 0 || spec.shared_words == 0 {
        return Err(Error::BadSpec("bad sentence length or vocabulary sizes".into()));
    }
    if !(0.0..=1.0).contains(&spec.rare_fraction) {
        return Err(Error::BadSpec(format!("rare_fraction {} outside [0, 1]", spec.rare_fraction)));
    }
    let rare = (spec.rare_fraction * spec.sentences as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.sentences).collect();
    rng.shuffle(&mut order);
    let mut clean_mask = vec![true; spec.sentences];
    order[..rare].iter().for_each(|&i| clean_mask[i] = false);

    let mut sentences = Vec::with_capacity(spec.sentences);
    let mut labels = Vec::with_capacity(spec.sentences);
    let mut next_rare = 0usize;
    for (i, &clean) in clean_mask.iter().enumerate() {
        let label = i % spec.classes;
        let len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| {
                if rng.next_f64() < 0.5 {
                    format!("t{label}w{}", rng.below(spec.topic_words))
                } else {
                    format!("s{}", rng.below(spec.shared_words))
                }
            })
            .collect();
        if !clean {
            for _ in 0..2 {
                let at = rng.below(tokens.len() + 1);
                tokens.insert(at, format!("rare{next_rare}"));
                next_rare += 1;
            }
        }
        sentences.push(tokens);
        labels.push(label);
    }
    let dataset = text_dataset(sentences, labels)?;
    Ok(SynthData { dataset, clean_mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Features;

    fn blob(noise: f64) -> BlobSpec {
        BlobSpec { classes: 2, per_class: 50, dim: 3, sigma: 0.3, noise_fraction: noise }
    }

    #[test]
    fn no_noise_all_clean() {
        let s = synth_dataset(&blob(0.0), &mut Rng::new(0, "data")).unwrap();
        assert!(s.clean_mask.iter().all(|&c| c));
        assert_eq!(s.dataset.class_sizes(), vec![50, 50]);
    }

    #[test]
    fn exact_flip_count() {
        let s = synth_dataset(&blob(0.1), &mut Rng::new(1, "data")).unwrap();
        assert_eq!(s.clean_mask.iter().filter(|&&c| !c).count(), 10);
    }

    #[test]
    fn same_seed_same_data() {
        let a = synth_dataset(&blob(0.2), &mut Rng::new(2, "data")).unwrap();
        let b = synth_dataset(&blob(0.2), &mut Rng::new(2, "data")).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.clean_mask, b.clean_mask);
    }

    #[test]
    fn zero_sigma_hits_vertices_at_unit_distance() {
        let spec = BlobSpec { classes: 3, per_class: 2, dim: 4, sigma: 0.0, noise_fraction: 0.0 };
        let s = synth_dataset(&spec, &mut Rng::new(3, "data")).unwrap();
        let point = |i: usize| match &s.dataset.sample(i).features {
            Features::Dense(x) => x.clone(),
            _ => unreachable!(),
        };
        let dist: f64 = point(0).iter().zip(point(1)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((dist - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_specs_rejected() {
        let mut spec = blob(0.5);
        assert!(matches!(synth_dataset(&spec, &mut Rng::new(0, "d")), Err(Error::BadSpec(_))));
        spec = blob(0.1);
        spec.classes = 1;
        assert!(matches!(synth_dataset(&spec, &mut Rng::new(0, "d")), Err(Error::BadSpec(_))));
        spec = blob(0.1);
        spec.dim = 1;
        assert!(matches!(synth_dataset(&spec, &mut Rng::new(0, "d")), Err(Error::BadSpec(_))));
    }

    #[test]
    fn text_plants_unique_rare_tokens() {
        let s = synth_text(&TextSpec::default(), &mut Rng::new(4, "data")).unwrap();
        assert_eq!(s.dataset.len(), 500);
        assert_eq!(s.clean_mask.iter().filter(|&&c| !c).count(), 50);
        let sentences = s.dataset.sentences().unwrap();
        for (sent, &clean) in sentences.iter().zip(&s.clean_mask) {
            let rare = sent.iter().filter(|t| t.starts_with("rare")).count();
            assert_eq!(rare, if clean { 0 } else { 2 });
        }
    }
}
