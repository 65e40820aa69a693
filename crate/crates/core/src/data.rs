//! Datasets, stratified splitting and class-proportional quotas.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Vec<f64>),
    Tokens(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Features,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    /// Dense real feature vectors of a fixed dimension.
    Dense { dim: usize },
    /// Token-id sequences; ids index into `vocab`.
    Text { vocab: Arc<[String]> },
}

/// Ordered labelled samples. A sample's index is its identity: every score
/// vector in the crate is aligned to this order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    class_count: usize,
    kind: DatasetKind,
}

impl Dataset {
    /// Builds and validates a dataset; see [`validate_dataset`].
    pub fn new(samples: Vec<Sample>, class_count: usize, kind: DatasetKind) -> Result<Self> {
        validate_dataset(Self { samples, class_count, kind })
    }

    pub fn dense(rows: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} feature rows but {} labels", rows.len(), labels.len())));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let samples =
            rows.into_iter().zip(labels).map(|(x, label)| Sample { features: Features::Dense(x), label }).collect();
        Self::new(samples, class_count, DatasetKind::Dense { dim })
    }

    pub fn text(sequences: Vec<Vec<u32>>, labels: Vec<usize>, class_count: usize, vocab: Vec<String>) -> Result<Self> {
        if sequences.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} sequences but {} labels", sequences.len(), labels.len())));
        }
        let samples = sequences
            .into_iter()
            .zip(labels)
            .map(|(t, label)| Sample { features: Features::Tokens(t), label })
            .collect();
        Self::new(samples, class_count, DatasetKind::Text { vocab: vocab.into() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn kind(&self) -> &DatasetKind {
        &self.kind
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Dimension fed to the first dense layer for dense data, vocabulary
    /// size for text data.
    pub fn input_width(&self) -> usize {
        match &self.kind {
            DatasetKind::Dense { dim } => *dim,
            DatasetKind::Text { vocab } => vocab.len(),
        }
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for s in &self.samples {
            sizes[s.label] += 1;
        }
        sizes
    }

    /// Sample indices grouped by class, ascending within each class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.class_count];
        for (i, s) in self.samples.iter().enumerate() {
            groups[s.label].push(i);
        }
        groups
    }

    /// Token strings of every sample, for text datasets.
    pub fn sentences(&self) -> Option<Vec<Vec<String>>> {
        let DatasetKind::Text { vocab } = &self.kind else {
            return None;
        };
        Some(
            self.samples
                .iter()
                .map(|s| match &s.features {
                    Features::Tokens(t) => t.iter().map(|&id| vocab[id as usize].clone()).collect(),
                    Features::Dense(_) => unreachable!("validated text dataset"),
                })
                .collect(),
        )
    }

    /// Samples at `indices`, in the given order. The result is not
    /// re-validated, so it may lack some classes.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            class_count: self.class_count,
            kind: self.kind.clone(),
        }
    }

    /// Stable content digest, used as a cache key.
    pub fn digest(&self) -> u64 {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(self.class_count as u64).to_le_bytes());
        for s in &self.samples {
            buf.extend_from_slice(&(s.label as u64).to_le_bytes());
            match &s.features {
                Features::Dense(x) => {
                    buf.push(0);
                    x.iter().for_each(|v| buf.extend_from_slice(&v.to_bits().to_le_bytes()));
                }
                Features::Tokens(t) => {
                    buf.push(1);
                    t.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
                }
            }
        }
        crate::rng::hash64(&buf)
    }
}

/// Checks every dataset invariant and hands the dataset back unchanged.
pub fn validate_dataset(d: Dataset) -> Result<Dataset> {
    if d.samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if d.class_count == 0 {
        return Err(Error::MissingClass(0));
    }
    let mut present = vec![false; d.class_count];
    for (index, s) in d.samples.iter().enumerate() {
        if s.label >= d.class_count {
            return Err(Error::LabelOutOfRange { index, label: s.label, class_count: d.class_count });
        }
        present[s.label] = true;
        match (&d.kind, &s.features) {
            (DatasetKind::Dense { dim }, Features::Dense(x)) => {
                if x.len() != *dim {
                    return Err(Error::RaggedFeatures { expected: *dim, index, found: x.len() });
                }
            }
            (DatasetKind::Text { vocab }, Features::Tokens(t)) => {
                if t.is_empty() {
                    return Err(Error::EmptySequence(index));
                }
                if let Some(&token) = t.iter().find(|&&id| id as usize >= vocab.len()) {
                    return Err(Error::TokenOutOfVocab { index, token, vocab_size: vocab.len() });
                }
            }
            _ => return Err(Error::MixedKinds),
        }
    }
    if let Some(c) = present.iter().position(|p| !p) {
        return Err(Error::MissingClass(c));
    }
    Ok(d)
}

/// Largest-remainder apportionment of `k` slots over classes in proportion
/// to `class_sizes`. Remainder ties go to the lower class index.
pub fn stratified_quota(class_sizes: &[usize], k: usize) -> Result<Vec<usize>> {
    let n: usize = class_sizes.iter().sum();
    if k > n || n == 0 {
        return Err(Error::Infeasible { k, n });
    }
    // Exact integer arithmetic: quota_c = floor(k*n_c/N), remainder = (k*n_c) mod N.
    let mut quotas = Vec::with_capacity(class_sizes.len());
    let mut remainders = Vec::with_capacity(class_sizes.len());
    for (c, &size) in class_sizes.iter().enumerate() {
        let scaled = k as u128 * size as u128;
        quotas.push((scaled / n as u128) as usize);
        remainders.push(((scaled % n as u128) as usize, c));
    }
    let mut left = k - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(rem, c) in &remainders {
        if left == 0 {
            break;
        }
        if rem > 0 {
            quotas[c] += 1;
            left -= 1;
        }
    }
    debug_assert_eq!(left, 0);
    Ok(quotas)
}

/// Result of [`stratified_halves`]: the two halves plus the original index
/// of each of their samples.
#[derive(Debug, Clone)]
pub struct Halves {
    pub a: Dataset,
    pub b: Dataset,
    pub a_indices: Vec<usize>,
    pub b_indices: Vec<usize>,
}

/// Splits `d` into two class-stratified halves. Half A receives
/// `ceil(N/2)` samples apportioned by [`stratified_quota`]; members are
/// drawn by shuffling each class with `rng`.
pub fn stratified_halves(d: &Dataset, rng: &mut Rng) -> Result<Halves> {
    let sizes = d.class_sizes();
    if let Some(c) = sizes.iter().position(|&s| s < 2) {
        return Err(Error::ClassTooSmall(c));
    }
    let quotas = stratified_quota(&sizes, d.len().div_ceil(2))?;
    let mut a_indices = Vec::new();
    let mut b_indices = Vec::new();
    for (mut members, quota) in d.class_indices().into_iter().zip(quotas) {
        rng.shuffle(&mut members);
        a_indices.extend_from_slice(&members[..quota]);
        b_indices.extend_from_slice(&members[quota..]);
    }
    a_indices.sort_unstable();
    b_indices.sort_unstable();
    Ok(Halves { a: d.subset(&a_indices), b: d.subset(&b_indices), a_indices, b_indices })
}

/// Class-stratified holdout: returns `(train_indices, holdout_indices)` with
/// `round(N * holdout_fraction)` samples held out (at least one).
pub fn stratified_holdout(d: &Dataset, holdout_fraction: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = d.len();
    let k = ((n as f64 * holdout_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let quotas = stratified_quota(&d.class_sizes(), k)?;
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (mut members, quota) in d.class_indices().into_iter().zip(quotas) {
        rng.shuffle(&mut members);
        held.extend_from_slice(&members[..quota]);
        train.extend_from_slice(&members[quota..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    Ok((train, held))
}
