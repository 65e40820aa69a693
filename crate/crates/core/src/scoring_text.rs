//! Text-derived easiness scores: sentence length and corpus n-gram entropy.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scores::ScoreVector;

/// Floor applied to entropies before taking reciprocals.
pub const ENTROPY_FLOOR: f64 = 1e-12;

/// Non-empty sequence of normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence(Vec<String>);

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() || tokens.iter().any(String::is_empty) {
            return Err(Error::EmptyAfterTokenize);
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Contiguous n-grams in position order.
    pub fn ngrams(&self, order: usize) -> impl Iterator<Item = &[String]> {
        self.0.windows(order)
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '…' | '«' | '»' | '–' | '—' | '¿' | '¡')
}

/// Lowercases, splits on whitespace runs, trims punctuation from both ends
/// of every token and drops tokens left empty.
pub fn tokenize(text: &str) -> Result<Sentence> {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|t| t.trim_matches(is_punctuation).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect();
    Sentence::new(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NgramOrder {
    Unigram = 1,
    Bigram = 2,
    Trigram = 3,
}

impl NgramOrder {
    pub fn from_usize(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::Unigram),
            2 => Ok(Self::Bigram),
            3 => Ok(Self::Trigram),
            other => Err(Error::BadOrder(other)),
        }
    }

    pub fn n(self) -> usize {
        self as usize
    }
}

/// Corpus-wide n-gram counts for orders one to three.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    counts: [BTreeMap<Vec<String>, u64>; 3],
    totals: [u64; 3],
}

impl CorpusStats {
    pub fn count(&self, gram: &[String]) -> u64 {
        match gram.len() {
            1..=3 => self.counts[gram.len() - 1].get(gram).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Total number of n-grams of `order` in the corpus (uc, bc, tc).
    pub fn total(&self, order: NgramOrder) -> u64 {
        self.totals[order.n() - 1]
    }

    pub fn counts(&self, order: NgramOrder) -> &BTreeMap<Vec<String>, u64> {
        &self.counts[order.n() - 1]
    }

    /// Relative frequency of `gram` among n-grams of its order.
    pub fn probability(&self, gram: &[String]) -> Result<f64> {
        let c = self.count(gram);
        if c == 0 {
            return Err(Error::UnknownNgram(gram.to_vec()));
        }
        Ok(c as f64 / self.totals[gram.len() - 1] as f64)
    }

    /// Writes `ngram<TAB>count` rows sorted by n-gram, tokens joined by a
    /// single space.
    pub fn write_table(&self, order: NgramOrder, mut out: impl Write) -> std::io::Result<()> {
        for (gram, count) in self.counts(order) {
            writeln!(out, "{}\t{count}", gram.join(" "))?;
        }
        Ok(())
    }

    /// Rebuilds one order's counts from a table written by [`write_table`].
    ///
    /// [`write_table`]: CorpusStats::write_table
    pub fn read_table(&mut self, order: NgramOrder, text: &str) -> Result<()> {
        let mut counts = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |reason: &str| Error::Ragged {
                location: format!("{}-gram table line {}", order.n(), line_no + 1),
                reason: reason.to_owned(),
            };
            let (gram, count) = line.rsplit_once('\t').ok_or_else(|| bad("expected ngram<TAB>count"))?;
            let gram: Vec<String> = gram.split(' ').map(str::to_owned).collect();
            if gram.len() != order.n() {
                return Err(bad("wrong n-gram length"));
            }
            let count: u64 = count.trim().parse().map_err(|_| bad("bad count"))?;
            counts.insert(gram, count);
        }
        self.totals[order.n() - 1] = counts.values().sum();
        self.counts[order.n() - 1] = counts;
        Ok(())
    }
}

/// Counts every contiguous unigram, bigram and trigram. N-grams never cross
/// sentence boundaries and no padding tokens are added.
pub fn build_corpus_stats(corpus: &[Sentence]) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats = CorpusStats::default();
    for s in corpus {
        for n in 1..=3 {
            for gram in s.ngrams(n) {
                *stats.counts[n - 1].entry(gram.to_vec()).or_insert(0) += 1;
                stats.totals[n - 1] += 1;
            }
        }
    }
    Ok(stats)
}

/// `-Σ p·ln p` over the sentence's n-grams of `order`, one term per
/// position. Sentences shorter than the order score 0.
///
/// Terms are summed in sorted order, so sentences whose n-grams have the
/// same probabilities get bit-identical entropies regardless of word order.
pub fn ngram_entropy(s: &Sentence, stats: &CorpusStats, order: NgramOrder) -> Result<f64> {
    let mut terms =
        s.ngrams(order.n()).map(|gram| stats.probability(gram).map(|p| -p * p.ln())).collect::<Result<Vec<f64>>>()?;
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyDirection {
    HighEntropyEasy,
    LowEntropyEasy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthDirection {
    LongEasy,
    ShortEasy,
}

/// Maps raw entropies to easiness weights. All-zero entropies under
/// `HighEntropyEasy` give uniform weights.
pub fn entropies_to_scores(entropies: &[f64], direction: EntropyDirection) -> Result<ScoreVector> {
    if entropies.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let raw: Vec<f64> = match direction {
        EntropyDirection::HighEntropyEasy if entropies.iter().all(|&e| e == 0.0) => vec![1.0; entropies.len()],
        EntropyDirection::HighEntropyEasy => entropies.to_vec(),
        EntropyDirection::LowEntropyEasy => entropies.iter().map(|&e| 1.0 / e.max(ENTROPY_FLOOR)).collect(),
    };
    ScoreVector::normalize(raw)
}

/// Scores every sentence by its n-gram entropy under statistics built from
/// the same corpus.
pub fn ngram_scores(corpus: &[Sentence], order: NgramOrder, direction: EntropyDirection) -> Result<ScoreVector> {
    let stats = build_corpus_stats(corpus)?;
    let entropies = corpus.iter().map(|s| ngram_entropy(s, &stats, order)).collect::<Result<Vec<_>>>()?;
    entropies_to_scores(&entropies, direction)
}

/// Token counts (long sentences easy) or their reciprocals (short easy),
/// normalized.
pub fn sentence_length_scores(corpus: &[Sentence], direction: LengthDirection) -> Result<ScoreVector> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let raw = corpus
        .iter()
        .map(|s| match direction {
            LengthDirection::LongEasy => s.len() as f64,
            LengthDirection::ShortEasy => 1.0 / s.len() as f64,
        })
        .collect();
    ScoreVector::normalize(raw)
}
