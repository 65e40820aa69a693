//! Per-sample easiness weights.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-sum invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative weights, one per sample index, summing to one. A larger
/// weight marks an easier sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    /// Accepts weights that already satisfy the invariants.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ZeroLength);
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidScores(format!("entry {i} is {}", weights[i])));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidScores(format!("entries sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Divides nonnegative raw weights by their sum.
    pub fn normalize(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::ZeroLength);
        }
        if let Some(i) = raw.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidScores(format!("raw entry {i} is {}", raw[i])));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidScores(format!("raw entries sum to {total}")));
        }
        Self::new(raw.into_iter().map(|w| w / total).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Indices from easiest to hardest; ties keep ascending index order.
    pub fn argsort_desc(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        idx
    }

    /// Writes `index<TAB>score` rows.
    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, w) in self.0.iter().enumerate() {
            writeln!(out, "{i}\t{w}")?;
        }
        Ok(())
    }

    pub fn read_tsv(input: impl BufRead) -> Result<Self> {
        let mut weights = Vec::new();
        for (line_no, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<scores>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Ragged {
                location: format!("scores line {}", line_no + 1),
                reason: reason.to_owned(),
            };
            let (idx, score) = line.split_once('\t').ok_or_else(|| bad("expected index<TAB>score"))?;
            let idx: usize = idx.trim().parse().map_err(|_| bad("bad index"))?;
            if idx != weights.len() {
                return Err(bad("indices must be 0,1,2,... in order"));
            }
            weights.push(score.trim().parse::<f64>().map_err(|_| bad("bad score"))?);
        }
        Self::new(weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_tsv(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(std::io::BufReader::new(file))
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.0
    }
}

/// Equal weight on every sample; the random-ranking baseline.
pub fn uniform_scores(n: usize) -> Result<ScoreVector> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    ScoreVector::new(vec![1.0 / n as f64; n])
}
