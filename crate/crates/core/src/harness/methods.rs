//! Method identifiers such as `ECVST-PCL`, `anti-ORACLE-GCL` or
//! `SL-long+UG-high-PCL`.
//!
//! Grammar: `vanilla | rand-cl | [anti-]SOURCE(+SOURCE)*-(GCL|PCL)`. Several
//! sources joined by `+` are averaged into an ensemble before the optional
//! inversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring_model::ScorerFamily;
use crate::scoring_text::{EntropyDirection, LengthDirection, NgramOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreSource {
    Model {
        family: ScorerFamily,
        cross_validated: bool,
        ensemble: bool,
    },
    /// Difficulty oracle of a synthetic dataset: clean samples easy.
    Oracle,
    SentenceLength(LengthDirection),
    Ngram(NgramOrder, EntropyDirection),
}

impl ScoreSource {
    pub fn needs_text(&self) -> bool {
        matches!(self, ScoreSource::SentenceLength(_) | ScoreSource::Ngram(..))
    }
}

impl fmt::Display for ScoreSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScoreSource::Model { family, cross_validated, ensemble } => {
                let e = if ensemble { "E" } else { "" };
                let cv = if cross_validated { "CV" } else { "" };
                let fam = match family {
                    ScorerFamily::SelfThought => "ST",
                    ScorerFamily::Transfer => "TL",
                };
                write!(f, "{e}{cv}{fam}")
            }
            ScoreSource::Oracle => f.write_str("ORACLE"),
            ScoreSource::SentenceLength(LengthDirection::LongEasy) => f.write_str("SL-long"),
            ScoreSource::SentenceLength(LengthDirection::ShortEasy) => f.write_str("SL-short"),
            ScoreSource::Ngram(order, dir) => {
                let o = match order {
                    NgramOrder::Unigram => "UG",
                    NgramOrder::Bigram => "BG",
                    NgramOrder::Trigram => "TG",
                };
                let d = match dir {
                    EntropyDirection::HighEntropyEasy => "high",
                    EntropyDirection::LowEntropyEasy => "low",
                };
                write!(f, "{o}-{d}")
            }
        }
    }
}

impl FromStr for ScoreSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        let model = |family, cross_validated, ensemble| ScoreSource::Model { family, cross_validated, ensemble };
        use ScorerFamily::{SelfThought as St, Transfer as Tl};
        Ok(match upper.as_str() {
            "ST" => model(St, false, false),
            "TL" => model(Tl, false, false),
            "CVST" => model(St, true, false),
            "CVTL" => model(Tl, true, false),
            "EST" => model(St, false, true),
            "ETL" => model(Tl, false, true),
            "ECVST" => model(St, true, true),
            "ECVTL" => model(Tl, true, true),
            "ORACLE" => ScoreSource::Oracle,
            "SL-LONG" => ScoreSource::SentenceLength(LengthDirection::LongEasy),
            "SL-SHORT" => ScoreSource::SentenceLength(LengthDirection::ShortEasy),
            other => {
                let (order, dir) = other.split_once('-').ok_or_else(|| Error::UnknownMethod(s.to_owned()))?;
                let order = match order {
                    "UG" => NgramOrder::Unigram,
                    "BG" => NgramOrder::Bigram,
                    "TG" => NgramOrder::Trigram,
                    _ => return Err(Error::UnknownMethod(s.to_owned())),
                };
                let dir = match dir {
                    "HIGH" => EntropyDirection::HighEntropyEasy,
                    "LOW" => EntropyDirection::LowEntropyEasy,
                    _ => return Err(Error::UnknownMethod(s.to_owned())),
                };
                ScoreSource::Ngram(order, dir)
            }
        })
    }
}

/// A complete scoring recipe: sources averaged, then optionally inverted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoringSpec {
    pub sources: Vec<ScoreSource>,
    pub anti: bool,
}

impl fmt::Display for ScoringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.anti {
            f.write_str("anti-")?;
        }
        for (i, s) in self.sources.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for ScoringSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let (anti, body) = match trimmed.get(..5) {
            Some(p) if p.eq_ignore_ascii_case("anti-") => (true, &trimmed[5..]),
            _ => (false, trimmed),
        };
        if body.is_empty() {
            return Err(Error::UnknownMethod(s.to_owned()));
        }
        let sources = body.split('+').map(str::parse).collect::<Result<Vec<_>>>()?;
        Ok(Self { sources, anti })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrainerKind {
    Gcl,
    Pcl,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Vanilla,
    /// Uniform scores with probabilistic selection.
    RandCl,
    Curriculum {
        scoring: ScoringSpec,
        trainer: TrainerKind,
    },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Vanilla => f.write_str("vanilla"),
            Method::RandCl => f.write_str("rand-cl"),
            Method::Curriculum { scoring, trainer } => {
                let t = match trainer {
                    TrainerKind::Gcl => "GCL",
                    TrainerKind::Pcl => "PCL",
                };
                write!(f, "{scoring}-{t}")
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("vanilla") {
            return Ok(Method::Vanilla);
        }
        if t.eq_ignore_ascii_case("rand-cl") {
            return Ok(Method::RandCl);
        }
        let (scoring, trainer) = t.rsplit_once('-').ok_or_else(|| Error::UnknownMethod(s.to_owned()))?;
        let trainer = match trainer.to_ascii_uppercase().as_str() {
            "GCL" => TrainerKind::Gcl,
            "PCL" => TrainerKind::Pcl,
            _ => return Err(Error::UnknownMethod(s.to_owned())),
        };
        Ok(Method::Curriculum { scoring: scoring.parse()?, trainer })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}
