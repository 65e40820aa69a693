//! IDX, CSV and tab-separated text loaders.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{validate_dataset, Dataset};
use crate::error::{Error, Result};
use crate::scoring_text::tokenize;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// Image/label IDX file pair.
    Idx,
    /// `label,f1,f2,...` per line.
    Csv,
    /// `label<TAB>text` per line.
    TsvText,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" => Ok(Self::Idx),
            "csv" => Ok(Self::Csv),
            "tsv" | "tsv_text" | "tsv-text" => Ok(Self::TsvText),
            other => Err(Error::BadSpec(format!("unknown data format {other:?}"))),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a dataset. IDX needs `labels` as the companion label file.
pub fn load_dataset(path: &Path, format: DataFormat, labels: Option<&Path>) -> Result<Dataset> {
    match format {
        DataFormat::Idx => {
            let labels = labels.ok_or_else(|| Error::BadSpec("IDX data needs a label file".into()))?;
            parse_idx(&read_bytes(path)?, &read_bytes(labels)?)
        }
        DataFormat::Csv => parse_csv(&read_text(path)?),
        DataFormat::TsvText => parse_tsv_text(&read_text(path)?),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self) -> Result<u32> {
        let chunk = self.take(4)?;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Ragged {
            location: format!("{} byte {}", self.what, self.at),
            reason: "file is truncated".into(),
        })?;
        let chunk = &self.bytes[self.at..end];
        self.at = end;
        Ok(chunk)
    }
}

fn expect_magic(cursor: &mut Cursor<'_>, expected: u32) -> Result<()> {
    let found = cursor.u32()?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Big-endian IDX: images `0x00000803, n, rows, cols, pixels...` and labels
/// `0x00000801, n, labels...`. Pixels are scaled to `[0, 1]`.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let mut img = Cursor { bytes: images, at: 0, what: "images" };
    expect_magic(&mut img, IDX_IMAGES_MAGIC)?;
    let n = img.u32()? as usize;
    let pixels = img.u32()? as usize * img.u32()? as usize;

    let mut lab = Cursor { bytes: labels, at: 0, what: "labels" };
    expect_magic(&mut lab, IDX_LABELS_MAGIC)?;
    let n_labels = lab.u32()? as usize;
    if n_labels != n {
        return Err(Error::Ragged {
            location: "labels header".into(),
            reason: format!("{n} images but {n_labels} labels"),
        });
    }
    let label_bytes = lab.take(n)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        rows.push(img.take(pixels)?.iter().map(|&p| p as f64 / 255.0).collect());
    }
    let labels: Vec<usize> = label_bytes.iter().map(|&l| l as usize).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::dense(rows, labels, classes)
}

fn parse_label(field: &str) -> Result<usize> {
    field.trim().parse().map_err(|_| Error::UnknownLabel(field.trim().to_owned()))
}

/// One sample per non-blank line: integer label, then real features.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        labels.push(parse_label(fields.next().unwrap_or(""))?);
        let row = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Ragged {
                    location: format!("csv line {}", line_no + 1),
                    reason: format!("bad feature {f:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Ragged {
                    location: format!("csv line {}", line_no + 1),
                    reason: format!("{} features, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::dense(rows, labels, classes)
}

/// `label<TAB>text` per non-blank line. The vocabulary is the sorted set of
/// tokens.
pub fn parse_tsv_text(text: &str) -> Result<Dataset> {
    let (sentences, labels) = parse_tsv_lines(text)?;
    text_dataset(sentences, labels)
}

/// Token strings and labels of a `label<TAB>text` file.
pub fn parse_tsv_lines(text: &str) -> Result<(Vec<Vec<String>>, Vec<usize>)> {
    let mut labels = Vec::new();
    let mut sentences = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, body) = line.split_once('\t').ok_or_else(|| Error::Ragged {
            location: format!("tsv line {}", line_no + 1),
            reason: "expected label<TAB>text".into(),
        })?;
        labels.push(parse_label(label)?);
        let sentence = tokenize(body).map_err(|_| Error::Ragged {
            location: format!("tsv line {}", line_no + 1),
            reason: "no tokens in text".into(),
        })?;
        sentences.push(sentence.tokens().to_vec());
    }
    Ok((sentences, labels))
}

/// Loads a train/test pair of text files over one shared vocabulary.
pub fn load_tsv_pair(train: &Path, test: &Path) -> Result<(Dataset, Dataset)> {
    let (mut sentences, mut labels) = parse_tsv_lines(&read_text(train)?)?;
    let (test_sentences, test_labels) = parse_tsv_lines(&read_text(test)?)?;
    let split = sentences.len();
    sentences.extend(test_sentences);
    labels.extend(test_labels);
    let joint = text_dataset(sentences, labels)?;
    let train_idx: Vec<usize> = (0..split).collect();
    let test_idx: Vec<usize> = (split..joint.len()).collect();
    let (a, b) = (joint.subset(&train_idx), joint.subset(&test_idx));
    Ok((validate_dataset(a)?, validate_dataset(b)?))
}

/// Builds a token-id dataset from token strings with a sorted vocabulary.
pub fn text_dataset(sentences: Vec<Vec<String>>, labels: Vec<usize>) -> Result<Dataset> {
    let vocab: Vec<String> = sentences.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let ids = sentences.iter().map(|s| s.iter().map(|t| vocab.binary_search(t).unwrap() as u32).collect()).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::text(ids, labels, classes, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetKind, Features};

    fn idx_pair(n: u32, rows: u32, cols: u32, pixels: &[u8], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        for v in [IDX_IMAGES_MAGIC, n, rows, cols] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(pixels);
        let mut lab = Vec::new();
        for v in [IDX_LABELS_MAGIC, n] {
            lab.extend_from_slice(&v.to_be_bytes());
        }
        lab.extend_from_slice(labels);
        (img, lab)
    }

    #[test]
    fn idx_four_two_by_two_images() {
        let pixels: Vec<u8> = (0..16).map(|i| (i * 17) as u8).collect();
        let (img, lab) = idx_pair(4, 2, 2, &pixels, &[0, 1, 1, 0]);
        let d = parse_idx(&img, &lab).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.kind(), &DatasetKind::Dense { dim: 4 });
        assert_eq!(d.labels(), vec![0, 1, 1, 0]);
        assert_eq!(d.sample(3).features, Features::Dense(vec![204.0 / 255.0, 221.0 / 255.0, 238.0 / 255.0, 1.0]));
    }

    #[test]
    fn idx_bad_magic() {
        let (mut img, lab) = idx_pair(1, 1, 1, &[0], &[0]);
        img[3] = 0x01;
        assert!(matches!(parse_idx(&img, &lab), Err(Error::BadMagic { expected: 0x803, found: 0x801 })));
        let (img, mut lab) = idx_pair(1, 1, 1, &[0], &[0]);
        lab[3] = 0x03;
        assert!(matches!(parse_idx(&img, &lab), Err(Error::BadMagic { expected: 0x801, .. })));
    }

    #[test]
    fn idx_truncated_or_mismatched() {
        let (img, lab) = idx_pair(2, 2, 2, &[0; 7], &[0, 0]);
        assert!(matches!(parse_idx(&img, &lab), Err(Error::Ragged { .. })));
        let (img, _) = idx_pair(2, 1, 1, &[0; 2], &[0, 0]);
        let (_, lab) = idx_pair(3, 1, 1, &[0; 3], &[0, 0, 0]);
        assert!(matches!(parse_idx(&img, &lab), Err(Error::Ragged { .. })));
    }

    #[test]
    fn csv_rows() {
        let d = parse_csv("1,0.5,0.25\n0,1,2\n").unwrap();
        assert_eq!(d.sample(0).label, 1);
        assert_eq!(d.sample(0).features, Features::Dense(vec![0.5, 0.25]));
        assert!(matches!(parse_csv("x,1\n"), Err(Error::UnknownLabel(l)) if l == "x"));
        assert!(matches!(parse_csv("0,1\n0,1,2\n"), Err(Error::Ragged { .. })));
        assert!(matches!(parse_csv("0,abc\n"), Err(Error::Ragged { .. })));
    }

    #[test]
    fn tsv_text_lines() {
        let d = parse_tsv_text("0\tthe cat sat\n1\tA dog.\n").unwrap();
        assert_eq!(d.len(), 2);
        let sentences = d.sentences().unwrap();
        assert_eq!(sentences[0], vec!["the", "cat", "sat"]);
        assert_eq!(sentences[1], vec!["a", "dog"]);
        assert!(matches!(parse_tsv_text("zero\thi\n"), Err(Error::UnknownLabel(_))));
        assert!(matches!(parse_tsv_text("0 no tab\n"), Err(Error::Ragged { .. })));
    }

    #[test]
    fn format_names() {
        assert_eq!("IDX".parse::<DataFormat>().unwrap(), DataFormat::Idx);
        assert_eq!("tsv_text".parse::<DataFormat>().unwrap(), DataFormat::TsvText);
        assert!("parquet".parse::<DataFormat>().is_err());
    }
}
