//! Prediction files: one JSON record per predicted mention.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use infostat_core::{Document, ISCategory, Mention};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub sent: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is: Option<ISCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_mention: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_is: Option<f64>,
}

impl PredictionRecord {
    /// `mention` carries the IS label and score; `score_mention` comes from
    /// the extractor, if one ran.
    pub fn new(document: &Document, mention: &Mention, score_mention: Option<f64>) -> Result<Self> {
        Ok(PredictionRecord {
            doc_id: mention.doc_id.clone(),
            sent: mention.sent,
            start: mention.start,
            end: mention.end,
            surface: document.surface(mention)?,
            is: mention.is_category,
            score_mention,
            score_is: mention.is_category.and(mention.score),
        })
    }

    pub fn to_mention(&self) -> Mention {
        Mention {
            is_category: self.is,
            score: self.score_is.or(self.score_mention),
            ..Mention::new(&self.doc_id, self.sent, self.start, self.end)
        }
    }
}

pub fn write_predictions(records: &[PredictionRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_predictions(records, &mut buf).map_err(|e| Error::io(path, e))?;
    crate::error::write(path, buf)
}

pub fn read_predictions(reader: impl BufRead, path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let record = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(BufReader::new(file), path)
}

/// Predictions as mentions, checked against the gold documents: every
/// record must resolve and its surface must match the tokens.
pub fn to_mentions(records: &[PredictionRecord], gold: &infostat_core::Corpus) -> Result<Vec<Mention>> {
    records
        .iter()
        .map(|r| {
            let m = r.to_mention();
            let doc = gold
                .document(&r.doc_id)
                .ok_or_else(|| Error::Data(format!("prediction for unknown document {}", r.doc_id)))?;
            let surface = doc.surface(&m)?;
            if surface != r.surface {
                return Err(Error::Data(format!(
                    "prediction {}: surface {:?} does not match tokens {surface:?}",
                    m.key(),
                    r.surface
                )));
            }
            Ok(m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use infostat_core::{Corpus, Sentence};

    fn corpus() -> Corpus {
        Corpus::new(vec![Document {
            doc_id: "d".into(),
            sentences: vec![Sentence::from_words("d", 0, &["A", "cat", "sat"])],
            ..Default::default()
        }])
    }

    #[test]
    fn records_round_trip_through_mentions() {
        let c = corpus();
        let mut m = Mention::labeled("d", 0, 0, 1, ISCategory::New);
        m.score = Some(0.625);
        let r = PredictionRecord::new(&c.documents[0], &m, Some(0.9)).unwrap();
        assert_eq!(r.surface, "A cat");
        let mut buf = Vec::new();
        write_predictions(std::slice::from_ref(&r), &mut buf).unwrap();
        let back = read_predictions(&buf[..], Path::new("p")).unwrap();
        assert_eq!(back, vec![r]);
        assert_eq!(to_mentions(&back, &c).unwrap(), vec![m]);
    }

    #[test]
    fn mismatched_records_are_rejected() {
        let c = corpus();
        let r = PredictionRecord {
            doc_id: "d".into(),
            sent: 0,
            start: 1,
            end: 2,
            surface: "dog sat".into(),
            is: None,
            score_mention: None,
            score_is: None,
        };
        assert!(to_mentions(std::slice::from_ref(&r), &c).is_err());
        let foreign = PredictionRecord {
            doc_id: "z".into(),
            ..r
        };
        assert!(to_mentions(&[foreign], &c).is_err());
        let bad = read_predictions(&b"{\"doc_id\":\"d\",\"sent\":\"0\"}"[..], Path::new("p"));
        assert!(matches!(bad, Err(Error::Parse { line: 1, ref field, .. }) if field == "sent"));
    }
}
