//! Line-delimited canonical corpus files, one JSON document record per line.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use infostat_core::{Corpus, Document, ISCategory, Mention, Sentence};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MentionRecord {
    pub sent: usize,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is: Option<ISCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    #[serde(default)]
    pub mentions: Vec<MentionRecord>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        DocumentRecord {
            doc_id: doc.doc_id.clone(),
            sentences: doc.sentences.iter().map(Sentence::words).collect(),
            mentions: doc
                .gold_mentions
                .iter()
                .map(|m| MentionRecord {
                    sent: m.sent,
                    start: m.start,
                    end: m.end,
                    is: m.is_category,
                    subtype: m.subtype.clone(),
                    score: m.score,
                })
                .collect(),
            metadata: doc.metadata.clone(),
        }
    }
}

impl DocumentRecord {
    pub fn into_document(self) -> infostat_core::Result<Document> {
        let doc_id = self.doc_id;
        let doc = Document {
            sentences: self
                .sentences
                .iter()
                .enumerate()
                .map(|(i, words)| Sentence::from_words(&doc_id, i, words))
                .collect(),
            gold_mentions: self
                .mentions
                .into_iter()
                .map(|r| Mention {
                    is_category: r.is,
                    subtype: r.subtype,
                    score: r.score,
                    ..Mention::new(&doc_id, r.sent, r.start, r.end)
                })
                .collect(),
            metadata: self.metadata,
            doc_id,
        };
        doc.validate()?;
        Ok(doc)
    }
}

/// Parses one record, naming the offending field on failure.
fn parse_line(line: &str, path: &Path, line_no: usize) -> Result<DocumentRecord> {
    let de = &mut serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            field: if field == "." { "<record>".into() } else { field },
            message: e.into_inner().to_string(),
        }
    })
}

/// Reads canonical records from `reader`; `path` is used in error messages.
pub fn read_canonical(reader: impl BufRead, path: &Path) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, path, i + 1)?;
        let doc = record.into_document().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: "mentions".into(),
            message: e.to_string(),
        })?;
        if !ids.insert(doc.doc_id.clone()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                field: "doc_id".into(),
                message: format!("duplicate document id {}", doc.doc_id),
            });
        }
        documents.push(doc);
    }
    Ok(Corpus::new(documents))
}

pub fn load_canonical(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_canonical(BufReader::new(file), path)
}

pub fn write_canonical(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for doc in &corpus.documents {
        serde_json::to_writer(&mut out, &DocumentRecord::from(doc))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_canonical(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    corpus.validate()?;
    let mut buf = Vec::new();
    write_canonical(corpus, &mut buf).map_err(|e| Error::io(path, e))?;
    crate::error::write(path, buf)
}
