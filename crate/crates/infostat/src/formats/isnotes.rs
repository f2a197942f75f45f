//! ISNotes markable files merged onto ONF tokens.
//!
//! Each annotated document has a markable file `<doc_id>_markables.xml` (or
//! `<doc_id>.xml`) whose `markable` elements carry a `span` of the form
//! `word_i..word_j`. Word numbers are 1-based and count the document's ONF
//! tokens after null elements are removed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use infostat_core::{Corpus, Document, ISCategory, Mention, Sentence};
use quick_xml::events::Event;
use walkdir::WalkDir;

use super::onf::{load_onf, OnfDocument};
use crate::error::{Error, Result};

const SUFFIXES: [&str; 3] = ["_markables", "_entity_level", "_is_level"];

#[derive(Debug, Clone, PartialEq)]
pub struct Markable {
    pub id: String,
    /// 1-based document word numbers, inclusive.
    pub first_word: usize,
    pub last_word: usize,
    pub category: Option<ISCategory>,
}

fn normalized(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Maps ISNotes attribute values onto a category. Accepts both the
/// `information_status` + `mediated_type` pair and a single combined value
/// such as `mediated/bridging`.
pub fn category_from_attributes(status: &str, mediated_type: Option<&str>) -> Option<ISCategory> {
    if let Ok(c) = status.parse::<ISCategory>() {
        return Some(c);
    }
    match normalized(status).as_str() {
        "old" => Some(ISCategory::Old),
        "new" => Some(ISCategory::New),
        "mediated" => match normalized(mediated_type?).as_str() {
            "syntactic" => Some(ISCategory::Syntactic),
            "worldknowledge" | "general" => Some(ISCategory::WorldKnowledge),
            "bridging" => Some(ISCategory::Bridging),
            "comparative" => Some(ISCategory::Comparative),
            "aggregate" => Some(ISCategory::Aggregate),
            "function" | "functional" | "func" => Some(ISCategory::Function),
            _ => None,
        },
        _ => None,
    }
}

fn word_number(s: &str) -> Option<usize> {
    s.trim().strip_prefix("word_")?.parse().ok()
}

fn parse_span(span: &str) -> Option<(usize, usize)> {
    match span.split_once("..") {
        Some((a, b)) => Some((word_number(a)?, word_number(b)?)),
        None => {
            let w = word_number(span)?;
            Some((w, w))
        }
    }
}

/// Reads every `markable` element of a markable file.
pub fn parse_markables(xml: &str, path: &Path) -> Result<Vec<Markable>> {
    let mut reader = quick_xml::Reader::from_str(xml);
    let mut out = Vec::new();
    loop {
        let event = reader
            .read_event()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let element = match event {
            Event::Start(e) | Event::Empty(e) => e,
            Event::Eof => break,
            _ => continue,
        };
        if element.local_name().as_ref() != b"markable" {
            continue;
        }
        let mut attrs = BTreeMap::new();
        for attr in element.attributes() {
            let attr = attr.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            attrs.insert(key, value.into_owned());
        }
        let id = attrs.get("id").cloned().unwrap_or_else(|| format!("#{}", out.len()));
        let span = attrs
            .get("span")
            .ok_or_else(|| Error::Data(format!("{}: markable {id} has no span", path.display())))?;
        let (first_word, last_word) = parse_span(span)
            .filter(|(a, b)| *a >= 1 && a <= b)
            .ok_or_else(|| {
                Error::Data(format!(
                    "{}: markable {id}: unalignable span {span:?}",
                    path.display()
                ))
            })?;
        let category = match attrs.get("information_status") {
            None => None,
            Some(status) => Some(
                category_from_attributes(status, attrs.get("mediated_type").map(String::as_str))
                    .ok_or_else(|| {
                        Error::Data(format!(
                            "{}: markable {id}: unknown information status {status:?}",
                            path.display()
                        ))
                    })?,
            ),
        };
        out.push(Markable {
            id,
            first_word,
            last_word,
            category,
        });
    }
    Ok(out)
}

/// Places markables on the sentences of `onf`. Markables with no
/// information status are skipped; anything that does not map onto a
/// single sentence is an error.
pub fn merge(onf: &OnfDocument, markables: &[Markable], path: &Path) -> Result<Document> {
    let mut starts = Vec::with_capacity(onf.sentences.len());
    let mut total = 0;
    for s in &onf.sentences {
        starts.push(total);
        total += s.len();
    }
    let locate = |word: usize| -> Option<(usize, usize)> {
        let idx = word.checked_sub(1)?;
        if idx >= total {
            return None;
        }
        let sent = starts.partition_point(|&s| s <= idx) - 1;
        Some((sent, idx - starts[sent]))
    };

    let mut mentions = Vec::new();
    let mut skipped = 0;
    for m in markables {
        let Some(category) = m.category else {
            skipped += 1;
            continue;
        };
        let unalignable = |why: &str| {
            Error::Data(format!(
                "{}: markable {} (word_{}..word_{}) {why}",
                path.display(),
                m.id,
                m.first_word,
                m.last_word
            ))
        };
        let (s1, start) = locate(m.first_word).ok_or_else(|| unalignable("is outside the document"))?;
        let (s2, end) = locate(m.last_word).ok_or_else(|| unalignable("is outside the document"))?;
        if s1 != s2 {
            return Err(unalignable("crosses a sentence boundary"));
        }
        mentions.push(Mention::labeled(&onf.doc_id, s1, start, end, category));
    }
    if skipped > 0 {
        log::debug!("{}: {skipped} markables without information status", path.display());
    }

    let doc = Document {
        doc_id: onf.doc_id.clone(),
        sentences: onf
            .sentences
            .iter()
            .enumerate()
            .map(|(i, w)| Sentence::from_words(&onf.doc_id, i, w))
            .collect(),
        gold_mentions: mentions,
        metadata: [("source".to_string(), "isnotes".to_string())].into(),
    };
    doc.validate()?;
    Ok(doc)
}

fn annotation_doc_id(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    let lower = stem.to_lowercase();
    for suffix in SUFFIXES {
        if let Some(pos) = lower.find(suffix) {
            return Some(stem[..pos].to_string());
        }
    }
    Some(stem.to_string())
}

pub(crate) fn files_with_extension(root: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::Data(format!("{} is not a directory", root.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Data(format!("{}: {e}", root.display())))?;
        if entry.file_type().is_file()
            && entry.path().extension().and_then(|e| e.to_str()) == Some(ext)
        {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

/// Loads every annotated document, in document-id order.
pub fn load_isnotes(onf_root: &Path, isnotes_root: &Path) -> Result<Corpus> {
    let annotations = files_with_extension(isnotes_root, "xml")?;
    if annotations.is_empty() {
        return Err(Error::Data(format!(
            "no markable files under {}",
            isnotes_root.display()
        )));
    }
    let onf_files: BTreeMap<String, PathBuf> = files_with_extension(onf_root, "onf")?
        .into_iter()
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();

    let mut by_doc: BTreeMap<String, PathBuf> = BTreeMap::new();
    for path in annotations {
        let id = annotation_doc_id(&path)
            .ok_or_else(|| Error::Data(format!("{}: bad file name", path.display())))?;
        if let Some(prev) = by_doc.insert(id.clone(), path.clone()) {
            return Err(Error::Data(format!(
                "document {id} is annotated twice: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    let missing: Vec<&str> = by_doc
        .keys()
        .filter(|id| !onf_files.contains_key(*id))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("no ONF file for: {}", missing.join(", "))));
    }

    let mut documents = Vec::with_capacity(by_doc.len());
    for (id, path) in &by_doc {
        let onf = load_onf(&onf_files[id])?;
        let markables = parse_markables(&crate::error::read_to_string(path)?, path)?;
        documents.push(merge(&onf, &markables, path)?);
    }
    Ok(Corpus::new(documents))
}
