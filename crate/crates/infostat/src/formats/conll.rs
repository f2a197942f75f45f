//! Column-format token files.

use std::path::Path;

use crate::error::{Error, Result};

/// A document read from a CoNLL-2012 file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
}

/// Short document id from a `#begin document` header: the last path
/// component, with `_partNNN` appended for parts other than 0.
fn document_id(header: &str) -> Option<String> {
    let rest = header.strip_prefix("#begin document")?.trim();
    let (name, part) = match rest.split_once(';') {
        Some((n, p)) => (n.trim(), p.trim()),
        None => (rest, ""),
    };
    let name = name.trim_start_matches('(').trim_end_matches(')');
    let short = name.rsplit('/').next()?.to_string();
    let part: usize = part
        .strip_prefix("part")
        .map(|p| p.trim().parse().ok())
        .unwrap_or(Some(0))?;
    Some(if part == 0 {
        short
    } else {
        format!("{short}_part{part:03}")
    })
}

/// Parses CoNLL-2012 `*_conll` text. The word is the fourth column.
pub fn parse_conll2012(text: &str, path: &Path) -> Result<Vec<ConllDocument>> {
    let mut docs = Vec::new();
    let mut current: Option<ConllDocument> = None;
    let mut sentence: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: "word".into(),
            message,
        };
        let trimmed = line.trim();
        if trimmed.starts_with("#begin document") {
            if current.is_some() {
                return Err(parse_err("nested #begin document".into()));
            }
            let doc_id = document_id(trimmed)
                .ok_or_else(|| parse_err(format!("bad document header {trimmed:?}")))?;
            current = Some(ConllDocument {
                doc_id,
                sentences: Vec::new(),
            });
        } else if trimmed.starts_with("#end document") {
            let mut doc = current
                .take()
                .ok_or_else(|| parse_err("#end document without #begin".into()))?;
            if !sentence.is_empty() {
                doc.sentences.push(std::mem::take(&mut sentence));
            }
            docs.push(doc);
        } else if trimmed.is_empty() {
            if let Some(doc) = current.as_mut() {
                if !sentence.is_empty() {
                    doc.sentences.push(std::mem::take(&mut sentence));
                }
            }
        } else if !trimmed.starts_with('#') {
            if current.is_none() {
                return Err(parse_err("token line outside a document".into()));
            }
            let word = trimmed
                .split_whitespace()
                .nth(3)
                .ok_or_else(|| parse_err("fewer than four columns".into()))?;
            sentence.push(word.to_string());
        }
    }
    if current.is_some() {
        return Err(Error::Data(format!("{}: unterminated document", path.display())));
    }
    Ok(docs)
}

/// Reads a token-per-line file with blank lines between sentences. The token
/// is the second column when the first is a number, otherwise the first.
pub fn parse_token_lines(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut sentence = Vec::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if line.trim().is_empty() {
            if !sentence.is_empty() {
                sentences.push(std::mem::take(&mut sentence));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let word = if cols.len() > 1 && cols[0].parse::<usize>().is_ok() {
            cols[1]
        } else {
            cols[0]
        };
        sentence.push(word.to_string());
    }
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}
