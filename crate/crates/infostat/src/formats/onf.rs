//! OntoNotes Normal Form files: sentence segmentation and leaves only.
//!
//! Null elements are dropped. They are identified from the `-NONE-`
//! preterminals of each sentence's tree; when a sentence has no tree, leaves
//! starting with `*` are dropped instead.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnfDocument {
    pub doc_id: String,
    /// Sentences with null elements removed.
    pub sentences: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Other,
    Tree,
    Leaves,
}

#[derive(Default)]
struct Block {
    tree: String,
    leaves: Vec<String>,
}

/// `(POS word)` preterminals of a bracketed tree, in order.
fn preterminals(tree: &str) -> Vec<(String, String)> {
    let mut atoms: Vec<&str> = Vec::new();
    let mut start = None;
    for (i, c) in tree.char_indices() {
        match c {
            '(' | ')' => {
                if let Some(s) = start.take() {
                    atoms.push(&tree[s..i]);
                }
                atoms.push(&tree[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(s) = start.take() {
                    atoms.push(&tree[s..i]);
                }
            }
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    if let Some(s) = start {
        atoms.push(&tree[s..]);
    }
    atoms
        .windows(4)
        .filter(|w| w[0] == "(" && w[3] == ")" && !matches!(w[1], "(" | ")") && !matches!(w[2], "(" | ")"))
        .map(|w| (w[1].to_string(), w[2].to_string()))
        .collect()
}

fn leaf_line(line: &str, expected: usize) -> Option<String> {
    let mut parts = line.split_whitespace();
    let index = parts.next()?;
    let word = parts.next()?;
    if parts.next().is_some() || index.parse::<usize>().ok()? != expected {
        return None;
    }
    Some(word.to_string())
}

impl Block {
    fn finish(self, path: &Path, sentence: usize) -> Result<Option<Vec<String>>> {
        if self.leaves.is_empty() {
            return Ok(None);
        }
        let words = if self.tree.trim().is_empty() {
            self.leaves.into_iter().filter(|w| !w.starts_with('*')).collect()
        } else {
            let pre = preterminals(&self.tree);
            if pre.len() != self.leaves.len() {
                return Err(Error::Data(format!(
                    "{}: sentence {sentence}: tree has {} leaves, leaf listing has {}",
                    path.display(),
                    pre.len(),
                    self.leaves.len()
                )));
            }
            self.leaves
                .into_iter()
                .zip(pre)
                .filter(|(_, (pos, _))| pos != "-NONE-")
                .map(|(w, _)| w)
                .collect::<Vec<_>>()
        };
        Ok((!words.is_empty()).then_some(words))
    }
}

pub fn parse_onf(text: &str, doc_id: &str, path: &Path) -> Result<OnfDocument> {
    let mut sentences = Vec::new();
    let mut block: Option<Block> = None;
    let mut section = Section::Other;
    for line in text.lines() {
        let header = line.trim();
        match header {
            "Plain sentence:" => {
                if let Some(b) = block.take() {
                    sentences.extend(b.finish(path, sentences.len())?);
                }
                block = Some(Block::default());
                section = Section::Other;
                continue;
            }
            "Tree:" => {
                section = Section::Tree;
                continue;
            }
            "Leaves:" => {
                section = Section::Leaves;
                continue;
            }
            "Treebanked sentence:" | "Speaker information:" => {
                section = Section::Other;
                continue;
            }
            _ => {}
        }
        if header.starts_with("Coreference chains") {
            section = Section::Other;
        }
        if header.chars().all(|c| c == '-' || c == '=') {
            continue;
        }
        let Some(b) = block.as_mut() else { continue };
        match section {
            Section::Tree => {
                b.tree.push_str(line);
                b.tree.push('\n');
            }
            Section::Leaves => {
                if let Some(word) = leaf_line(line, b.leaves.len()) {
                    b.leaves.push(word);
                }
            }
            Section::Other => {}
        }
    }
    if let Some(b) = block {
        sentences.extend(b.finish(path, sentences.len())?);
    }
    if sentences.is_empty() {
        return Err(Error::Data(format!("{}: no sentences found", path.display())));
    }
    Ok(OnfDocument {
        doc_id: doc_id.to_string(),
        sentences,
    })
}

pub fn load_onf(path: &Path) -> Result<OnfDocument> {
    let text = crate::error::read_to_string(path)?;
    let doc_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Data(format!("{}: bad file name", path.display())))?;
    parse_onf(&text, doc_id, path)
}
