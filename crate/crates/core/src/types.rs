use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight fine-grained information status categories.
///
/// The declaration order is the fixed class-index order used by the IS model
/// head and by the confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ISCategory {
    #[serde(rename = "old")]
    Old,
    #[serde(rename = "mediated/syntactic")]
    Syntactic,
    #[serde(rename = "mediated/worldKnowledge")]
    WorldKnowledge,
    #[serde(rename = "mediated/bridging")]
    Bridging,
    #[serde(rename = "mediated/comparative")]
    Comparative,
    #[serde(rename = "mediated/aggregate")]
    Aggregate,
    #[serde(rename = "mediated/function")]
    Function,
    #[serde(rename = "new")]
    New,
}

impl ISCategory {
    pub const COUNT: usize = 8;

    pub const ALL: [ISCategory; 8] = [
        ISCategory::Old,
        ISCategory::Syntactic,
        ISCategory::WorldKnowledge,
        ISCategory::Bridging,
        ISCategory::Comparative,
        ISCategory::Aggregate,
        ISCategory::Function,
        ISCategory::New,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ISCategory> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ISCategory::Old => "old",
            ISCategory::Syntactic => "mediated/syntactic",
            ISCategory::WorldKnowledge => "mediated/worldKnowledge",
            ISCategory::Bridging => "mediated/bridging",
            ISCategory::Comparative => "mediated/comparative",
            ISCategory::Aggregate => "mediated/aggregate",
            ISCategory::Function => "mediated/function",
            ISCategory::New => "new",
        }
    }

    /// Short label used in report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            ISCategory::Old => "old",
            ISCategory::Syntactic => "m/syntactic",
            ISCategory::WorldKnowledge => "m/worldKnow.",
            ISCategory::Bridging => "m/bridging",
            ISCategory::Comparative => "m/comparative",
            ISCategory::Aggregate => "m/aggregate",
            ISCategory::Function => "m/function",
            ISCategory::New => "new",
        }
    }
}

impl fmt::Display for ISCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCategory(pub String);

impl fmt::Display for UnknownCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown information status category {:?}", self.0)
    }
}

impl FromStr for ISCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from surface forms, numbering tokens from 0.
    pub fn from_words<S: AsRef<str>>(doc_id: &str, sent_index: usize, words: &[S]) -> Sentence {
        Sentence {
            doc_id: doc_id.to_string(),
            sent_index,
            tokens: words
                .iter()
                .enumerate()
                .map(|(index, w)| Token {
                    text: w.as_ref().to_string(),
                    index,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }
}

/// Identity of a span: mentions are unique on `(doc_id, sent, start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionKey {
    pub doc_id: String,
    pub sent: usize,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for MentionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}-{}", self.doc_id, self.sent, self.start, self.end)
    }
}

/// A token span inside one sentence. `start` and `end` are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub sent: usize,
    pub start: usize,
    pub end: usize,
    pub is_category: Option<ISCategory>,
    pub score: Option<f64>,
    /// Corpus-specific annotation tag, e.g. `containing-inferrable`.
    pub subtype: Option<String>,
}

impl Mention {
    pub fn new(doc_id: &str, sent: usize, start: usize, end: usize) -> Mention {
        Mention {
            doc_id: doc_id.to_string(),
            sent,
            start,
            end,
            is_category: None,
            score: None,
            subtype: None,
        }
    }

    pub fn labeled(doc_id: &str, sent: usize, start: usize, end: usize, cat: ISCategory) -> Mention {
        Mention {
            is_category: Some(cat),
            ..Mention::new(doc_id, sent, start, end)
        }
    }

    pub fn key(&self) -> MentionKey {
        MentionKey {
            doc_id: self.doc_id.clone(),
            sent: self.sent,
            start: self.start,
            end: self.end,
        }
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position in document order: sentence, then start, then end.
    pub fn order_key(&self) -> (usize, usize, usize) {
        (self.sent, self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    pub gold_mentions: Vec<Mention>,
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn sentence(&self, sent: usize) -> Option<&Sentence> {
        self.sentences.get(sent)
    }

    /// Resolves a mention against this document and returns its tokens.
    pub fn span_tokens(&self, mention: &Mention) -> Result<&[Token]> {
        if mention.doc_id != self.doc_id || mention.start > mention.end {
            return Err(Error::UnknownMention(mention.key()));
        }
        let sentence = self
            .sentences
            .get(mention.sent)
            .ok_or_else(|| Error::UnknownMention(mention.key()))?;
        if mention.end >= sentence.len() {
            return Err(Error::UnknownMention(mention.key()));
        }
        Ok(&sentence.tokens[mention.start..=mention.end])
    }

    /// Surface string of a mention, tokens joined by single spaces.
    pub fn surface(&self, mention: &Mention) -> Result<String> {
        let tokens = self.span_tokens(mention)?;
        let mut out = String::new();
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
        Ok(out)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Checks the structural invariants: contiguous sentence and token
    /// indices, non-empty sentences and tokens, resolvable unique gold
    /// mentions.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::InvalidDocument(self.doc_id.clone(), msg);
        for (i, s) in self.sentences.iter().enumerate() {
            if s.sent_index != i {
                return Err(bad(alloc::format!(
                    "sentence {i} carries index {}",
                    s.sent_index
                )));
            }
            if s.doc_id != self.doc_id {
                return Err(bad(alloc::format!("sentence {i} belongs to {}", s.doc_id)));
            }
            if s.tokens.is_empty() {
                return Err(bad(alloc::format!("sentence {i} is empty")));
            }
            for (j, t) in s.tokens.iter().enumerate() {
                if t.index != j {
                    return Err(bad(alloc::format!(
                        "sentence {i} token {j} carries index {}",
                        t.index
                    )));
                }
                if t.text.is_empty() {
                    return Err(bad(alloc::format!("sentence {i} token {j} is empty")));
                }
            }
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for m in &self.gold_mentions {
            self.span_tokens(m)?;
            if !seen.insert(m.key()) {
                return Err(Error::DuplicateMention(m.key()));
            }
        }
        Ok(())
    }

    /// Gold mentions sorted in document order.
    pub fn gold_in_order(&self) -> Vec<Mention> {
        let mut out = self.gold_mentions.clone();
        out.sort_by_key(Mention::order_key);
        out
    }
}

/// An ordered collection of documents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Corpus {
        Corpus { documents }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn mention_count(&self) -> usize {
        self.documents.iter().map(|d| d.gold_mentions.len()).sum()
    }

    pub fn gold_mentions(&self) -> Vec<Mention> {
        self.documents
            .iter()
            .flat_map(|d| d.gold_mentions.iter().cloned())
            .collect()
    }

    /// Keeps only the named documents, preserving corpus order.
    pub fn subset<'a, I>(&self, doc_ids: I) -> Corpus
    where
        I: IntoIterator<Item = &'a String>,
    {
        let wanted: alloc::collections::BTreeSet<&String> = doc_ids.into_iter().collect();
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|d| wanted.contains(&d.doc_id))
                .cloned()
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = alloc::collections::BTreeSet::new();
        for d in &self.documents {
            if !ids.insert(d.doc_id.as_str()) {
                return Err(Error::InvalidDocument(
                    d.doc_id.clone(),
                    "duplicate document id".to_string(),
                ));
            }
            d.validate()?;
        }
        Ok(())
    }
}
