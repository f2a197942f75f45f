//! Span enumeration and construction of marker-augmented model inputs.
//!
//! Every model input is a [`MarkedSequence`]: the sentence with an opening
//! marker immediately before the span and a closing marker immediately after
//! it. IS inputs additionally carry a two-token tail, the separator followed by
//! the seen/unseen flag word.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Corpus, Document, Mention, Sentence};

const DEFAULT_LEXICON: &str = include_str!("../data/pruning_lexicon.txt");

/// Parses a lexicon file: one token per line, `#` starts a comment, blank
/// lines are ignored. Entries are lowercased.
pub fn parse_lexicon(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split_once('#').map_or(l, |(head, _)| head).trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// The bundled prepositions / frequent verbs / punctuation list.
pub fn default_pruning_lexicon() -> BTreeSet<String> {
    parse_lexicon(DEFAULT_LEXICON)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanGenConfig {
    /// Longest span (in original words) used as a training instance.
    pub max_train_span_len: usize,
    pub marker_open: String,
    pub marker_close: String,
    pub separator: String,
    pub seen_token: String,
    pub unseen_token: String,
    /// Encoder-unit budget for one input sequence.
    pub max_seq_len: usize,
    pub pruning_lexicon: BTreeSet<String>,
}

impl Default for SpanGenConfig {
    fn default() -> Self {
        SpanGenConfig {
            max_train_span_len: 10,
            marker_open: "[SEP1]".to_string(),
            marker_close: "[SEP2]".to_string(),
            separator: "[SEP]".to_string(),
            seen_token: "true".to_string(),
            unseen_token: "false".to_string(),
            max_seq_len: 128,
            pruning_lexicon: default_pruning_lexicon(),
        }
    }
}

impl SpanGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_train_span_len == 0 {
            return Err(Error::InvalidConfig(
                "max_train_span_len must be at least 1".to_string(),
            ));
        }
        if self.max_seq_len < 8 {
            return Err(Error::InvalidConfig(alloc::format!(
                "max_seq_len must be at least 8, got {}",
                self.max_seq_len
            )));
        }
        let markers = [&self.marker_open, &self.marker_close, &self.separator];
        for (i, a) in markers.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidConfig("marker strings must be non-empty".to_string()));
            }
            for b in &markers[i + 1..] {
                if a == b {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "marker {a:?} is used twice"
                    )));
                }
            }
        }
        if self.seen_token == self.unseen_token || self.seen_token.is_empty() {
            return Err(Error::InvalidConfig(
                "seen and unseen tokens must be distinct and non-empty".to_string(),
            ));
        }
        Ok(())
    }

    fn is_marker(&self, word: &str) -> bool {
        word == self.marker_open || word == self.marker_close || word == self.separator
    }

    /// Rejects corpora whose vocabulary contains one of the marker strings.
    pub fn check_vocabulary(&self, corpus: &Corpus) -> Result<()> {
        for doc in &corpus.documents {
            for s in &doc.sentences {
                if let Some(t) = s.tokens.iter().find(|t| self.is_marker(&t.text)) {
                    return Err(Error::InvalidDocument(
                        doc.doc_id.clone(),
                        alloc::format!(
                            "sentence {} token {} collides with special token {:?}",
                            s.sent_index,
                            t.index,
                            t.text
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub sent: usize,
    pub start: usize,
    pub end: usize,
    /// `Some(true)` iff the span equals a gold mention exactly.
    pub label: Option<bool>,
}

impl SpanCandidate {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Number of spans of length at most `max_len` in a sentence of `n` tokens.
pub fn bounded_span_count(n: usize, max_len: usize) -> usize {
    if max_len < n {
        n * max_len - max_len * (max_len - 1) / 2
    } else {
        n * (n + 1) / 2
    }
}

/// All spans of at most `L` words, labeled against the sentence's gold spans.
/// Gold mentions longer than `L` yield no positive instance.
pub fn enumerate_training_spans(
    sentence: &Sentence,
    gold_mentions: &[Mention],
    config: &SpanGenConfig,
) -> Vec<SpanCandidate> {
    let gold: BTreeSet<(usize, usize)> = gold_mentions
        .iter()
        .filter(|m| m.sent == sentence.sent_index && m.doc_id == sentence.doc_id)
        .map(|m| (m.start, m.end))
        .collect();
    let n = sentence.len();
    let max_len = config.max_train_span_len;
    let mut out = Vec::with_capacity(bounded_span_count(n, max_len));
    for start in 0..n {
        for end in start..n.min(start + max_len) {
            out.push(SpanCandidate {
                sent: sentence.sent_index,
                start,
                end,
                label: Some(gold.contains(&(start, end))),
            });
        }
    }
    out
}

/// Every span of the sentence, ordered by `(start, end)`. With the heuristic
/// on, spans whose first token (lowercased) is in the pruning lexicon are
/// skipped.
pub fn enumerate_inference_spans(
    sentence: &Sentence,
    heuristic_on: bool,
    config: &SpanGenConfig,
) -> Vec<SpanCandidate> {
    let n = sentence.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for start in 0..n {
        if heuristic_on
            && config
                .pruning_lexicon
                .contains(&sentence.tokens[start].text.to_lowercase())
        {
            continue;
        }
        for end in start..n {
            out.push(SpanCandidate {
                sent: sentence.sent_index,
                start,
                end,
                label: None,
            });
        }
    }
    out
}

/// A word sequence with exactly one opening and one closing marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedSequence {
    pub words: Vec<String>,
    pub marker_open_pos: usize,
    pub marker_close_pos: usize,
    /// Trailing protected words (separator + flag), 0 or 2.
    pub tail_len: usize,
    /// Context words removed by truncation at the front / back.
    pub trimmed_front: usize,
    pub trimmed_back: usize,
}

impl MarkedSequence {
    /// Span start and end in original sentence coordinates.
    pub fn span(&self) -> (usize, usize) {
        (
            self.trimmed_front + self.marker_open_pos,
            self.trimmed_front + self.marker_close_pos - 2,
        )
    }

    /// The span's words, without markers.
    pub fn span_words(&self) -> &[String] {
        &self.words[self.marker_open_pos + 1..self.marker_close_pos]
    }

    /// The trailing separator + flag words, if any.
    pub fn tail(&self) -> &[String] {
        &self.words[self.words.len() - self.tail_len..]
    }

    /// Removes both markers and the tail, giving back the (possibly truncated)
    /// sentence.
    pub fn strip_markers(&self) -> Vec<String> {
        self.words[..self.words.len() - self.tail_len]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.marker_open_pos && *i != self.marker_close_pos)
            .map(|(_, w)| w.clone())
            .collect()
    }
}

/// Inserts the opening marker immediately before `start` and the closing
/// marker immediately after `end`.
pub fn insert_markers<S: AsRef<str>>(
    sentence_tokens: &[S],
    start: usize,
    end: usize,
    config: &SpanGenConfig,
) -> Result<MarkedSequence> {
    let n = sentence_tokens.len();
    if start > end || end >= n {
        return Err(Error::InvalidSpan { start, end, len: n });
    }
    let mut words = Vec::with_capacity(n + 4);
    words.extend(sentence_tokens[..start].iter().map(|w| w.as_ref().to_string()));
    words.push(config.marker_open.clone());
    words.extend(sentence_tokens[start..=end].iter().map(|w| w.as_ref().to_string()));
    words.push(config.marker_close.clone());
    words.extend(sentence_tokens[end + 1..].iter().map(|w| w.as_ref().to_string()));
    Ok(MarkedSequence {
        words,
        marker_open_pos: start,
        marker_close_pos: end + 2,
        tail_len: 0,
        trimmed_front: 0,
        trimmed_back: 0,
    })
}

/// Lowercased, single-space-joined surface string.
pub fn normalized_surface(document: &Document, mention: &Mention) -> Result<String> {
    let tokens = document.span_tokens(mention)?;
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.text.to_lowercase());
    }
    Ok(out)
}

/// Whether some mention strictly earlier in document order than `mention`
/// has the same normalized surface string.
pub fn prior_string_seen(
    mention: &Mention,
    document: &Document,
    mention_order: &[Mention],
) -> Result<bool> {
    let target = normalized_surface(document, mention)?;
    let here = mention.order_key();
    for m in mention_order {
        if m.doc_id != document.doc_id || m.order_key() >= here {
            continue;
        }
        if normalized_surface(document, m)? == target {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Seen flags for a whole mention list in one pass. The result is aligned with
/// the input order; the flags themselves follow document order.
pub fn seen_flags(document: &Document, mentions: &[Mention]) -> Result<Vec<bool>> {
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| mentions[i].order_key());
    let surfaces = mentions
        .iter()
        .map(|m| normalized_surface(document, m))
        .collect::<Result<Vec<_>>>()?;

    let mut flags = alloc::vec![false; mentions.len()];
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    // Mentions sharing an order key are not earlier than one another.
    let mut pending: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for &i in &order {
        pending.entry(mentions[i].order_key()).or_default().push(i);
    }
    for group in pending.values() {
        for &i in group {
            flags[i] = seen.contains(surfaces[i].as_str());
        }
        for &i in group {
            seen.insert(surfaces[i].as_str());
        }
    }
    Ok(flags)
}

/// Marked local context plus `[separator, flag]`.
pub fn build_is_input<S: AsRef<str>>(
    sentence_tokens: &[S],
    mention: &Mention,
    seen: bool,
    config: &SpanGenConfig,
) -> Result<MarkedSequence> {
    let mut marked = insert_markers(sentence_tokens, mention.start, mention.end, config)?;
    marked.words.push(config.separator.clone());
    marked.words.push(if seen {
        config.seen_token.clone()
    } else {
        config.unseen_token.clone()
    });
    marked.tail_len = 2;
    Ok(marked)
}

/// How many encoder units a word sequence costs.
///
/// Costs are additive over words plus a fixed per-sequence overhead (for
/// instance begin/end special tokens).
pub trait LengthModel {
    fn sequence_overhead(&self) -> usize;

    fn piece_counts(&self, words: &[String]) -> Result<Vec<usize>>;

    fn encoded_length(&self, marked: &MarkedSequence) -> Result<usize> {
        Ok(self.sequence_overhead() + self.piece_counts(&marked.words)?.iter().sum::<usize>())
    }
}

/// One unit per word, no overhead.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordCount;

impl LengthModel for WordCount {
    fn sequence_overhead(&self) -> usize {
        0
    }

    fn piece_counts(&self, words: &[String]) -> Result<Vec<usize>> {
        Ok(alloc::vec![1; words.len()])
    }
}

/// Drops context words until the sequence fits `max_seq_len` encoder units.
///
/// Words are removed one at a time from whichever end has more context left
/// between it and the span, alternating front/back on ties. Markers, span
/// words and the tail are never removed.
pub fn truncate(
    marked: &MarkedSequence,
    max_seq_len: usize,
    lengths: &(impl LengthModel + ?Sized),
) -> Result<MarkedSequence> {
    let counts = lengths.piece_counts(&marked.words)?;
    let overhead = lengths.sequence_overhead();
    let total: usize = overhead + counts.iter().sum::<usize>();
    if total <= max_seq_len {
        return Ok(marked.clone());
    }

    let n = marked.words.len();
    let protected_lo = marked.marker_open_pos;
    let protected_hi = marked.marker_close_pos;
    let tail_start = n - marked.tail_len;
    let minimal: usize = overhead
        + counts[protected_lo..=protected_hi].iter().sum::<usize>()
        + counts[tail_start..].iter().sum::<usize>();
    if minimal > max_seq_len {
        let (start, end) = marked.span();
        return Err(Error::SpanExceedsBudget {
            start,
            end,
            needed: minimal,
            budget: max_seq_len,
        });
    }

    // Kept context: words[front..protected_lo] and words[protected_hi+1..back].
    let mut front = 0;
    let mut back = tail_start;
    let mut current = total;
    let mut front_next = true;
    while current > max_seq_len {
        let left = protected_lo - front;
        let right = back - (protected_hi + 1);
        let take_front = match left.cmp(&right) {
            core::cmp::Ordering::Greater => true,
            core::cmp::Ordering::Less => false,
            core::cmp::Ordering::Equal => {
                let f = front_next;
                front_next = !front_next;
                f
            }
        };
        if take_front {
            current -= counts[front];
            front += 1;
        } else {
            back -= 1;
            current -= counts[back];
        }
    }

    let mut words = Vec::with_capacity(n - front - (tail_start - back));
    words.extend_from_slice(&marked.words[front..back]);
    words.extend_from_slice(&marked.words[tail_start..]);
    Ok(MarkedSequence {
        words,
        marker_open_pos: protected_lo - front,
        marker_close_pos: protected_hi - front,
        tail_len: marked.tail_len,
        trimmed_front: marked.trimmed_front + front,
        trimmed_back: marked.trimmed_back + (tail_start - back),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn three_tokens_give_six_training_spans() {
        let s = Sentence::from_words("d", 0, &["a", "b", "c"]);
        assert_eq!(enumerate_training_spans(&s, &[], &SpanGenConfig::default()).len(), 6);
    }

    #[test]
    fn exactly_one_positive_for_one_gold_span() {
        let s = Sentence::from_words("d", 0, &["the", "big", "cat", "sat"]);
        let gold = [Mention::new("d", 0, 1, 2)];
        let spans = enumerate_training_spans(&s, &gold, &SpanGenConfig::default());
        let positives: Vec<_> = spans.iter().filter(|c| c.label == Some(true)).collect();
        assert_eq!(positives.len(), 1);
        assert_eq!((positives[0].start, positives[0].end), (1, 2));
    }

    #[test]
    fn long_gold_spans_give_no_positive() {
        let ws: Vec<String> = (0..15).map(|i| alloc::format!("w{i}")).collect();
        let s = Sentence::from_words("d", 0, &ws);
        let gold = [Mention::new("d", 0, 0, 12)];
        let spans = enumerate_training_spans(&s, &gold, &SpanGenConfig::default());
        assert!(spans.iter().all(|c| c.label == Some(false)));
        assert_eq!(spans.len(), bounded_span_count(15, 10));
    }

    #[test]
    fn hundred_tokens_give_5050_inference_spans() {
        let ws: Vec<String> = (0..100).map(|i| alloc::format!("w{i}")).collect();
        let s = Sentence::from_words("d", 0, &ws);
        assert_eq!(
            enumerate_inference_spans(&s, false, &SpanGenConfig::default()).len(),
            5050
        );
    }

    #[test]
    fn heuristic_skips_lexicon_starts() {
        let s = Sentence::from_words("d", 0, &["of", "the", "cat"]);
        let cfg = SpanGenConfig::default();
        let spans = enumerate_inference_spans(&s, true, &cfg);
        assert!(spans.iter().all(|c| c.start != 0));
        assert_eq!(spans.len(), 3);

        let plain = Sentence::from_words("d", 0, &["the", "cat"]);
        assert_eq!(
            enumerate_inference_spans(&plain, true, &cfg),
            enumerate_inference_spans(&plain, false, &cfg)
        );
    }

    #[test]
    fn marker_insertion_examples() {
        let cfg = SpanGenConfig::default();
        let m = insert_markers(&["The", "cat", "sat"], 1, 1, &cfg).unwrap();
        assert_eq!(m.words, words(&["The", "[SEP1]", "cat", "[SEP2]", "sat"]));

        let m = insert_markers(&["X"], 0, 0, &cfg).unwrap();
        assert_eq!(m.words, words(&["[SEP1]", "X", "[SEP2]"]));

        let m = insert_markers(&["a", "b", "c"], 0, 2, &cfg).unwrap();
        assert_eq!((m.marker_open_pos, m.marker_close_pos), (0, 4));
        assert_eq!(m.span(), (0, 2));

        assert_eq!(
            insert_markers(&["a"], 0, 1, &cfg),
            Err(Error::InvalidSpan { start: 0, end: 1, len: 1 })
        );
        assert!(insert_markers(&["a", "b"], 1, 0, &cfg).is_err());
    }

    #[test]
    fn is_input_appends_flag_tail() {
        let cfg = SpanGenConfig::default();
        let m = Mention::new("d", 0, 1, 1);
        let seen = build_is_input(&["A", "b"], &m, true, &cfg).unwrap();
        assert_eq!(seen.words, words(&["A", "[SEP1]", "b", "[SEP2]", "[SEP]", "true"]));
        let unseen = build_is_input(&["A", "b"], &m, false, &cfg).unwrap();
        assert_eq!(unseen.tail(), &words(&["[SEP]", "false"])[..]);

        let plain = insert_markers(&["A", "b"], 1, 1, &cfg).unwrap();
        assert_eq!(&seen.words[..plain.words.len()], &plain.words[..]);
        assert_eq!(seen.marker_open_pos, plain.marker_open_pos);
        assert_eq!(seen.marker_close_pos, plain.marker_close_pos);
        assert_eq!(seen.strip_markers(), words(&["A", "b"]));
    }

    fn doc(sentences: &[&[&str]]) -> Document {
        Document {
            doc_id: "d".into(),
            sentences: sentences
                .iter()
                .enumerate()
                .map(|(i, ws)| Sentence::from_words("d", i, ws))
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn seen_flag_examples() {
        let d = doc(&[&["The", "plant", "closed"], &["the", "plant", "and", "a", "plant"]]);
        let first = Mention::new("d", 0, 0, 1);
        let second = Mention::new("d", 1, 0, 1);
        let indefinite = Mention::new("d", 1, 3, 4);
        let order = vec![first.clone(), second.clone(), indefinite.clone()];
        assert!(!prior_string_seen(&first, &d, &order).unwrap());
        assert!(prior_string_seen(&second, &d, &order).unwrap());
        assert!(!prior_string_seen(&indefinite, &d, &order).unwrap());
        assert_eq!(seen_flags(&d, &order).unwrap(), vec![false, true, false]);
        assert!(prior_string_seen(&Mention::new("d", 2, 0, 0), &d, &order).is_err());
        assert!(prior_string_seen(&Mention::new("x", 0, 0, 0), &d, &order).is_err());
    }

    #[test]
    fn truncation_identity_and_error() {
        let cfg = SpanGenConfig::default();
        let m = insert_markers(&["a", "b", "c"], 1, 1, &cfg).unwrap();
        assert_eq!(truncate(&m, 128, &WordCount).unwrap(), m);

        let ws: Vec<String> = (0..250).map(|i| alloc::format!("w{i}")).collect();
        let m = insert_markers(&ws, 10, 209, &cfg).unwrap();
        assert!(matches!(
            truncate(&m, 128, &WordCount),
            Err(Error::SpanExceedsBudget { start: 10, end: 209, .. })
        ));
    }

    #[test]
    fn truncation_prefers_the_longer_side() {
        let cfg = SpanGenConfig::default();
        let ws: Vec<String> = (0..300).map(|i| alloc::format!("w{i}")).collect();
        let m = insert_markers(&ws, 290, 294, &cfg).unwrap();
        let t = truncate(&m, 128, &WordCount).unwrap();
        assert_eq!(t.words.len(), 128);
        // Only leading context goes until both sides are balanced; the five
        // trailing words are all kept.
        assert_eq!(t.trimmed_back, 0);
        assert_eq!(t.trimmed_front, 174);
        assert_eq!(t.span(), (290, 294));
        assert_eq!(t.span_words(), &ws[290..=294]);
        assert_eq!(t.strip_markers(), ws[174..].to_vec());
    }

    #[test]
    fn lexicon_parsing() {
        let lex = parse_lexicon("# header\nOf\n\n to # trailing\n.\n");
        assert_eq!(lex.len(), 3);
        assert!(lex.contains("of") && lex.contains("to") && lex.contains("."));
        let default = default_pruning_lexicon();
        assert!(default.contains("of") && default.contains(",") && default.contains("is"));
        assert!(!default.contains("the"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SpanGenConfig::default();
        cfg.validate().unwrap();
        cfg.marker_close = cfg.marker_open.clone();
        assert!(cfg.validate().is_err());
        let cfg = SpanGenConfig {
            max_seq_len: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SpanGenConfig {
            max_train_span_len: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn vocabulary_collision_is_rejected() {
        let cfg = SpanGenConfig::default();
        let c = Corpus::new(vec![doc(&[&["a", "[SEP1]"]])]);
        assert!(cfg.check_vocabulary(&c).is_err());
        let c = Corpus::new(vec![doc(&[&["a", "b"]])]);
        cfg.check_vocabulary(&c).unwrap();
    }
}
