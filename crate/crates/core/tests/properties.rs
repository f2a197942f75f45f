use std::collections::BTreeSet;

use infostat_core::bridging::{self, AnaphorPrediction};
use infostat_core::corpus::make_folds;
use infostat_core::eval::{eval_is_e2e, eval_mentions, f_score};
use infostat_core::nn::{argmax, softmax};
use infostat_core::spangen::{
    self, enumerate_inference_spans, enumerate_training_spans, insert_markers, prior_string_seen,
    seen_flags, truncate, LengthModel, SpanGenConfig,
};
use infostat_core::{Corpus, Document, ISCategory, Mention, Sentence};
use proptest::prelude::*;

const VOCAB: [&str; 10] = ["the", "a", "Cat", "cat", "of", "in", "dog", "Dog", "and", "it"];

fn sentence_words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(VOCAB.to_vec()), 1..=max)
        .prop_map(|ws| ws.into_iter().map(String::from).collect())
}

fn document(max_sents: usize) -> impl Strategy<Value = Document> {
    prop::collection::vec(sentence_words(8), 1..=max_sents).prop_map(|sents| Document {
        doc_id: "d".into(),
        sentences: sents
            .iter()
            .enumerate()
            .map(|(i, ws)| Sentence::from_words("d", i, ws))
            .collect(),
        ..Default::default()
    })
}

fn spans_of(doc: &Document) -> Vec<Mention> {
    let mut out = Vec::new();
    for s in &doc.sentences {
        for start in 0..s.len() {
            for end in start..s.len() {
                out.push(Mention::new("d", s.sent_index, start, end));
            }
        }
    }
    out
}

fn doc_with_mentions() -> impl Strategy<Value = (Document, Vec<Mention>)> {
    document(4).prop_flat_map(|doc| {
        let all = spans_of(&doc);
        let n = all.len();
        (Just(doc), prop::sample::subsequence(all, 0..=n.min(12)))
    })
}

/// Piece counts derived from word length, so truncation is tested with
/// non-uniform costs.
struct ByLength;

impl LengthModel for ByLength {
    fn sequence_overhead(&self) -> usize {
        2
    }

    fn piece_counts(&self, words: &[String]) -> infostat_core::Result<Vec<usize>> {
        Ok(words.iter().map(|w| 1 + w.len() / 4).collect())
    }
}

proptest! {
    #[test]
    fn training_span_count_matches_brute_force(n in 1usize..60, l in 1usize..15) {
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let s = Sentence::from_words("d", 0, &words);
        let cfg = SpanGenConfig { max_train_span_len: l, ..Default::default() };
        let spans = enumerate_training_spans(&s, &[], &cfg);
        let mut brute = 0;
        for i in 0..n {
            for j in i..n {
                if j - i < l {
                    brute += 1;
                }
            }
        }
        prop_assert_eq!(spans.len(), brute);
        prop_assert_eq!(spangen::bounded_span_count(n, l), brute);
        let distinct: BTreeSet<_> = spans.iter().map(|c| (c.start, c.end)).collect();
        prop_assert_eq!(distinct.len(), spans.len());
    }

    #[test]
    fn training_labels_are_sound((doc, gold) in doc_with_mentions(), l in 1usize..6) {
        let cfg = SpanGenConfig { max_train_span_len: l, ..Default::default() };
        for s in &doc.sentences {
            let spans = enumerate_training_spans(s, &gold, &cfg);
            for c in &spans {
                let is_gold = gold.iter().any(|m| m.sent == c.sent && m.start == c.start && m.end == c.end);
                prop_assert_eq!(c.label, Some(is_gold));
            }
            let positives = spans.iter().filter(|c| c.label == Some(true)).count();
            let expected = gold.iter().filter(|m| m.sent == s.sent_index && m.len() <= l).count();
            prop_assert_eq!(positives, expected);
        }
    }

    #[test]
    fn heuristic_only_removes_spans(words in sentence_words(20)) {
        let s = Sentence::from_words("d", 0, &words);
        let cfg = SpanGenConfig::default();
        let all: BTreeSet<_> = enumerate_inference_spans(&s, false, &cfg).into_iter().collect();
        let pruned: BTreeSet<_> = enumerate_inference_spans(&s, true, &cfg).into_iter().collect();
        prop_assert_eq!(all.len(), words.len() * (words.len() + 1) / 2);
        prop_assert!(pruned.is_subset(&all));
    }

    #[test]
    fn markers_round_trip(words in sentence_words(40), a in 0usize..40, b in 0usize..40) {
        let cfg = SpanGenConfig::default();
        let n = words.len();
        let (start, end) = (a.min(b) % n, a.max(b) % n);
        let (start, end) = (start.min(end), start.max(end));
        let m = insert_markers(&words, start, end, &cfg).unwrap();
        prop_assert_eq!(m.words.len(), n + 2);
        prop_assert_eq!(&m.words[m.marker_open_pos], &cfg.marker_open);
        prop_assert_eq!(&m.words[m.marker_close_pos], &cfg.marker_close);
        prop_assert_eq!(m.strip_markers(), words.clone());
        prop_assert_eq!(m.span_words(), &words[start..=end]);
        prop_assert_eq!(m.span(), (start, end));
    }

    #[test]
    fn truncation_keeps_protected_words(
        words in sentence_words(80),
        a in 0usize..80,
        b in 0usize..80,
        budget in 4usize..60,
        seen in any::<bool>(),
    ) {
        let cfg = SpanGenConfig::default();
        let n = words.len();
        let (start, end) = ((a % n).min(b % n), (a % n).max(b % n));
        let mention = Mention::new("d", 0, start, end);
        let marked = spangen::build_is_input(&words, &mention, seen, &cfg).unwrap();
        match truncate(&marked, budget, &ByLength) {
            Ok(t) => {
                prop_assert!(ByLength.encoded_length(&t).unwrap() <= budget);
                prop_assert_eq!(t.span_words(), &words[start..=end]);
                prop_assert_eq!(t.tail(), marked.tail());
                prop_assert_eq!(t.span(), (start, end));
                let kept = t.strip_markers();
                prop_assert_eq!(&kept[..], &words[t.trimmed_front..n - t.trimmed_back]);
            }
            Err(infostat_core::Error::SpanExceedsBudget { needed, .. }) => {
                prop_assert!(needed > budget);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn seen_flags_agree_with_definition((doc, mentions) in doc_with_mentions()) {
        let flags = seen_flags(&doc, &mentions).unwrap();
        for (m, flag) in mentions.iter().zip(&flags) {
            prop_assert_eq!(*flag, prior_string_seen(m, &doc, &mentions).unwrap());
            let surface = doc.surface(m).unwrap().to_lowercase();
            let brute = mentions.iter().any(|o| {
                o.order_key() < m.order_key() && doc.surface(o).unwrap().to_lowercase() == surface
            });
            prop_assert_eq!(*flag, brute);
        }
    }

    #[test]
    fn seen_flags_are_monotone_in_history((doc, mentions) in doc_with_mentions(), extra in 0usize..1000) {
        let all = spans_of(&doc);
        let added = all[extra % all.len()].clone();
        let mut more = mentions.clone();
        if !more.contains(&added) {
            more.push(added);
        }
        for m in &mentions {
            if prior_string_seen(m, &doc, &mentions).unwrap() {
                prop_assert!(prior_string_seen(m, &doc, &more).unwrap());
            }
        }
    }

    #[test]
    fn later_mentions_do_not_affect_earlier_flags((doc, mentions) in doc_with_mentions(), seed in any::<u64>()) {
        let mut ordered = mentions.clone();
        ordered.sort_by_key(Mention::order_key);
        if ordered.len() < 2 {
            return Ok(());
        }
        let cut = (seed as usize) % ordered.len();
        let mut permuted = ordered.clone();
        permuted[cut..].reverse();
        let a = seen_flags(&doc, &ordered).unwrap();
        let b = seen_flags(&doc, &permuted).unwrap();
        for i in 0..cut {
            prop_assert_eq!(a[i], b[i]);
        }
    }

    #[test]
    fn folds_partition_documents(docs in 2usize..40, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= docs);
        let corpus = Corpus::new((0..docs).map(|i| Document { doc_id: format!("d{i:02}"), ..Default::default() }).collect());
        let folds = make_folds(&corpus, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut tested = BTreeSet::new();
        for f in &folds {
            prop_assert!(f.train_doc_ids.is_disjoint(&f.test_doc_ids));
            prop_assert_eq!(f.train_doc_ids.len() + f.test_doc_ids.len(), docs);
            for d in &f.test_doc_ids {
                prop_assert!(tested.insert(d.clone()));
            }
        }
        prop_assert_eq!(tested.len(), docs);
        let sizes: Vec<usize> = folds.iter().map(|f| f.test_doc_ids.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn softmax_normalizes_and_argmax_survives_scaling(
        logits in prop::collection::vec(-20.0f32..20.0, 8),
        scale in 0.01f32..50.0,
    ) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let scaled: Vec<f32> = logits.iter().map(|x| x * scale).collect();
        let distinct: BTreeSet<u32> = logits.iter().map(|x| x.to_bits()).collect();
        prop_assume!(distinct.len() == logits.len());
        prop_assert_eq!(argmax(&p), argmax(&softmax(&scaled)));
    }

    #[test]
    fn mention_and_is_scores_match_brute_force(
        gold in labeled_set(),
        pred in labeled_set(),
    ) {
        let prf = eval_mentions(&gold, &pred).unwrap();
        let span_hits = pred.iter().filter(|p| gold.iter().any(|g| g.key() == p.key())).count();
        prop_assert_eq!(prf.correct, span_hits);
        prop_assert!((prf.f1 - f_score(prf.precision, prf.recall)).abs() < 1e-9);
        prop_assert!(prf.correct <= prf.gold.min(prf.pred));

        let report = eval_is_e2e(&gold, &pred).unwrap();
        let overall = report.overall.unwrap();
        let label_hits = pred
            .iter()
            .filter(|p| gold.iter().any(|g| g.key() == p.key() && g.is_category == p.is_category))
            .count();
        prop_assert_eq!(overall.correct, label_hits);
        prop_assert_eq!(report.per_class.values().map(|c| c.correct).sum::<usize>(), label_hits);
        for cat in ISCategory::ALL {
            let c = report.per_class[&cat];
            prop_assert_eq!(c.gold, gold.iter().filter(|g| g.is_category == Some(cat)).count());
            prop_assert_eq!(c.pred, pred.iter().filter(|p| p.is_category == Some(cat)).count());
        }
    }

    #[test]
    fn bashi_and_bridging_eval_decompose(gold in labeled_set(), pred in labeled_set()) {
        let anaphors = bridging::bashi_anaphors(&pred).unwrap();
        let bridging: Vec<_> = pred.iter().filter(|m| m.is_category == Some(ISCategory::Bridging)).collect();
        let comparative: Vec<_> = pred.iter().filter(|m| m.is_category == Some(ISCategory::Comparative)).collect();
        prop_assert_eq!(anaphors.len(), bridging.len() + comparative.len());
        for a in &anaphors {
            prop_assert_eq!(a.mention.is_category, Some(a.source_category));
        }
        let as_mentions: Vec<Mention> = anaphors.iter().map(|a: &AnaphorPrediction| a.mention.clone()).collect();
        prop_assert_eq!(
            bridging::eval_bridging(&gold, &anaphors).unwrap(),
            eval_mentions(&gold, &as_mentions).unwrap()
        );
    }
}

fn labeled_set() -> impl Strategy<Value = Vec<Mention>> {
    prop::collection::btree_map((0usize..3, 0usize..3, 0usize..6, 0usize..3), 0usize..8, 0..25).prop_map(|m| {
        m.into_iter()
            .map(|((doc, sent, start, extra), cat)| {
                Mention::labeled(
                    &format!("d{doc}"),
                    sent,
                    start,
                    start + extra,
                    ISCategory::from_index(cat).unwrap(),
                )
            })
            .collect()
    })
}
