//! Corpus-level prediction, scoring, cross-validation and bridging runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use infostat_core::bridging::{
    bashi_anaphors, eval_bridging, filter_containing_inferrable, scicorp_anaphors, AnaphorPrediction,
};
use infostat_core::corpus::make_folds;
use infostat_core::encoder::EncoderBackend;
use infostat_core::eval::{eval_is_e2e, eval_is_gold, length_bucket_report, MetricReport, Prf};
use infostat_core::is_model::{assign_is, ISModel};
use infostat_core::mention_model::{predict_mentions, MentionModel};
use infostat_core::{Corpus, Document, ISCategory, Mention, MentionKey};
use serde::{Deserialize, Serialize};

use crate::config::{EvalSettings, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::predictions::{save_predictions, to_mentions, PredictionRecord};
use crate::report::{render_metrics, RenderOptions};
use crate::run::{train_is_run, train_mention_run, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PredictOptions {
    pub mode: Mode,
    pub heuristic: bool,
    /// Longest span the extractor may propose; unused with gold mentions.
    pub test_max_len: Option<usize>,
}

impl From<&EvalSettings> for PredictOptions {
    fn from(e: &EvalSettings) -> Self {
        PredictOptions {
            mode: e.mode,
            heuristic: e.heuristic,
            test_max_len: e.test_max_len,
        }
    }
}

/// Predictions for one document in document order. End-to-end prediction
/// needs a mention model; the gold-mention setting labels the gold spans.
pub fn predict_document<B: EncoderBackend>(
    mention: Option<&MentionModel<B>>,
    is: &ISModel<B>,
    document: &Document,
    options: &PredictOptions,
) -> Result<Vec<PredictionRecord>> {
    let (spans, scores): (Vec<Mention>, BTreeMap<MentionKey, f64>) = match options.mode {
        Mode::GoldMentions => (document.gold_mentions.clone(), BTreeMap::new()),
        Mode::E2e => {
            let model = mention.ok_or_else(|| {
                Error::config("mention_model", "end-to-end prediction needs a mention model")
            })?;
            let found = predict_mentions(model, document, options.heuristic, options.test_max_len)?;
            let scores = found.iter().filter_map(|m| Some((m.key(), m.score?))).collect();
            (found, scores)
        }
    };
    let labeled = assign_is(is, document, &spans)?;
    labeled
        .iter()
        .map(|m| PredictionRecord::new(document, m, scores.get(&m.key()).copied()))
        .collect()
}

pub fn predict_corpus<B: EncoderBackend>(
    mention: Option<&MentionModel<B>>,
    is: &ISModel<B>,
    corpus: &Corpus,
    options: &PredictOptions,
) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        out.extend(predict_document(mention, is, doc, options)?);
    }
    Ok(out)
}

/// Scores predictions against every gold mention of `gold`, with length
/// buckets filled in.
pub fn evaluate(gold: &Corpus, predictions: &[Mention], mode: Mode) -> Result<MetricReport> {
    let g = gold.gold_mentions();
    let mut report = match mode {
        Mode::GoldMentions => eval_is_gold(&g, predictions)?,
        Mode::E2e => eval_is_e2e(&g, predictions)?,
    };
    report.length_buckets = length_bucket_report(&g, predictions)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_id: usize,
    pub train_documents: Vec<String>,
    pub test_documents: Vec<String>,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub mode: Mode,
    pub folds: usize,
    pub fold_seed: u64,
    /// Scores over the pooled test predictions of every fold.
    pub pooled: MetricReport,
    pub per_fold: Vec<FoldReport>,
}

#[derive(Debug, Clone)]
pub struct CrossvalOutcome {
    pub report: CrossvalReport,
    /// Pooled predictions in corpus order.
    pub predictions: Vec<PredictionRecord>,
}

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    crate::error::write(path, bytes)
}

fn run_fold(
    corpus: &Corpus,
    config: &RunConfig,
    fold_id: usize,
    train_ids: &BTreeSet<String>,
    test_ids: &BTreeSet<String>,
    dir: &Path,
) -> Result<(FoldReport, Vec<PredictionRecord>)> {
    let train = corpus.subset(train_ids);
    let test = corpus.subset(test_ids);
    let options = PredictOptions::from(&config.eval);
    let provenance = Provenance {
        config,
        corpus: &train,
        fold_seed: Some(config.eval.fold_seed),
    };
    let mention = match options.mode {
        Mode::E2e => Some(train_mention_run(&provenance, &dir.join("mention"))?.0),
        Mode::GoldMentions => None,
    };
    let (is, _) = train_is_run(&provenance, &dir.join("is"))?;
    log::info!("fold {fold_id}: predicting {} documents", test.len());
    let records = predict_corpus(mention.as_ref(), &is, &test, &options)?;
    save_predictions(&records, &dir.join(PREDICTIONS_FILE))?;
    let metrics = evaluate(&test, &to_mentions(&records, &test)?, options.mode)?;
    let report = FoldReport {
        fold_id,
        train_documents: train.documents.iter().map(|d| d.doc_id.clone()).collect(),
        test_documents: test.documents.iter().map(|d| d.doc_id.clone()).collect(),
        metrics,
    };
    write_json(&dir.join(REPORT_JSON), &report)?;
    Ok((report, records))
}

/// Trains and predicts on every fold, then scores the pooled predictions
/// once. Writes `fold-<i>/` run directories plus pooled predictions and
/// reports under `out`.
pub fn crossval_run(corpus: &Corpus, config: &RunConfig, out: &Path) -> Result<CrossvalOutcome> {
    let k = config.eval.folds;
    let folds = make_folds(corpus, k, config.eval.fold_seed)?;
    let mut per_fold = Vec::with_capacity(k);
    let mut by_doc: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
    for split in &folds {
        log::info!("fold {}: training on {} documents", split.fold_id, split.train_doc_ids.len());
        let dir = out.join(format!("fold-{}", split.fold_id));
        let (report, records) =
            run_fold(corpus, config, split.fold_id, &split.train_doc_ids, &split.test_doc_ids, &dir)
                .map_err(|e| Error::Fold {
                    fold: split.fold_id,
                    source: Box::new(e),
                })?;
        per_fold.push(report);
        for r in records {
            by_doc.entry(r.doc_id.clone()).or_default().push(r);
        }
    }
    let predictions: Vec<PredictionRecord> = corpus
        .documents
        .iter()
        .flat_map(|d| by_doc.remove(&d.doc_id).unwrap_or_default())
        .collect();
    let pooled = evaluate(corpus, &to_mentions(&predictions, corpus)?, config.eval.mode)?;
    let report = CrossvalReport {
        mode: config.eval.mode,
        folds: k,
        fold_seed: config.eval.fold_seed,
        pooled,
        per_fold,
    };
    save_predictions(&predictions, &out.join(PREDICTIONS_FILE))?;
    write_json(&out.join(REPORT_JSON), &report)?;
    let text = render_metrics(&report.pooled, &RenderOptions::all());
    crate::error::write(&out.join(REPORT_TEXT), text.into_bytes())?;
    Ok(CrossvalOutcome { report, predictions })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgingCorpus {
    Bashi,
    Scicorp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgingReport {
    pub corpus: BridgingCorpus,
    pub prf: Prf,
    pub gold_anaphors: usize,
    /// Gold anaphors dropped as containing inferrables.
    pub filtered: usize,
    /// True when the possessive-pronoun approximation replaced subtype tags.
    pub used_fallback: bool,
    pub predicted: Vec<AnaphorPrediction>,
}

/// Anaphor PRF from end-to-end IS predictions. BASHI counts bridging and
/// comparative predictions; SciCorp counts definite bridging predictions
/// and drops containing inferrables from the gold set.
pub fn bridging_report(
    kind: BridgingCorpus,
    gold: &Corpus,
    predictions: &[Mention],
    determiners: &BTreeSet<String>,
) -> Result<BridgingReport> {
    let gold_all: Vec<Mention> = gold
        .gold_mentions()
        .into_iter()
        .filter(|m| matches!(m.is_category, Some(ISCategory::Bridging | ISCategory::Comparative)))
        .collect();
    let (gold_anaphors, filtered, used_fallback, predicted) = match kind {
        BridgingCorpus::Bashi => (gold_all, 0, false, bashi_anaphors(predictions)?),
        BridgingCorpus::Scicorp => {
            let outcome = filter_containing_inferrable(&gold_all, gold)?;
            if outcome.used_fallback {
                log::warn!(
                    "no subtype tags on gold anaphors; removed {} anaphors starting with a possessive pronoun",
                    outcome.removed.len()
                );
            }
            (
                outcome.kept,
                outcome.removed.len(),
                outcome.used_fallback,
                scicorp_anaphors(predictions, gold, determiners)?,
            )
        }
    };
    Ok(BridgingReport {
        corpus: kind,
        prf: eval_bridging(&gold_anaphors, &predicted)?,
        gold_anaphors: gold_anaphors.len(),
        filtered,
        used_fallback,
        predicted,
    })
}
