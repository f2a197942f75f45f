//! Command-line interface.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use infostat_core::corpus::corpus_stats;
use infostat_core::eval::{randomization_test_over, Scorer};
use infostat_core::spangen::parse_lexicon;
use infostat_core::Corpus;
use serde::Serialize;

use crate::canonical::{load_canonical, save_canonical};
use crate::config::{Mode, RunConfig, RUN_CONFIG_SCHEMA};
use crate::error::{Error, Result};
use crate::pipeline::{
    bridging_report, crossval_run, evaluate, predict_corpus, BridgingCorpus, PredictOptions,
    PREDICTIONS_FILE, REPORT_JSON, REPORT_TEXT,
};
use crate::predictions::{load_predictions, save_predictions, to_mentions};
use crate::report::{render_metrics, render_prf, render_stats, RenderOptions};
use crate::run::{load_is_model, load_mention_model, train_is_run, train_mention_run, Provenance, Task};

#[derive(Debug, Parser)]
#[command(name = "infostat", version, about = "Mention extraction, information status and bridging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus release into the canonical JSON-lines format.
    Convert {
        #[command(subcommand)]
        source: ConvertSource,
    },
    /// Print the category distribution of a canonical corpus.
    Stats { corpus: PathBuf },
    /// Write the bundled synthetic corpus.
    Synthetic {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a mention extractor or IS assigner into a run directory.
    Train {
        #[arg(value_enum)]
        task: TaskArg,
        #[arg(long)]
        config: PathBuf,
        /// Run directory; defaults to `<output_dir>/<task>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict mentions and IS categories for a corpus.
    Predict(PredictArgs),
    /// Score a prediction file against a gold corpus.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value = "e2e")]
        mode: ModeArg,
        /// Show per-length scores.
        #[arg(long)]
        buckets: bool,
        /// Show the confusion matrix.
        #[arg(long)]
        confusion: bool,
        /// Directory for report.json and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run k-fold cross-validation as configured.
    Crossval {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `<output_dir>/crossval`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score bridging anaphora recognition on BASHI or SciCorp.
    Bridging {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        mention_model: PathBuf,
        #[arg(long)]
        is_model: PathBuf,
        /// Definite determiners, one per line; defaults to the built-in set.
        #[arg(long)]
        determiners: Option<PathBuf>,
        #[arg(long)]
        heuristic: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired approximate randomization test between two prediction files.
    Significance {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long = "pred-a")]
        pred_a: PathBuf,
        #[arg(long = "pred-b")]
        pred_b: PathBuf,
        /// One of mention-f1, mention-recall, mention-precision, is-f1,
        /// is-recall, is-precision, is-accuracy.
        #[arg(long, default_value = "mention-f1")]
        metric: String,
        #[arg(short = 'n', long = "shuffles", default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the JSON schema of run configuration files.
    ConfigSchema,
}

#[derive(Debug, Subcommand)]
pub enum ConvertSource {
    /// ONF files plus ISNotes markables.
    Isnotes {
        #[arg(long)]
        onf: PathBuf,
        #[arg(long)]
        isnotes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// CoNLL-2012 files plus BASHI anaphor tables.
    Bashi {
        #[arg(long)]
        conll: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// SciCorp token and anaphor files.
    Scicorp {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("setting").required(true))]
pub struct PredictArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Mention model run directory; required with --e2e.
    #[arg(long)]
    pub mention_model: Option<PathBuf>,
    #[arg(long)]
    pub is_model: PathBuf,
    /// Assign categories to the gold mentions.
    #[arg(long, group = "setting")]
    pub gold_mentions: bool,
    /// Extract mentions, then assign categories.
    #[arg(long, group = "setting")]
    pub e2e: bool,
    /// Skip spans the pruning lexicon rules out.
    #[arg(long)]
    pub heuristic: bool,
    /// Longest span (in words) to propose.
    #[arg(long)]
    pub test_max_len: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Mention,
    Is,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    GoldMentions,
    E2e,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::GoldMentions => Mode::GoldMentions,
            ModeArg::E2e => Mode::E2e,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Bashi,
    Scicorp,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    crate::error::write(path, bytes)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let config = RunConfig::load(path)?;
    config.validate()?;
    Ok(config)
}

fn convert(source: &ConvertSource, out: &mut dyn Write) -> Result<()> {
    let (corpus, path, name) = match source {
        ConvertSource::Isnotes { onf, isnotes, out } => {
            (crate::formats::isnotes::load_isnotes(onf, isnotes)?, out, "ISNotes")
        }
        ConvertSource::Bashi {
            conll,
            annotations,
            out,
        } => (crate::formats::bashi::load_bashi(conll, annotations)?, out, "BASHI"),
        ConvertSource::Scicorp { input, out } => {
            (crate::formats::scicorp::load_scicorp(input)?, out, "SciCorp")
        }
    };
    save_canonical(&corpus, path)?;
    emit(out, &render_stats(name, &corpus_stats(&corpus)))
}

fn check_models_against(corpus: &Corpus, spans: &infostat_core::spangen::SpanGenConfig) -> Result<()> {
    spans.check_vocabulary(corpus)?;
    Ok(())
}

fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_canonical(&args.corpus)?;
    let options = PredictOptions {
        mode: if args.e2e { Mode::E2e } else { Mode::GoldMentions },
        heuristic: args.heuristic,
        test_max_len: args.test_max_len,
    };
    if args.test_max_len == Some(0) {
        return Err(Error::config("test_max_len", "must be at least 1"));
    }
    let is = load_is_model(&args.is_model)?;
    check_models_against(&corpus, &is.spans)?;
    let mention = match (options.mode, &args.mention_model) {
        (Mode::E2e, Some(dir)) => {
            let m = load_mention_model(dir)?;
            check_models_against(&corpus, &m.spans)?;
            Some(m)
        }
        (Mode::E2e, None) => {
            return Err(Error::config("mention_model", "--e2e needs --mention-model"));
        }
        (Mode::GoldMentions, _) => None,
    };
    let records = predict_corpus(mention.as_ref(), &is, &corpus, &options)?;
    save_predictions(&records, &args.out)?;
    emit(
        out,
        &format!("{} predictions written to {}\n", records.len(), args.out.display()),
    )
}

fn train(task: TaskArg, config_path: &Path, run_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let config = load_config(config_path)?;
    let corpus = load_canonical(&config.corpus.train)?;
    let provenance = Provenance {
        config: &config,
        corpus: &corpus,
        fold_seed: None,
    };
    let task = match task {
        TaskArg::Mention => Task::Mention,
        TaskArg::Is => Task::Is,
    };
    let dir = run_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join(task.to_string()));
    let manifest = match task {
        Task::Mention => train_mention_run(&provenance, &dir)?.1,
        Task::Is => train_is_run(&provenance, &dir)?.1,
    };
    emit(
        out,
        &format!(
            "trained {task} model for {} steps on {} documents: {}\n",
            manifest.steps,
            manifest.train_documents.len(),
            dir.display()
        ),
    )
}

#[allow(clippy::too_many_arguments)]
fn bridging(
    kind: KindArg,
    corpus_path: &Path,
    mention_model: &Path,
    is_model: &Path,
    determiners: Option<&Path>,
    heuristic: bool,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let corpus = load_canonical(corpus_path)?;
    let mention = load_mention_model(mention_model)?;
    let is = load_is_model(is_model)?;
    check_models_against(&corpus, &mention.spans)?;
    check_models_against(&corpus, &is.spans)?;
    let determiners: BTreeSet<String> = match determiners {
        Some(p) => parse_lexicon(&crate::error::read_to_string(p)?),
        None => infostat_core::bridging::default_determiners(),
    };
    let options = PredictOptions {
        mode: Mode::E2e,
        heuristic,
        test_max_len: None,
    };
    let records = predict_corpus(Some(&mention), &is, &corpus, &options)?;
    save_predictions(&records, &dir.join(PREDICTIONS_FILE))?;
    let kind = match kind {
        KindArg::Bashi => BridgingCorpus::Bashi,
        KindArg::Scicorp => BridgingCorpus::Scicorp,
    };
    let report = bridging_report(kind, &corpus, &to_mentions(&records, &corpus)?, &determiners)?;
    write_json(&dir.join(REPORT_JSON), &report)?;
    let mut text = render_prf("bridging anaphors", &report.prf);
    if report.used_fallback {
        text.push_str(&format!(
            "note: {} gold anaphors removed by the possessive-pronoun approximation\n",
            report.filtered
        ));
    }
    crate::error::write(&dir.join(REPORT_TEXT), &text)?;
    emit(out, &text)
}

fn significance(
    gold: &Path,
    a: &Path,
    b: &Path,
    metric: &str,
    n: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let scorer: Scorer = metric.parse().map_err(|_| {
        Error::config(
            "metric",
            format!(
                "unknown metric {metric:?}; expected one of {}",
                Scorer::names().collect::<Vec<_>>().join(", ")
            ),
        )
    })?;
    let corpus = load_canonical(gold)?;
    let pred_a = to_mentions(&load_predictions(a)?, &corpus)?;
    let pred_b = to_mentions(&load_predictions(b)?, &corpus)?;
    let docs: BTreeSet<String> = corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    let p = randomization_test_over(&docs, &corpus.gold_mentions(), &pred_a, &pred_b, scorer, n, seed)?;
    emit(out, &format!("metric {scorer}  shuffles {n}  seed {seed}  p = {p:.6}\n"))
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Convert { source } => convert(&source, out),
        Command::Stats { corpus } => {
            let c = load_canonical(&corpus)?;
            emit(out, &render_stats(&corpus.display().to_string(), &corpus_stats(&c)))
        }
        Command::Synthetic { out: path } => {
            save_canonical(&crate::synthetic::synthetic_corpus(), &path)?;
            emit(out, &format!("wrote {}\n", path.display()))
        }
        Command::Train { task, config, out: dir } => train(task, &config, dir.as_deref(), out),
        Command::Predict(args) => predict(&args, out),
        Command::Evaluate {
            gold,
            predictions,
            mode,
            buckets,
            confusion,
            out: dir,
        } => {
            let corpus = load_canonical(&gold)?;
            let preds = to_mentions(&load_predictions(&predictions)?, &corpus)?;
            let report = evaluate(&corpus, &preds, mode.into())?;
            let text = render_metrics(&report, &RenderOptions { buckets, confusion });
            if let Some(dir) = dir {
                write_json(&dir.join(REPORT_JSON), &report)?;
                crate::error::write(&dir.join(REPORT_TEXT), &text)?;
            }
            emit(out, &text)
        }
        Command::Crossval { config, out: dir } => {
            let config = load_config(&config)?;
            let corpus = load_canonical(&config.corpus.train)?;
            let dir = dir.unwrap_or_else(|| config.output_dir.join("crossval"));
            let outcome = crossval_run(&corpus, &config, &dir)?;
            emit(out, &render_metrics(&outcome.report.pooled, &RenderOptions::default()))
        }
        Command::Bridging {
            kind,
            corpus,
            mention_model,
            is_model,
            determiners,
            heuristic,
            out: dir,
        } => bridging(
            kind,
            &corpus,
            &mention_model,
            &is_model,
            determiners.as_deref(),
            heuristic,
            &dir,
            out,
        ),
        Command::Significance {
            gold,
            pred_a,
            pred_b,
            metric,
            n,
            seed,
        } => significance(&gold, &pred_a, &pred_b, &metric, n, seed, out),
        Command::ConfigSchema => emit(out, RUN_CONFIG_SCHEMA),
    }
}

/// Parses `args` and runs the command. Returns the process exit status:
/// 0 success, 1 usage or configuration, 2 data, 3 internal.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            std::iter::once("infostat").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_and_data_errors_have_distinct_codes() {
        assert_eq!(run(&["frobnicate"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
        let (code, _, err) = run(&["stats", "/nonexistent/corpus.jsonl"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/corpus.jsonl"));
        // Both settings at once is a usage error.
        let (code, _, _) = run(&[
            "predict", "--corpus", "c", "--is-model", "m", "--out", "o", "--e2e", "--gold-mentions",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn schema_and_unknown_metric() {
        let (code, out, _) = run(&["config-schema"]);
        assert_eq!(code, 0);
        assert!(serde_json::from_str::<serde_json::Value>(&out).is_ok());
        let (code, _, err) = run(&[
            "significance", "--gold", "g", "--pred-a", "a", "--pred-b", "b", "--metric", "bleu",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("mention-f1"));
    }
}
