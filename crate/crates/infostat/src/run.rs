//! Run directories: trained models with everything needed to rerun them.
//!
//! ```text
//! <run>/config.toml       configuration snapshot
//! <run>/model.json        task, span settings, training settings, head weights
//! <run>/encoder.json      reference encoder weights (or encoder/ for pretrained)
//! <run>/train_log.jsonl   one record per optimizer step
//! <run>/manifest.json     seeds and SHA-256 of every file above
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use infostat_core::encoder::{EncoderBackend, SpanClassifier};
use infostat_core::is_model::{train_is_assigner, ISModel};
use infostat_core::mention_model::{train_mention_extractor, MentionModel};
use infostat_core::nn::{Linear, TrainConfig, TrainLog};
use infostat_core::spangen::SpanGenConfig;
use infostat_core::{Corpus, ISCategory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{Backend, BackendConfig};
use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const MODEL_FILE: &str = "model.json";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mention,
    Is,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Mention => "mention",
            Task::Is => "is",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub task: Task,
    pub backend: BackendConfig,
    pub spans: SpanGenConfig,
    pub train: TrainConfig,
    pub head: Linear,
    /// Category of each head output; empty for the mention extractor.
    #[serde(default)]
    pub classes: Vec<ISCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub train: u64,
    pub backend: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub task: Task,
    pub backend: String,
    pub seeds: Seeds,
    /// SHA-256 of the canonical serialization of the training documents.
    pub corpus_sha256: String,
    pub train_documents: Vec<String>,
    pub steps: usize,
    /// File path (relative to the run directory) to SHA-256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn corpus_sha256(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    crate::canonical::write_canonical(corpus, &mut buf).expect("writing to memory");
    sha256_hex(&buf)
}

fn backend_seed(config: &BackendConfig) -> u64 {
    match config {
        BackendConfig::Reference(c) => c.seed,
        BackendConfig::Pretrained(c) => c.seed,
    }
}

fn json_lines<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

/// Where a model came from, recorded in its manifest.
pub struct Provenance<'a> {
    pub config: &'a RunConfig,
    pub corpus: &'a Corpus,
    pub fold_seed: Option<u64>,
}

fn write_run(
    dir: &Path,
    model: &ModelFile,
    classifier: &SpanClassifier<Backend>,
    log: &TrainLog,
    provenance: &Provenance<'_>,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        crate::error::write(&dir.join(name), bytes)?;
        written.push(PathBuf::from(name));
        Ok(())
    };
    put(CONFIG_FILE, provenance.config.to_toml().into_bytes())?;
    put(MODEL_FILE, serde_json::to_vec_pretty(model).expect("model serializes"))?;
    put(LOG_FILE, json_lines(&log.steps))?;
    written.extend(classifier.backend.save(dir)?);

    let mut files = BTreeMap::new();
    for rel in written {
        let path = dir.join(&rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.insert(rel.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: model.task,
        backend: classifier.backend.name().to_string(),
        seeds: Seeds {
            train: model.train.seed,
            backend: backend_seed(&model.backend),
            folds: provenance.fold_seed,
        },
        corpus_sha256: corpus_sha256(provenance.corpus),
        train_documents: provenance.corpus.documents.iter().map(|d| d.doc_id.clone()).collect(),
        steps: log.steps.len(),
        files,
    };
    crate::error::write(
        &dir.join(MANIFEST_FILE),
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

pub fn train_mention_run(
    provenance: &Provenance<'_>,
    dir: &Path,
) -> Result<(MentionModel<Backend>, Manifest)> {
    let config = provenance.config;
    let spans = config.span_config()?;
    spans.check_vocabulary(provenance.corpus)?;
    let train = config.mention_train();
    let backend = Backend::create(&config.backend, &spans)?;
    let (model, log) = train_mention_extractor(&provenance.corpus.documents, &train, &spans, backend)?;
    let file = ModelFile {
        task: Task::Mention,
        backend: config.backend.clone(),
        spans,
        train,
        head: model.classifier.head.clone(),
        classes: Vec::new(),
    };
    let manifest = write_run(dir, &file, &model.classifier, &log, provenance)?;
    Ok((model, manifest))
}

pub fn train_is_run(provenance: &Provenance<'_>, dir: &Path) -> Result<(ISModel<Backend>, Manifest)> {
    let config = provenance.config;
    let spans = config.span_config()?;
    spans.check_vocabulary(provenance.corpus)?;
    let train = config.is_train();
    let backend = Backend::create(&config.backend, &spans)?;
    let (model, log) = train_is_assigner(&provenance.corpus.documents, &train, &spans, backend)?;
    let file = ModelFile {
        task: Task::Is,
        backend: config.backend.clone(),
        spans,
        train,
        head: model.classifier.head.clone(),
        classes: model.classes.to_vec(),
    };
    let manifest = write_run(dir, &file, &model.classifier, &log, provenance)?;
    Ok((model, manifest))
}

fn read_model_file(dir: &Path, task: Task) -> Result<ModelFile> {
    let path = dir.join(MODEL_FILE);
    let text = crate::error::read_to_string(&path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        field: "model".into(),
        message: e.to_string(),
    })?;
    if file.task != task {
        return Err(Error::Data(format!(
            "{} holds a {} model, expected {task}",
            dir.display(),
            file.task
        )));
    }
    Ok(file)
}

/// Checks every file listed in the manifest against its recorded hash.
pub fn verify_run(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&crate::error::read_to_string(&path)?)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for (rel, expected) in &manifest.files {
        let file = dir.join(rel);
        let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
        if &sha256_hex(&bytes) != expected {
            return Err(Error::Data(format!("{}: hash does not match manifest", file.display())));
        }
    }
    Ok(manifest)
}

fn classifier(file: &ModelFile, dir: &Path) -> Result<SpanClassifier<Backend>> {
    let backend = Backend::load(&file.backend, &file.spans, dir)?;
    if file.head.in_dim != 2 * backend.hidden_dim() {
        return Err(Error::Data(format!(
            "{}: head expects {} inputs, encoder gives {}",
            dir.display(),
            file.head.in_dim,
            2 * backend.hidden_dim()
        )));
    }
    Ok(SpanClassifier {
        backend,
        head: file.head.clone(),
    })
}

pub fn load_mention_model(dir: &Path) -> Result<MentionModel<Backend>> {
    verify_run(dir)?;
    let file = read_model_file(dir, Task::Mention)?;
    Ok(MentionModel {
        classifier: classifier(&file, dir)?,
        spans: file.spans,
        train_config: file.train,
    })
}

pub fn load_is_model(dir: &Path) -> Result<ISModel<Backend>> {
    verify_run(dir)?;
    let file = read_model_file(dir, Task::Is)?;
    let classes: [ISCategory; ISCategory::COUNT] = file
        .classes
        .clone()
        .try_into()
        .map_err(|_| Error::Data(format!("{}: expected 8 classes", dir.display())))?;
    Ok(ISModel {
        classifier: classifier(&file, dir)?,
        spans: file.spans,
        train_config: file.train,
        classes,
    })
}
