//! Concrete encoder backends: the built-in reference encoder and a
//! pretrained transformer driven through a Python worker process.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use infostat_core::encoder::{BoundaryStates, EncoderBackend, ReferenceEncoder, ReferenceEncoderConfig};
use infostat_core::spangen::{LengthModel, MarkedSequence, SpanGenConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Environment variable naming the default model cache directory.
pub const MODEL_CACHE_ENV: &str = "INFOSTAT_MODEL_CACHE";

const WORKER_SOURCE: &str = include_str!("../python/encoder_worker.py");

fn default_python() -> String {
    "python3".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainedConfig {
    /// Model identifier or local directory, e.g. `roberta-large`.
    pub model: String,
    #[serde(default = "default_python")]
    pub python: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Reference(ReferenceEncoderConfig),
    Pretrained(PretrainedConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Reference(ReferenceEncoderConfig::default())
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Worker {
    fn request(&mut self, request: &Value) -> Result<Value> {
        let mut line = serde_json::to_string(request).expect("requests serialize");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Backend(format!("worker stdin: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| Error::Backend(format!("worker stdout: {e}")))?;
        if n == 0 {
            return Err(Error::Backend("worker exited".into()));
        }
        let value: Value = serde_json::from_str(&reply)
            .map_err(|e| Error::Backend(format!("bad worker reply {reply:?}: {e}")))?;
        if value["ok"] != Value::Bool(true) {
            return Err(Error::Backend(
                value["error"].as_str().unwrap_or("unknown worker error").to_string(),
            ));
        }
        Ok(value)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A pretrained transformer encoder fine-tuned through gradients with
/// respect to the marker states.
pub struct PretrainedEncoder {
    config: PretrainedConfig,
    model_type: String,
    hidden_dim: usize,
    max_len: usize,
    overhead: usize,
    worker: Mutex<Worker>,
    pieces: Mutex<HashMap<String, usize>>,
}

impl fmt::Debug for PretrainedEncoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PretrainedEncoder")
            .field("model", &self.config.model)
            .field("hidden_dim", &self.hidden_dim)
            .field("max_len", &self.max_len)
            .finish()
    }
}

fn as_vectors(value: &Value) -> Result<Vec<Vec<f32>>> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Backend(format!("bad states: {e}")))
}

fn batch_json(batch: &[MarkedSequence]) -> Value {
    Value::Array(
        batch
            .iter()
            .map(|m| json!({"words": m.words, "open": m.marker_open_pos, "close": m.marker_close_pos}))
            .collect(),
    )
}

impl PretrainedEncoder {
    /// Starts a worker for `model` (which overrides `config.model`, e.g. to
    /// load fine-tuned weights) and registers the marker tokens.
    pub fn spawn(config: &PretrainedConfig, model: &str, special_tokens: &[String]) -> Result<Self> {
        let mut child = Command::new(&config.python)
            .arg("-u")
            .arg("-c")
            .arg(WORKER_SOURCE)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Backend(format!("cannot start {}: {e}", config.python)))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = BufReader::new(child.stdout.take().expect("piped"));
        let mut worker = Worker { child, stdin, stdout };
        let cache = config
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os(MODEL_CACHE_ENV).map(PathBuf::from));
        let hello = worker.request(&json!({
            "cmd": "hello",
            "model": model,
            "cache_dir": cache,
            "special_tokens": special_tokens,
            "seed": config.seed,
            "threads": config.threads,
        }))?;
        let field = |name: &str| {
            hello[name]
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| Error::Backend(format!("hello reply lacks {name}")))
        };
        Ok(PretrainedEncoder {
            hidden_dim: field("hidden_dim")?,
            max_len: field("max_len")?,
            overhead: field("overhead")?,
            model_type: hello["name"].as_str().unwrap_or("pretrained").to_string(),
            config: config.clone(),
            worker: Mutex::new(worker),
            pieces: Mutex::new(HashMap::new()),
        })
    }

    fn request(&self, request: &Value) -> Result<Value> {
        self.worker
            .lock()
            .map_err(|_| Error::Backend("worker lock poisoned".into()))?
            .request(request)
    }

    fn save_to(&self, dir: &Path) -> Result<()> {
        self.request(&json!({"cmd": "save", "dir": dir}))?;
        Ok(())
    }
}

impl LengthModel for PretrainedEncoder {
    fn sequence_overhead(&self) -> usize {
        self.overhead
    }

    fn piece_counts(&self, words: &[String]) -> infostat_core::Result<Vec<usize>> {
        let backend_err = |e: Error| infostat_core::Error::Backend(e.to_string());
        let mut cache = self
            .pieces
            .lock()
            .map_err(|_| infostat_core::Error::Backend("piece cache poisoned".into()))?;
        let mut missing: Vec<&String> = words.iter().filter(|w| !cache.contains_key(*w)).collect();
        missing.sort();
        missing.dedup();
        if !missing.is_empty() {
            let reply = self
                .request(&json!({"cmd": "piece_counts", "words": missing}))
                .map_err(backend_err)?;
            let counts: Vec<usize> = serde_json::from_value(reply["counts"].clone())
                .map_err(|e| infostat_core::Error::Backend(e.to_string()))?;
            for (w, c) in missing.into_iter().zip(counts) {
                cache.insert(w.clone(), c);
            }
        }
        Ok(words.iter().map(|w| cache[w]).collect())
    }
}

impl EncoderBackend for PretrainedEncoder {
    fn name(&self) -> &str {
        &self.model_type
    }

    fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn supports_training(&self) -> bool {
        true
    }

    fn forward(&self, batch: &[MarkedSequence]) -> infostat_core::Result<Vec<BoundaryStates>> {
        let reply = self
            .request(&json!({"cmd": "encode", "batch": batch_json(batch)}))
            .and_then(|r| Ok((as_vectors(&r["open"])?, as_vectors(&r["close"])?)))
            .map_err(|e| infostat_core::Error::Backend(e.to_string()))?;
        Ok(reply
            .0
            .into_iter()
            .zip(reply.1)
            .map(|(open, close)| BoundaryStates { open, close })
            .collect())
    }

    fn train_step(
        &mut self,
        batch: &[MarkedSequence],
        grads: &[BoundaryStates],
        lr: f32,
    ) -> infostat_core::Result<()> {
        let grad_open: Vec<&Vec<f32>> = grads.iter().map(|g| &g.open).collect();
        let grad_close: Vec<&Vec<f32>> = grads.iter().map(|g| &g.close).collect();
        self.request(&json!({
            "cmd": "train_step",
            "batch": batch_json(batch),
            "grad_open": grad_open,
            "grad_close": grad_close,
            "lr": lr,
        }))
        .map_err(|e| infostat_core::Error::Backend(e.to_string()))?;
        Ok(())
    }
}

/// Either backend behind one type.
#[derive(Debug)]
pub enum Backend {
    Reference(ReferenceEncoder),
    Pretrained(PretrainedEncoder),
}

/// Marker and separator words that must be atomic for the encoder.
pub fn special_tokens(spans: &SpanGenConfig) -> Vec<String> {
    vec![
        spans.marker_open.clone(),
        spans.marker_close.clone(),
        spans.separator.clone(),
    ]
}

const REFERENCE_WEIGHTS: &str = "encoder.json";
const PRETRAINED_DIR: &str = "encoder";

impl Backend {
    /// A freshly initialized backend.
    pub fn create(config: &BackendConfig, spans: &SpanGenConfig) -> Result<Backend> {
        match config {
            BackendConfig::Reference(c) => {
                c.validate()?;
                Ok(Backend::Reference(ReferenceEncoder::new(c.clone())))
            }
            BackendConfig::Pretrained(c) => Ok(Backend::Pretrained(PretrainedEncoder::spawn(
                c,
                &c.model,
                &special_tokens(spans),
            )?)),
        }
    }

    /// Writes the encoder weights under `dir` and returns the files written,
    /// relative to `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        match self {
            Backend::Reference(enc) => {
                let path = dir.join(REFERENCE_WEIGHTS);
                let json = serde_json::to_vec(enc).expect("weights serialize");
                crate::error::write(&path, json)?;
                Ok(vec![PathBuf::from(REFERENCE_WEIGHTS)])
            }
            Backend::Pretrained(enc) => {
                let target = dir.join(PRETRAINED_DIR);
                std::fs::create_dir_all(&target).map_err(|e| Error::io(&target, e))?;
                enc.save_to(&target)?;
                let mut files = Vec::new();
                for entry in walkdir::WalkDir::new(&target).sort_by_file_name() {
                    let entry = entry.map_err(|e| Error::Data(e.to_string()))?;
                    if entry.file_type().is_file() {
                        files.push(entry.path().strip_prefix(dir).expect("under dir").to_path_buf());
                    }
                }
                Ok(files)
            }
        }
    }

    /// Restores a backend saved by [`Backend::save`].
    pub fn load(config: &BackendConfig, spans: &SpanGenConfig, dir: &Path) -> Result<Backend> {
        match config {
            BackendConfig::Reference(_) => {
                let path = dir.join(REFERENCE_WEIGHTS);
                let text = crate::error::read_to_string(&path)?;
                let enc: ReferenceEncoder = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path,
                    line: e.line(),
                    field: "encoder".into(),
                    message: e.to_string(),
                })?;
                enc.config.validate()?;
                Ok(Backend::Reference(enc))
            }
            BackendConfig::Pretrained(c) => {
                let target = dir.join(PRETRAINED_DIR);
                let model = target.to_str().ok_or_else(|| Error::Data("non UTF-8 path".into()))?;
                Ok(Backend::Pretrained(PretrainedEncoder::spawn(c, model, &special_tokens(spans))?))
            }
        }
    }
}

impl LengthModel for Backend {
    fn sequence_overhead(&self) -> usize {
        match self {
            Backend::Reference(b) => b.sequence_overhead(),
            Backend::Pretrained(b) => b.sequence_overhead(),
        }
    }

    fn piece_counts(&self, words: &[String]) -> infostat_core::Result<Vec<usize>> {
        match self {
            Backend::Reference(b) => b.piece_counts(words),
            Backend::Pretrained(b) => b.piece_counts(words),
        }
    }
}

impl EncoderBackend for Backend {
    fn name(&self) -> &str {
        match self {
            Backend::Reference(b) => b.name(),
            Backend::Pretrained(b) => b.name(),
        }
    }

    fn hidden_dim(&self) -> usize {
        match self {
            Backend::Reference(b) => b.hidden_dim(),
            Backend::Pretrained(b) => b.hidden_dim(),
        }
    }

    fn max_len(&self) -> usize {
        match self {
            Backend::Reference(b) => b.max_len(),
            Backend::Pretrained(b) => b.max_len(),
        }
    }

    fn supports_training(&self) -> bool {
        match self {
            Backend::Reference(b) => b.supports_training(),
            Backend::Pretrained(b) => b.supports_training(),
        }
    }

    fn forward(&self, batch: &[MarkedSequence]) -> infostat_core::Result<Vec<BoundaryStates>> {
        match self {
            Backend::Reference(b) => b.forward(batch),
            Backend::Pretrained(b) => b.forward(batch),
        }
    }

    fn train_step(
        &mut self,
        batch: &[MarkedSequence],
        grads: &[BoundaryStates],
        lr: f32,
    ) -> infostat_core::Result<()> {
        match self {
            Backend::Reference(b) => b.train_step(batch, grads, lr),
            Backend::Pretrained(b) => b.train_step(batch, grads, lr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_config_toml_forms() {
        let r: BackendConfig = toml::from_str("kind = \"reference\"\nhidden_dim = 8\n").unwrap();
        assert!(matches!(r, BackendConfig::Reference(ref c) if c.hidden_dim == 8 && c.embed_dim == 32));
        let p: BackendConfig = toml::from_str("kind = \"pretrained\"\nmodel = \"roberta-large\"\n").unwrap();
        assert!(matches!(p, BackendConfig::Pretrained(ref c) if c.python == "python3"));
        assert!(toml::from_str::<BackendConfig>("kind = \"reference\"\nhiden_dim = 8\n").is_err());
    }

    #[test]
    fn reference_weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spans = SpanGenConfig::default();
        let cfg = BackendConfig::default();
        let b = Backend::create(&cfg, &spans).unwrap();
        assert_eq!(b.save(dir.path()).unwrap(), vec![PathBuf::from("encoder.json")]);
        let (Backend::Reference(a), Backend::Reference(c)) = (b, Backend::load(&cfg, &spans, dir.path()).unwrap()) else {
            panic!("wrong kind");
        };
        assert_eq!(a, c);
    }

    #[test]
    fn missing_python_is_a_backend_error() {
        let cfg = PretrainedConfig {
            model: "x".into(),
            python: "/nonexistent/python".into(),
            seed: 0,
            cache_dir: None,
            threads: None,
        };
        let err = PretrainedEncoder::spawn(&cfg, "x", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
