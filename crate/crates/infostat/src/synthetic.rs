//! The bundled 20-sentence corpus used by smoke tests and examples.

use std::path::Path;

use infostat_core::Corpus;

use crate::canonical::read_canonical;

pub const SYNTHETIC_JSONL: &str = include_str!("../data/synthetic.jsonl");

pub fn synthetic_corpus() -> Corpus {
    read_canonical(SYNTHETIC_JSONL.as_bytes(), Path::new("synthetic.jsonl"))
        .expect("bundled corpus is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use infostat_core::corpus::corpus_stats;

    #[test]
    fn bundled_corpus_shape() {
        let c = synthetic_corpus();
        let stats = corpus_stats(&c);
        assert_eq!(stats.sentences, 20);
        assert_eq!(c.len(), 4);
        assert!(stats.per_category.values().all(|&n| n > 0));
        assert_eq!(stats.unlabeled, 0);
    }
}
