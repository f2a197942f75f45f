//! SciCorp bridging anaphors.
//!
//! The release directory holds, per document, a token file `<doc_id>.conll`
//! (one token per line, blank lines between sentences) and an anaphor table
//! `<doc_id>.anaphors.tsv` with rows `id  sent  start  end  subtype
//! [surface]`. An optional `genres.tsv` maps document ids to genres.
//! Sentence segmentation is taken as given.

use std::collections::BTreeMap;
use std::path::Path;

use infostat_core::{Corpus, ISCategory};

use super::conll::parse_token_lines;
use super::isnotes::files_with_extension;
use super::{align_row, document, parse_anaphor_table};
use crate::error::{Error, Result};

fn genres(root: &Path) -> Result<BTreeMap<String, String>> {
    let path = root.join("genres.tsv");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = crate::error::read_to_string(&path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (doc, genre) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.clone(),
            line: i + 1,
            field: "genre".into(),
            message: "expected doc_id<TAB>genre".into(),
        })?;
        out.insert(doc.trim().to_string(), genre.trim().to_string());
    }
    Ok(out)
}

pub fn load_scicorp(root: &Path) -> Result<Corpus> {
    let token_files = files_with_extension(root, "conll")?;
    if token_files.is_empty() {
        return Err(Error::Data(format!("no SciCorp token files under {}", root.display())));
    }
    let genres = genres(root)?;
    let mut documents = Vec::new();
    for path in token_files {
        let doc_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Data(format!("{}: bad file name", path.display())))?
            .to_string();
        let sentences = parse_token_lines(&crate::error::read_to_string(&path)?);
        let mut doc = document(&doc_id, &sentences, "scicorp");
        if let Some(g) = genres.get(&doc_id) {
            doc.metadata.insert("genre".into(), g.clone());
        }
        let table = path.with_file_name(format!("{doc_id}.anaphors.tsv"));
        if !table.exists() {
            return Err(Error::Data(format!("{}: missing anaphor table", table.display())));
        }
        let text = crate::error::read_to_string(&table)?;
        for row in parse_anaphor_table(&text, &table, Some(&doc_id))? {
            let mut m = align_row(&doc, &row, &table)?;
            m.is_category = Some(ISCategory::Bridging);
            m.subtype = (!row.tag.is_empty()).then(|| row.tag.clone());
            doc.gold_mentions.push(m);
        }
        doc.validate()?;
        documents.push(doc);
    }
    Ok(Corpus::new(documents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use infostat_core::bridging::CONTAINING_INFERRABLE;

    #[test]
    fn loads_tokens_subtypes_and_genres() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::write(root.join("p1.conll"), "1\tThe\n2\ttarget\n3\tmRNA\n\n1\tTheir\n2\taim\n").unwrap();
        std::fs::write(
            root.join("p1.anaphors.tsv"),
            format!("a1\t0\t0\t2\tdefinite\tThe target mRNA\na2\t1\t0\t1\t{CONTAINING_INFERRABLE}\n"),
        )
        .unwrap();
        std::fs::write(root.join("genres.tsv"), "p1\tgenetics\n").unwrap();
        let c = load_scicorp(root).unwrap();
        let d = &c.documents[0];
        assert_eq!(d.metadata["genre"], "genetics");
        assert_eq!(d.gold_mentions.len(), 2);
        assert_eq!(d.gold_mentions[1].subtype.as_deref(), Some(CONTAINING_INFERRABLE));
    }

    #[test]
    fn empty_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_scicorp(dir.path()).is_err());
        std::fs::write(dir.path().join("p.conll"), "x\n").unwrap();
        assert!(load_scicorp(dir.path()).is_err());
    }
}
