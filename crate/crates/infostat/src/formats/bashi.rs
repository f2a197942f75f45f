//! BASHI bridging anaphors over OntoNotes CoNLL-2012 files.
//!
//! Annotations are one or more `.tsv` tables of
//! `doc_id  id  sent  start  end  type  [surface]` rows, where `type` is
//! `bridging` or `comparative`. Only annotated documents are loaded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use infostat_core::{Corpus, Document, ISCategory};
use walkdir::WalkDir;

use super::conll::parse_conll2012;
use super::{align_row, document, parse_anaphor_table};
use crate::error::{Error, Result};

fn category(tag: &str) -> Option<ISCategory> {
    match tag.to_lowercase().as_str() {
        "bridging" | "mediated/bridging" => Some(ISCategory::Bridging),
        "comparative" | "mediated/comparative" => Some(ISCategory::Comparative),
        _ => None,
    }
}

fn conll_files(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::Data(format!("{} is not a directory", root.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Data(format!("{}: {e}", root.display())))?;
        let name = entry.file_name().to_string_lossy();
        if entry.file_type().is_file() && (name.ends_with("_conll") || name.ends_with(".conll")) {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

fn annotation_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let files = super::isnotes::files_with_extension(path, "tsv")?;
    if files.is_empty() {
        return Err(Error::Data(format!("no annotation tables under {}", path.display())));
    }
    Ok(files)
}

pub fn load_bashi(conll_root: &Path, annotations: &Path) -> Result<Corpus> {
    let mut rows = Vec::new();
    for path in annotation_files(annotations)? {
        let text = crate::error::read_to_string(&path)?;
        rows.extend(parse_anaphor_table(&text, &path, None)?.into_iter().map(|r| (path.clone(), r)));
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("no anaphors in {}", annotations.display())));
    }

    let wanted: std::collections::BTreeSet<&str> = rows.iter().map(|(_, r)| r.doc_id.as_str()).collect();
    let mut docs: BTreeMap<String, Document> = BTreeMap::new();
    for path in conll_files(conll_root)? {
        let text = crate::error::read_to_string(&path)?;
        for d in parse_conll2012(&text, &path)? {
            if wanted.contains(d.doc_id.as_str()) {
                docs.insert(d.doc_id.clone(), document(&d.doc_id, &d.sentences, "bashi"));
            }
        }
    }
    let missing: Vec<&str> = wanted.iter().copied().filter(|id| !docs.contains_key(*id)).collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("no CoNLL document for: {}", missing.join(", "))));
    }

    for (path, row) in &rows {
        let cat = category(&row.tag).ok_or_else(|| Error::Parse {
            path: path.clone(),
            line: row.line,
            field: "type".into(),
            message: format!("unknown anaphor type {:?}", row.tag),
        })?;
        let doc = docs.get_mut(&row.doc_id).expect("checked above");
        let mut m = align_row(doc, row, path)?;
        m.is_category = Some(cat);
        m.subtype = Some(row.tag.to_lowercase());
        doc.gold_mentions.push(m);
    }
    let corpus = Corpus::new(docs.into_values().collect());
    corpus.validate()?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_annotated_documents_only() {
        let dir = tempfile::tempdir().unwrap();
        let conll = dir.path().join("conll");
        std::fs::create_dir(&conll).unwrap();
        std::fs::write(
            conll.join("a.gold_conll"),
            "#begin document (nw/wsj/00/wsj_0002); part 000\nx 0 0 The DT\nx 0 1 door NN\nx 0 2 opened VBD\n#end document\n\
#begin document (nw/wsj/00/wsj_0003); part 000\nx 0 0 Unused NN\n#end document\n",
        )
        .unwrap();
        let tsv = dir.path().join("bashi.tsv");
        std::fs::write(&tsv, "wsj_0002\tb1\t0\t0\t1\tbridging\tThe door\n").unwrap();
        let c = load_bashi(&conll, &tsv).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.documents[0].gold_mentions[0].is_category, Some(ISCategory::Bridging));

        std::fs::write(&tsv, "wsj_0009\tb1\t0\t0\t1\tbridging\n").unwrap();
        assert!(load_bashi(&conll, &tsv).unwrap_err().to_string().contains("wsj_0009"));
        std::fs::write(&tsv, "wsj_0002\tb1\t0\t0\t1\tcoreference\n").unwrap();
        assert!(load_bashi(&conll, &tsv).is_err());
        assert!(load_bashi(&conll, &dir.path().join("missing")).is_err());
    }
}
