//! Adapters from external corpus releases to the canonical model.

pub mod bashi;
pub mod conll;
pub mod isnotes;
pub mod onf;
pub mod scicorp;

use std::path::Path;

use infostat_core::{Document, Mention, Sentence};

use crate::error::{Error, Result};

pub use bashi::load_bashi;
pub use isnotes::load_isnotes;
pub use scicorp::load_scicorp;

/// One row of a token-standoff anaphor table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnaphorRow {
    pub line: usize,
    pub doc_id: String,
    pub id: String,
    pub sent: usize,
    pub start: usize,
    pub end: usize,
    pub tag: String,
    pub surface: Option<String>,
}

/// Parses `doc_id  id  sent  start  end  tag  [surface]` rows (tab
/// separated, 0-based sentence-relative inclusive token indices). With
/// `doc_id` given, the first column is omitted.
pub fn parse_anaphor_table(text: &str, path: &Path, doc_id: Option<&str>) -> Result<Vec<AnaphorRow>> {
    let fields: &[&str] = if doc_id.is_some() {
        &["id", "sent", "start", "end", "tag", "surface"]
    } else {
        &["doc_id", "id", "sent", "start", "end", "tag", "surface"]
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |field: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: field.into(),
            message,
        };
        if cols.len() < fields.len() - 1 || cols.len() > fields.len() {
            return Err(err(
                "<row>",
                format!("expected {} or {} columns, found {}", fields.len() - 1, fields.len(), cols.len()),
            ));
        }
        let col = |name: &str| cols[fields.iter().position(|f| *f == name).unwrap()].trim();
        let number = |name: &str| {
            col(name)
                .parse::<usize>()
                .map_err(|e| err(name, format!("{:?}: {e}", col(name))))
        };
        rows.push(AnaphorRow {
            line: i + 1,
            doc_id: doc_id.map_or_else(|| col("doc_id").to_string(), str::to_string),
            id: col("id").to_string(),
            sent: number("sent")?,
            start: number("start")?,
            end: number("end")?,
            tag: col("tag").to_string(),
            surface: (cols.len() == fields.len()).then(|| col("surface").to_string()),
        });
    }
    Ok(rows)
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Builds the mention for `row`, checking bounds and, when the row carries a
/// surface string, that it equals the tokens under the span.
pub fn align_row(document: &Document, row: &AnaphorRow, path: &Path) -> Result<Mention> {
    let m = Mention::new(&document.doc_id, row.sent, row.start, row.end);
    let located = format!("{}:{}: anaphor {}", path.display(), row.line, row.id);
    let surface = document
        .surface(&m)
        .map_err(|_| Error::Data(format!("{located}: span {} does not resolve", m.key())))?;
    if let Some(expected) = &row.surface {
        if collapse_whitespace(expected) != surface {
            return Err(Error::Data(format!(
                "{located}: surface {expected:?} does not match tokens {surface:?}"
            )));
        }
    }
    Ok(m)
}

pub(crate) fn document(doc_id: &str, sentences: &[Vec<String>], source: &str) -> Document {
    Document {
        doc_id: doc_id.to_string(),
        sentences: sentences
            .iter()
            .enumerate()
            .map(|(i, w)| Sentence::from_words(doc_id, i, w))
            .collect(),
        gold_mentions: Vec::new(),
        metadata: [("source".to_string(), source.to_string())].into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_and_alignment() {
        let text = "# header\nd\ta1\t0\t0\t1\tbridging\tthe  door\nd\ta2\t0\t2\t2\tcomparative\n";
        let rows = parse_anaphor_table(text, Path::new("t.tsv"), None).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].surface, None);
        let doc = document("d", &[vec!["the".into(), "door".into(), "others".into()]], "test");
        assert_eq!(align_row(&doc, &rows[0], Path::new("t.tsv")).unwrap().end, 1);
        let wrong = AnaphorRow {
            surface: Some("a door".into()),
            ..rows[0].clone()
        };
        assert!(align_row(&doc, &wrong, Path::new("t.tsv")).is_err());
        let outside = AnaphorRow {
            end: 5,
            ..rows[1].clone()
        };
        assert!(align_row(&doc, &outside, Path::new("t.tsv")).is_err());
    }

    #[test]
    fn bad_rows_name_line_and_field() {
        let err = parse_anaphor_table("d\ta\tx\t0\t0\tbridging\n", Path::new("t"), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, ref field, .. } if field == "sent"));
        assert!(parse_anaphor_table("d\ta\n", Path::new("t"), None).is_err());
    }
}
