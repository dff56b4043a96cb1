use std::collections::BTreeMap;

use super::{CorpusError, Result};

/// One `.I` record of a SMART file.
///
/// `fields` maps the literal section marker (`.T`, `.W`, `.X`, ...) to its
/// text. Lines of a section are joined with `\n`; surrounding blank lines are
/// trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: u32,
    pub fields: BTreeMap<String, String>,
}

impl RawDocument {
    /// Concatenates the requested sections in the given order, separated by newlines.
    pub fn text_of(&self, sections: &[String]) -> String {
        sections.iter().filter_map(|s| self.fields.get(s)).map(String::as_str).collect::<Vec<_>>().join("\n")
    }
}

fn marker_of(line: &str) -> Option<&str> {
    let head = line.split_whitespace().next()?;
    let bytes = head.as_bytes();
    (bytes.len() >= 2 && bytes[0] == b'.' && bytes[1..].iter().all(u8::is_ascii_alphabetic)).then_some(head)
}

/// Parses SMART-format text into records, in file order.
pub fn parse_smart_file(text: &str) -> Result<Vec<RawDocument>> {
    let mut docs: Vec<RawDocument> = Vec::new();
    let mut section: Option<(String, Vec<&str>)> = None;

    fn close(doc: Option<&mut RawDocument>, section: &mut Option<(String, Vec<&str>)>) {
        if let (Some(doc), Some((marker, lines))) = (doc, section.take()) {
            let body = lines.join("\n").trim_matches('\n').trim_end().to_owned();
            doc.fields
                .entry(marker)
                .and_modify(|t| {
                    t.push('\n');
                    t.push_str(&body)
                })
                .or_insert(body);
        }
    }

    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        match marker_of(line) {
            Some(".I") => {
                close(docs.last_mut(), &mut section);
                let rest = line[2..].trim();
                let id = rest
                    .parse::<u32>()
                    .map_err(|_| CorpusError::BadRecordId { line: line_no, text: line.to_owned() })?;
                docs.push(RawDocument { id, fields: BTreeMap::new() });
            }
            Some(marker) => {
                if docs.is_empty() {
                    return Err(CorpusError::OrphanText { line: line_no });
                }
                close(docs.last_mut(), &mut section);
                let mut lines = Vec::new();
                let rest = line[marker.len()..].trim();
                if !rest.is_empty() {
                    lines.push(rest);
                }
                section = Some((marker.to_owned(), lines));
            }
            None => match section.as_mut() {
                Some((_, lines)) => lines.push(line),
                None if line.trim().is_empty() => {}
                None => return Err(CorpusError::OrphanText { line: line_no }),
            },
        }
    }
    close(docs.last_mut(), &mut section);
    Ok(docs)
}

/// Writes records back in SMART form; `parse_smart_file` reads it back unchanged.
pub fn serialize_smart(docs: &[RawDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&format!(".I {}\n", doc.id));
        for (marker, body) in &doc.fields {
            out.push_str(marker);
            out.push('\n');
            if !body.is_empty() {
                out.push_str(body);
                out.push('\n');
            }
        }
    }
    out
}
