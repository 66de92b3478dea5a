//! File formats and the domain types every other module shares.
//!
//! Text formats are UTF-8, one record per line. Both LF and CRLF are
//! accepted on read; writers always emit LF. Every reader also has a
//! `from_bytes` form that works on an in-memory buffer and reports problems
//! with a 1-based line number (text) or byte offset (binary).

mod embeddings;
mod qrels;
mod queries;
mod run;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use embeddings::{read_embeddings, write_embeddings, EmbeddingFormat, EmbeddingSet};
pub use qrels::{parse_qrels, write_qrels, QrelSet};
pub use queries::{parse_queries, write_queries, Query, QuerySet};
pub use run::{parse_run, write_run, RunSet};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits a buffer into numbered, non-blank lines with any trailing CR removed.
pub(crate) fn text_lines(bytes: &[u8]) -> impl Iterator<Item = Result<(usize, &str)>> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .filter_map(|(i, raw)| {
            let line_no = i + 1;
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            match std::str::from_utf8(raw) {
                Ok(s) if s.trim().is_empty() => None,
                Ok(s) => Some(Ok((line_no, s))),
                Err(e) => Some(Err(Error::parse(
                    line_no,
                    format!("invalid UTF-8 at column {}", e.valid_up_to() + 1),
                ))),
            }
        })
}

/// Ids are non-empty tokens without whitespace.
pub(crate) fn check_id(id: &str, line: usize) -> Result<()> {
    if id.is_empty() {
        return Err(Error::parse(line, "empty id"));
    }
    if id.chars().any(char::is_whitespace) {
        return Err(Error::parse(line, format!("id {id:?} contains whitespace")));
    }
    Ok(())
}
