use std::collections::BTreeMap;
use std::path::Path;

use log::warn;

use super::{check_id, read_file, text_lines, write_file};
use crate::error::{Error, Result};

/// Highest grade of the four-point TREC DL scale.
pub const MAX_EXPECTED_GRADE: u32 = 3;

/// Graded relevance judgments keyed by query id, then doc id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
    overwrites: usize,
    out_of_range: usize,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous grade when the pair was already judged.
    pub fn insert(&mut self, qid: &str, docid: &str, grade: u32) -> Option<u32> {
        if grade > MAX_EXPECTED_GRADE {
            self.out_of_range += 1;
        }
        let previous = self
            .judgments
            .entry(qid.to_owned())
            .or_default()
            .insert(docid.to_owned(), grade);
        if previous.is_some() {
            self.overwrites += 1;
        }
        previous
    }

    /// Whitespace-separated `qid iter docid grade`; the second field is ignored.
    /// A later judgment for the same pair replaces the earlier one.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut set = QrelSet::new();
        for line in text_lines(bytes) {
            let (line_no, line) = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 fields `qid iter docid grade`, found {}", fields.len()),
                ));
            }
            let (qid, docid) = (fields[0], fields[2]);
            check_id(qid, line_no)?;
            check_id(docid, line_no)?;
            let grade: u32 = fields[3].parse().map_err(|_| {
                Error::parse(line_no, format!("grade {:?} is not a non-negative integer", fields[3]))
            })?;
            if set.insert(qid, docid, grade).is_some() {
                warn!("line {line_no}: duplicate judgment for ({qid}, {docid}); keeping the later grade");
            }
        }
        if set.out_of_range > 0 {
            warn!(
                "{} judgments have grades above {MAX_EXPECTED_GRADE}",
                set.out_of_range
            );
        }
        Ok(set)
    }

    pub fn grade(&self, qid: &str, docid: &str) -> Option<u32> {
        self.judgments.get(qid)?.get(docid).copied()
    }

    /// All judgments of one query, ordered by doc id.
    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn contains_query(&self, qid: &str) -> bool {
        self.judgments.contains_key(qid)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.judgments.keys().map(String::as_str)
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    /// Number of judged (query, doc) pairs.
    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> + '_ {
        self.judgments.iter().flat_map(|(q, docs)| {
            docs.iter()
                .map(move |(d, &g)| (q.as_str(), d.as_str(), g))
        })
    }

    /// Count of judgments replaced by a later record.
    pub fn overwrites(&self) -> usize {
        self.overwrites
    }

    /// Count of grades above the four-point scale.
    pub fn out_of_range(&self) -> usize {
        self.out_of_range
    }

    /// Canonical form: sorted by (qid, docid), literal `0` in the second column.
    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (q, d, g) in self.iter() {
            out.push_str(&format!("{q} 0 {d} {g}\n"));
        }
        out
    }
}

pub fn parse_qrels(path: impl AsRef<Path>) -> Result<QrelSet> {
    let path = path.as_ref();
    QrelSet::from_bytes(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_qrels(set: &QrelSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), set.to_trec().as_bytes())
}
