use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::dataio::QrelSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Grade at least `t`.
    Geq,
    /// Grade exactly `t`.
    Eq,
}

/// Binarization of a test query's grades, written `geq:2` or `eq:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    pub mode: ThresholdMode,
    pub t: u32,
}

impl Threshold {
    pub fn geq(t: u32) -> Self {
        Threshold { mode: ThresholdMode::Geq, t }
    }

    pub fn eq(t: u32) -> Self {
        Threshold { mode: ThresholdMode::Eq, t }
    }

    pub fn accepts(self, grade: u32) -> bool {
        match self.mode {
            ThresholdMode::Geq => grade >= self.t,
            ThresholdMode::Eq => grade == self.t,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            ThresholdMode::Geq => write!(f, "geq:{}", self.t),
            ThresholdMode::Eq => write!(f, "eq:{}", self.t),
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("threshold {s:?} is not of the form geq:N or eq:N"));
        let (mode, t) = s.trim().split_once(':').ok_or_else(bad)?;
        let t: u32 = t.parse().map_err(|_| bad())?;
        match mode {
            "geq" => Ok(Threshold::geq(t)),
            "eq" => Ok(Threshold::eq(t)),
            _ => Err(bad()),
        }
    }
}

/// Parses a comma-separated threshold list such as `geq:1,geq:2,eq:3`.
pub fn parse_thresholds(s: &str) -> Result<Vec<Threshold>> {
    let list: Vec<Threshold> = s.split(',').map(str::parse).collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::invalid("no thresholds given"));
    }
    Ok(list)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRow {
    pub threshold: Threshold,
    /// Test queries with a qualifying document that is relevant to some training query.
    pub count: usize,
    /// All test queries in the test qrels.
    pub total: usize,
}

impl OverlapRow {
    pub fn percent(&self) -> f64 {
        100.0 * self.count as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub rows: Vec<OverlapRow>,
}

impl OverlapReport {
    pub fn row(&self, threshold: Threshold) -> Option<&OverlapRow> {
        self.rows.iter().find(|r| r.threshold == threshold)
    }

    /// `threshold<TAB>count<TAB>total<TAB>percent`, percent with two decimals.
    pub fn to_tsv(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("{}\t{}\t{}\t{:.2}\n", r.threshold, r.count, r.total, r.percent()))
            .collect()
    }
}

/// Share of test queries having a relevant document (by `threshold`) that
/// is also judged relevant (grade ≥ 1) for any training query.
pub fn relevant_overlap(test_qrels: &QrelSet, train_qrels: &QrelSet, thresholds: &[Threshold]) -> Result<OverlapReport> {
    if test_qrels.is_empty() {
        return Err(Error::invalid("test qrels are empty"));
    }
    let train_relevant: HashSet<&str> = train_qrels
        .iter()
        .filter(|&(_, _, g)| g >= 1)
        .map(|(_, doc, _)| doc)
        .collect();
    let total = test_qrels.num_queries();
    let rows = thresholds
        .iter()
        .map(|&threshold| {
            let count = test_qrels
                .query_ids()
                .filter(|qid| {
                    test_qrels.query(qid).is_some_and(|judged| {
                        judged
                            .iter()
                            .any(|(doc, &g)| threshold.accepts(g) && train_relevant.contains(doc.as_str()))
                    })
                })
                .count();
            OverlapRow { threshold, count, total }
        })
        .collect();
    Ok(OverlapReport { rows })
}
