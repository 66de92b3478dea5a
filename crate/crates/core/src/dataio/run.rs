use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use log::warn;

use super::{check_id, read_file, text_lines, write_file};
use crate::error::{Error, Result};

/// Tag written when a run has none of its own.
pub const DEFAULT_TAG: &str = "xtrap";

/// Descending score, then ascending doc id.
pub(crate) fn ranking_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Ranked results per query. Order is derived from scores only; rank
/// columns in input files are checked but never used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSet {
    rankings: BTreeMap<String, Vec<(String, f64)>>,
    tag: Option<String>,
    rank_conflicts: usize,
}

impl RunSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_tag(tag: impl Into<String>) -> Self {
        RunSet {
            tag: Some(tag.into()),
            ..Self::default()
        }
    }

    /// Adds (or replaces) the ranking of one query.
    pub fn insert_query(&mut self, qid: impl Into<String>, mut docs: Vec<(String, f64)>) -> Result<()> {
        let qid = qid.into();
        let mut seen = HashSet::with_capacity(docs.len());
        for (doc, score) in &docs {
            if !seen.insert(doc.as_str()) {
                return Err(Error::invalid(format!("query {qid}: duplicate doc {doc}")));
            }
            if !score.is_finite() {
                return Err(Error::invalid(format!("query {qid}: non-finite score for doc {doc}")));
            }
        }
        docs.sort_by(ranking_order);
        self.rankings.insert(qid, docs);
        Ok(())
    }

    /// TREC run format: `qid Q0 docid rank score [tag]`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        struct Entry {
            doc: String,
            rank: i64,
            score: f64,
        }
        let mut by_query: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
        let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
        let mut tag = None;
        for line in text_lines(bytes) {
            let (line_no, line) = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(5..=6).contains(&fields.len()) {
                return Err(Error::parse(
                    line_no,
                    format!("expected `qid Q0 docid rank score tag`, found {} fields", fields.len()),
                ));
            }
            let (qid, doc) = (fields[0], fields[2]);
            check_id(qid, line_no)?;
            check_id(doc, line_no)?;
            let rank: i64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("rank {:?} is not an integer", fields[3])))?;
            let score: f64 = fields[4]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("score {:?} is not a number", fields[4])))?;
            if !score.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite score {}", fields[4])));
            }
            if !seen.entry(qid.to_owned()).or_default().insert(doc.to_owned()) {
                return Err(Error::parse(line_no, format!("duplicate doc {doc} for query {qid}")));
            }
            if tag.is_none() {
                tag = fields.get(5).map(|t| t.to_string());
            }
            by_query.entry(qid.to_owned()).or_default().push(Entry {
                doc: doc.to_owned(),
                rank,
                score,
            });
        }

        let mut run = RunSet {
            tag,
            ..RunSet::default()
        };
        for (qid, mut entries) in by_query {
            let mut ranked: Vec<(String, f64)> = entries.iter().map(|e| (e.doc.clone(), e.score)).collect();
            ranked.sort_by(ranking_order);
            entries.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.doc.cmp(&b.doc)));
            if entries.iter().zip(&ranked).any(|(e, r)| e.doc != r.0) {
                warn!("query {qid}: rank column disagrees with score order; using scores");
                run.rank_conflicts += 1;
            }
            run.rankings.insert(qid, ranked);
        }
        Ok(run)
    }

    pub fn ranking(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.rankings.get(qid).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.rankings.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> + '_ {
        self.rankings.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    pub fn num_queries(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    /// Queries whose file rank column disagreed with score order.
    pub fn rank_conflicts(&self) -> usize {
        self.rank_conflicts
    }

    pub fn to_trec(&self) -> String {
        let tag = self.tag.as_deref().unwrap_or(DEFAULT_TAG);
        let mut out = String::new();
        for (qid, ranking) in &self.rankings {
            for (i, (doc, score)) in ranking.iter().enumerate() {
                out.push_str(&format!("{qid} Q0 {doc} {} {score} {tag}\n", i + 1));
            }
        }
        out
    }
}

pub fn parse_run(path: impl AsRef<Path>) -> Result<RunSet> {
    let path = path.as_ref();
    RunSet::from_bytes(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_run(run: &RunSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), run.to_trec().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(run: &RunSet, q: &str) -> Vec<String> {
        run.ranking(q).unwrap().iter().map(|(d, _)| d.clone()).collect()
    }

    #[test]
    fn higher_score_ranks_first() {
        let run = RunSet::from_bytes(b"q Q0 a 1 1.5 t\nq Q0 b 2 2.5 t\n").unwrap();
        assert_eq!(docs(&run, "q"), ["b", "a"]);
        assert_eq!(run.tag(), Some("t"));
    }

    #[test]
    fn ties_by_ascending_doc_id() {
        let run = RunSet::from_bytes(b"q Q0 dB 1 1.0 t\nq Q0 dA 2 1.0 t\n").unwrap();
        assert_eq!(docs(&run, "q"), ["dA", "dB"]);
    }

    #[test]
    fn rank_column_is_not_trusted() {
        let run = RunSet::from_bytes(b"q Q0 a 1 0.1 t\nq Q0 b 2 0.9 t\n").unwrap();
        assert_eq!(docs(&run, "q"), ["b", "a"]);
        assert_eq!(run.rank_conflicts(), 1);

        let consistent = RunSet::from_bytes(b"q Q0 b 1 0.9 t\nq Q0 a 2 0.1 t\n").unwrap();
        assert_eq!(consistent.rank_conflicts(), 0);
    }

    #[test]
    fn duplicate_doc_rejected() {
        let err = RunSet::from_bytes(b"q Q0 a 1 1 t\nq Q0 a 2 0.5 t\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_finite_score_rejected() {
        for bad in ["nan", "inf", "-inf"] {
            let line = format!("q Q0 a 1 {bad} t\n");
            assert!(RunSet::from_bytes(line.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn output_rederives_ranks() {
        let run = RunSet::from_bytes(b"q Q0 a 7 1 t\nq Q0 b 3 2 t\n").unwrap();
        assert_eq!(run.to_trec(), "q Q0 b 1 2 t\nq Q0 a 2 1 t\n");
    }

    #[test]
    fn insert_query_sorts() {
        let mut run = RunSet::new();
        run.insert_query("q", vec![("x".into(), 0.0), ("y".into(), 3.0)]).unwrap();
        assert_eq!(docs(&run, "q"), ["y", "x"]);
        assert!(run
            .insert_query("r", vec![("x".into(), f64::NAN)])
            .is_err());
    }
}
