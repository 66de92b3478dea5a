//! Rank-based effectiveness metrics over a [`RunSet`] and a [`QrelSet`].
//!
//! Only queries present in the run are scored. A run query without
//! judgments is skipped and listed in [`MetricReport::skipped_ids`]; recall
//! additionally skips queries that have no relevant document at the
//! threshold. NDCG scores a query with an all-zero ideal ranking as 0.
//!
//! `rel_threshold` binarizes grades for MRR and recall. For NDCG, grades
//! below the threshold contribute no gain. TREC DL usually binarizes its
//! four-point scale at 2; the default here is 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::dataio::{QrelSet, RunSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Mrr,
    Ndcg,
    Recall,
}

impl MetricKind {
    pub fn default_cutoff(self) -> usize {
        match self {
            MetricKind::Mrr | MetricKind::Ndcg => 10,
            MetricKind::Recall => 100,
        }
    }

    fn name(self) -> &'static str {
        match self {
            MetricKind::Mrr => "mrr",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Recall => "recall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gain {
    /// g(r) = r
    #[default]
    Linear,
    /// g(r) = 2^r - 1
    Exponential,
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
        }
    }
}

impl FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Gain::Linear),
            "exponential" | "exp" => Ok(Gain::Exponential),
            other => Err(Error::invalid(format!("unknown gain {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub cutoff: usize,
    pub rel_threshold: u32,
    pub gain: Gain,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        MetricSpec {
            kind,
            cutoff: kind.default_cutoff(),
            rel_threshold: 1,
            gain: Gain::Linear,
        }
    }

    pub fn mrr(cutoff: usize) -> Self {
        Self::new(MetricKind::Mrr).with_cutoff(cutoff)
    }

    pub fn ndcg(cutoff: usize) -> Self {
        Self::new(MetricKind::Ndcg).with_cutoff(cutoff)
    }

    pub fn recall(cutoff: usize) -> Self {
        Self::new(MetricKind::Recall).with_cutoff(cutoff)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_threshold(mut self, rel_threshold: u32) -> Self {
        self.rel_threshold = rel_threshold;
        self
    }

    pub fn with_gain(mut self, gain: Gain) -> Self {
        self.gain = gain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(Error::invalid("metric cutoff must be at least 1"));
        }
        if self.rel_threshold == 0 {
            return Err(Error::invalid("relevance threshold must be at least 1"));
        }
        Ok(())
    }

    /// `mrr@10`, `ndcg@10`, `recall@100`.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind.name(), self.cutoff)
    }
}

/// Accepts `mrr`, `ndcg@20`, `recall@1000`, ... (case-insensitive).
impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (name, cutoff) = match lower.split_once('@') {
            Some((n, c)) => (n, Some(c)),
            None => (lower.as_str(), None),
        };
        let kind = match name {
            "mrr" | "rr" => MetricKind::Mrr,
            "ndcg" => MetricKind::Ndcg,
            "recall" | "r" => MetricKind::Recall,
            other => return Err(Error::invalid(format!("unknown metric {other:?}"))),
        };
        let mut spec = MetricSpec::new(kind);
        if let Some(c) = cutoff {
            spec.cutoff = c
                .parse()
                .map_err(|_| Error::invalid(format!("bad cutoff in metric {s:?}")))?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: String,
    pub mean: f64,
    pub per_query: BTreeMap<String, f64>,
    pub evaluated_count: usize,
    pub skipped_ids: Vec<String>,
}

impl MetricReport {
    /// `metric<TAB>qid<TAB>value` per query, then `metric<TAB>ALL<TAB>mean`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (qid, v) in &self.per_query {
            out.push_str(&format!("{}\t{qid}\t{v:.4}\n", self.metric));
        }
        out.push_str(&format!("{}\tALL\t{:.4}\n", self.metric, self.mean));
        out
    }
}

/// Metric value of one ranked list. `None` means the query is not scorable:
/// it has no judgments, or (recall only) no relevant document.
pub fn score_query(
    ranking: &[(String, f64)],
    judged: Option<&BTreeMap<String, u32>>,
    spec: &MetricSpec,
) -> Option<f64> {
    let judged = judged?;
    let grade = |doc: &str| judged.get(doc).copied().unwrap_or(0);
    let top = &ranking[..ranking.len().min(spec.cutoff)];
    match spec.kind {
        MetricKind::Mrr => Some(
            top.iter()
                .position(|(d, _)| grade(d) >= spec.rel_threshold)
                .map_or(0.0, |i| 1.0 / (i + 1) as f64),
        ),
        MetricKind::Ndcg => {
            let gain = |g: u32| {
                if g >= spec.rel_threshold {
                    spec.gain.apply(g)
                } else {
                    0.0
                }
            };
            let dcg: f64 = top
                .iter()
                .enumerate()
                .map(|(i, (d, _))| gain(grade(d)) / discount(i))
                .sum();
            let mut ideal: Vec<u32> = judged.values().copied().collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg: f64 = ideal
                .iter()
                .take(spec.cutoff)
                .enumerate()
                .map(|(i, &g)| gain(g) / discount(i))
                .sum();
            Some(if idcg > 0.0 { dcg / idcg } else { 0.0 })
        }
        MetricKind::Recall => {
            let relevant = judged.values().filter(|&&g| g >= spec.rel_threshold).count();
            if relevant == 0 {
                return None;
            }
            let found = top
                .iter()
                .filter(|(d, _)| grade(d) >= spec.rel_threshold)
                .count();
            Some(found as f64 / relevant as f64)
        }
    }
}

/// log2(rank + 1) for a 0-based position.
fn discount(position: usize) -> f64 {
    ((position + 2) as f64).log2()
}

fn has_ideal_gain(judged: &BTreeMap<String, u32>, spec: &MetricSpec) -> bool {
    judged.values().any(|&g| g >= spec.rel_threshold && g > 0)
}

fn report(run: &RunSet, qrels: &QrelSet, spec: &MetricSpec) -> MetricReport {
    let mut per_query = BTreeMap::new();
    let mut skipped_ids = Vec::new();
    let mut zero_ideal = 0;
    for (qid, ranking) in run.iter() {
        let judged = qrels.query(qid);
        match score_query(ranking, judged, spec) {
            Some(v) => {
                if spec.kind == MetricKind::Ndcg && judged.is_some_and(|j| !has_ideal_gain(j, spec)) {
                    zero_ideal += 1;
                }
                per_query.insert(qid.to_owned(), v);
            }
            None => skipped_ids.push(qid.to_owned()),
        }
    }
    if zero_ideal > 0 {
        warn!("{spec}: {zero_ideal} queries have no relevant judgments and score 0");
    }
    // BTreeMap iteration sums in query-id order.
    let sum: f64 = per_query.values().sum();
    let evaluated_count = per_query.len();
    MetricReport {
        metric: spec.name(),
        mean: if evaluated_count == 0 {
            0.0
        } else {
            sum / evaluated_count as f64
        },
        per_query,
        evaluated_count,
        skipped_ids,
    }
}

/// Reciprocal rank of the first document with grade >= `rel_threshold` in the top `cutoff`.
pub fn mrr(run: &RunSet, qrels: &QrelSet, spec: &MetricSpec) -> MetricReport {
    report(run, qrels, &MetricSpec { kind: MetricKind::Mrr, ..*spec })
}

pub fn ndcg(run: &RunSet, qrels: &QrelSet, spec: &MetricSpec) -> MetricReport {
    report(run, qrels, &MetricSpec { kind: MetricKind::Ndcg, ..*spec })
}

pub fn recall(run: &RunSet, qrels: &QrelSet, spec: &MetricSpec) -> MetricReport {
    report(run, qrels, &MetricSpec { kind: MetricKind::Recall, ..*spec })
}

pub fn evaluate_one(run: &RunSet, qrels: &QrelSet, spec: &MetricSpec) -> Result<MetricReport> {
    spec.validate()?;
    Ok(report(run, qrels, spec))
}

pub fn evaluate(run: &RunSet, qrels: &QrelSet, specs: &[MetricSpec]) -> Result<Vec<MetricReport>> {
    specs.iter().map(|s| evaluate_one(run, qrels, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_of(q: &str, docs: &[&str]) -> RunSet {
        let mut run = RunSet::new();
        let n = docs.len() as f64;
        run.insert_query(
            q,
            docs.iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), n - i as f64))
                .collect(),
        )
        .unwrap();
        run
    }

    fn qrels_of(q: &str, judged: &[(&str, u32)]) -> QrelSet {
        let mut qrels = QrelSet::new();
        for (d, g) in judged {
            qrels.insert(q, d, *g);
        }
        qrels
    }

    #[test]
    fn mrr_cases() {
        let spec = MetricSpec::mrr(10);
        let qrels = qrels_of("q", &[("rel", 1)]);
        assert_eq!(mrr(&run_of("q", &["rel", "x"]), &qrels, &spec).mean, 1.0);
        assert_eq!(mrr(&run_of("q", &["a", "b", "c", "rel"]), &qrels, &spec).mean, 0.25);
        let eleven: Vec<String> = (0..10).map(|i| format!("x{i:02}")).collect();
        let mut docs: Vec<&str> = eleven.iter().map(String::as_str).collect();
        docs.push("rel");
        assert_eq!(mrr(&run_of("q", &docs), &qrels, &spec).mean, 0.0);
    }

    #[test]
    fn ndcg_hand_examples() {
        let qrels = qrels_of("q", &[("d1", 3), ("d2", 1)]);
        let run = run_of("q", &["d2", "d1"]);
        let lin = ndcg(&run, &qrels, &MetricSpec::ndcg(10)).mean;
        let l3 = 3f64.log2();
        assert_eq!(lin, (1.0 + 3.0 / l3) / (3.0 + 1.0 / l3));
        assert!((lin - 0.7967).abs() < 5e-5, "{lin}");
        let exp = ndcg(&run, &qrels, &MetricSpec::ndcg(10).with_gain(Gain::Exponential)).mean;
        assert_eq!(exp, (1.0 + 7.0 / l3) / (7.0 + 1.0 / l3));
        assert!((exp - 0.7098).abs() < 5e-5, "{exp}");
        let ideal = run_of("q", &["d1", "d2"]);
        assert_eq!(ndcg(&ideal, &qrels, &MetricSpec::ndcg(10)).mean, 1.0);
    }

    #[test]
    fn ndcg_zero_ideal_counts_as_zero() {
        let qrels = qrels_of("q", &[("d1", 0)]);
        let r = ndcg(&run_of("q", &["d1"]), &qrels, &MetricSpec::ndcg(10));
        assert_eq!(r.evaluated_count, 1);
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn recall_cases() {
        let qrels = qrels_of("q", &[("a", 1), ("b", 2), ("c", 0)]);
        let spec = MetricSpec::recall(100);
        assert_eq!(recall(&run_of("q", &["b", "x", "a"]), &qrels, &spec).mean, 1.0);
        assert_eq!(recall(&run_of("q", &["b", "x"]), &qrels, &spec).mean, 0.5);
        let strict = recall(&run_of("q", &["b"]), &qrels, &spec.with_threshold(2));
        assert_eq!(strict.mean, 1.0);

        let none = qrels_of("q", &[("c", 0)]);
        let r = recall(&run_of("q", &["c"]), &none, &spec);
        assert_eq!(r.evaluated_count, 0);
        assert_eq!(r.skipped_ids, ["q"]);
    }

    #[test]
    fn unjudged_run_queries_are_skipped() {
        let mut run = run_of("q", &["a"]);
        run.insert_query("other", vec![("a".into(), 1.0)]).unwrap();
        let r = mrr(&run, &qrels_of("q", &[("a", 1)]), &MetricSpec::mrr(10));
        assert_eq!(r.evaluated_count, 1);
        assert_eq!(r.skipped_ids, ["other"]);
        assert_eq!(r.to_tsv(), "mrr@10\tq\t1.0000\nmrr@10\tALL\t1.0000\n");
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("mrr@10".parse::<MetricSpec>().unwrap(), MetricSpec::mrr(10));
        assert_eq!("NDCG".parse::<MetricSpec>().unwrap(), MetricSpec::ndcg(10));
        assert_eq!("recall".parse::<MetricSpec>().unwrap(), MetricSpec::recall(100));
        assert_eq!(MetricSpec::recall(100).to_string(), "recall@100");
        assert!("map@10".parse::<MetricSpec>().is_err());
        assert!("mrr@0".parse::<MetricSpec>().is_err());
        assert!("mrr@x".parse::<MetricSpec>().is_err());
    }
}
