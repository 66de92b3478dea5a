use std::collections::HashMap;

use log::warn;

use super::{check_disjoint, kmeans, KMeansConfig, Manifest, QueryPool, RNG_ALGORITHM};
use crate::dataio::{QrelSet, RunSet};
use crate::error::{Error, Result};
use crate::metrics::{score_query, MetricSpec};

const REGIME: &str = "resttest";

/// Leave-one-bucket-out folds over a clustering of training and test queries.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSpec {
    pub k: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    bucket: HashMap<String, usize>,
    pub seed: u64,
    pub provenance: Vec<(String, String)>,
}

/// One fold's view of a [`FoldSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub training_ids: Vec<String>,
    pub interpolation_test_ids: Vec<String>,
    pub extrapolation_test_ids: Vec<String>,
}

impl FoldSpec {
    /// Builds a spec from an explicit bucket map and checks its invariants.
    pub fn new(
        k: usize,
        train_ids: Vec<String>,
        test_ids: Vec<String>,
        bucket: HashMap<String, usize>,
        seed: u64,
    ) -> Result<Self> {
        let spec = FoldSpec {
            k,
            train_ids,
            test_ids,
            bucket,
            seed,
            provenance: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bucket_of(&self, id: &str) -> Option<usize> {
        self.bucket.get(id).copied()
    }

    pub fn fold(&self, f: usize) -> Fold {
        let keep = |ids: &[String], inside: bool| -> Vec<String> {
            ids.iter()
                .filter(|id| (self.bucket[id.as_str()] == f) == inside)
                .cloned()
                .collect()
        };
        Fold {
            index: f,
            training_ids: keep(&self.train_ids, false),
            interpolation_test_ids: keep(&self.test_ids, false),
            extrapolation_test_ids: keep(&self.test_ids, true),
        }
    }

    pub fn folds(&self) -> Vec<Fold> {
        (0..self.k).map(|f| self.fold(f)).collect()
    }

    /// Members of bucket `b`, training queries first, each in input order.
    pub fn bucket_members(&self, b: usize) -> Vec<String> {
        self.train_ids
            .iter()
            .chain(&self.test_ids)
            .filter(|id| self.bucket[id.as_str()] == b)
            .cloned()
            .collect()
    }

    /// Buckets partition the queries, and ids are unique across both sets.
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k must be ≥ 2"));
        }
        let mut seen = std::collections::HashSet::new();
        for id in self.train_ids.iter().chain(&self.test_ids) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("query id {id} listed twice")));
            }
            match self.bucket.get(id) {
                Some(&b) if b < self.k => {}
                Some(&b) => return Err(Error::invalid(format!("query {id} in bucket {b}, but k = {}", self.k))),
                None => return Err(Error::invalid(format!("query {id} has no bucket"))),
            }
        }
        if self.bucket.len() != seen.len() {
            return Err(Error::invalid("bucket map names queries outside the split"));
        }
        Ok(())
    }

    /// Header, `[training]` with the training pool, both test sections with
    /// the test pool (every test query is evaluated in both regimes across
    /// the folds), then `[bucket 0]` .. `[bucket k-1]`.
    pub fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.push_header("regime", REGIME);
        m.push_header("seed", self.seed);
        m.push_header("k", self.k);
        for (key, v) in &self.provenance {
            m.push_header(key, v);
        }
        m.push_section("training", self.train_ids.clone());
        m.push_section("test-interpolation", self.test_ids.clone());
        m.push_section("test-extrapolation", self.test_ids.clone());
        for b in 0..self.k {
            m.push_section(format!("bucket {b}"), self.bucket_members(b));
        }
        m
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let regime = m.require("regime")?;
        if regime != REGIME {
            return Err(Error::invalid(format!("expected a {REGIME} manifest, found regime {regime}")));
        }
        let parse_num = |key: &str| -> Result<u64> {
            m.require(key)?
                .parse()
                .map_err(|_| Error::invalid(format!("manifest #{key} is not an unsigned integer")))
        };
        let k = parse_num("k")? as usize;
        let seed = parse_num("seed")?;
        let section = |name: &str| {
            m.section(name)
                .map(<[String]>::to_vec)
                .ok_or_else(|| Error::invalid(format!("manifest has no [{name}] section")))
        };
        let train_ids = section("training")?;
        let test_ids = section("test-extrapolation")?;
        if section("test-interpolation")? != test_ids {
            return Err(Error::invalid("test sections of a resttest manifest must list the same ids"));
        }
        let mut bucket = HashMap::new();
        for b in 0..k {
            for id in section(&format!("bucket {b}"))? {
                if bucket.insert(id.clone(), b).is_some() {
                    return Err(Error::invalid(format!("query {id} appears in two buckets")));
                }
            }
        }
        let provenance = m
            .header
            .iter()
            .filter(|(key, _)| !matches!(key.as_str(), "regime" | "seed" | "k"))
            .cloned()
            .collect();
        let mut spec = FoldSpec::new(k, train_ids, test_ids, bucket, seed)?;
        spec.provenance = provenance;
        Ok(spec)
    }
}

impl Fold {
    /// Per-fold split manifest for training one model.
    pub fn to_manifest(&self, spec: &FoldSpec) -> Manifest {
        let mut m = Manifest::default();
        m.push_header("regime", "resttest-fold");
        m.push_header("seed", spec.seed);
        m.push_header("k", spec.k);
        m.push_header("fold", self.index);
        m.push_section("training", self.training_ids.clone());
        m.push_section("test-interpolation", self.interpolation_test_ids.clone());
        m.push_section("test-extrapolation", self.extrapolation_test_ids.clone());
        m
    }
}

/// Clusters training and test queries together and derives `k` folds.
pub fn resttest_split(train: &QueryPool, test: &QueryPool, cfg: &KMeansConfig) -> Result<FoldSpec> {
    if cfg.k < 2 {
        return Err(Error::invalid("k must be ≥ 2"));
    }
    check_disjoint(train, test)?;
    let mut all = train.embeddings().clone();
    all.extend_from(test.embeddings())?;
    let clustering = kmeans(&all, cfg)?;

    let bucket: HashMap<String, usize> = all
        .ids()
        .iter()
        .cloned()
        .zip(clustering.assignment.iter().copied())
        .collect();
    let mut tests_per_bucket = vec![0usize; cfg.k];
    for id in test.queries().ids() {
        tests_per_bucket[bucket[id]] += 1;
    }
    for (b, &n) in tests_per_bucket.iter().enumerate() {
        if n == 0 {
            warn!("bucket {b} holds no test queries; fold {b} yields no extrapolation scores");
        }
    }
    let mut spec = FoldSpec::new(
        cfg.k,
        train.queries().ids().map(str::to_owned).collect(),
        test.queries().ids().map(str::to_owned).collect(),
        bucket,
        cfg.seed,
    )?;
    spec.provenance = vec![
        ("max_iters".into(), cfg.max_iters.to_string()),
        ("tol".into(), cfg.tol.to_string()),
        ("normalize".into(), cfg.normalize.to_string()),
        ("rng".into(), RNG_ALGORITHM.into()),
        ("iterations".into(), clustering.iterations.to_string()),
        ("inertia".into(), format!("{:.6e}", clustering.inertia)),
    ];
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAggregate {
    pub query_id: String,
    pub extrapolation: f64,
    /// Mean over the k-1 folds where the query was an interpolation query.
    pub interpolation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub metric: String,
    pub interpolation: f64,
    pub extrapolation: f64,
    pub per_query: Vec<QueryAggregate>,
    /// Test queries without judgments (or, for recall, without relevant docs).
    pub skipped_ids: Vec<String>,
    /// (fold, query) pairs absent from that fold's run; each scored 0.
    pub missing: usize,
}

impl AggregateReport {
    /// `metric<TAB>qid<TAB>interpolation<TAB>extrapolation`, then an `ALL` line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for q in &self.per_query {
            out.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.4}\n",
                self.metric, q.query_id, q.interpolation, q.extrapolation
            ));
        }
        out.push_str(&format!(
            "{}\tALL\t{:.4}\t{:.4}\n",
            self.metric, self.interpolation, self.extrapolation
        ));
        out
    }
}

/// Combines the runs of the `k` fold models into interpolation and
/// extrapolation scores.
///
/// Each test query contributes its extrapolation-fold score to the
/// extrapolation mean, and the mean of its k-1 interpolation-fold scores to
/// the interpolation mean.
pub fn resttest_aggregate(
    fold_runs: &[RunSet],
    spec: &FoldSpec,
    qrels: &QrelSet,
    metric: &MetricSpec,
) -> Result<AggregateReport> {
    metric.validate()?;
    if fold_runs.len() != spec.k {
        return Err(Error::invalid(format!(
            "expected {} fold runs, got {}",
            spec.k,
            fold_runs.len()
        )));
    }
    let mut per_query = Vec::with_capacity(spec.test_ids.len());
    let mut skipped_ids = Vec::new();
    let mut missing = 0;
    'queries: for qid in &spec.test_ids {
        let judged = qrels.query(qid);
        let home = spec.bucket[qid.as_str()];
        let mut extrapolation = 0.0;
        let mut inter_sum = 0.0;
        for (f, run) in fold_runs.iter().enumerate() {
            let ranking = match run.ranking(qid) {
                Some(r) => r,
                None => {
                    if judged.is_some() {
                        missing += 1;
                        warn!("fold {f} run has no results for query {qid}; scoring 0");
                    }
                    &[]
                }
            };
            let Some(value) = score_query(ranking, judged, metric) else {
                skipped_ids.push(qid.clone());
                continue 'queries;
            };
            if f == home {
                extrapolation = value;
            } else {
                inter_sum += value;
            }
        }
        per_query.push(QueryAggregate {
            query_id: qid.clone(),
            extrapolation,
            interpolation: inter_sum / (spec.k - 1) as f64,
        });
    }
    let n = per_query.len();
    let mean = |f: fn(&QueryAggregate) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_query.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(AggregateReport {
        metric: metric.name(),
        interpolation: mean(|q| q.interpolation),
        extrapolation: mean(|q| q.extrapolation),
        per_query,
        skipped_ids,
        missing,
    })
}
