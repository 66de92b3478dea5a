use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use log::info;
use rand::seq::index;

use super::{check_disjoint, seeded_rng, Manifest, QueryPool, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::simindex::{knn_rows, KnnOptions, SimMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Interpolation,
    Extrapolation,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interpolation => "interpolation",
            Regime::Extrapolation => "extrapolation",
        }
    }

    fn test_section(self) -> &'static str {
        match self {
            Regime::Interpolation => "test-interpolation",
            Regime::Extrapolation => "test-extrapolation",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolation" | "inter" => Ok(Regime::Interpolation),
            "extrapolation" | "extra" => Ok(Regime::Extrapolation),
            other => Err(Error::invalid(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReSTrainConfig {
    /// Neighbors per test query collected before growing (I).
    pub interpolation_depth: usize,
    /// Neighbors per test query removed from the pool (E).
    pub exclusion_depth: usize,
    pub target_size: usize,
    pub seed: u64,
    pub measure: SimMeasure,
}

impl ReSTrainConfig {
    /// Uses `depth` for both I and E.
    pub fn new(depth: usize, target_size: usize) -> Self {
        ReSTrainConfig {
            interpolation_depth: depth,
            exclusion_depth: depth,
            target_size,
            seed: 42,
            measure: SimMeasure::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.interpolation_depth == 0 || self.exclusion_depth == 0 {
            return Err(Error::invalid("neighborhood depths I and E must be at least 1"));
        }
        if self.target_size == 0 {
            return Err(Error::invalid("target size must be at least 1"));
        }
        Ok(())
    }
}

/// A resampled training set for a fixed test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub regime: Regime,
    pub training_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// `key=value` pairs echoed into the manifest header after regime and seed.
    pub provenance: Vec<(String, String)>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.push_header("regime", self.regime);
        m.push_header("seed", self.seed);
        for (k, v) in &self.provenance {
            m.push_header(k, v);
        }
        m.push_section("training", self.training_ids.clone());
        m.push_section(self.regime.test_section(), self.test_ids.clone());
        m
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let regime: Regime = m.require("regime")?.parse()?;
        let seed = m
            .require("seed")?
            .parse()
            .map_err(|_| Error::invalid("manifest #seed is not an unsigned integer"))?;
        let section = |name: &str| {
            m.section(name)
                .map(<[String]>::to_vec)
                .ok_or_else(|| Error::invalid(format!("manifest has no [{name}] section")))
        };
        let provenance = m
            .header
            .iter()
            .filter(|(k, _)| k != "regime" && k != "seed")
            .cloned()
            .collect();
        Ok(SplitSpec {
            regime,
            training_ids: section("training")?,
            test_ids: section(regime.test_section())?,
            provenance,
            seed,
        })
    }

    fn base_provenance(cfg: &ReSTrainConfig) -> Vec<(String, String)> {
        vec![
            ("I".into(), cfg.interpolation_depth.to_string()),
            ("E".into(), cfg.exclusion_depth.to_string()),
            ("size".into(), cfg.target_size.to_string()),
            ("measure".into(), cfg.measure.to_string()),
            ("rng".into(), RNG_ALGORITHM.into()),
        ]
    }
}

/// Interpolation training set: nearest training queries of the test queries.
///
/// Neighbor lists are merged round-robin by rank (rank 1 of every test query,
/// then rank 2, ...) with duplicates dropped, and the sequence is cut at
/// exactly `target_size`. The depth grows beyond I when the first I ranks
/// do not supply enough distinct queries; the depth reached is recorded.
/// A smaller target always yields a prefix of a larger one.
pub fn restrain_interpolation(train: &QueryPool, test: &QueryPool, cfg: &ReSTrainConfig) -> Result<SplitSpec> {
    cfg.validate()?;
    check_disjoint(train, test)?;
    if test.is_empty() {
        return Err(Error::invalid("the test set is empty"));
    }
    if cfg.target_size > train.len() {
        return Err(Error::Infeasible(format!(
            "target size {} exceeds the {} training queries",
            cfg.target_size,
            train.len()
        )));
    }
    let per_query = cfg.target_size.div_ceil(test.len());
    let mut depth = cfg.interpolation_depth.max(per_query).min(train.len());
    loop {
        let rows = knn_rows(test.embeddings(), train.embeddings(), KnnOptions::new(depth, cfg.measure))?;
        let mut seen = HashSet::with_capacity(cfg.target_size);
        let mut order = Vec::with_capacity(cfg.target_size);
        'merge: for rank in 0..depth {
            for hits in &rows {
                if let Some(&(row, _)) = hits.get(rank) {
                    if seen.insert(row) {
                        order.push(row);
                        if order.len() == cfg.target_size {
                            break 'merge;
                        }
                    }
                }
            }
        }
        if order.len() == cfg.target_size {
            info!("interpolation set filled at neighbor depth {depth}");
            let mut provenance = SplitSpec::base_provenance(cfg);
            provenance.push(("depth".into(), depth.to_string()));
            return Ok(SplitSpec {
                regime: Regime::Interpolation,
                training_ids: order.into_iter().map(|r| train.id(r).to_owned()).collect(),
                test_ids: test.queries().ids().map(str::to_owned).collect(),
                provenance,
                seed: cfg.seed,
            });
        }
        // At full depth every training query is reachable, so this terminates.
        debug_assert!(depth < train.len());
        depth = (depth * 2).min(train.len());
    }
}

/// Extrapolation training set: a uniform sample of the training queries
/// outside every test query's top-E neighborhood.
pub fn restrain_extrapolation(train: &QueryPool, test: &QueryPool, cfg: &ReSTrainConfig) -> Result<SplitSpec> {
    cfg.validate()?;
    check_disjoint(train, test)?;
    let rows = knn_rows(
        test.embeddings(),
        train.embeddings(),
        KnnOptions::new(cfg.exclusion_depth, cfg.measure),
    )?;
    let mut excluded = vec![false; train.len()];
    for &(row, _) in rows.iter().flatten() {
        excluded[row] = true;
    }
    let remaining: Vec<usize> = (0..train.len()).filter(|&r| !excluded[r]).collect();
    if remaining.len() < cfg.target_size {
        return Err(Error::Infeasible(format!(
            "only {} training queries lie outside the top-{} neighborhoods; \
             max feasible target_size is {}",
            remaining.len(),
            cfg.exclusion_depth,
            remaining.len()
        )));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut picked = index::sample(&mut rng, remaining.len(), cfg.target_size).into_vec();
    picked.sort_unstable();
    let mut provenance = SplitSpec::base_provenance(cfg);
    provenance.push(("excluded".into(), (train.len() - remaining.len()).to_string()));
    Ok(SplitSpec {
        regime: Regime::Extrapolation,
        training_ids: picked
            .into_iter()
            .map(|i| train.id(remaining[i]).to_owned())
            .collect(),
        test_ids: test.queries().ids().map(str::to_owned).collect(),
        provenance,
        seed: cfg.seed,
    })
}
