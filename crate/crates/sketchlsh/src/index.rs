//! (m, L) hash-table index: L independently seeded families of one scheme,
//! each feeding a table from canonical code keys to buckets of point ids.
//! Queries take the union of the matching buckets and re-rank candidates by
//! the exact metric.

use std::collections::{HashMap, HashSet};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::families::{FamilyInstance, FamilyParams, HashCode, SchemeKind};
use crate::hashcore::MasterSeed;

/// Ranking metric; must match the scheme (integer-code schemes re-rank by
/// Euclidean distance, bit-code schemes by cosine similarity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl Metric {
    /// The metric a scheme's codes are designed for.
    pub fn for_kind(kind: SchemeKind) -> Metric {
        if kind.is_euclidean() {
            Metric::Euclidean
        } else {
            Metric::Cosine
        }
    }

    pub fn matches(self, kind: SchemeKind) -> bool {
        self == Metric::for_kind(kind)
    }

    /// Internal ranking score; strictly lower is better. Squared distance
    /// for Euclidean, negated cosine similarity for Cosine (a zero vector
    /// gets similarity 0).
    #[inline]
    pub fn score(self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => u
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
            Metric::Cosine => {
                let mut dot = 0.0;
                let mut nu = 0.0;
                let mut nv = 0.0;
                for (a, b) in u.iter().zip(v.iter()) {
                    dot += a * b;
                    nu += a * a;
                    nv += b * b;
                }
                if nu == 0.0 || nv == 0.0 {
                    0.0
                } else {
                    -(dot / (nu.sqrt() * nv.sqrt()))
                }
            }
        }
    }

    /// Converts an internal score to the reported value: distance
    /// (ascending) or cosine similarity (descending).
    #[inline]
    pub fn report(self, score: f64) -> f64 {
        match self {
            Metric::Euclidean => score.sqrt(),
            Metric::Cosine => -score,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" | "angular" => Ok(Metric::Cosine),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown metric '{other}' (expected euclidean or cosine)"),
            }),
        }
    }
}

/// Full configuration of an index: scheme, code length m, table count L,
/// scheme parameters, seed, and the (kind-matching) metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub kind: SchemeKind,
    pub m: usize,
    pub tables: usize,
    pub w: f64,
    pub order: usize,
    pub seed: MasterSeed,
    pub metric: Metric,
}

impl IndexConfig {
    /// Defaults: w = 4.0, order = 2, metric inferred from the scheme.
    pub fn new(kind: SchemeKind, m: usize, tables: usize, seed: MasterSeed) -> Self {
        IndexConfig {
            kind,
            m,
            tables,
            w: 4.0,
            order: 2,
            seed,
            metric: Metric::for_kind(kind),
        }
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::ZeroCodeLength);
        }
        if self.tables == 0 {
            return Err(Error::ZeroTables);
        }
        if !self.metric.matches(self.kind) {
            return Err(Error::MetricMismatch {
                kind: self.kind.name(),
                required: Metric::for_kind(self.kind).name(),
            });
        }
        if self.kind.is_euclidean() && (!self.w.is_finite() || self.w <= 0.0) {
            return Err(Error::InvalidWidth(self.w));
        }
        if self.kind.is_tensorized() && self.order == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(())
    }

    fn family_params(&self, d: usize) -> FamilyParams {
        FamilyParams::new(self.kind, d, self.m)
            .with_w(self.w)
            .with_order(self.order)
    }
}

/// Injective byte serialization of a hash code. Integer codes become a
/// little-endian u32 length followed by little-endian i64 coordinates; bit
/// codes become the length followed by packed bits (LSB-first per byte).
pub fn canonical_key(code: &HashCode) -> Vec<u8> {
    match code {
        HashCode::Euclidean(coords) => {
            let mut key = Vec::with_capacity(4 + 8 * coords.len());
            key.extend_from_slice(&(coords.len() as u32).to_le_bytes());
            for &c in coords {
                key.extend_from_slice(&c.to_le_bytes());
            }
            key
        }
        HashCode::Cosine(bits) => {
            let mut key = Vec::with_capacity(4 + bits.len().div_ceil(8));
            key.extend_from_slice(&(bits.len() as u32).to_le_bytes());
            let mut byte = 0u8;
            for (i, &b) in bits.iter().enumerate() {
                byte |= (b & 1) << (i % 8);
                if i % 8 == 7 {
                    key.push(byte);
                    byte = 0;
                }
            }
            if bits.len() % 8 != 0 {
                key.push(byte);
            }
            key
        }
    }
}

/// One result list: neighbor ids ordered best-first (ascending distance or
/// descending similarity, ties by ascending id) with their metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub ids: Vec<usize>,
    pub values: Vec<f64>,
    pub candidates_examined: usize,
    pub elapsed: Duration,
}

/// The built index: per-table families and buckets plus the shared point
/// store used for exact re-ranking.
#[derive(Debug, Clone)]
pub struct LshIndex {
    config: IndexConfig,
    families: Vec<FamilyInstance>,
    tables: Vec<HashMap<Vec<u8>, Vec<usize>>>,
    points: Arc<Dataset>,
    table_build_times: Vec<Duration>,
}

impl LshIndex {
    /// Hashes every point into `config.tables` tables. Table t's family is
    /// seeded from the label "table{t}", so indexes sharing a seed agree on
    /// their common table prefix regardless of L.
    pub fn build(points: Arc<Dataset>, config: IndexConfig) -> Result<LshIndex> {
        config.validate()?;
        let mut index = LshIndex {
            config: IndexConfig {
                tables: 0,
                ..config
            },
            families: Vec::new(),
            tables: Vec::new(),
            points,
            table_build_times: Vec::new(),
        };
        index.extend_to(config.tables)?;
        Ok(index)
    }

    /// Grows the index to `total` tables (no-op if already that large).
    /// Extending is exactly equivalent to building with the larger L from
    /// scratch.
    pub fn extend_to(&mut self, total: usize) -> Result<()> {
        let d = self.points.dim();
        let n = self.points.len();
        while self.tables.len() < total {
            let t = self.tables.len();
            let start = Instant::now();
            let family = FamilyInstance::new(
                self.config.seed.derive(&format!("table{t}")),
                self.config.family_params(d),
            )?;
            let codes = exec::map_indexed(n, |i| family.hash(self.points.row(i)));
            let mut table: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
            for (i, code) in codes.into_iter().enumerate() {
                table.entry(canonical_key(&code?)).or_default().push(i);
            }
            self.families.push(family);
            self.tables.push(table);
            self.table_build_times.push(start.elapsed());
            self.config.tables = self.tables.len();
        }
        Ok(())
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn points(&self) -> &Dataset {
        &self.points
    }

    pub fn families(&self) -> &[FamilyInstance] {
        &self.families
    }

    /// Wall time spent building each table, in insertion order.
    pub fn table_build_times(&self) -> &[Duration] {
        &self.table_build_times
    }

    /// Cumulative build time of the first `tables` tables.
    pub fn build_time(&self, tables: usize) -> Duration {
        self.table_build_times[..tables].iter().sum()
    }

    /// Sorted candidate ids for `q` over the first `tables` tables: the
    /// deduplicated union of the matching buckets.
    pub fn candidates(&self, q: &[f64], tables: usize) -> Result<Vec<usize>> {
        assert!(tables <= self.tables.len(), "table prefix out of range");
        let mut set = HashSet::new();
        for t in 0..tables {
            let key = canonical_key(&self.families[t].hash(q)?);
            if let Some(bucket) = self.tables[t].get(&key) {
                set.extend(bucket.iter().copied());
            }
        }
        let mut ids: Vec<usize> = set.into_iter().collect();
        ids.sort_unstable();
        Ok(ids)
    }

    /// Top-k query over all tables.
    pub fn query(&self, q: &[f64], k: usize) -> Result<QueryResult> {
        self.query_limited(q, k, self.tables.len())
    }

    /// Top-k query restricted to the first `tables` tables: candidates are
    /// collected, deduplicated, exactly re-ranked by the metric, and cut to
    /// k (all of them if fewer). An empty candidate set yields an empty
    /// result.
    pub fn query_limited(&self, q: &[f64], k: usize, tables: usize) -> Result<QueryResult> {
        assert!(k >= 1, "k must be at least 1");
        let start = Instant::now();
        let ids = self.candidates(q, tables)?;
        let candidates_examined = ids.len();
        let mut scored: Vec<(f64, usize)> = ids
            .into_iter()
            .map(|i| (self.config.metric.score(q, self.points.row(i)), i))
            .collect();
        scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
        Ok(QueryResult {
            ids: scored.iter().map(|&(_, i)| i).collect(),
            values: scored
                .iter()
                .map(|&(s, _)| self.config.metric.report(s))
                .collect(),
            candidates_examined,
            elapsed: start.elapsed(),
        })
    }
}
