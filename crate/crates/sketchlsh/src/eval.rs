//! Validation harness: exact top-k oracles, the recall metric, Monte-Carlo
//! collision estimation against the theoretical laws, sketch normality and
//! independence diagnostics, parameter counting, hash timing, and the
//! recall-versus-L sweep.

use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::families::{FamilyInstance, FamilyParams, HashCode, Projection, SchemeKind};
use crate::hashcore::MasterSeed;
use crate::index::{IndexConfig, LshIndex, Metric};
use crate::sketch::HcsPlan;
use crate::theory;

#[derive(PartialEq)]
struct ScoredId(f64, usize);

impl Eq for ScoredId {}

impl PartialOrd for ScoredId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoredId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Exact top-k ids for `q` under `metric` (ascending distance or descending
/// similarity), ties broken by ascending id. Heap-based: O(n log k).
pub fn brute_topk(points: &Dataset, q: &[f64], k: usize, metric: Metric) -> Result<Vec<usize>> {
    assert!(k >= 1, "k must be at least 1");
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: q.len(),
        });
    }
    let mut heap: BinaryHeap<ScoredId> = BinaryHeap::with_capacity(k + 1);
    for (i, row) in points.rows().enumerate() {
        heap.push(ScoredId(metric.score(q, row), i));
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut best = heap.into_vec();
    best.sort_unstable_by(|a, b| a.cmp(b));
    Ok(best.into_iter().map(|ScoredId(_, i)| i).collect())
}

/// Independent reference for [`brute_topk`]: full sort of all scores.
pub fn brute_topk_reference(
    points: &Dataset,
    q: &[f64],
    k: usize,
    metric: Metric,
) -> Result<Vec<usize>> {
    assert!(k >= 1, "k must be at least 1");
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: q.len(),
        });
    }
    let mut scored: Vec<(f64, usize)> = points
        .rows()
        .enumerate()
        .map(|(i, row)| (metric.score(q, row), i))
        .collect();
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

/// |truth ∩ retrieved| / |truth|, treating both sides as id sets.
pub fn recall(truth: &[usize], retrieved: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let truth_set: HashSet<usize> = truth.iter().copied().collect();
    let retrieved_set: HashSet<usize> = retrieved.iter().copied().collect();
    Ok(truth_set.intersection(&retrieved_set).count() as f64 / truth_set.len() as f64)
}

fn random_unit(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Two unit d-vectors at angle `theta`: random u, and v = cos(theta) u +
/// sin(theta) u_perp with u_perp a random unit vector orthogonal to u.
///
/// Panics unless d >= 2 and theta lies in [0, pi].
pub fn pair_at_angle(d: usize, theta: f64, seed: MasterSeed) -> (Vec<f64>, Vec<f64>) {
    assert!(d >= 2, "need at least two dimensions to realize an angle");
    assert!((0.0..=PI).contains(&theta), "angle must lie in [0, pi]");
    let mut rng = seed.rng();
    let u = random_unit(&mut rng, d);
    let perp = loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let proj: f64 = g.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = g.iter().zip(u.iter()).map(|(a, b)| a - proj * b).collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            break w.into_iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let (c, s) = (theta.cos(), theta.sin());
    let v: Vec<f64> = u
        .iter()
        .zip(perp.iter())
        .map(|(a, b)| c * a + s * b)
        .collect();
    (u, v)
}

/// A random unit vector p and q = p + r e for a random unit direction e, so
/// the pair sits at Euclidean distance `r`.
///
/// Panics unless r >= 0 and finite.
pub fn pair_at_distance(d: usize, r: f64, seed: MasterSeed) -> (Vec<f64>, Vec<f64>) {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(r >= 0.0 && r.is_finite(), "distance must be a finite nonnegative real");
    let mut rng = seed.rng();
    let p = random_unit(&mut rng, d);
    let e = random_unit(&mut rng, d);
    let q: Vec<f64> = p.iter().zip(e.iter()).map(|(a, b)| a + r * b).collect();
    (p, q)
}

/// Empirical collision frequencies over independently seeded families,
/// alongside the theoretical single-coordinate probability for the pair's
/// geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEstimate {
    pub trials: usize,
    pub code_length: usize,
    /// Coordinate-level collisions, aggregated over all m coordinates.
    pub hits: usize,
    /// Trials in which the entire m-coordinate code collided.
    pub full_hits: usize,
    /// Theoretical single-coordinate collision probability.
    pub theoretical: f64,
}

impl CollisionEstimate {
    /// Empirical per-coordinate collision rate.
    pub fn empirical(&self) -> f64 {
        self.hits as f64 / (self.trials * self.code_length) as f64
    }

    /// Empirical full-code collision rate.
    pub fn full_empirical(&self) -> f64 {
        self.full_hits as f64 / self.trials as f64
    }

    pub fn abs_error(&self) -> f64 {
        (self.empirical() - self.theoretical).abs()
    }

    /// Theoretical full-code probability under coordinate independence.
    pub fn theoretical_full(&self) -> f64 {
        self.theoretical.powi(self.code_length as i32)
    }

    /// 3-sigma binomial bound on the per-coordinate rate at the theoretical
    /// probability and the observed comparison count.
    pub fn three_sigma(&self) -> f64 {
        let n = (self.trials * self.code_length) as f64;
        3.0 * (self.theoretical * (1.0 - self.theoretical) / n).sqrt()
    }
}

/// Draws `trials` independently seeded families of `params` and counts
/// coordinate-level and full-code collisions between hash(u) and hash(v).
pub fn estimate_collision(
    params: FamilyParams,
    u: &[f64],
    v: &[f64],
    trials: usize,
    seed: MasterSeed,
) -> Result<CollisionEstimate> {
    assert!(trials >= 1, "need at least one trial");
    if u.len() != params.d || v.len() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            got: if u.len() != params.d { u.len() } else { v.len() },
        });
    }
    let theoretical = if u == v {
        1.0
    } else if params.kind.is_euclidean() {
        let r = u
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if r == 0.0 {
            1.0
        } else {
            theory::p_collision_e2lsh(r, params.w)?
        }
    } else {
        theory::p_collision_srp(theory::angle_between(u, v)?)?
    };
    let counts = exec::map_indexed(trials, |t| -> Result<(usize, bool)> {
        let fam = FamilyInstance::new(seed.derive(&format!("trial{t}")), params)?;
        let hu = fam.hash(u)?;
        let hv = fam.hash(v)?;
        let same = match (&hu, &hv) {
            (HashCode::Euclidean(a), HashCode::Euclidean(b)) => {
                a.iter().zip(b.iter()).filter(|(x, y)| x == y).count()
            }
            (HashCode::Cosine(a), HashCode::Cosine(b)) => {
                a.iter().zip(b.iter()).filter(|(x, y)| x == y).count()
            }
            _ => unreachable!("one family emits one code variant"),
        };
        Ok((same, same == params.m))
    });
    let mut hits = 0;
    let mut full_hits = 0;
    for c in counts {
        let (same, full) = c?;
        hits += same;
        full_hits += full as usize;
    }
    Ok(CollisionEstimate {
        trials,
        code_length: params.m,
        hits,
        full_hits,
        theoretical,
    })
}

/// Distribution diagnostics of sketch coordinates over independent plans.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchDiagnostics {
    pub plans: usize,
    /// Per-coordinate sample variance across plans.
    pub variances: Vec<f64>,
    /// Largest |sample correlation| over distinct coordinate pairs.
    pub max_abs_correlation: f64,
    /// Mean squared norm of the sketch across plans.
    pub mean_norm_sq: f64,
}

/// Sketches `p` under `plans` independently seeded plans of the given order
/// (order 1 is the plain count sketch) and code length `m`, and returns
/// per-coordinate variances plus the worst pairwise correlation.
///
/// Panics if fewer than 100 plans are requested.
pub fn sketch_diagnostics(
    p: &[f64],
    m: usize,
    plans: usize,
    order: usize,
    seed: MasterSeed,
) -> Result<SketchDiagnostics> {
    assert!(plans >= 100, "diagnostics need at least 100 plans");
    let d = p.len();
    let sketches = exec::map_indexed(plans, |t| -> Result<Vec<f64>> {
        HcsPlan::new(seed.derive(&format!("plan{t}")), d, m, order)?.apply(p)
    });
    let mut sums = vec![0.0; m];
    let mut cross = vec![0.0; m * m];
    let mut norm_sq_sum = 0.0;
    let mut count = 0usize;
    for s in sketches {
        let s = s?;
        for l in 0..m {
            sums[l] += s[l];
            for j in l..m {
                cross[l * m + j] += s[l] * s[j];
            }
        }
        norm_sq_sum += s.iter().map(|x| x * x).sum::<f64>();
        count += 1;
    }
    let n = count as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let variances: Vec<f64> = (0..m)
        .map(|l| cross[l * m + l] / n - means[l] * means[l])
        .collect();
    let mut max_abs_correlation: f64 = 0.0;
    for l in 0..m {
        for j in (l + 1)..m {
            let cov = cross[l * m + j] / n - means[l] * means[j];
            let denom = (variances[l] * variances[j]).sqrt();
            if denom > 0.0 {
                max_abs_correlation = max_abs_correlation.max((cov / denom).abs());
            }
        }
    }
    Ok(SketchDiagnostics {
        plans: count,
        variances,
        max_abs_correlation,
        mean_norm_sq: norm_sq_sum / n,
    })
}

/// Space accounting for one family under the materialized-table convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub scheme: SchemeKind,
    /// Numeric values held by the family with its evaluation tables
    /// materialized (projection entries plus offsets).
    pub stored_values: u64,
    /// The complexity-table formula instantiated at the family's shape.
    pub formula_values: u64,
    /// Footnote metric: values needed under the compact coefficient
    /// representation (hash coefficients plus offsets).
    pub coefficient_values: u64,
}

/// Counts the materialized numeric values of `fam` and the matching formula
/// instantiation: m*d Gaussians for the dense schemes, 2d table entries for
/// count-sketch schemes, 2*sum(d_k) for higher-order schemes, plus m offsets
/// for the Euclidean variants.
pub fn param_count(fam: &FamilyInstance) -> ParamCount {
    let p = fam.params();
    let offsets = fam.offsets().map_or(0, |o| o.len()) as u64;
    let (stored, coeff) = match fam.projection() {
        Projection::Dense(g) => {
            let dense = (g.rows() * g.cols()) as u64;
            (dense, dense)
        }
        Projection::Sketch(plan) => {
            let table =
                (plan.bucket().materialize().len() + plan.sign().materialize().len()) as u64;
            (table, 4)
        }
        Projection::Tensor(plan) => {
            let table: usize = plan
                .buckets()
                .iter()
                .map(|b| b.materialize().len())
                .chain(plan.signs().iter().map(|s| s.materialize().len()))
                .sum();
            (table as u64, 4 * plan.order() as u64)
        }
    };
    let formula = match fam.projection() {
        Projection::Dense(_) => (p.m * p.d) as u64,
        Projection::Sketch(_) => 2 * p.d as u64,
        Projection::Tensor(plan) => 2 * plan.mode_dims().iter().sum::<usize>() as u64,
    } + offsets;
    ParamCount {
        scheme: p.kind,
        stored_values: stored + offsets,
        formula_values: formula,
        coefficient_values: coeff + offsets,
    }
}

/// Mean wall time per hash for a freshly seeded family of `params`,
/// median-of-means over `reps` calls after 5 warmup calls.
///
/// Panics if fewer than 10 reps are requested.
pub fn time_hash(params: FamilyParams, reps: usize, seed: MasterSeed) -> Result<f64> {
    assert!(reps >= 10, "timing needs at least 10 reps");
    let fam = FamilyInstance::new(seed.derive("timing/family"), params)?;
    let mut rng = seed.derive("timing/input").rng();
    let p: Vec<f64> = (0..params.d).map(|_| rng.sample(StandardNormal)).collect();
    for _ in 0..5 {
        std::hint::black_box(fam.hash(std::hint::black_box(&p))?);
    }
    let groups = 5;
    let per_group = reps.div_ceil(groups);
    let mut means = Vec::with_capacity(groups);
    for _ in 0..groups {
        let start = Instant::now();
        for _ in 0..per_group {
            std::hint::black_box(fam.hash(std::hint::black_box(&p))?);
        }
        means.push(start.elapsed().as_secs_f64() / per_group as f64);
    }
    means.sort_unstable_by(f64::total_cmp);
    Ok(means[groups / 2])
}

/// One measured cell of the recall sweep: a (L, repetition) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallCell {
    pub l: usize,
    pub rep: usize,
    /// Value of the derived per-repetition seed.
    pub seed: u64,
    /// Recall averaged over the query set.
    pub mean_recall: f64,
    /// Summed wall time of all queries, milliseconds.
    pub total_query_time_ms: f64,
    /// Cumulative build time of the first L tables, milliseconds.
    pub build_time_ms: f64,
}

/// A sweep point: one L, averaged over repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallPoint {
    pub l: usize,
    pub mean_recall: f64,
    pub total_query_time_ms: f64,
    pub build_time_ms: f64,
}

/// Configuration of the recall-versus-L sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallSweepConfig {
    pub kind: SchemeKind,
    pub m: usize,
    pub l_values: Vec<usize>,
    pub k: usize,
    pub w: f64,
    pub order: usize,
    pub repetitions: usize,
    pub seed: MasterSeed,
    /// When set, the sweep stops after the first L whose across-repetition
    /// mean recall reaches the threshold.
    pub auto_stop: Option<f64>,
}

impl RecallSweepConfig {
    /// Defaults: w = 4.0, order = 2, one repetition, no early stop.
    pub fn new(
        kind: SchemeKind,
        m: usize,
        l_values: Vec<usize>,
        k: usize,
        seed: MasterSeed,
    ) -> Self {
        RecallSweepConfig {
            kind,
            m,
            l_values,
            k,
            w: 4.0,
            order: 2,
            repetitions: 1,
            seed,
            auto_stop: None,
        }
    }
}

/// Runs the sweep and returns one cell per (L, repetition), L ascending.
///
/// For each repetition, tables are added incrementally as L grows; by seed
/// derivation the index at L is identical to a scratch build with L tables,
/// and per-L build times are the cumulative per-table times. Ground truth
/// comes from [`brute_topk`] once per query.
pub fn run_recall_cells(
    points: &Arc<Dataset>,
    queries: &Dataset,
    cfg: &RecallSweepConfig,
) -> Result<Vec<RecallCell>> {
    if queries.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: queries.dim(),
        });
    }
    if cfg.l_values.is_empty() {
        return Err(Error::ZeroTables);
    }
    assert!(cfg.repetitions >= 1, "need at least one repetition");
    let metric = Metric::for_kind(cfg.kind);
    let truth = {
        let results = exec::map_indexed(queries.len(), |qi| {
            brute_topk(points, queries.row(qi), cfg.k, metric)
        });
        results.into_iter().collect::<Result<Vec<_>>>()?
    };
    let mut ls: Vec<usize> = cfg.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    if ls[0] == 0 {
        return Err(Error::ZeroTables);
    }
    let mut indexes: Vec<LshIndex> = (0..cfg.repetitions)
        .map(|r| {
            let config = IndexConfig {
                kind: cfg.kind,
                m: cfg.m,
                tables: ls[0],
                w: cfg.w,
                order: cfg.order,
                seed: cfg.seed.derive(&format!("rep{r}")),
                metric,
            };
            LshIndex::build(points.clone(), config)
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for &l in &ls {
        let mut recall_sum = 0.0;
        for (rep, index) in indexes.iter_mut().enumerate() {
            index.extend_to(l)?;
            let index_ref: &LshIndex = index;
            let per_query = exec::map_indexed(queries.len(), |qi| -> Result<(f64, f64)> {
                let res = index_ref.query_limited(queries.row(qi), cfg.k, l)?;
                let rec = recall(&truth[qi], &res.ids)?;
                Ok((rec, res.elapsed.as_secs_f64() * 1e3))
            });
            let mut rec_total = 0.0;
            let mut time_total = 0.0;
            for q in per_query {
                let (rec, ms) = q?;
                rec_total += rec;
                time_total += ms;
            }
            let mean_recall = rec_total / queries.len() as f64;
            recall_sum += mean_recall;
            cells.push(RecallCell {
                l,
                rep,
                seed: index_ref.config().seed.value(),
                mean_recall,
                total_query_time_ms: time_total,
                build_time_ms: index_ref.build_time(l).as_secs_f64() * 1e3,
            });
        }
        if let Some(threshold) = cfg.auto_stop {
            if recall_sum / cfg.repetitions as f64 >= threshold {
                break;
            }
        }
    }
    Ok(cells)
}

/// Runs the sweep and averages the cells over repetitions, one point per L.
pub fn run_recall_experiment(
    points: &Arc<Dataset>,
    queries: &Dataset,
    cfg: &RecallSweepConfig,
) -> Result<Vec<RecallPoint>> {
    let cells = run_recall_cells(points, queries, cfg)?;
    let mut points_out: Vec<RecallPoint> = Vec::new();
    for cell in cells {
        match points_out.last_mut() {
            Some(p) if p.l == cell.l => {
                p.mean_recall += cell.mean_recall;
                p.total_query_time_ms += cell.total_query_time_ms;
                p.build_time_ms += cell.build_time_ms;
            }
            _ => points_out.push(RecallPoint {
                l: cell.l,
                mean_recall: cell.mean_recall,
                total_query_time_ms: cell.total_query_time_ms,
                build_time_ms: cell.build_time_ms,
            }),
        }
    }
    let reps = cfg.repetitions as f64;
    for p in &mut points_out {
        p.mean_recall /= reps;
        p.total_query_time_ms /= reps;
        p.build_time_ms /= reps;
    }
    Ok(points_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth_gaussian;

    #[test]
    fn brute_topk_orders_by_distance() {
        let points = Dataset::from_rows(
            vec![vec![3.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            "line",
        )
        .unwrap();
        let got = brute_topk(&points, &[0.0, 0.0], 2, Metric::Euclidean).unwrap();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn brute_topk_breaks_ties_by_id() {
        let points = Dataset::from_rows(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            "ring",
        )
        .unwrap();
        let got = brute_topk(&points, &[0.0, 0.0], 3, Metric::Euclidean).unwrap();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn brute_topk_full_k_returns_all_sorted() {
        let points = synth_gaussian(100, 6, MasterSeed(1));
        let q = vec![0.0; 6];
        for metric in [Metric::Euclidean, Metric::Cosine] {
            let got = brute_topk(&points, &q, 100, metric).unwrap();
            let reference = brute_topk_reference(&points, &q, 100, metric).unwrap();
            assert_eq!(got.len(), 100);
            assert_eq!(got, reference);
        }
    }

    #[test]
    fn heap_and_full_sort_agree_on_random_instances() {
        for t in 0..30u64 {
            let mut rng = MasterSeed(100 + t).rng();
            let n = rng.random_range(5..300usize);
            let d = rng.random_range(2..12usize);
            let k = rng.random_range(1..=n);
            let points = synth_gaussian(n, d, MasterSeed(200 + t));
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            for metric in [Metric::Euclidean, Metric::Cosine] {
                assert_eq!(
                    brute_topk(&points, &q, k, metric).unwrap(),
                    brute_topk_reference(&points, &q, k, metric).unwrap(),
                    "n={n} d={d} k={k}"
                );
            }
        }
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(recall(&[1, 2], &[3, 4]).unwrap(), 0.0);
        assert_eq!(recall(&[1, 2, 3, 4, 5], &[1, 2, 9, 4, 8]).unwrap(), 0.6);
        assert!(matches!(recall(&[], &[1]), Err(Error::EmptyTruth)));
    }

    #[test]
    fn pair_at_angle_hits_requested_angle() {
        let (u, v) = pair_at_angle(16, 0.0, MasterSeed(1));
        let diff = u
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12, "zero angle must return the same direction");

        let (u, v) = pair_at_angle(16, PI / 2.0, MasterSeed(2));
        let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-9);

        let mut rng = MasterSeed(3).rng();
        for t in 0..100u64 {
            let d = rng.random_range(2..200usize);
            let theta = rng.random_range(0.0..PI);
            let (u, v) = pair_at_angle(d, theta, MasterSeed(1000 + t));
            let got = theory::angle_between(&u, &v).unwrap();
            assert!((got - theta).abs() < 1e-9, "d={d} theta={theta} got={got}");
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((nu - 1.0).abs() < 1e-12 && (nv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_at_distance_hits_requested_distance() {
        let (p, q) = pair_at_distance(16, 0.0, MasterSeed(4));
        assert_eq!(p, q);
        let mut rng = MasterSeed(5).rng();
        for t in 0..100u64 {
            let d = rng.random_range(1..200usize);
            let r = rng.random_range(0.0..10.0);
            let (p, q) = pair_at_distance(d, r, MasterSeed(2000 + t));
            let got = p
                .iter()
                .zip(q.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((got - r).abs() < 1e-9, "d={d} r={r} got={got}");
            let np = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((np - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_inputs_always_collide() {
        let mut rng = MasterSeed(6).rng();
        let u: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in SchemeKind::ALL {
            let est = estimate_collision(
                FamilyParams::new(kind, 40, 2),
                &u,
                &u,
                50,
                MasterSeed(7),
            )
            .unwrap();
            assert_eq!(est.empirical(), 1.0, "{kind}");
            assert_eq!(est.full_empirical(), 1.0, "{kind}");
            assert_eq!(est.theoretical, 1.0, "{kind}");
        }
    }

    #[test]
    fn srp_collision_rate_matches_law_at_right_angle() {
        let (u, v) = pair_at_angle(200, PI / 2.0, MasterSeed(8));
        let est = estimate_collision(
            FamilyParams::new(SchemeKind::Srp, 200, 1),
            &u,
            &v,
            4_000,
            MasterSeed(9),
        )
        .unwrap();
        assert_eq!(est.theoretical, 0.5);
        assert!(
            est.abs_error() < 0.03,
            "empirical {} vs 0.5 (3-sigma {})",
            est.empirical(),
            est.three_sigma()
        );
    }

    #[test]
    fn sketch_diagnostics_zero_vector_and_smoke() {
        let zero = vec![0.0; 100];
        let diag = sketch_diagnostics(&zero, 4, 100, 1, MasterSeed(10)).unwrap();
        assert!(diag.variances.iter().all(|&v| v == 0.0));
        assert_eq!(diag.max_abs_correlation, 0.0);

        let mut rng = MasterSeed(11).rng();
        let p: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm_sq: f64 = p.iter().map(|x| x * x).sum();
        let diag = sketch_diagnostics(&p, 4, 600, 1, MasterSeed(12)).unwrap();
        let expected = norm_sq / 4.0;
        for v in &diag.variances {
            assert!((v - expected).abs() / expected < 0.2, "{v} vs {expected}");
        }
        assert!((diag.mean_norm_sq - norm_sq).abs() / norm_sq < 0.1);
        assert!(diag.max_abs_correlation < 0.2);
    }

    #[test]
    fn param_count_matches_formulas() {
        let seed = MasterSeed(13);
        let cases = [
            (SchemeKind::E2lsh, 64, 640_064u64),
            (SchemeKind::Srp, 64, 640_000),
            (SchemeKind::CsE2lsh, 64, 20_064),
            (SchemeKind::CsSrp, 64, 20_000),
        ];
        for (kind, m, expected) in cases {
            let fam = FamilyInstance::new(seed, FamilyParams::new(kind, 10_000, m)).unwrap();
            let pc = param_count(&fam);
            assert_eq!(pc.stored_values, expected, "{kind}");
            assert_eq!(pc.stored_values, pc.formula_values, "{kind}");
        }
        // Tensorized schemes with modes (100, 100): 2 * 200 entries.
        let fam = FamilyInstance::new(
            seed,
            FamilyParams::new(SchemeKind::HcsSrp, 10_000, 64).with_order(2),
        )
        .unwrap();
        let pc = param_count(&fam);
        assert_eq!(pc.stored_values, 400);
        assert_eq!(pc.coefficient_values, 8);
        let fam = FamilyInstance::new(
            seed,
            FamilyParams::new(SchemeKind::HcsE2lsh, 10_000, 64).with_order(2),
        )
        .unwrap();
        let pc = param_count(&fam);
        assert_eq!(pc.stored_values, 464);
        assert_eq!(pc.formula_values, 464);
    }

    #[test]
    fn time_hash_is_repeatable_within_noise() {
        let params = FamilyParams::new(SchemeKind::E2lsh, 10_000, 4);
        let a = time_hash(params, 30, MasterSeed(14)).unwrap();
        let b = time_hash(params, 30, MasterSeed(14)).unwrap();
        assert!(a > 0.0 && b > 0.0);
        assert!(
            (a - b).abs() / a.max(b) < 0.5,
            "timing runs differ too much: {a} vs {b}"
        );
    }

    #[test]
    fn recall_sweep_reaches_one_when_candidates_cover_everything() {
        let points = Arc::new(synth_gaussian(50, 8, MasterSeed(15)));
        let queries = synth_gaussian(5, 8, MasterSeed(16));
        let mut cfg = RecallSweepConfig::new(
            SchemeKind::CsE2lsh,
            4,
            vec![1, 2],
            3,
            MasterSeed(17),
        );
        cfg.w = 1e6; // every projection lands in bucket 0: candidates = all
        cfg.repetitions = 2;
        let cells = run_recall_cells(&points, &queries, &cfg).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.mean_recall == 1.0));
    }

    #[test]
    fn recall_is_monotone_in_l_per_repetition() {
        let points = Arc::new(synth_gaussian(80, 12, MasterSeed(18)));
        let queries = synth_gaussian(8, 12, MasterSeed(19));
        let mut cfg = RecallSweepConfig::new(
            SchemeKind::Srp,
            6,
            vec![1, 3, 6],
            5,
            MasterSeed(20),
        );
        cfg.repetitions = 2;
        let cells = run_recall_cells(&points, &queries, &cfg).unwrap();
        assert_eq!(cells.len(), 6);
        for rep in 0..2 {
            let series: Vec<f64> = cells
                .iter()
                .filter(|c| c.rep == rep)
                .map(|c| c.mean_recall)
                .collect();
            assert!(series.windows(2).all(|w| w[0] <= w[1]), "rep {rep}: {series:?}");
        }
        let avg = run_recall_experiment(&points, &queries, &cfg).unwrap();
        assert_eq!(avg.len(), 3);
        let hand: f64 = cells
            .iter()
            .filter(|c| c.l == 3)
            .map(|c| c.mean_recall)
            .sum::<f64>()
            / 2.0;
        assert!((avg[1].mean_recall - hand).abs() < 1e-12);
    }

    #[test]
    fn auto_stop_cuts_the_sweep() {
        let points = Arc::new(synth_gaussian(40, 6, MasterSeed(21)));
        let queries = synth_gaussian(4, 6, MasterSeed(22));
        let mut cfg =
            RecallSweepConfig::new(SchemeKind::CsSrp, 2, vec![1, 2, 3], 2, MasterSeed(23));
        cfg.repetitions = 2;
        cfg.auto_stop = Some(0.0);
        let cells = run_recall_cells(&points, &queries, &cfg).unwrap();
        assert_eq!(cells.len(), 2, "threshold 0 stops after the first L");
        assert!(cells.iter().all(|c| c.l == 1));
    }
}
