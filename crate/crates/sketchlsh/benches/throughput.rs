//! Criterion benchmarks for hashing throughput, index build/query latency,
//! and the parallel runtime against a single worker thread.
//!
//! The same benchmark IDs exist in both feature modes, so criterion's saved
//! baselines compare the data-parallel build with the sequential fallback:
//!
//! ```text
//! cargo bench -p sketchlsh -- --save-baseline parallel
//! cargo bench -p sketchlsh --no-default-features -- --load-baseline parallel
//! ```

use std::hint::black_box;
use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use sketchlsh::{
    exec, synth_gaussian, FamilyInstance, FamilyParams, IndexConfig, LshIndex, MasterSeed,
    SchemeKind,
};

const DIM: usize = 1_024;
const BATCH: usize = 256;

fn family(kind: SchemeKind, d: usize, m: usize) -> FamilyInstance {
    let mut params = FamilyParams::new(kind, d, m);
    if kind.is_tensorized() {
        params = params.with_order(2);
    }
    FamilyInstance::new(MasterSeed(11), params).expect("valid family parameters")
}

/// Single-vector hashing cost per scheme at short and long codes. The dense
/// schemes scale with m * d; the sketched ones pay one sketch regardless of m.
fn hash_one(c: &mut Criterion) {
    let input = synth_gaussian(1, DIM, MasterSeed(3));
    let mut group = c.benchmark_group("hash_one");
    group
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(1));
    for kind in SchemeKind::ALL {
        for m in [8usize, 64] {
            let fam = family(kind, DIM, m);
            group.throughput(Throughput::Elements(1));
            group.bench_with_input(BenchmarkId::new(kind.name(), m), &m, |b, _| {
                b.iter(|| fam.hash(black_box(input.row(0))).unwrap())
            });
        }
    }
    group.finish();
}

/// Batch hashing through the execution layer; this is the code path the index
/// builder and the estimators use, so it reflects the parallel/sequential
/// feature split directly.
fn hash_batch(c: &mut Criterion) {
    let input = synth_gaussian(BATCH, DIM, MasterSeed(4));
    let mut group = c.benchmark_group("hash_batch");
    group
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2))
        .sample_size(20);
    for kind in SchemeKind::ALL {
        let fam = family(kind, DIM, 8);
        group.throughput(Throughput::Elements(BATCH as u64));
        group.bench_function(BenchmarkId::new(kind.name(), BATCH), |b| {
            b.iter(|| exec::map_indexed(BATCH, |i| fam.hash(black_box(input.row(i))).unwrap()))
        });
    }
    group.finish();
}

/// Index construction (n points into L tables) and candidate retrieval.
fn index_ops(c: &mut Criterion) {
    let (n, d, m, tables, k) = (2_000, 64, 8, 4, 10);
    let points = Arc::new(synth_gaussian(n, d, MasterSeed(5)));
    let queries = synth_gaussian(16, d, MasterSeed(6));

    let mut group = c.benchmark_group("index_build");
    group
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2))
        .sample_size(10);
    for kind in [SchemeKind::E2lsh, SchemeKind::CsE2lsh, SchemeKind::HcsE2lsh] {
        let mut config = IndexConfig::new(kind, m, tables, MasterSeed(7));
        if kind.is_tensorized() {
            config = config.with_order(2);
        }
        group.bench_function(kind.name(), |b| {
            b.iter(|| LshIndex::build(Arc::clone(&points), config.clone()).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("index_query");
    group
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(1));
    for kind in [SchemeKind::E2lsh, SchemeKind::CsE2lsh, SchemeKind::HcsE2lsh] {
        let mut config = IndexConfig::new(kind, m, tables, MasterSeed(7));
        if kind.is_tensorized() {
            config = config.with_order(2);
        }
        let index = LshIndex::build(Arc::clone(&points), config).unwrap();
        group.throughput(Throughput::Elements(queries.len() as u64));
        group.bench_function(kind.name(), |b| {
            b.iter(|| {
                for q in queries.rows() {
                    black_box(index.query_limited(black_box(q), k, tables).unwrap());
                }
            })
        });
    }
    group.finish();
}

/// The same batch-hash workload on the default worker pool and on a pool
/// restricted to one thread. In the sequential build only the one-thread
/// variant exists, so its timings line up across feature modes.
fn thread_comparison(c: &mut Criterion) {
    let input = synth_gaussian(BATCH, DIM, MasterSeed(8));
    let fam = family(SchemeKind::CsE2lsh, DIM, 8);
    let workload =
        || exec::map_indexed(BATCH, |i| fam.hash(black_box(input.row(i))).unwrap());

    let mut group = c.benchmark_group("threads");
    group
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2))
        .sample_size(20);

    #[cfg(feature = "parallel")]
    {
        group.bench_function(format!("default-{}", exec::worker_threads()), |b| {
            b.iter(workload)
        });
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("one-thread pool");
        group.bench_function("one-thread", |b| b.iter(|| single.install(workload)));
    }
    #[cfg(not(feature = "parallel"))]
    {
        group.bench_function("one-thread", |b| b.iter(workload));
    }
    group.finish();
}

criterion_group!(benches, hash_one, hash_batch, index_ops, thread_comparison);
criterion_main!(benches);
