//! The four workflows behind the subcommands: recall benchmarking,
//! Monte-Carlo validation, space/time scaling tables, and configuration
//! inspection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};
use sketchlsh::{
    estimate_collision, pair_at_angle, pair_at_distance, param_count, run_recall_cells,
    sketch_diagnostics, tensorize, theory, time_hash, write_results, Dataset, FamilyInstance,
    FamilyParams, MasterSeed, OutputFormat, RecallSweepConfig, ResultsRow, SchemeKind,
};

use crate::{BenchArgs, CliError, InfoArgs, RunManifest, ScalingArgs, ValidateArgs};

fn flag_map(pairs: Vec<(&str, Value)>) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Resolves a scheme list, expanding `all` and rejecting unknown names.
pub fn parse_schemes(names: &[String]) -> Result<Vec<SchemeKind>, CliError> {
    let mut kinds = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            for k in SchemeKind::ALL {
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
            continue;
        }
        let kind: SchemeKind = name
            .parse()
            .map_err(|e: sketchlsh::Error| CliError::Usage(e.to_string()))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("no schemes requested".to_string()));
    }
    Ok(kinds)
}

enum Sink {
    File(BufWriter<File>),
    Stdout(std::io::Stdout),
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            Sink::File(f) => f.write(buf),
            Sink::Stdout(s) => s.write(buf),
        }
    }
    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            Sink::File(f) => f.flush(),
            Sink::Stdout(s) => s.flush(),
        }
    }
}

fn open_sink(out: &Option<PathBuf>) -> Result<Sink, CliError> {
    match out {
        Some(path) => Ok(Sink::File(BufWriter::new(
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        ))),
        None => Ok(Sink::Stdout(std::io::stdout())),
    }
}

fn write_preamble(sink: &mut Sink, manifest: &RunManifest, format: OutputFormat) -> Result<(), CliError> {
    let line = manifest.to_line();
    let rendered = match format {
        OutputFormat::Csv => format!("# {line}\n"),
        OutputFormat::JsonLines => format!("{line}\n"),
    };
    sink.write_all(rendered.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))
}

fn load_dataset(args: &BenchArgs, seed: MasterSeed) -> Result<Dataset, CliError> {
    if let Some(spec) = &args.data.synth {
        return Ok(sketchlsh::synth_gaussian(spec.n, spec.d, seed.derive("synth")));
    }
    if let Some(path) = &args.data.csv {
        return Ok(sketchlsh::load_csv(path)?);
    }
    if let Some(path) = &args.data.fvecs {
        return Ok(sketchlsh::load_fvecs(path)?);
    }
    Err(CliError::Usage(
        "one of --synth, --csv, --fvecs is required".to_string(),
    ))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let schemes = parse_schemes(&args.schemes)?;
    let w = args.w.unwrap_or(4.0);
    if !(w.is_finite() && w > 0.0) {
        return Err(CliError::Usage(format!(
            "--w {w} is invalid: bucket width must be a positive finite real"
        )));
    }
    if args.w.is_some() && schemes.iter().all(|k| k.is_cosine()) {
        return Err(CliError::Usage(
            "--w only applies to Euclidean schemes, but only cosine schemes were requested"
                .to_string(),
        ));
    }
    if args.order == 0 {
        return Err(CliError::Usage("--order must be at least 1".to_string()));
    }
    if args.m == 0 || args.k == 0 || args.reps == 0 {
        return Err(CliError::Usage(
            "--m, --k, and --reps must be at least 1".to_string(),
        ));
    }
    if let Some(t) = args.auto_stop {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::Usage(format!(
                "--auto-stop {t} is invalid: recall threshold must lie in [0, 1]"
            )));
        }
    }
    let format: OutputFormat = args
        .format
        .parse()
        .map_err(|e: sketchlsh::Error| CliError::Usage(e.to_string()))?;

    let seed = MasterSeed(args.seed);
    let all = load_dataset(args, seed)?;
    let q = if args.random_split {
        (all.len() / 10).max(1)
    } else {
        args.queries
    };
    let (train, queries) = if args.random_split {
        all.split_random(q, seed.derive("split"))?
    } else {
        all.split_tail(q)?
    };
    let d = train.dim();
    let n = train.len();
    let train = Arc::new(train);

    let manifest = RunManifest::new(
        "bench",
        flag_map(vec![
            ("data", json!(all_source(args))),
            ("n", json!(n)),
            ("d", json!(d)),
            ("queries", json!(queries.len())),
            ("random_split", json!(args.random_split)),
            (
                "schemes",
                json!(schemes.iter().map(|k| k.name()).collect::<Vec<_>>()),
            ),
            ("m", json!(args.m)),
            ("k", json!(args.k)),
            ("L", json!(args.l.display())),
            ("w", json!(w)),
            ("order", json!(args.order)),
            ("reps", json!(args.reps)),
            ("seed", json!(args.seed)),
            ("auto_stop", json!(args.auto_stop)),
            ("format", json!(args.format)),
            ("modes", json!(hcs_modes(&schemes, d, args.order))),
        ]),
    );

    let mut rows: Vec<ResultsRow> = Vec::new();
    for &kind in &schemes {
        let mut cfg = RecallSweepConfig::new(
            kind,
            args.m,
            args.l.values(),
            args.k,
            seed.derive(kind.name()),
        );
        cfg.w = w;
        cfg.order = args.order;
        cfg.repetitions = args.reps;
        cfg.auto_stop = args.auto_stop;
        let cells = run_recall_cells(&train, &queries, &cfg)?;
        let params = FamilyParams::new(kind, d, args.m)
            .with_w(w)
            .with_order(args.order);
        let stored = param_count(&FamilyInstance::new(seed.derive("shape"), params)?).stored_values;
        if let Some(last) = cells.last() {
            eprintln!(
                "{kind}: {} cells, mean recall {:.3} at L={}",
                cells.len(),
                last.mean_recall,
                last.l
            );
        }
        rows.extend(cells.into_iter().map(|c| ResultsRow {
            scheme: kind.name().to_string(),
            m: args.m,
            l: c.l,
            k: args.k,
            seed: c.seed,
            mean_recall: c.mean_recall,
            total_query_time_ms: c.total_query_time_ms,
            build_time_ms: c.build_time_ms,
            stored_values: stored,
            d,
            n,
        }));
    }

    let mut sink = open_sink(&args.out)?;
    write_preamble(&mut sink, &manifest, format)?;
    write_results(&rows, &mut sink, format)?;
    Ok(0)
}

fn all_source(args: &BenchArgs) -> String {
    if let Some(spec) = &args.data.synth {
        format!("synth:n={},d={}", spec.n, spec.d)
    } else if let Some(p) = &args.data.csv {
        format!("csv:{}", p.display())
    } else if let Some(p) = &args.data.fvecs {
        format!("fvecs:{}", p.display())
    } else {
        "unspecified".to_string()
    }
}

/// Mode shapes for any tensorized schemes in the run, for the manifest.
fn hcs_modes(schemes: &[SchemeKind], d: usize, order: usize) -> Option<Vec<usize>> {
    schemes
        .iter()
        .any(|k| k.is_tensorized())
        .then(|| tensorize(d, order).0)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<u8, CliError> {
    let schemes = parse_schemes(&args.schemes)?;
    if args.trials == 0 || args.d == 0 {
        return Err(CliError::Usage(
            "--trials and --d must be at least 1".to_string(),
        ));
    }
    if args.plans < 100 {
        return Err(CliError::Usage(
            "--plans must be at least 100 for stable diagnostics".to_string(),
        ));
    }
    let seed = MasterSeed(args.seed);
    let manifest = RunManifest::new(
        "validate",
        flag_map(vec![
            ("trials", json!(args.trials)),
            ("d", json!(args.d)),
            ("plans", json!(args.plans)),
            ("m", json!(args.m)),
            (
                "schemes",
                json!(schemes.iter().map(|k| k.name()).collect::<Vec<_>>()),
            ),
            ("seed", json!(args.seed)),
        ]),
    );
    let mut sink = open_sink(&args.out)?;
    let mut emit = |line: &str| -> Result<(), CliError> {
        sink.write_all(line.as_bytes())
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|e| CliError::Io(e.to_string()))
    };
    emit(&manifest.to_line())?;
    emit("check,scheme,geometry,theory,observed,abs_err,bound,status")?;

    let mut all_ok = true;
    let angles = [(PI / 6.0, "theta=pi/6"), (PI / 3.0, "theta=pi/3"), (PI / 2.0, "theta=pi/2")];
    let distances = [(0.5, "R=0.5"), (1.0, "R=1"), (2.0, "R=2"), (4.0, "R=4")];
    let self_input = sketchlsh::synth_gaussian(1, args.d, seed.derive("self"));
    for &kind in &schemes {
        // Self-check: identical inputs must always collide.
        let u = self_input.row(0);
        let est = estimate_collision(
            FamilyParams::new(kind, args.d, 1),
            u,
            u,
            (args.trials / 100).max(10),
            seed.derive(&format!("{kind}/self")),
        )?;
        let ok = est.empirical() == 1.0;
        all_ok &= ok;
        emit(&format!(
            "collision,{kind},u=v,1,{},{:e},0,{}",
            est.empirical(),
            est.abs_error(),
            if ok { "PASS" } else { "FAIL" }
        ))?;

        let cells: &[(f64, &str)] = if kind.is_cosine() { &angles } else { &distances };
        for &(g, label) in cells {
            let (u, v) = if kind.is_cosine() {
                pair_at_angle(args.d, g, seed.derive(&format!("pair/{label}")))
            } else {
                pair_at_distance(args.d, g, seed.derive(&format!("pair/{label}")))
            };
            let est = estimate_collision(
                FamilyParams::new(kind, args.d, 1),
                &u,
                &v,
                args.trials,
                seed.derive(&format!("{kind}/{label}")),
            )?;
            let ok = est.abs_error() <= est.three_sigma();
            all_ok &= ok;
            emit(&format!(
                "collision,{kind},{label},{:.6},{:.6},{:.6},{:.6},{}",
                est.theoretical,
                est.empirical(),
                est.abs_error(),
                est.three_sigma(),
                if ok { "PASS" } else { "FAIL" }
            ))?;
        }
    }

    // Sketch distribution diagnostics: coordinate variance and worst pairwise
    // correlation for the count-sketch (order 1) and order-2 projections.
    let diag_input = sketchlsh::synth_gaussian(1, args.d, seed.derive("diag-input"));
    let p = diag_input.row(0);
    let norm_sq: f64 = p.iter().map(|x| x * x).sum();
    let expected = norm_sq / args.m as f64;
    for (label, order) in [("cs", 1usize), ("hcs-n2", 2)] {
        let diag = sketch_diagnostics(p, args.m, args.plans, order, seed.derive(label))?;
        let worst_rel = diag
            .variances
            .iter()
            .map(|v| (v - expected).abs() / expected)
            .fold(0.0f64, f64::max);
        // Relative 3-sigma of a sample variance over n plans is about
        // 3*sqrt(2/n) per coordinate; the factor 4 Bonferroni-covers the max
        // over the m coordinates.
        let var_bound = 4.0 * (2.0 / args.plans as f64).sqrt();
        let ok = worst_rel <= var_bound;
        all_ok &= ok;
        emit(&format!(
            "variance,{label},|p|^2/m,{expected:.4},worst_rel={worst_rel:.4},{worst_rel:.4},{var_bound:.4},{}",
            if ok { "PASS" } else { "FAIL" }
        ))?;
        // Per-pair 3-sigma is 3/sqrt(n); 4.5 Bonferroni-covers the maximum
        // over the m(m-1)/2 pairs.
        let corr_bound = 4.5 / (args.plans as f64).sqrt();
        let ok = diag.max_abs_correlation <= corr_bound;
        all_ok &= ok;
        emit(&format!(
            "correlation,{label},pairwise,0,{:.4},{:.4},{corr_bound:.4},{}",
            diag.max_abs_correlation,
            diag.max_abs_correlation,
            if ok { "PASS" } else { "FAIL" }
        ))?;
    }
    emit(&format!(
        "summary,all,,,,,,{}",
        if all_ok { "PASS" } else { "FAIL" }
    ))?;
    Ok(if all_ok { 0 } else { 2 })
}

pub fn cmd_scaling(args: &ScalingArgs) -> Result<u8, CliError> {
    let schemes = parse_schemes(&args.schemes)?;
    if args.d == 0 || args.m.is_empty() {
        return Err(CliError::Usage(
            "--d must be positive and --m nonempty".to_string(),
        ));
    }
    if args.reps < 10 {
        return Err(CliError::Usage(
            "--reps must be at least 10 for stable timing".to_string(),
        ));
    }
    for &o in &args.orders {
        if o == 0 {
            return Err(CliError::Usage("--orders entries must be at least 1".to_string()));
        }
    }
    let seed = MasterSeed(args.seed);
    let manifest = RunManifest::new(
        "scaling",
        flag_map(vec![
            ("d", json!(args.d)),
            ("m", json!(args.m)),
            ("orders", json!(args.orders)),
            ("reps", json!(args.reps)),
            (
                "schemes",
                json!(schemes.iter().map(|k| k.name()).collect::<Vec<_>>()),
            ),
            ("seed", json!(args.seed)),
        ]),
    );
    let mut sink = open_sink(&args.out)?;
    let mut emit = |line: &str| -> Result<(), CliError> {
        sink.write_all(line.as_bytes())
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|e| CliError::Io(e.to_string()))
    };
    emit(&format!("# {}", manifest.to_line()))?;
    emit("scheme,m,order,stored_values,formula_values,coefficient_values,ns_per_hash")?;
    for &kind in &schemes {
        let orders: &[usize] = if kind.is_tensorized() { &args.orders } else { &[1] };
        for &order in orders {
            for &m in &args.m {
                let params = FamilyParams::new(kind, args.d, m).with_order(order);
                let fam = FamilyInstance::new(seed.derive(&format!("{kind}/{order}/{m}")), params)?;
                let pc = param_count(&fam);
                if pc.stored_values != pc.formula_values {
                    return Err(CliError::Validation(format!(
                        "{kind} m={m} N={order}: stored {} != formula {}",
                        pc.stored_values, pc.formula_values
                    )));
                }
                let secs = time_hash(params, args.reps, seed.derive("timing"))?;
                let order_col = if kind.is_tensorized() {
                    order.to_string()
                } else {
                    "-".to_string()
                };
                emit(&format!(
                    "{kind},{m},{order_col},{},{},{},{:.1}",
                    pc.stored_values,
                    pc.formula_values,
                    pc.coefficient_values,
                    secs * 1e9
                ))?;
            }
        }
    }
    Ok(0)
}

pub fn cmd_info(args: &InfoArgs) -> Result<u8, CliError> {
    let kind: SchemeKind = args
        .scheme
        .parse()
        .map_err(|e: sketchlsh::Error| CliError::Usage(e.to_string()))?;
    if args.d == 0 || args.m == 0 || args.order == 0 {
        return Err(CliError::Usage(
            "--d, --m, and --order must be at least 1".to_string(),
        ));
    }
    if !(args.w.is_finite() && args.w > 0.0) {
        return Err(CliError::Usage(format!(
            "--w {} is invalid: bucket width must be a positive finite real",
            args.w
        )));
    }
    let manifest = RunManifest::new(
        "info",
        flag_map(vec![
            ("scheme", json!(kind.name())),
            ("d", json!(args.d)),
            ("m", json!(args.m)),
            ("order", json!(args.order)),
            ("w", json!(args.w)),
            ("r1", json!(args.r1)),
            ("r2", json!(args.r2)),
            ("theta1", json!(args.theta1)),
            ("theta2", json!(args.theta2)),
        ]),
    );
    let mut sink = open_sink(&args.out)?;
    let mut emit = |line: &str| -> Result<(), CliError> {
        sink.write_all(line.as_bytes())
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|e| CliError::Io(e.to_string()))
    };
    emit(&manifest.to_line())?;
    emit(&format!("scheme: {kind}"))?;
    emit(&format!(
        "metric: {}",
        if kind.is_euclidean() { "euclidean" } else { "cosine" }
    ))?;
    emit(&format!("d: {}  m: {}", args.d, args.m))?;
    if kind.is_tensorized() {
        let (modes, padded) = tensorize(args.d, args.order);
        emit(&format!("order: {}  modes: {modes:?}  padded_d: {padded}", args.order))?;
    }
    if kind.is_euclidean() {
        emit(&format!("w: {}", args.w))?;
    }

    let geometry = if kind.is_euclidean() {
        theory::Geometry::Euclidean {
            r1: args.r1,
            r2: args.r2,
            w: args.w,
        }
    } else {
        theory::Geometry::Cosine {
            theta1: args.theta1,
            theta2: args.theta2,
        }
    };
    let tuple = theory::sensitivity(kind, geometry, args.m)?;
    let (f1, f2) = tuple.family_probabilities();
    emit(&format!(
        "sensitivity: near={} far={} p1={:.6} p2={:.6}",
        tuple.near, tuple.far, tuple.p1, tuple.p2
    ))?;
    emit(&format!(
        "concatenated (m={}): p1^m={:.6e} p2^m={:.6e}",
        args.m, f1, f2
    ))?;

    if kind.is_sketched() {
        let threshold = (args.d as f64).powf(0.125);
        if args.m as f64 >= threshold {
            emit(&format!(
                "warning: m={} >= d^(1/8)={threshold:.2}; the sketch-normality approximation \
                 behind the collision law degrades as the code length grows relative to d",
                args.m
            ))?;
        }
    }
    if kind.is_tensorized() {
        let (modes, padded) = tensorize(args.d, args.order);
        if padded > args.d {
            emit(&format!(
                "note: d={} is padded to {padded} to fit modes {modes:?}",
                args.d
            ))?;
        }
    }
    Ok(0)
}
