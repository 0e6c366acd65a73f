//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are printed even when everything passes.

mod common;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use depth_f1::corpus::with_predictions;
use depth_f1::demo::{self, DemoConfig, ModelKind};
use depth_f1::depth::{depth_scores, q_statistic, source_median, DepthTable};
use depth_f1::metric::{self, depth_f1, lambda_subset, micro_f1, Lambda, LambdaGrid, WeightTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn within_time(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let ok = outcome.ok && elapsed < limit;
    check(ok, format!("{}; {:.2?} (limit {:?})", outcome.detail, elapsed, limit))
}

fn analytic_depth_fixtures() -> Outcome {
    let start = Instant::now();
    let e1 = [1.0, 0.0];
    let e2 = [0.0, 1.0];
    let m = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
    let cases = [
        (depth_scores(&[e1], &[e1]).unwrap().scores[0], 2.0),
        (depth_scores(&[e1], &[e1, e2]).unwrap().scores[0], 1.5),
        (depth_scores(&[m], &[e1, e2]).unwrap().scores[0], 2.0 - (1.0 - FRAC_1_SQRT_2)),
    ];
    let worst = cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    within_time(check(worst <= 1e-12, format!("max |err| = {worst:.2e}")), start.elapsed(), Duration::from_secs(1))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_depth = 0.0f64;
    let mut worst_df1 = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let src = depth_scores(&inst.source, &inst.source).unwrap();
        let tgt = depth_scores(&inst.target, &inst.source).unwrap();
        let oracle_src = naive_depths(&inst.source, &inst.source);
        let oracle_tgt = naive_depths(&inst.target, &inst.source);
        for (a, b) in src.scores.iter().chain(&tgt.scores).zip(oracle_src.iter().chain(&oracle_tgt)) {
            worst_depth = worst_depth.max((a - b).abs());
        }

        let ids: Vec<String> = (0..inst.source.len()).map(|i| format!("s{i}")).collect();
        let median = source_median(&src, &ids).unwrap();
        let oracle_idx = naive_argmax(&oracle_src);
        // Two routes may disagree on an argmax only when the top scores
        // coincide to within rounding.
        if median.index != oracle_idx && (oracle_src[median.index] - oracle_src[oracle_idx]).abs() > 1e-12 {
            failures.push(format!("seed {seed}: median {} vs {}", median.index, oracle_idx));
        }

        let q = q_statistic(&src, &tgt).unwrap().value;
        let q_oracle = naive_q(&src.scores, &tgt.scores);
        if (q - q_oracle).abs() > 1e-12 {
            failures.push(format!("seed {seed}: q {q} vs {q_oracle}"));
        }

        let w = WeightTable { indices: (0..inst.weights.len()).collect(), weights: inst.weights.clone(), clamped_count: 0 };
        let preds: Vec<Option<&str>> = inst.preds.iter().map(|p| Some(p.as_str())).collect();
        let df1 = depth_f1(&inst.labels, &preds, &w).unwrap();
        worst_df1 = worst_df1.max((df1 - naive_df1(&inst.labels, &inst.preds, &inst.weights)).abs());
    }
    let ok = failures.is_empty() && worst_depth <= 1e-12 && worst_df1 <= 1e-12;
    let mut detail = format!(
        "200 corpora; max depth err {worst_depth:.2e}, max df1 err {worst_df1:.2e}; {} median/q mismatches",
        failures.len()
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!(" (first: {first})"));
    }
    within_time(check(ok, detail), start.elapsed(), Duration::from_secs(10))
}

fn q_self_law() -> Outcome {
    let start = Instant::now();
    let n = 100;
    let expected = (n as f64 + 1.0) / (2.0 * n as f64);
    let mut tested = 0;
    let mut bad = 0;
    let mut seed = 0u64;
    while tested < 50 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        seed += 1;
        let dim = rng.random_range(2..=8);
        let source: Vec<Vec<f64>> = (0..n).map(|_| random_vector(&mut rng, dim)).collect();
        let depths = depth_scores(&source, &source).unwrap();
        let mut sorted = depths.scores.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        tested += 1;
        if q_statistic(&depths, &depths).unwrap().value != expected {
            bad += 1;
        }
    }
    within_time(
        check(bad == 0, format!("{tested} corpora of n={n}; {bad} differ from {expected}")),
        start.elapsed(),
        Duration::from_secs(5),
    )
}

fn df1_accuracy_identity() -> Outcome {
    let mut worst_identity = 0.0f64;
    let mut worst_uniform = 0.0f64;
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let preds: Vec<Option<&str>> = inst.preds.iter().map(|p| Some(p.as_str())).collect();
        let w = WeightTable { indices: (0..inst.weights.len()).collect(), weights: inst.weights.clone(), clamped_count: 0 };
        let df1 = depth_f1(&inst.labels, &preds, &w).unwrap();
        worst_identity = worst_identity.max((df1 - weighted_accuracy(&inst.labels, &inst.preds, &inst.weights)).abs());
        let uniform = WeightTable::uniform(inst.labels.len());
        let df1_u = depth_f1(&inst.labels, &preds, &uniform).unwrap();
        worst_uniform = worst_uniform.max((df1_u - micro_f1(&inst.labels, &preds).unwrap()).abs());
    }
    check(
        worst_identity <= 1e-12 && worst_uniform <= 1e-12,
        format!("max |DF1 - sum w_correct| = {worst_identity:.2e}, max |DF1_uniform - microF1| = {worst_uniform:.2e}"),
    )
}

fn lambda_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let table = DepthTable { scores: (0..1000).map(|_| rng.random_range(0.5..1.9)).collect(), reference_size: 1 };
    let grid = LambdaGrid::default();
    let subsets: Vec<_> = grid.iter().map(|l| lambda_subset(&table, l)).collect();
    let kept: Vec<usize> = subsets.iter().map(|s| s.kept_indices.len()).collect();
    let at_90 = lambda_subset(&table, Lambda::new(90).unwrap()).kept_indices.len();
    let nested = subsets
        .windows(2)
        .all(|w| w[1].kept_indices.iter().all(|i| w[0].kept_indices.binary_search(i).is_ok()));
    let non_increasing = kept.windows(2).all(|w| w[0] >= w[1]);
    check(at_90 == 100 && nested && non_increasing, format!("kept counts {kept:?}; nested {nested}"))
}

fn demonstration() -> Outcome {
    let start = Instant::now();
    let cfg = DemoConfig::default();
    let summary = demo::run_demo_seeds(&cfg, &LambdaGrid::default(), 30).unwrap();
    let df1 = |points: &[demo::CurvePoint]| points.iter().map(|p| p.df1_mean.unwrap_or(f64::NAN)).collect::<Vec<_>>();
    let a = df1(&summary.model_a);
    let b = df1(&summary.model_b);

    let a_ok = summary
        .model_a
        .iter()
        .zip(&a)
        .all(|(p, v)| (v - 0.83).abs() <= if p.lambda == 90 { 0.06 } else { 0.02 });
    let b_monotone = b.windows(2).all(|w| w[1] <= w[0]);
    let b_drop = b[0] - b[b.len() - 1];
    let f1_gap = (summary.model_a[0].f1_mean - summary.model_b[0].f1_mean).abs();
    let ok = a_ok && b_monotone && b_drop >= 0.03 && f1_gap < 0.03;
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let detail = format!(
        "(a) A DF1 [{}] {}; (b) B DF1 [{}] monotone {b_monotone}, drop {b_drop:.3}; (c) lambda=0 F1 gap {f1_gap:.3}",
        fmt(&a),
        if a_ok { "ok" } else { "out of band" },
        fmt(&b)
    );
    within_time(check(ok, detail), start.elapsed(), Duration::from_secs(60))
}

fn performance_bound() -> Outcome {
    let cfg = DemoConfig { n_source: 5000, n_target: 1000, dimension: 384, ..DemoConfig::default() };
    let corpus = demo::synth_corpus(&cfg).unwrap();
    let full = WeightTable::uniform(corpus.target.len());
    let preds = demo::demo_predict(ModelKind::A, &corpus, &full, &cfg).unwrap();
    let corpus = with_predictions(&corpus, corpus.target.iter().map(|t| t.id.clone()).zip(preds).collect()).unwrap();

    let start = Instant::now();
    let report = metric::evaluate_sweep(&corpus, &LambdaGrid::default()).unwrap();
    let elapsed = start.elapsed();
    within_time(
        check(report.rows.len() == 5, "evaluate_sweep on 5000 source + 1000 target, dim 384"),
        elapsed,
        Duration::from_secs(10),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DemoConfig { n_source: 300, n_target: 200, dimension: 16, seed: 3, ..DemoConfig::default() };
    let corpus = demo::synth_corpus(&cfg).unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    corpus.save(&corpus_path).unwrap();
    let preds = demo::demo_predict(ModelKind::B, &corpus, &WeightTable::uniform(200), &cfg).unwrap();
    let pred_path = dir.path().join("pred.jsonl");
    let lines: String = corpus
        .target
        .iter()
        .zip(&preds)
        .map(|(t, p)| format!("{}\n", serde_json::json!({"id": t.id, "prediction": p})))
        .collect();
    fs::write(&pred_path, lines).unwrap();

    let c = corpus_path.to_str().unwrap();
    let p = pred_path.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["validate", "--corpus", c, "--predictions", p],
        vec!["depth", "--corpus", c, "--format", "csv"],
        vec!["depth", "--corpus", c],
        vec!["median", "--corpus", c],
        vec!["qstat", "--corpus", c],
        vec!["weights", "--corpus", c, "--format", "csv"],
        vec!["evaluate", "--corpus", c, "--predictions", p],
        vec!["evaluate", "--corpus", c, "--predictions", p, "--format", "csv"],
        vec!["demo", "--seeds", "3", "--format", "csv"],
        vec!["demo", "--seeds", "3", "--seed", "9"],
    ];
    let mut differing = Vec::new();
    for args in &invocations {
        let run = || Command::new(env!("CARGO_BIN_EXE_df1")).args(args).output().unwrap();
        let (first, second) = (run(), run());
        if !first.status.success() || first.stdout.is_empty() || first.stdout != second.stdout {
            differing.push(args[0]);
        }
    }
    check(
        differing.is_empty(),
        format!("{} invocations run twice; non-identical or failed: {differing:?}", invocations.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 analytic depth fixtures", analytic_depth_fixtures),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 Q self-comparison law", q_self_law),
        ("4 DF1 accuracy identity", df1_accuracy_identity),
        ("5 lambda semantics", lambda_semantics),
        ("6 demonstration reproduction", demonstration),
        ("7 performance bound", performance_bound),
        ("8 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = run();
        let tag = if outcome.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", outcome.detail);
        if !outcome.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
