//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL` line
//! straight to stdout, so the lines show up even when output is captured.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use interview_core::engine::{
    adaptive_level, exhaustion_fallback, initial_level, oscillation_escape, replay, AccuracyScope, WeightUpdates,
};
use interview_core::harness::{run_comparison, synth_benchmark, ComparisonReport, ExperimentSpec, Strategy};
use interview_core::metrics::{average_ranks, kendall_tau_b, pearson, spearman};
use interview_core::panel::{update_weight, Interviewer};
use interview_core::participants::{SyntheticCandidate, SyntheticProfile};
use interview_core::pool::{annotate_difficulty, level_from_correct_count, VerdictMatrix};
use interview_core::rng::{derive_seed, stream_rng, Stream};
use interview_core::{run_interview, InterviewConfig, Level, Panel, Question, QuestionPool, Threshold};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {n} [{name}]: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn lvl(l: i64) -> Level {
    Level::new(l).unwrap()
}

#[test]
fn criterion_1_update_rule_fidelity() {
    let start = Instant::now();
    let half = Threshold::from_ratio(1, 2);
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    check(initial_level(lvl(5), 2, 3, half) == lvl(6), "start 5 -> 6 on 2/3");
    check(initial_level(lvl(5), 1, 3, half) == lvl(4), "start 5 -> 4 on 1/3");
    check(initial_level(lvl(5), 1, 2, half) == lvl(5), "start stays 5 on 1/2");

    let w = |weight: f64, asked: u32, correct: u32| {
        update_weight(&Interviewer { id: "i".into(), weight, asked, correct }, 0.2).weight
    };
    check(w(1.0, 3, 3) == 0.8, "weight 1.0 -> 0.8 on accuracy 1");
    check(w(1.0, 3, 0) == 0.8, "weight 1.0 -> 0.8 on accuracy 0");
    check(w(1.0, 3, 2) == 1.2, "weight 1.0 -> 1.2 on accuracy 2/3");
    check(w(1.9, 3, 2) == 2.0, "weight clamps at 2.0");
    check(w(0.55, 3, 3) == 0.5, "weight clamps at 0.5");

    check(adaptive_level(lvl(6), 3, 3, half) == lvl(7), "level 6 -> 7 on 3/3");
    check(adaptive_level(lvl(6), 1, 3, half) == lvl(5), "level 6 -> 5 on 1/3");
    check(adaptive_level(lvl(6), 3, 6, half) == lvl(6), "level 6 stays on 3/6");
    check(adaptive_level(lvl(1), 0, 3, half) == lvl(1), "level 1 stays on 0/3");
    // Cumulative accuracy at the level, not the last round alone.
    check(adaptive_level(lvl(6), 4, 6, half) == lvl(7), "cumulative 4/6 moves up");

    let hist = |ls: &[i64]| ls.iter().map(|&l| lvl(l)).collect::<Vec<_>>();
    check(oscillation_escape(&hist(&[8, 9, 8, 9, 8, 9]), 7) == Some(lvl(10)), "8,9 oscillation -> 10");
    check(oscillation_escape(&hist(&[4, 5, 4, 5, 4, 5]), 7) == Some(lvl(1)), "4,5 oscillation -> 1");
    check(oscillation_escape(&hist(&[4, 5, 4, 5, 4, 6]), 7).is_none(), "broken pattern -> none");

    let mut pool = QuestionPool::from_questions(synth_benchmark(2, 1, 0), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    pool.draw(lvl(7), 2);
    check(exhaustion_fallback(lvl(7), true, &pool) == Some(lvl(8)), "fallback up when accuracy above beta");
    check(exhaustion_fallback(lvl(7), false, &pool) == Some(lvl(6)), "fallback down otherwise");

    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed.as_secs_f64() < 1.0;
    verdict(1, "update rule fidelity", pass, &format!("{} failures {:?}, {:.0?}", failures.len(), failures, elapsed));
}

#[test]
fn criterion_2_difficulty_annotation() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for correct in 0..=10usize {
        let expected = (11 - correct as i64).min(10);
        if level_from_correct_count(correct).get() as i64 != expected {
            bad.push(correct);
        }
    }
    // Random verdict matrices against the rule applied per row.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows_checked = 0;
    for _ in 0..200 {
        let q = rng.random_range(1..30);
        let models: Vec<String> = (0..10).map(|m| format!("m{m}")).collect();
        let ids: Vec<String> = (0..q).map(|i| format!("q{i}")).collect();
        let verdicts: Vec<Vec<bool>> =
            (0..q).map(|_| { let k = rng.random_range(0..=10); (0..10).map(|m| m < k).collect() }).collect();
        let levels = annotate_difficulty(&VerdictMatrix::new(ids.clone(), models, verdicts.clone()).unwrap()).unwrap();
        for (id, row) in ids.iter().zip(&verdicts) {
            let c = row.iter().filter(|&&v| v).count() as i64;
            let l = levels[id].get() as i64;
            if l != (11 - c).min(10) || !(1..=10).contains(&l) {
                bad.push(c as usize);
            }
            rows_checked += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "difficulty annotation",
        bad.is_empty() && elapsed.as_secs_f64() < 1.0,
        &format!("counts 0-10 and {rows_checked} matrix rows, mismatches {bad:?}, {elapsed:.0?}"),
    );
}

fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    use std::cmp::Ordering::Equal;
    let (mut c, mut d, mut tx, mut ty) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            match (x[i].partial_cmp(&x[j]).unwrap(), y[i].partial_cmp(&y[j]).unwrap()) {
                (Equal, Equal) => {}
                (Equal, _) => tx += 1,
                (_, Equal) => ty += 1,
                (a, b) if a == b => c += 1,
                _ => d += 1,
            }
        }
    }
    let (a, b) = (c + d + tx, c + d + ty);
    (a > 0 && b > 0).then(|| (c as f64 - d as f64) / ((a as f64) * (b as f64)).sqrt())
}

#[test]
fn criterion_3_metric_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut kendall_mismatch = 0;
    let mut spearman_mismatch = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=12);
        let k = rng.random_range(1..=5);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..k) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..k + 2) as f64).collect();
        match (brute_tau_b(&x, &y), kendall_tau_b(&x, &y)) {
            (Some(e), Ok(g)) if e == g => {}
            (None, Err(_)) => {}
            _ => kendall_mismatch += 1,
        }
        // Average ranks by counting, then Pearson.
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        if average_ranks(&x) != rank(&x) {
            spearman_mismatch += 1;
        }
        match (pearson(&rank(&x), &rank(&y)), spearman(&x, &y)) {
            (Ok(e), Ok(g)) if (e - g).abs() < 1e-12 => {}
            (Err(_), Err(_)) => {}
            _ => spearman_mismatch += 1,
        }
    }

    // Five-point example, tie-free closed form 1 - 6 * sum(d^2) / (n (n^2 - 1)).
    let x5 = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y5 = [2.0, 1.0, 3.0, 5.0, 4.0];
    let d2: f64 = x5.iter().zip(&y5).map(|(a, b)| (a - b) * (a - b)).sum();
    let closed = 1.0 - 6.0 * d2 / (5.0 * 24.0);
    let srcc5 = spearman(&x5, &y5).unwrap();
    let hand_srcc = (srcc5 - closed).abs() < 1e-12;
    let krcc3 = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
    let hand_krcc = (krcc3 - 1.0 / 3.0).abs() < 1e-15;
    let plcc4 = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    let hand_plcc = (plcc4 - 0.8).abs() < 1e-15;

    let elapsed = start.elapsed();
    let pass = kendall_mismatch == 0 && spearman_mismatch == 0 && hand_srcc && hand_krcc && hand_plcc && elapsed.as_secs_f64() < 10.0;
    verdict(
        3,
        "metric oracles",
        pass,
        &format!(
            "tau-b mismatches {kendall_mismatch}/1000, rank-Pearson mismatches {spearman_mismatch}/1000, \
             5-point SRCC {srcc5:.4} (sum d^2 = {d2}), 3-point KRCC {krcc3:.4}, PLCC {plcc4:.4}, {elapsed:.1?}"
        ),
    );
}

#[test]
fn criterion_4_engine_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations: Vec<String> = Vec::new();
    let mut exhausted = 0;
    let runs = 10_000u64;
    for case in 0..runs {
        let round_size = rng.random_range(1..=5);
        let config = InterviewConfig {
            alpha: rng.random_range(0.0..0.6),
            beta: Threshold::from_ratio(rng.random_range(1..5), 5),
            n_level: rng.random_range(1..=10),
            middle: lvl(rng.random_range(1..=10)),
            pre_size: rng.random_range(1..=5),
            round_size,
            budget: rng.random_range(round_size..=100),
            seed: rng.random(),
            accuracy_scope: if rng.random_bool(0.8) { AccuracyScope::Cumulative } else { AccuracyScope::Round },
            weight_updates: if rng.random_bool(0.8) { WeightUpdates::PerRound } else { WeightUpdates::PerQuestion },
        };
        let questions = synth_benchmark(rng.random_range(1..=20), rng.random_range(1..=4), case);
        let mut pool = QuestionPool::from_questions(questions, &mut ChaCha8Rng::seed_from_u64(case)).unwrap();
        let profile = SyntheticProfile::new(rng.random_range(-1.0..12.0), rng.random_range(0.3..4.0), rng.random_range(0.0..0.5)).unwrap();
        let mut candidate = SyntheticCandidate::new("c", profile);
        let panel = Panel::new((0..rng.random_range(1..=5)).map(|i| format!("i{i}")), config.alpha).unwrap();
        let out = match run_interview(&mut pool, &mut candidate, &panel, &config) {
            Ok(o) => o,
            Err(e) => {
                violations.push(format!("case {case}: {e}"));
                continue;
            }
        };
        if out.level_history.iter().any(|l| !(1..=10).contains(&l.get())) {
            violations.push(format!("case {case}: level out of range"));
        }
        if out.transcript.iter().flat_map(|e| &e.weight_snapshot).any(|w| !(0.5..=2.0).contains(w)) {
            violations.push(format!("case {case}: weight out of range"));
        }
        if out.early_stop {
            exhausted += 1;
            if !pool.is_exhausted() {
                violations.push(format!("case {case}: stopped early with questions left"));
            }
        } else if out.questions_asked != config.budget {
            violations.push(format!("case {case}: asked {} of budget {}", out.questions_asked, config.budget));
        }
        let mut ids = std::collections::HashSet::new();
        let all_ids = out.pre_interview.answers.iter().map(|(id, _)| id).chain(out.transcript.iter().map(|e| &e.question_id));
        if !all_ids.into_iter().all(|id| ids.insert(id.clone())) {
            violations.push(format!("case {case}: repeated question"));
        }
        if let Err(e) = replay(&out) {
            violations.push(format!("case {case}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        "engine invariants",
        violations.is_empty() && elapsed.as_secs_f64() < 120.0,
        &format!("{runs} interviews ({exhausted} hit pool exhaustion), {} violations {:?}, {elapsed:.1?}", violations.len(), violations.first()),
    );
}

fn comparison() -> &'static (ComparisonReport, f64) {
    static RUN: OnceLock<(ComparisonReport, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let report = run_comparison(&ExperimentSpec::default()).expect("comparison runs");
        (report, start.elapsed().as_secs_f64())
    })
}

fn mean_srcc(report: &ComparisonReport, budget: usize, strategy: Strategy) -> f64 {
    report.cell(budget, strategy).and_then(|c| c.srcc.mean).unwrap_or(f64::NAN)
}

#[test]
fn criterion_5_interview_beats_random() {
    let (report, secs) = comparison();
    let spec = ExperimentSpec::default();
    let mut detail = String::new();
    let mut beats = true;
    for &b in &spec.budgets {
        let (i, r) = (mean_srcc(report, b, Strategy::Interview), mean_srcc(report, b, Strategy::Random));
        detail.push_str(&format!("b{b}: {i:.4} vs {r:.4}; "));
        if b <= 50 && !(i > r) {
            beats = false;
        }
    }
    let at30 = report.improvement_by_budget.iter().find(|b| b.budget == 30).and_then(|b| b.improvement.srcc).unwrap_or(f64::NAN);
    let p = report.sign_test.p_value;
    let pass = beats && p < 0.05 && at30 >= 5.0 && *secs < 300.0 && report.is_complete();
    verdict(
        5,
        "interview beats random",
        pass,
        &format!(
            "{}seeds {}, candidates {}, SRCC gain at 30 = {at30:.2} pp, sign test {}-{} p = {p:.2e}, {secs:.1}s",
            detail, report.seeds, report.candidates, report.sign_test.wins, report.sign_test.losses
        ),
    );
}

#[test]
fn criterion_6_budget_monotonicity() {
    let (report, _) = comparison();
    let mut detail = String::new();
    let mut pass = true;
    for s in [Strategy::Interview, Strategy::Random] {
        let (lo, hi) = (mean_srcc(report, 20, s), mean_srcc(report, 100, s));
        detail.push_str(&format!("{}: {lo:.4} at 20 -> {hi:.4} at 100; ", s.name()));
        pass &= hi >= lo;
    }
    verdict(6, "budget monotonicity", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_7_self_calibration() {
    let start = Instant::now();
    let questions: Vec<Question> = synth_benchmark(300, 6, 0);
    let config = InterviewConfig { budget: 200, ..InterviewConfig::default() };
    let panel = Panel::new(["interviewer-1", "interviewer-2", "interviewer-3"], config.alpha).unwrap();
    let abilities: Vec<f64> = (0..19).map(|i| 0.5 + 10.0 * i as f64 / 18.0).collect();
    let seeds = 100u64;

    let results: Vec<(f64, usize)> = std::thread::scope(|scope| {
        let handles: Vec<_> = abilities
            .iter()
            .enumerate()
            .map(|(ci, &ability)| {
                let questions = &questions;
                let config = &config;
                let panel = &panel;
                scope.spawn(move || {
                    let profile = SyntheticProfile::new(ability, 2.0, 0.0).unwrap();
                    let target = ability.clamp(1.0, 10.0);
                    let mut within = 0;
                    for seed in 0..seeds {
                        let mut pool = QuestionPool::from_questions(
                            questions.clone(),
                            &mut stream_rng(seed, Stream::PoolShuffle, &[]),
                        )
                        .unwrap();
                        let cfg = InterviewConfig { seed: derive_seed(seed, Stream::Interview, &[ci as u64]), ..config.clone() };
                        let out = run_interview(&mut pool, &mut SyntheticCandidate::new("c", profile), panel, &cfg).unwrap();
                        let tail = &out.level_history[out.level_history.len() / 2..];
                        let mean = tail.iter().map(|l| l.get() as f64).sum::<f64>() / tail.len() as f64;
                        if (mean - target).abs() <= 1.5 {
                            within += 1;
                        }
                    }
                    (ability, within)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let worst = results.iter().min_by_key(|r| r.1).copied().unwrap();
    let pass = results.iter().all(|&(_, w)| w as f64 >= 0.9 * seeds as f64) && start.elapsed().as_secs_f64() < 60.0;
    verdict(
        7,
        "self-calibration",
        pass,
        &format!(
            "{} candidates x {seeds} seeds, worst ability {:.2} within +-1.5 on {}/{seeds}, {:.1?}",
            results.len(),
            worst.0,
            worst.1,
            start.elapsed()
        ),
    );
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_interview")
}

/// Run the binary and return the run directory it reports on its first line.
fn run_cli(args: &[&str]) -> PathBuf {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    PathBuf::from(stdout.lines().next().unwrap().trim())
}

fn same_bytes(a: &Path, b: &Path, name: &str) -> bool {
    std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap()
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let bench = root.join("bench");
    let synth = Command::new(bin())
        .args(["synthesize", "--per-level", "60", "--categories", "3", "--references", "0", "--out"])
        .arg(&bench)
        .output()
        .unwrap();
    assert!(synth.status.success());
    let pool = bench.join("questions.jsonl");
    let pool = pool.to_str().unwrap();

    let interview = |base: &str| {
        let out = root.join(base);
        run_cli(&["interview", "--pool", pool, "--candidate", "synthetic:6.2:2:0.25", "--budget", "50", "--seed", "17", "--out", out.to_str().unwrap()])
    };
    let (i1, i2) = (interview("a"), interview("b"));
    let interview_same = same_bytes(&i1, &i2, "transcript.jsonl") && same_bytes(&i1, &i2, "outcome.json");

    let compare = |base: &str, threads: &str| {
        let out = root.join(base);
        run_cli(&["compare", "--seeds", "4", "--budgets", "20,30", "--parallel", threads, "--out", out.to_str().unwrap()])
    };
    let (c1, c2) = (compare("c", "1"), compare("d", "4"));
    let compare_same = ["report.json", "table.csv", "curve.csv"].iter().all(|f| same_bytes(&c1, &c2, f));

    let elapsed = start.elapsed();
    verdict(
        8,
        "determinism",
        interview_same && compare_same && elapsed.as_secs_f64() < 30.0,
        &format!("interview transcript identical: {interview_same}, compare reports identical across 1 and 4 threads: {compare_same}, {elapsed:.1?}"),
    );
}
