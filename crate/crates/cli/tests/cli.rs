use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use interview_core::harness::ComparisonReport;
use interview_core::engine::InterviewOutcome;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interview")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn run_dir(stdout: &str) -> PathBuf {
    PathBuf::from(stdout.lines().next().unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bench(root: &Path, unlabeled: bool) -> PathBuf {
    let out = root.join("bench");
    let mut args = vec!["synthesize", "--per-level", "40", "--categories", "2", "--seed", "1", "--out", s(&out)];
    if unlabeled {
        args.push("--unlabeled");
    }
    ok(&args);
    out
}

#[test]
fn annotate_assigns_levels_and_histogram_sums() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), true);
    let out = dir.path().join("ann");
    let stdout = ok(&["annotate", "--verdicts", s(&b.join("verdicts.jsonl")), "--questions", s(&b.join("questions.jsonl")), "--out", s(&out)]);
    let total: usize = stdout
        .lines()
        .filter_map(|l| l.trim().strip_prefix("level "))
        .map(|l| l.split(':').nth(1).unwrap().trim().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 400);
    let text = fs::read_to_string(out.join("questions.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let level = v["level"].as_i64().unwrap();
        assert!((1..=10).contains(&level));
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn annotate_rejects_empty_and_flags_missing_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), true);
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = run(&["annotate", "--verdicts", s(&empty), "--questions", s(&b.join("questions.jsonl")), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no verdicts"));

    // Drop every verdict for one question and one verdict for another.
    let verdicts = fs::read_to_string(b.join("verdicts.jsonl")).unwrap();
    let mut kept: Vec<&str> = verdicts.lines().filter(|l| !l.contains("\"q-L3-0000\"")).collect();
    let idx = kept.iter().position(|l| l.contains("\"q-L4-0001\"")).unwrap();
    kept.remove(idx);
    let partial = dir.path().join("partial.jsonl");
    fs::write(&partial, kept.join("\n")).unwrap();
    let out_dir = dir.path().join("ann");
    let out = run(&["annotate", "--verdicts", s(&partial), "--questions", s(&b.join("questions.jsonl")), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("q-L3-0000") && stderr.contains("q-L4-0001"));
    assert_eq!(fs::read_to_string(out_dir.join("questions.jsonl")).unwrap().lines().count(), 398);
}

#[test]
fn interview_respects_budget_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), false);
    let pool = b.join("questions.jsonl");
    let args = |out: &str| {
        vec!["interview".to_string(), "--pool".into(), s(&pool).into(), "--candidate".into(), "synthetic:4.5:2".into(), "--budget".into(), "20".into(), "--seed".into(), "9".into(), "--out".into(), s(&dir.path().join(out)).into()]
    };
    let a: Vec<String> = args("a");
    let first = run_dir(&ok(&a.iter().map(String::as_str).collect::<Vec<_>>()));
    let c: Vec<String> = args("b");
    let second = run_dir(&ok(&c.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(first.file_name(), second.file_name());
    assert_eq!(fs::read(first.join("transcript.jsonl")).unwrap(), fs::read(second.join("transcript.jsonl")).unwrap());

    let outcome: InterviewOutcome = serde_json::from_str(&fs::read_to_string(first.join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome.questions_asked, 20);
    assert!(outcome.level_history.iter().all(|l| (1..=10).contains(&l.get())));
    interview_core::engine::replay(&outcome).unwrap();
    assert_eq!(fs::read_to_string(first.join("transcript.jsonl")).unwrap().lines().count(), 20);
}

#[test]
fn interview_config_file_and_panel_flag() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), false);
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "budget = 12\nround_size = 4\nalpha = 0.1\n").unwrap();
    let stdout = ok(&["interview", "--pool", s(&b.join("questions.jsonl")), "--candidate", "synthetic:7", "--config", s(&cfg), "--panel", "x,y", "--out", s(&dir.path().join("r"))]);
    let outcome: InterviewOutcome = serde_json::from_str(&fs::read_to_string(run_dir(&stdout).join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome.questions_asked, 12);
    assert_eq!(outcome.rounds.len(), 3);
    assert_eq!(outcome.panel.interviewers, vec!["x", "y"]);

    fs::write(&cfg, "budget = 2\n").unwrap();
    let out = run(&["interview", "--pool", s(&b.join("questions.jsonl")), "--candidate", "synthetic:7", "--config", s(&cfg), "--out", s(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_remote_candidate_exits_with_candidate_code() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), false);
    let out = run(&["interview", "--pool", s(&b.join("questions.jsonl")), "--candidate", "remote:http://127.0.0.1:9/answer", "--out", s(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(3));
    let dir = run_dir(&String::from_utf8(out.stdout).unwrap());
    assert!(dir.join("transcript.jsonl").exists());
    assert!(dir.join("outcome.partial.json").exists());
}

#[test]
fn baseline_and_ground_truth_agree_at_full_budget() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), false);
    let pool = b.join("questions.jsonl");
    let answers = dir.path().join("answers.jsonl");
    let questions = fs::read_to_string(&pool).unwrap();
    let lines: Vec<String> = questions
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let answer = if i % 4 == 0 { "wrong".to_string() } else { v["answer_key"].as_str().unwrap().to_string() };
            serde_json::json!({"question_id": v["id"], "answer": answer}).to_string()
        })
        .collect();
    fs::write(&answers, lines.join("\n")).unwrap();
    let cand = format!("scripted:{}", s(&answers));
    let gt = run_dir(&ok(&["ground-truth", "--pool", s(&pool), "--candidate", &cand, "--out", s(&dir.path().join("r"))]));
    let gt: serde_json::Value = serde_json::from_str(&fs::read_to_string(gt.join("ground_truth.json")).unwrap()).unwrap();
    assert_eq!(gt["accuracy"].as_f64(), Some(0.75));
    let bl = run_dir(&ok(&["baseline", "--pool", s(&pool), "--candidate", &cand, "--budget", "400", "--out", s(&dir.path().join("r"))]));
    let bl: serde_json::Value = serde_json::from_str(&fs::read_to_string(bl.join("baseline.json")).unwrap()).unwrap();
    assert_eq!(bl["accuracy"].as_f64(), Some(0.75));
    let too_big = run(&["baseline", "--pool", s(&pool), "--candidate", &cand, "--budget", "401", "--out", s(&dir.path().join("r"))]);
    assert_eq!(too_big.status.code(), Some(2));
}

#[test]
fn compare_report_shape_and_improvement_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let run_path = run_dir(&ok(&["compare", "--seeds", "2", "--out", s(&out)]));
    let table = fs::read_to_string(run_path.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 5 * 2 + 1);
    let report: ComparisonReport = serde_json::from_str(&fs::read_to_string(run_path.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 10);
    for cell in &report.cells {
        assert!(cell.srcc.mean.is_some() && cell.plcc.mean.is_some() && cell.krcc.mean.is_some());
    }
    let last = table.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "avg_improvement_pp");
    // Improvement equals the column-wise mean of interview minus random.
    for (col, pick) in [(2usize, 0usize), (3, 1), (4, 2)] {
        let mean = |strategy: &str| -> f64 {
            let rows: Vec<f64> = table
                .lines()
                .skip(1)
                .filter(|l| l.split(',').nth(1) == Some(strategy))
                .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
                .collect();
            rows.iter().sum::<f64>() / rows.len() as f64
        };
        let expected = (mean("interview") - mean("random")) * 100.0;
        let got: f64 = fields[col].parse().unwrap();
        assert!((got - expected).abs() < 1e-3, "metric {pick}: {got} vs {expected}");
    }
    let curve = fs::read_to_string(run_path.join("curve.csv")).unwrap();
    let budgets: Vec<usize> = curve.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(budgets, vec![20, 30, 50, 80, 100]);

    let single = run_dir(&ok(&["compare", "--seeds", "2", "--budgets", "30", "--score-kind", "raw", "--out", s(&out)]));
    assert_eq!(fs::read_to_string(single.join("table.csv")).unwrap().lines().count(), 4);
}

#[test]
fn compare_flags_undefined_cells() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.jsonl");
    fs::write(&blank, "").unwrap();
    let list = dir.path().join("cands.toml");
    fs::write(
        &list,
        "[[candidates]]\nkind = \"scripted\"\nid = \"a\"\npath = \"blank.jsonl\"\n\n[[candidates]]\nkind = \"scripted\"\nid = \"b\"\npath = \"blank.jsonl\"\n",
    )
    .unwrap();
    let out = run(&["compare", "--seeds", "1", "--budgets", "20", "--candidates", s(&list), "--out", s(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(4));
    let path = run_dir(&String::from_utf8(out.stdout).unwrap());
    let report: ComparisonReport = serde_json::from_str(&fs::read_to_string(path.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.invalid.len(), 2);
}

#[test]
fn compare_spec_file_and_report_command() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.toml");
    fs::write(
        &spec,
        "budgets = [20, 40]\nseeds = [5, 6]\nscore_kind = \"weighted\"\n\n[pool]\nkind = \"synthetic\"\nper_level = 30\ncategories = 3\nseed = 2\n\n[population]\ncount = 6\nability_min = 1.0\nability_max = 10.0\nslope = 1.5\nspacing = \"even\"\n",
    )
    .unwrap();
    let path = run_dir(&ok(&["compare", "--spec", s(&spec), "--format", "json", "--out", s(&dir.path().join("r"))]));
    assert!(path.join("report.json").exists());
    assert!(!path.join("table.csv").exists());
    let redo = dir.path().join("tables");
    ok(&["report", "--input", s(&path.join("report.json")), "--out", s(&redo)]);
    let table = fs::read_to_string(redo.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 + 1);
    assert!(redo.join("curve.csv").exists() && redo.join("manifest.json").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "budgets = [1]\n").unwrap();
    assert_eq!(run(&["compare", "--spec", s(&bad), "--out", s(&dir.path().join("r"))]).status.code(), Some(2));
}

#[test]
fn manifest_records_command_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let b = bench(dir.path(), false);
    let path = run_dir(&ok(&["interview", "--pool", s(&b.join("questions.jsonl")), "--candidate", "synthetic:5", "--budget", "9", "--out", s(&dir.path().join("r"))]));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(path.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "interview");
    assert_eq!(m["status"], "ok");
    assert!(m["inputs"]["pool"].as_str().unwrap().len() == 64);
    assert!(m["finished_at"].is_string());
    let entries = fs::read_dir(&path).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains("manifest")).count();
    assert_eq!(entries, 1);
}
