use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use interview_core::engine::{run_interview, EngineError};
use interview_core::harness::{
    emit_report, full_coverage, load_report, random_baseline, reference_profiles, run_comparison,
    simulate_verdicts, synth_benchmark, table_csv, CandidateSpec, ExperimentSpec, HarnessError,
    ReportFormat,
};
use interview_core::pool::{
    annotate_difficulty, read_jsonl, write_jsonl, QuestionRecord, VerdictMatrix, VerdictRecord,
};
use interview_core::rng::{stream_rng, Stream};
use interview_core::{InterviewConfig, Level, Panel, QuestionPool, ScoreKind};
use serde::Serialize;

use crate::inputs::{candidate_input_hash, load_questions, parse_candidate};
use crate::manifest::{run_dir, sha256_hex, RunManifest};
use crate::CandidateArgs;

/// Command failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or unreadable or malformed inputs.
    Input(anyhow::Error),
    /// A candidate stopped answering.
    Candidate(anyhow::Error),
    /// Results were written but some parts are missing or invalid.
    Partial(String),
}

impl Failure {
    pub const INPUT: u8 = 2;
    pub const CANDIDATE: u8 = 3;
    pub const PARTIAL: u8 = 4;

    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => Failure::INPUT,
            Failure::Candidate(_) => Failure::CANDIDATE,
            Failure::Partial(_) => Failure::PARTIAL,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Input(e) | Failure::Candidate(e) => format!("{e:#}"),
            Failure::Partial(m) => m.clone(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Candidate(_) | HarnessError::Engine(EngineError::CandidateUnavailable { .. }) => {
                Failure::Candidate(e.into())
            }
            other => Failure::Input(other.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_jsonl::<T, _>(BufReader::new(file))
        .map_err(|e| anyhow!("{}: {e}", path.display()))?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

pub fn annotate(verdicts_path: &Path, questions_path: &Path, out: &Path) -> CmdResult {
    let verdicts: Vec<VerdictRecord> = read_records(verdicts_path)?;
    if verdicts.is_empty() {
        return Err(anyhow!("{}: no verdicts", verdicts_path.display()).into());
    }
    let questions: Vec<QuestionRecord> = read_records(questions_path)?;

    let mut manifest = RunManifest::start("annotate", out, None);
    manifest.config_paths = vec![verdicts_path.to_path_buf(), questions_path.to_path_buf()];
    manifest.inputs.insert("verdicts".into(), sha256_hex(&fs::read(verdicts_path).context("reading verdicts")?));
    manifest.inputs.insert("questions".into(), sha256_hex(&fs::read(questions_path).context("reading questions")?));
    manifest.write()?;

    let mut models: Vec<&str> = verdicts.iter().map(|v| v.model_id.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let mut by_question: HashMap<&str, BTreeMap<&str, bool>> = HashMap::new();
    for v in &verdicts {
        if by_question.entry(&v.question_id).or_default().insert(&v.model_id, v.correct).is_some() {
            return Err(anyhow!("duplicate verdict for question `{}` by model `{}`", v.question_id, v.model_id).into());
        }
    }

    let mut complete = Vec::new();
    let mut skipped = Vec::new();
    for q in &questions {
        match by_question.get(q.id.as_str()) {
            Some(row) if row.len() == models.len() => complete.push((q.id.clone(), row.values().copied().collect())),
            Some(row) => skipped.push(format!("{} ({} of {} verdicts)", q.id, row.len(), models.len())),
            None => skipped.push(format!("{} (no verdicts)", q.id)),
        }
    }
    let (ids, rows): (Vec<String>, Vec<Vec<bool>>) = complete.into_iter().unzip();
    let matrix = VerdictMatrix::new(ids, models.iter().map(|m| m.to_string()).collect(), rows)
        .map_err(|e| anyhow!("{e}"))?;
    let levels = annotate_difficulty(&matrix).map_err(|e| anyhow!("{e}"))?;

    let annotated: Vec<QuestionRecord> = questions
        .into_iter()
        .filter_map(|mut q| {
            let level = levels.get(&q.id)?;
            q.level = Some(level.get() as i64);
            Some(q)
        })
        .collect();
    let out_file = out.join("questions.jsonl");
    write_lines(&out_file, &annotated)?;

    let mut histogram: BTreeMap<Level, usize> = Level::all().map(|l| (l, 0)).collect();
    for level in levels.values() {
        *histogram.entry(*level).or_default() += 1;
    }
    say!("annotated {} questions with {} reference models -> {}", annotated.len(), models.len(), out_file.display());
    for (level, count) in &histogram {
        say!("  level {level:>2}: {count}");
    }

    if skipped.is_empty() {
        manifest.finish("ok")?;
        Ok(())
    } else {
        for s in &skipped {
            eprintln!("skipped {s}");
        }
        manifest.finish("partial")?;
        Err(Failure::Partial(format!("{} questions skipped for missing verdicts", skipped.len())))
    }
}

pub struct InterviewRequest {
    pub pool: PathBuf,
    pub candidate: CandidateArgs,
    pub panel: Option<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub out: PathBuf,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<InterviewConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            InterviewConfig::from_text(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(InterviewConfig::default()),
    }
}

fn panel_ids(arg: Option<&str>) -> Vec<String> {
    match arg {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => interview_core::panel::PanelConfig::default().interviewers,
    }
}

pub fn interview(req: InterviewRequest) -> CmdResult {
    let mut config = load_config(req.config.as_deref())?;
    if let Some(seed) = req.seed {
        config.seed = seed;
    }
    if let Some(budget) = req.budget {
        config.budget = budget;
    }
    config.validate().map_err(anyhow::Error::from)?;
    let ids = panel_ids(req.panel.as_deref());
    let panel = Panel::new(ids.iter().cloned(), config.alpha).map_err(anyhow::Error::from)?;
    let spec = parse_candidate(&req.candidate.candidate, req.candidate.candidate_id.clone())?;
    let (questions, pool_hash) = load_questions(&req.pool)?;
    let answers_hash = candidate_input_hash(&spec)?.unwrap_or_default();

    let config_text = config.to_text();
    let spec_json = serde_json::to_string(&spec).map_err(anyhow::Error::from)?;
    let dir = run_dir(&req.out, "interview", &[&config_text, &pool_hash, &spec_json, &ids.join(","), &answers_hash]);
    let mut manifest = RunManifest::start("interview", &dir, Some(config.seed));
    manifest.config_paths = req.config.iter().cloned().collect();
    manifest.inputs.insert("pool".into(), pool_hash);
    if !answers_hash.is_empty() {
        manifest.inputs.insert("answers".into(), answers_hash);
    }
    manifest.write()?;
    fs::write(dir.join("config.toml"), &config_text).context("writing config")?;

    let mut pool = QuestionPool::from_questions(questions, &mut stream_rng(config.seed, Stream::PoolShuffle, &[]))
        .map_err(|e| anyhow!("{}: {e}", req.pool.display()))?;
    let mut candidate = spec.build()?;
    match run_interview(&mut pool, &mut candidate, &panel, &config) {
        Ok(outcome) => {
            write_lines(&dir.join("transcript.jsonl"), &outcome.transcript)?;
            write_json(&dir.join("outcome.json"), &outcome)?;
            manifest.finish("ok")?;
            say!("{}", dir.display());
            say!(
                "candidate {}: asked {}, raw {:.4}, weighted {:.4}, ability {:.3}{}",
                outcome.candidate_id,
                outcome.questions_asked,
                outcome.raw_score,
                outcome.weighted_score,
                outcome.ability_score,
                if outcome.early_stop { " (pool exhausted)" } else { "" }
            );
            Ok(())
        }
        Err(EngineError::CandidateUnavailable { source, partial }) => {
            write_lines(&dir.join("transcript.jsonl"), &partial.transcript)?;
            write_json(&dir.join("outcome.partial.json"), &partial)?;
            manifest.finish("candidate-failure")?;
            say!("{}", dir.display());
            Err(Failure::Candidate(anyhow!(source).context(format!(
                "interview stopped after {} questions; partial transcript in {}",
                partial.questions_asked,
                dir.display()
            ))))
        }
        Err(e) => Err(Failure::Input(e.into())),
    }
}

#[derive(Serialize)]
struct BaselineFile<'a> {
    candidate_id: &'a str,
    budget: usize,
    seed: u64,
    asked: usize,
    correct: usize,
    accuracy: f64,
}

fn single_candidate_setup(
    command: &str,
    pool_path: &Path,
    candidate: &CandidateArgs,
    seed: u64,
    extra: &str,
    out: &Path,
) -> Result<(QuestionPool, CandidateSpec, RunManifest), Failure> {
    let spec = parse_candidate(&candidate.candidate, candidate.candidate_id.clone())?;
    let (questions, pool_hash) = load_questions(pool_path)?;
    let answers_hash = candidate_input_hash(&spec)?.unwrap_or_default();
    let spec_json = serde_json::to_string(&spec).map_err(anyhow::Error::from)?;
    let dir = run_dir(out, command, &[&pool_hash, &spec_json, &seed.to_string(), extra, &answers_hash]);
    let mut manifest = RunManifest::start(command, &dir, Some(seed));
    manifest.inputs.insert("pool".into(), pool_hash);
    manifest.write()?;
    let pool = QuestionPool::from_questions(questions, &mut stream_rng(seed, Stream::PoolShuffle, &[]))
        .map_err(|e| anyhow!("{}: {e}", pool_path.display()))?;
    Ok((pool, spec, manifest))
}

pub fn baseline(pool_path: &Path, candidate: &CandidateArgs, budget: usize, seed: u64, out: &Path) -> CmdResult {
    let (pool, spec, mut manifest) =
        single_candidate_setup("baseline", pool_path, candidate, seed, &budget.to_string(), out)?;
    let mut c = spec.build()?;
    let mut sample_rng = stream_rng(seed, Stream::Baseline, &[]);
    let mut noise_rng = stream_rng(seed, Stream::CandidateNoise, &[]);
    let score = random_baseline(&pool, &mut c, budget, &mut sample_rng, &mut noise_rng)?;
    let file = BaselineFile {
        candidate_id: spec.id(),
        budget,
        seed,
        asked: score.asked,
        correct: score.correct,
        accuracy: score.accuracy,
    };
    write_json(&manifest.output_dir.join("baseline.json"), &file)?;
    manifest.finish("ok")?;
    say!("{}", manifest.output_dir.display());
    say!("candidate {}: {}/{} correct, accuracy {:.4}", spec.id(), score.correct, score.asked, score.accuracy);
    Ok(())
}

pub fn ground_truth(pool_path: &Path, candidate: &CandidateArgs, seed: u64, out: &Path) -> CmdResult {
    let (pool, spec, mut manifest) = single_candidate_setup("ground-truth", pool_path, candidate, seed, "", out)?;
    let mut c = spec.build()?;
    let truth = full_coverage(&pool, &mut c, &mut stream_rng(seed, Stream::GroundTruth, &[]))?;
    write_json(&manifest.output_dir.join("ground_truth.json"), &truth)?;
    manifest.finish("ok")?;
    say!("{}", manifest.output_dir.display());
    say!("candidate {}: {}/{} correct, accuracy {:.4}", truth.candidate_id, truth.correct, truth.asked, truth.accuracy);
    Ok(())
}

pub struct CompareRequest {
    pub spec: Option<PathBuf>,
    pub budgets: Option<Vec<usize>>,
    pub seeds: Option<u64>,
    pub seed: Option<u64>,
    pub score_kind: Option<ScoreKind>,
    pub candidates: Option<PathBuf>,
    pub format: ReportFormat,
    pub out: PathBuf,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateList {
    candidates: Vec<CandidateSpec>,
}

pub fn compare(req: CompareRequest) -> CmdResult {
    let mut spec = match &req.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec = ExperimentSpec::from_text(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            spec.rebase(path.parent().unwrap_or(Path::new(".")));
            spec
        }
        None => ExperimentSpec::default(),
    };
    if let Some(b) = req.budgets {
        spec.budgets = b;
    }
    match (req.seeds, req.seed) {
        (Some(n), base) => spec.seeds = (0..n).map(|i| base.unwrap_or(0) + i).collect(),
        (None, Some(base)) => spec.seeds = spec.seeds.iter().map(|s| s + base).collect(),
        (None, None) => {}
    }
    if let Some(kind) = req.score_kind {
        spec.score_kind = kind;
    }
    if let Some(path) = &req.candidates {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let list: CandidateList = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let mut holder = ExperimentSpec { candidates: list.candidates, population: None, ..spec.clone() };
        holder.rebase(path.parent().unwrap_or(Path::new(".")));
        spec = holder;
    }
    spec.validate().map_err(|e| anyhow!("{e}"))?;

    let spec_text = spec.to_text();
    let mut key: Vec<String> = vec![spec_text.clone()];
    if let interview_core::harness::PoolSource::File { path } = &spec.pool {
        key.push(sha256_hex(&fs::read(path).with_context(|| format!("reading {}", path.display()))?));
    }
    for c in &spec.candidates {
        if let Some(h) = candidate_input_hash(c)? {
            key.push(h);
        }
    }
    let key_refs: Vec<&str> = key.iter().map(String::as_str).collect();
    let dir = run_dir(&req.out, "compare", &key_refs);
    let mut manifest = RunManifest::start("compare", &dir, spec.seeds.first().copied());
    manifest.config_paths = req.spec.iter().chain(req.candidates.iter()).cloned().collect();
    manifest.write()?;
    fs::write(dir.join("spec.toml"), &spec_text).context("writing spec")?;

    let report = run_comparison(&spec)?;
    emit_report(&report, &dir, req.format)?;
    say!("{}", dir.display());
    say!("{}", table_csv(&report).trim_end());
    say!(
        "sign test (srcc): {} wins, {} losses, {} ties, p = {:.3e}",
        report.sign_test.wins, report.sign_test.losses, report.sign_test.ties, report.sign_test.p_value
    );
    if report.is_complete() {
        manifest.finish("ok")?;
        Ok(())
    } else {
        manifest.finish("partial")?;
        for cell in &report.invalid {
            eprintln!("invalid cell: seed {} budget {} {}: {}", cell.seed, cell.budget, cell.strategy.name(), cell.reason);
        }
        Err(Failure::Partial(format!("{} report cells have undefined correlations", report.invalid.len())))
    }
}

pub fn synthesize(per_level: usize, categories: usize, seed: u64, references: usize, unlabeled: bool, out: &Path) -> CmdResult {
    if per_level == 0 || categories == 0 {
        return Err(anyhow!("per-level and categories must be at least 1").into());
    }
    let mut manifest = RunManifest::start("synthesize", out, Some(seed));
    manifest.write()?;
    let questions = synth_benchmark(per_level, categories, seed);
    let records: Vec<QuestionRecord> = questions
        .iter()
        .cloned()
        .map(QuestionRecord::from)
        .map(|mut r| {
            if unlabeled {
                r.level = None;
            }
            r
        })
        .collect();
    write_lines(&out.join("questions.jsonl"), &records)?;
    if references > 0 {
        let matrix = simulate_verdicts(&questions, &reference_profiles(references), seed);
        write_lines(&out.join("verdicts.jsonl"), &matrix.to_records())?;
    }
    manifest.finish("ok")?;
    say!("wrote {} questions to {}", questions.len(), out.display());
    Ok(())
}

pub fn report(input: &Path, format: ReportFormat, out: &Path) -> CmdResult {
    let report = load_report(input)?;
    let mut manifest = RunManifest::start("report", out, None);
    manifest.inputs.insert("report".into(), sha256_hex(&fs::read(input).context("reading report")?));
    manifest.write()?;
    let written = emit_report(&report, out, format)?;
    manifest.finish("ok")?;
    say!("{}", table_csv(&report).trim_end());
    for p in written {
        say!("wrote {}", p.display());
    }
    if report.is_complete() {
        Ok(())
    } else {
        bail_partial(report.invalid.len())
    }
}

fn bail_partial(n: usize) -> CmdResult {
    Err(Failure::Partial(format!("{n} report cells have undefined correlations")))
}
