//! Validation machinery: full-coverage ground truth, the random-sampling
//! baseline, synthetic benchmarks and candidates, and the multi-seed
//! interview-versus-random comparison with its report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_interview, EngineError, InterviewConfig, ScoreKind};
use crate::level::Level;
use crate::metrics::{kendall_tau_b, pearson, profile_of, spearman, MetricError};
use crate::panel::{Panel, PanelConfig, PanelError};
use crate::participants::{
    AnswerKeyJudge, Candidate, CandidateAnswer, CandidateError, Judge, RemoteCandidate, ScriptedCandidate,
    SyntheticCandidate, SyntheticProfile,
};
use crate::pool::{read_questions, PoolError, Question, QuestionOption, QuestionPool, VerdictMatrix};
use crate::rng::{derive_seed, stream_rng, Stream};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Candidate(#[from] CandidateError),
    #[error("question pool is empty")]
    EmptyPool,
    #[error("budget {budget} exceeds the {pool} questions in the pool")]
    BudgetTooLarge { budget: usize, pool: usize },
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub candidate_id: String,
    pub asked: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub profile: BTreeMap<Level, f64>,
}

/// Ask every question in the pool once, in file order.
pub fn full_coverage<C: Candidate + ?Sized>(
    pool: &QuestionPool,
    candidate: &mut C,
    rng: &mut dyn RngCore,
) -> Result<GroundTruth, HarnessError> {
    if pool.total() == 0 {
        return Err(HarnessError::EmptyPool);
    }
    let judge = AnswerKeyJudge;
    let mut responses = Vec::with_capacity(pool.total());
    for q in pool.questions() {
        let answer = candidate.answer(q, rng)?;
        responses.push((q.level, judge.judge(q, &answer).correct));
    }
    let correct = responses.iter().filter(|(_, c)| *c).count();
    Ok(GroundTruth {
        candidate_id: candidate.id().to_string(),
        asked: responses.len(),
        correct,
        accuracy: correct as f64 / responses.len() as f64,
        profile: profile_of(responses),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub asked: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Accuracy on `budget` questions sampled uniformly without replacement.
/// `sample_rng` picks the questions, `noise_rng` drives the candidate.
pub fn random_baseline<C: Candidate + ?Sized>(
    pool: &QuestionPool,
    candidate: &mut C,
    budget: usize,
    sample_rng: &mut dyn RngCore,
    noise_rng: &mut dyn RngCore,
) -> Result<BaselineScore, HarnessError> {
    let questions = pool.questions();
    if budget > questions.len() {
        return Err(HarnessError::BudgetTooLarge { budget, pool: questions.len() });
    }
    if budget == 0 {
        return Err(HarnessError::Spec("baseline budget must be at least 1".into()));
    }
    let judge = AnswerKeyJudge;
    let mut correct = 0;
    for i in sample(sample_rng, questions.len(), budget) {
        let q = &questions[i];
        let answer = candidate.answer(q, noise_rng)?;
        correct += judge.judge(q, &answer).correct as usize;
    }
    Ok(BaselineScore { asked: budget, correct, accuracy: correct as f64 / budget as f64 })
}

const OPTION_LABELS: [&str; 4] = ["A", "B", "C", "D"];

/// Four-option multiple-choice benchmark with `per_level` questions at each
/// of the ten levels, spread as evenly as possible over `categories`.
pub fn synth_benchmark(per_level: usize, categories: usize, seed: u64) -> Vec<Question> {
    let categories = categories.max(1);
    let mut rng = stream_rng(seed, Stream::Benchmark, &[]);
    let mut out = Vec::with_capacity(per_level * 10);
    for level in Level::all() {
        for i in 0..per_level {
            let category = format!("cat-{}", i % categories);
            let id = format!("q-L{}-{i:04}", level.get());
            let key = OPTION_LABELS[rng.random_range(0..OPTION_LABELS.len())];
            out.push(Question {
                prompt: format!("Synthetic item {i} at level {level} in {category}"),
                options: OPTION_LABELS
                    .iter()
                    .map(|l| QuestionOption { label: l.to_string(), text: format!("choice {l} of {id}") })
                    .collect(),
                answer_key: key.to_string(),
                media_refs: Vec::new(),
                id,
                category,
                level,
            });
        }
    }
    out
}

/// Reference models for difficulty annotation: abilities evenly spaced over
/// `[1.5, 10.5]`, so that a question at level `l` is expected to be solved by
/// about `11 - l` of ten models.
pub fn reference_profiles(count: usize) -> Vec<SyntheticProfile> {
    let span = |i: usize| if count < 2 { 6.0 } else { 1.5 + 9.0 * i as f64 / (count - 1) as f64 };
    (0..count).map(|i| SyntheticProfile { ability: span(i), slope: 2.0, floor: 0.0 }).collect()
}

/// Simulated correctness of each reference model on each question.
pub fn simulate_verdicts(questions: &[Question], profiles: &[SyntheticProfile], seed: u64) -> VerdictMatrix {
    let model_ids: Vec<String> = (1..=profiles.len()).map(|k| format!("ref-{k:02}")).collect();
    let mut verdicts = vec![Vec::with_capacity(profiles.len()); questions.len()];
    for (m, profile) in profiles.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::Reference, &[m as u64]);
        for (row, q) in verdicts.iter_mut().zip(questions) {
            row.push(rng.random::<f64>() < profile.p_correct(q.level));
        }
    }
    VerdictMatrix {
        question_ids: questions.iter().map(|q| q.id.clone()).collect(),
        model_ids,
        verdicts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateSpec {
    Synthetic {
        id: String,
        ability: f64,
        #[serde(default = "one")]
        slope: f64,
        #[serde(default)]
        floor: f64,
    },
    /// Answers from a `{"question_id", "answer"}` line file.
    Scripted { id: String, path: PathBuf },
    /// HTTP backend; `url` falls back to the environment.
    Remote {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        url: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_ms: Option<u64>,
        #[serde(default)]
        retries: u32,
    },
}

fn one() -> f64 {
    1.0
}

impl CandidateSpec {
    pub fn id(&self) -> &str {
        match self {
            CandidateSpec::Synthetic { id, .. } | CandidateSpec::Scripted { id, .. } | CandidateSpec::Remote { id, .. } => id,
        }
    }

    pub fn build(&self) -> Result<AnyCandidate, HarnessError> {
        Ok(match self {
            CandidateSpec::Synthetic { id, ability, slope, floor } => {
                let profile = SyntheticProfile::new(*ability, *slope, *floor)
                    .map_err(|e| HarnessError::Spec(format!("candidate `{id}`: {e}")))?;
                AnyCandidate::Synthetic(SyntheticCandidate::new(id.clone(), profile))
            }
            CandidateSpec::Scripted { id, path } => {
                let file = File::open(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
                AnyCandidate::Scripted(ScriptedCandidate::load(id.clone(), BufReader::new(file))?)
            }
            CandidateSpec::Remote { id, url, timeout_ms, retries } => {
                let remote = match url {
                    Some(url) => RemoteCandidate::new(
                        id.clone(),
                        url.clone(),
                        std::time::Duration::from_millis(timeout_ms.unwrap_or(30_000)),
                        *retries,
                    ),
                    None => RemoteCandidate::from_env(id.clone(), *retries).map_err(HarnessError::Spec)?,
                };
                AnyCandidate::Remote(remote)
            }
        })
    }
}

/// Any of the shipped candidate kinds, cloneable so each run owns a copy.
#[derive(Clone)]
pub enum AnyCandidate {
    Synthetic(SyntheticCandidate),
    Scripted(ScriptedCandidate),
    Remote(RemoteCandidate),
}

impl Candidate for AnyCandidate {
    fn id(&self) -> &str {
        match self {
            AnyCandidate::Synthetic(c) => c.id(),
            AnyCandidate::Scripted(c) => c.id(),
            AnyCandidate::Remote(c) => c.id(),
        }
    }

    fn answer(&mut self, question: &Question, rng: &mut dyn RngCore) -> Result<CandidateAnswer, CandidateError> {
        match self {
            AnyCandidate::Synthetic(c) => c.answer(question, rng),
            AnyCandidate::Scripted(c) => c.answer(question, rng),
            AnyCandidate::Remote(c) => c.answer(question, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Evenly spaced over the range, identical for every seed.
    Even,
    /// Drawn uniformly from the range, afresh for every seed.
    #[default]
    Uniform,
}

/// A family of synthetic candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub count: usize,
    pub ability_min: f64,
    pub ability_max: f64,
    pub slope: f64,
    #[serde(default)]
    pub floor: f64,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec { count: 19, ability_min: 0.5, ability_max: 10.5, slope: 2.0, floor: 0.25, spacing: Spacing::Uniform }
    }
}

impl PopulationSpec {
    pub fn realize(&self, seed: u64) -> Vec<CandidateSpec> {
        let (lo, hi) = (self.ability_min, self.ability_max);
        let mut rng = stream_rng(seed, Stream::Population, &[]);
        (0..self.count)
            .map(|i| {
                let ability = match self.spacing {
                    Spacing::Even if self.count > 1 => lo + (hi - lo) * i as f64 / (self.count - 1) as f64,
                    Spacing::Even => 0.5 * (lo + hi),
                    Spacing::Uniform => rng.random_range(lo..=hi),
                };
                CandidateSpec::Synthetic { id: format!("synthetic-{:02}", i + 1), ability, slope: self.slope, floor: self.floor }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSource {
    Synthetic { per_level: usize, categories: usize, seed: u64 },
    File { path: PathBuf },
}

impl Default for PoolSource {
    fn default() -> Self {
        PoolSource::Synthetic { per_level: 300, categories: 6, seed: 0 }
    }
}

impl PoolSource {
    pub fn load(&self) -> Result<Vec<Question>, HarnessError> {
        match self {
            PoolSource::Synthetic { per_level, categories, seed } => Ok(synth_benchmark(*per_level, *categories, *seed)),
            PoolSource::File { path } => {
                let file = File::open(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
                Ok(read_questions(BufReader::new(file))?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub score_kind: ScoreKind,
    pub interview: InterviewConfig,
    pub panel: PanelConfig,
    pub pool: PoolSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSpec>,
    pub candidates: Vec<CandidateSpec>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            budgets: vec![20, 30, 50, 80, 100],
            seeds: (0..100).collect(),
            score_kind: ScoreKind::Ability,
            interview: InterviewConfig::default(),
            panel: PanelConfig::default(),
            pool: PoolSource::default(),
            population: Some(PopulationSpec::default()),
            candidates: Vec::new(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_text(text: &str) -> Result<ExperimentSpec, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len() + self.population.as_ref().map_or(0, |p| p.count)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        if self.budgets.is_empty() {
            return bad("no budgets".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if let Some(&b) = self.budgets.iter().find(|&&b| b < self.interview.round_size) {
            return bad(format!("budget {b} is smaller than round_size {}", self.interview.round_size));
        }
        if self.candidate_count() < 2 {
            return bad(format!("need at least 2 candidates, got {}", self.candidate_count()));
        }
        let mut ids: Vec<&str> = self.candidates.iter().map(CandidateSpec::id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate candidate id `{}`", w[0]));
        }
        if let Some(p) = &self.population {
            if !(p.ability_min <= p.ability_max) {
                return bad("population ability_min exceeds ability_max".into());
            }
            SyntheticProfile::new(p.ability_min, p.slope, p.floor).map_err(HarnessError::Spec)?;
        }
        InterviewConfig { budget: self.interview.round_size, ..self.interview.clone() }.validate()?;
        Panel::from_config(&self.panel)?;
        Ok(())
    }

    /// Resolve file paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let PoolSource::File { path } = &mut self.pool {
            *path = base.join(&*path);
        }
        for c in &mut self.candidates {
            if let CandidateSpec::Scripted { path, .. } = c {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Interview,
    Random,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Interview => "interview",
            Strategy::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
}

impl MetricTriple {
    fn compute(scores: &[f64], truth: &[f64]) -> Result<MetricTriple, MetricError> {
        Ok(MetricTriple {
            srcc: spearman(scores, truth)?,
            plcc: pearson(scores, truth)?,
            krcc: kendall_tau_b(scores, truth)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: None, sd: None, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Stat { mean: Some(mean), sd, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub budget: usize,
    pub strategy: Strategy,
    pub srcc: Stat,
    pub plcc: Stat,
    pub krcc: Stat,
    pub invalid: usize,
}

/// Interview mean minus random mean, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub srcc: Option<f64>,
    pub plcc: Option<f64>,
    pub krcc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetImprovement {
    pub budget: usize,
    pub improvement: Improvement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub budget: usize,
    pub interview: Option<MetricTriple>,
    pub random: Option<MetricTriple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidCell {
    pub seed: u64,
    pub budget: usize,
    pub strategy: Strategy,
    pub reason: String,
}

/// Paired sign test on SRCC: a win is a (seed, budget) pair where the
/// interview correlates better than random. One-sided exact binomial p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
}

impl SignTest {
    pub fn new(wins: usize, losses: usize, ties: usize) -> SignTest {
        SignTest { wins, losses, ties, p_value: binomial_upper_tail(wins + losses, wins) }
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_choose = 0.0;
    let mut total = 0.0;
    for j in 0..=n {
        if j > 0 {
            ln_choose += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            total += (ln_choose - ln2n).exp();
        }
    }
    total.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub score_kind: ScoreKind,
    pub seeds: usize,
    pub candidates: usize,
    pub budgets: Vec<usize>,
    pub cells: Vec<CellSummary>,
    pub improvement_by_budget: Vec<BudgetImprovement>,
    pub avg_improvement: Improvement,
    pub sign_test: SignTest,
    pub per_seed: Vec<SeedRow>,
    pub invalid: Vec<InvalidCell>,
}

impl ComparisonReport {
    pub fn cell(&self, budget: usize, strategy: Strategy) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.budget == budget && c.strategy == strategy)
    }

    pub fn is_complete(&self) -> bool {
        self.invalid.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<ComparisonReport, serde_json::Error> {
        serde_json::from_str(text)
    }
}

struct SeedResult {
    seed: u64,
    // One entry per budget, in budget-list order.
    cells: Vec<(usize, Result<MetricTriple, String>, Result<MetricTriple, String>)>,
}

fn run_seed(
    spec: &ExperimentSpec,
    questions: &[Question],
    fixed: &[AnyCandidate],
    seed: u64,
) -> Result<SeedResult, HarnessError> {
    let pool = QuestionPool::from_questions(questions.to_vec(), &mut stream_rng(seed, Stream::PoolShuffle, &[]))?;
    let mut candidates = fixed.to_vec();
    if let Some(p) = &spec.population {
        for c in p.realize(seed) {
            candidates.push(c.build()?);
        }
    }
    let panel = Panel::from_config(&spec.panel)?;

    let mut truth = Vec::with_capacity(candidates.len());
    for (ci, c) in candidates.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::GroundTruth, &[ci as u64]);
        truth.push(full_coverage(&pool, &mut c.clone(), &mut rng)?.accuracy);
    }

    let mut cells = Vec::with_capacity(spec.budgets.len());
    for &budget in &spec.budgets {
        let mut interview = Vec::with_capacity(candidates.len());
        let mut random = Vec::with_capacity(candidates.len());
        for (ci, c) in candidates.iter().enumerate() {
            let path = [budget as u64, ci as u64];
            let config = InterviewConfig {
                budget,
                seed: derive_seed(seed, Stream::Interview, &path),
                ..spec.interview.clone()
            };
            let outcome = run_interview(&mut pool.clone(), &mut c.clone(), &panel, &config)?;
            interview.push(outcome.score(spec.score_kind));

            let mut sample_rng = stream_rng(seed, Stream::Baseline, &path);
            let mut noise_rng = stream_rng(seed, Stream::CandidateNoise, &path);
            random.push(random_baseline(&pool, &mut c.clone(), budget, &mut sample_rng, &mut noise_rng)?.accuracy);
        }
        let i = MetricTriple::compute(&interview, &truth).map_err(|e| e.to_string());
        let r = MetricTriple::compute(&random, &truth).map_err(|e| e.to_string());
        cells.push((budget, i, r));
    }
    Ok(SeedResult { seed, cells })
}

/// Run interview and random baseline for every seed, budget and candidate,
/// and correlate each strategy's scores with full-coverage accuracy.
/// Seeds run in parallel on the current rayon pool; the result does not
/// depend on the number of threads.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<ComparisonReport, HarnessError> {
    spec.validate()?;
    let questions = spec.pool.load()?;
    if questions.is_empty() {
        return Err(HarnessError::EmptyPool);
    }
    if let Some(&b) = spec.budgets.iter().find(|&&b| b > questions.len()) {
        return Err(HarnessError::BudgetTooLarge { budget: b, pool: questions.len() });
    }
    let fixed = spec.candidates.iter().map(CandidateSpec::build).collect::<Result<Vec<_>, _>>()?;
    let results = spec
        .seeds
        .par_iter()
        .map(|&seed| run_seed(spec, &questions, &fixed, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(spec, results))
}

fn assemble(spec: &ExperimentSpec, results: Vec<SeedResult>) -> ComparisonReport {
    let mut per_seed = Vec::new();
    let mut invalid = Vec::new();
    for r in &results {
        for (budget, i, rnd) in &r.cells {
            for (strategy, cell) in [(Strategy::Interview, i), (Strategy::Random, rnd)] {
                if let Err(reason) = cell {
                    invalid.push(InvalidCell { seed: r.seed, budget: *budget, strategy, reason: reason.clone() });
                }
            }
            per_seed.push(SeedRow { seed: r.seed, budget: *budget, interview: i.clone().ok(), random: rnd.clone().ok() });
        }
    }

    let mut cells = Vec::new();
    let mut improvement_by_budget = Vec::new();
    for &budget in &spec.budgets {
        let rows: Vec<&SeedRow> = per_seed.iter().filter(|r| r.budget == budget).collect();
        let mut means = Vec::new();
        for strategy in [Strategy::Interview, Strategy::Random] {
            let triples: Vec<MetricTriple> = rows
                .iter()
                .filter_map(|r| if strategy == Strategy::Interview { r.interview } else { r.random })
                .collect();
            let pick = |f: fn(&MetricTriple) -> f64| Stat::of(&triples.iter().map(f).collect::<Vec<_>>());
            let cell = CellSummary {
                budget,
                strategy,
                srcc: pick(|t| t.srcc),
                plcc: pick(|t| t.plcc),
                krcc: pick(|t| t.krcc),
                invalid: rows.len() - triples.len(),
            };
            means.push(cell.clone());
            cells.push(cell);
        }
        let diff = |a: Stat, b: Stat| Some((a.mean? - b.mean?) * 100.0);
        improvement_by_budget.push(BudgetImprovement {
            budget,
            improvement: Improvement {
                srcc: diff(means[0].srcc, means[1].srcc),
                plcc: diff(means[0].plcc, means[1].plcc),
                krcc: diff(means[0].krcc, means[1].krcc),
            },
        });
    }

    let avg = |f: fn(&Improvement) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = improvement_by_budget.iter().map(|b| f(&b.improvement)).collect();
        v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    let avg_improvement = Improvement { srcc: avg(|i| i.srcc), plcc: avg(|i| i.plcc), krcc: avg(|i| i.krcc) };

    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for r in &per_seed {
        if let (Some(i), Some(rnd)) = (r.interview, r.random) {
            match i.srcc.partial_cmp(&rnd.srcc) {
                Some(std::cmp::Ordering::Greater) => wins += 1,
                Some(std::cmp::Ordering::Less) => losses += 1,
                _ => ties += 1,
            }
        }
    }

    ComparisonReport {
        score_kind: spec.score_kind,
        seeds: spec.seeds.len(),
        candidates: spec.candidate_count(),
        budgets: spec.budgets.clone(),
        cells,
        improvement_by_budget,
        avg_improvement,
        sign_test: SignTest::new(wins, losses, ties),
        per_seed,
        invalid,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Table with one row per (budget, strategy) and a closing improvement row.
pub fn table_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("budget,strategy,srcc,plcc,krcc,n,invalid\n");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.budget,
            c.strategy.name(),
            fmt_opt(c.srcc.mean),
            fmt_opt(c.plcc.mean),
            fmt_opt(c.krcc.mean),
            c.srcc.n,
            c.invalid
        );
    }
    let i = &report.avg_improvement;
    let _ = writeln!(
        out,
        "avg_improvement_pp,interview-random,{},{},{},,",
        fmt_opt(i.srcc),
        fmt_opt(i.plcc),
        fmt_opt(i.krcc)
    );
    out
}

/// Budget against mean SRCC per strategy, ascending by budget.
pub fn curve_csv(report: &ComparisonReport) -> String {
    let mut budgets = report.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let mut out = String::from("budget,interview_srcc,random_srcc\n");
    for b in budgets {
        let mean = |s| report.cell(b, s).and_then(|c| c.srcc.mean);
        let _ = writeln!(out, "{b},{},{}", fmt_opt(mean(Strategy::Interview)), fmt_opt(mean(Strategy::Random)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

pub const TABLE_FILE: &str = "table.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_FILE: &str = "report.json";

/// Write the report files into `dir` and return their paths.
pub fn emit_report(report: &ComparisonReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files: Vec<(&str, String)> = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        files.push((TABLE_FILE, table_csv(report)));
        files.push((CURVE_FILE, curve_csv(report)));
    }
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        files.push((REPORT_FILE, report.to_json()));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<ComparisonReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    ComparisonReport::from_json(&text).map_err(|e| HarnessError::Spec(format!("{}: {e}", path.display())))
}
