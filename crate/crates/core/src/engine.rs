//! The two-stage interview.
//!
//! A short pre-interview at the middle level picks the starting level. Formal
//! rounds then follow: a weighted interviewer is drawn, `round_size` questions
//! are asked at the current level, the interviewer's weight is updated, and the
//! level moves up, stays or moves down depending on how the candidate's
//! accuracy at that level compares with `beta`. Two overrides apply on top:
//!
//! * when the last six round levels alternate between two adjacent levels, the
//!   interview jumps three levels away from the earlier of the last two
//!   (upwards above `n_level`, downwards otherwise);
//! * when the chosen level has no questions left, the level keeps stepping in
//!   the direction the candidate's accuracy points to until questions are found.
//!
//! The interview ends when `budget` formal questions have been asked or the
//! pool runs dry.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::level::Level;
use crate::metrics::level_profile;
use crate::panel::{Interviewer, Panel, PanelConfig, PanelError};
use crate::participants::{AnswerKeyJudge, Candidate, CandidateError, Judge, Verdict};
use crate::pool::QuestionPool;
use crate::rng::{stream_rng, Stream};
use crate::threshold::Threshold;

/// How the accuracy that drives a level change is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyScope {
    /// Every formal question asked so far at the round's level.
    #[default]
    Cumulative,
    /// Only the questions of the round just played.
    Round,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightUpdates {
    #[default]
    PerRound,
    PerQuestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterviewConfig {
    pub alpha: f64,
    pub beta: Threshold,
    pub n_level: i64,
    pub middle: Level,
    pub pre_size: usize,
    pub round_size: usize,
    /// Formal-interview questions; the pre-interview is not counted.
    pub budget: usize,
    pub seed: u64,
    pub accuracy_scope: AccuracyScope,
    pub weight_updates: WeightUpdates,
}

impl Default for InterviewConfig {
    fn default() -> Self {
        InterviewConfig {
            alpha: 0.2,
            beta: Threshold::from_ratio(1, 2),
            n_level: 7,
            middle: Level::new(5).expect("valid level"),
            pre_size: 3,
            round_size: 3,
            budget: 200,
            seed: 0,
            accuracy_scope: AccuracyScope::Cumulative,
            weight_updates: WeightUpdates::PerRound,
        }
    }
}

impl InterviewConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if !(self.alpha.is_finite() && (0.0..1.0).contains(&self.alpha)) {
            return bad(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        let beta = self.beta.as_f64();
        if !(beta > 0.0 && beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {beta}"));
        }
        if self.pre_size == 0 {
            return bad("pre_size must be at least 1".into());
        }
        if self.round_size == 0 {
            return bad("round_size must be at least 1".into());
        }
        if self.budget < self.round_size {
            return bad(format!(
                "budget {} is smaller than round_size {}",
                self.budget, self.round_size
            ));
        }
        Ok(())
    }

    /// Parse the plain `key = value` configuration text.
    pub fn from_text(text: &str) -> Result<InterviewConfig, EngineError> {
        let config: InterviewConfig =
            toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid interview configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("question pool is empty")]
    EmptyPool,
    #[error("{source} (interview aborted after {} formal questions)", partial.questions_asked)]
    CandidateUnavailable {
        source: CandidateError,
        partial: Box<InterviewOutcome>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelRule {
    /// Up, stay or down by comparing accuracy with `beta`.
    Adaptive,
    /// Oscillation escape.
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelCount {
    pub asked: u32,
    pub correct: u32,
}

/// One formal-interview question as written to the transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub round: usize,
    pub interviewer_id: String,
    pub question_id: String,
    pub level: Level,
    pub correct: bool,
    /// Panel weights, in panel order, after this answer was credited.
    pub weight_snapshot: Vec<f64>,
    /// Level chosen for the round after this one.
    pub level_after: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub interviewer_id: String,
    pub level: Level,
    pub asked: u32,
    pub correct: u32,
    /// `(correct, asked)` behind the level decision.
    pub decision_accuracy: (u32, u32),
    pub rule: LevelRule,
    /// Level picked by the adaptive rule or the escape, before any fallback.
    pub proposed_level: Level,
    pub level_after: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreInterviewResult {
    pub answers: Vec<(String, bool)>,
    pub initial_level: Level,
    pub warning: Option<String>,
}

impl PreInterviewResult {
    pub fn correct(&self) -> u32 {
        self.answers.iter().filter(|(_, c)| *c).count() as u32
    }
}

/// Live interview state.
#[derive(Debug, Clone, PartialEq)]
pub struct InterviewState {
    pub level: Level,
    pub round_index: usize,
    pub questions_asked: usize,
    pub transcript: Vec<TranscriptEntry>,
    pub rounds: Vec<RoundRecord>,
    pub level_history: Vec<Level>,
    pub per_level_counts: BTreeMap<Level, LevelCount>,
}

impl InterviewState {
    pub fn new(level: Level) -> InterviewState {
        InterviewState {
            level,
            round_index: 0,
            questions_asked: 0,
            transcript: Vec::new(),
            rounds: Vec::new(),
            level_history: Vec::new(),
            per_level_counts: BTreeMap::new(),
        }
    }

    /// `(correct, asked)` that the next level decision is based on.
    pub fn decision_accuracy(&self, scope: AccuracyScope) -> Option<(u32, u32)> {
        match scope {
            AccuracyScope::Cumulative => {
                let c = self.per_level_counts.get(&self.level)?;
                (c.asked > 0).then_some((c.correct, c.asked))
            }
            AccuracyScope::Round => {
                let r = self.rounds.last().filter(|r| r.level == self.level)?;
                (r.asked > 0).then_some((r.correct, r.asked))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Fraction of formal questions answered correctly.
    Raw,
    /// Sum of levels of correct answers over sum of levels asked.
    Weighted,
    /// Maximum-likelihood location on the level axis under a unit-slope
    /// logistic response curve.
    #[default]
    Ability,
}

impl std::str::FromStr for ScoreKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ScoreKind::Raw),
            "weighted" => Ok(ScoreKind::Weighted),
            "ability" => Ok(ScoreKind::Ability),
            other => Err(format!("unknown score kind `{other}` (raw, weighted, ability)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterviewOutcome {
    pub candidate_id: String,
    pub raw_score: f64,
    pub weighted_score: f64,
    pub ability_score: f64,
    pub profile: BTreeMap<Level, f64>,
    pub initial_level: Level,
    pub pre_interview: PreInterviewResult,
    pub questions_asked: usize,
    pub early_stop: bool,
    pub level_history: Vec<Level>,
    pub rounds: Vec<RoundRecord>,
    pub transcript: Vec<TranscriptEntry>,
    pub final_weights: Vec<Interviewer>,
    pub panel: PanelConfig,
    pub config: InterviewConfig,
}

impl InterviewOutcome {
    pub fn score(&self, kind: ScoreKind) -> f64 {
        match kind {
            ScoreKind::Raw => self.raw_score,
            ScoreKind::Weighted => self.weighted_score,
            ScoreKind::Ability => self.ability_score,
        }
    }
}

/// Starting level from the pre-interview accuracy `correct / asked`.
pub fn initial_level(middle: Level, correct: u32, asked: u32, beta: Threshold) -> Level {
    if asked == 0 {
        return middle;
    }
    match beta.compare_ratio(correct as u64, asked as u64) {
        Ordering::Greater => middle.offset(1),
        Ordering::Equal => middle,
        Ordering::Less => middle.offset(-1),
    }
}

/// Next level from accuracy at the current level.
pub fn adaptive_level(level: Level, correct: u32, asked: u32, beta: Threshold) -> Level {
    match beta.compare_ratio(correct as u64, asked as u64) {
        Ordering::Greater => level.offset(1),
        Ordering::Equal => level,
        Ordering::Less => level.offset(-1),
    }
}

/// Adaptive next level for a state whose latest round has just completed.
pub fn update_level(state: &InterviewState, config: &InterviewConfig) -> Level {
    match state.decision_accuracy(config.accuracy_scope) {
        Some((c, a)) => adaptive_level(state.level, c, a, config.beta),
        None => state.level,
    }
}

/// Escape target when the last six round levels read `a, b, a, b, a, b` with
/// `|a - b| = 1`. The jump is taken from `a`, the second-to-last level.
pub fn oscillation_escape(level_history: &[Level], n_level: i64) -> Option<Level> {
    let tail = level_history.get(level_history.len().checked_sub(6)?..)?;
    let (a, b) = (tail[0], tail[1]);
    if (a.get() as i64 - b.get() as i64).abs() != 1 {
        return None;
    }
    if !tail.iter().enumerate().all(|(i, &l)| l == if i % 2 == 0 { a } else { b }) {
        return None;
    }
    let previous = a.get() as i64;
    Some(if previous > n_level { Level::clamped(previous + 3) } else { Level::clamped(previous - 3) })
}

/// Find a level with questions left, starting at `target`. When `target` is
/// empty, step up if `accuracy_above_beta` and down otherwise; if that runs
/// into the end of the scale, search the other side. `None` means the pool has
/// nothing left at any level.
pub fn exhaustion_fallback(target: Level, accuracy_above_beta: bool, pool: &QuestionPool) -> Option<Level> {
    if pool.available(target) > 0 {
        return Some(target);
    }
    let dir: i64 = if accuracy_above_beta { 1 } else { -1 };
    let t = target.get() as i64;
    let forward = (1..10).map(|k| t + dir * k);
    let backward = (1..10).map(|k| t - dir * k);
    forward
        .take_while(|l| (1..=10).contains(l))
        .chain(backward.take_while(|l| (1..=10).contains(l)))
        .map(Level::clamped)
        .find(|&l| pool.available(l) > 0)
}

/// Unit-slope logistic maximum-likelihood location for `(level, correct)`
/// responses, bounded to `[0, 11]`.
pub fn ability_estimate<I>(responses: I) -> f64
where
    I: IntoIterator<Item = (Level, bool)>,
{
    let items: Vec<(f64, bool)> = responses.into_iter().map(|(l, c)| (l.get() as f64, c)).collect();
    let (lo, hi) = (0.0_f64, 11.0_f64);
    if items.is_empty() {
        return (lo + hi) / 2.0;
    }
    let correct = items.iter().filter(|(_, c)| *c).count() as f64;
    // Expected correct count is increasing in the location.
    let excess = |theta: f64| -> f64 {
        items.iter().map(|(l, _)| 1.0 / (1.0 + (l - theta).exp())).sum::<f64>() - correct
    };
    if excess(lo) >= 0.0 {
        return lo;
    }
    if excess(hi) <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if excess(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Draw the pre-interview at `config.middle`, judge it and pick the
/// starting level.
pub fn pre_interview<C: Candidate + ?Sized>(
    pool: &mut QuestionPool,
    candidate: &mut C,
    judge: &dyn Judge,
    config: &InterviewConfig,
    rng: &mut dyn rand::RngCore,
) -> Result<PreInterviewResult, (CandidateError, PreInterviewResult)> {
    let questions = pool.draw(config.middle, config.pre_size);
    let warning = match questions.len() {
        0 => Some(format!("no questions at level {}; starting at the middle level", config.middle)),
        n if n < config.pre_size => Some(format!(
            "only {n} of {} pre-interview questions available at level {}",
            config.pre_size, config.middle
        )),
        _ => None,
    };
    let mut answers = Vec::with_capacity(questions.len());
    for q in &questions {
        match candidate.answer(q, rng) {
            Ok(a) => answers.push((q.id.clone(), judge.judge(q, &a).correct)),
            Err(e) => {
                let partial = PreInterviewResult { answers, initial_level: config.middle, warning };
                return Err((e, partial));
            }
        }
    }
    let correct = answers.iter().filter(|(_, c)| *c).count() as u32;
    let initial = initial_level(config.middle, correct, answers.len() as u32, config.beta);
    Ok(PreInterviewResult { answers, initial_level: initial, warning })
}

struct Run<'a> {
    pool: &'a mut QuestionPool,
    panel: Panel,
    config: &'a InterviewConfig,
    state: InterviewState,
    pre: PreInterviewResult,
    early_stop: bool,
    candidate_id: String,
}

impl Run<'_> {
    fn finish(self) -> InterviewOutcome {
        let t = &self.state.transcript;
        let asked = t.len();
        let correct = t.iter().filter(|e| e.correct).count();
        let level_sum: u64 = t.iter().map(|e| e.level.get() as u64).sum();
        let correct_level_sum: u64 = t.iter().filter(|e| e.correct).map(|e| e.level.get() as u64).sum();
        InterviewOutcome {
            candidate_id: self.candidate_id,
            raw_score: if asked == 0 { 0.0 } else { correct as f64 / asked as f64 },
            weighted_score: if level_sum == 0 { 0.0 } else { correct_level_sum as f64 / level_sum as f64 },
            ability_score: ability_estimate(t.iter().map(|e| (e.level, e.correct))),
            profile: level_profile(t),
            initial_level: self.pre.initial_level,
            pre_interview: self.pre,
            questions_asked: self.state.questions_asked,
            early_stop: self.early_stop,
            level_history: self.state.level_history,
            rounds: self.state.rounds,
            transcript: self.state.transcript,
            final_weights: self.panel.interviewers().to_vec(),
            panel: self.panel.config(),
            config: self.config.clone(),
        }
    }
}

/// Run a full interview with answer-key judging.
pub fn run_interview<C: Candidate + ?Sized>(
    pool: &mut QuestionPool,
    candidate: &mut C,
    panel: &Panel,
    config: &InterviewConfig,
) -> Result<InterviewOutcome, EngineError> {
    run_interview_with_judge(pool, candidate, panel, config, &AnswerKeyJudge)
}

/// Run a full interview. The panel's alpha is replaced by `config.alpha`.
/// Randomness comes from `config.seed`: one stream for interviewer selection
/// and one for candidate noise. The pool is consumed in place.
pub fn run_interview_with_judge<C: Candidate + ?Sized>(
    pool: &mut QuestionPool,
    candidate: &mut C,
    panel: &Panel,
    config: &InterviewConfig,
    judge: &dyn Judge,
) -> Result<InterviewOutcome, EngineError> {
    config.validate()?;
    if pool.total() == 0 {
        return Err(EngineError::EmptyPool);
    }
    let panel = Panel::new(panel.ids(), config.alpha)?;
    let mut select_rng = stream_rng(config.seed, Stream::Interviewer, &[]);
    let mut noise_rng = stream_rng(config.seed, Stream::CandidateNoise, &[]);
    let candidate_id = candidate.id().to_string();

    let pre = match pre_interview(pool, candidate, judge, config, &mut noise_rng) {
        Ok(p) => p,
        Err((source, partial_pre)) => {
            let run = Run {
                pool,
                panel,
                config,
                state: InterviewState::new(partial_pre.initial_level),
                pre: partial_pre,
                early_stop: true,
                candidate_id,
            };
            return Err(EngineError::CandidateUnavailable { source, partial: Box::new(run.finish()) });
        }
    };

    let pre_above = config
        .beta
        .compare_ratio(pre.correct() as u64, pre.answers.len().max(1) as u64)
        == Ordering::Greater;
    let mut run = Run {
        state: InterviewState::new(pre.initial_level),
        pre,
        pool,
        panel,
        config,
        early_stop: false,
        candidate_id,
    };
    match exhaustion_fallback(run.state.level, pre_above, run.pool) {
        Some(l) => run.state.level = l,
        None => run.early_stop = true,
    }

    while !run.early_stop && run.state.questions_asked < config.budget {
        let take = config.round_size.min(config.budget - run.state.questions_asked);
        let level = run.state.level;
        let interviewer_id = run.panel.select(&mut select_rng).to_string();
        let questions = run.pool.draw(level, take);
        debug_assert!(!questions.is_empty(), "fallback guarantees questions at the round level");

        let round = run.state.round_index + 1;
        let first_entry = run.state.transcript.len();
        let mut verdicts: Vec<Verdict> = Vec::with_capacity(questions.len());
        for q in &questions {
            let answer = match candidate.answer(q, &mut noise_rng) {
                Ok(a) => a,
                Err(source) => {
                    return Err(EngineError::CandidateUnavailable { source, partial: Box::new(run.finish()) })
                }
            };
            let verdict = judge.judge(q, &answer);
            if config.weight_updates == WeightUpdates::PerQuestion {
                run.panel.record_round(&interviewer_id, std::slice::from_ref(&verdict))?;
            }
            run.state.transcript.push(TranscriptEntry {
                round,
                interviewer_id: interviewer_id.clone(),
                question_id: q.id.clone(),
                level,
                correct: verdict.correct,
                weight_snapshot: run.panel.weights(),
                level_after: level,
            });
            run.state.questions_asked += 1;
            verdicts.push(verdict);
        }
        if config.weight_updates == WeightUpdates::PerRound {
            run.panel.record_round(&interviewer_id, &verdicts)?;
            let weights = run.panel.weights();
            for e in &mut run.state.transcript[first_entry..] {
                e.weight_snapshot.clone_from(&weights);
            }
        }

        let asked = verdicts.len() as u32;
        let correct = verdicts.iter().filter(|v| v.correct).count() as u32;
        let count = run.state.per_level_counts.entry(level).or_default();
        count.asked += asked;
        count.correct += correct;
        run.state.round_index = round;
        run.state.level_history.push(level);
        run.state.rounds.push(RoundRecord {
            round,
            interviewer_id,
            level,
            asked,
            correct,
            decision_accuracy: (0, 0),
            rule: LevelRule::Adaptive,
            proposed_level: level,
            level_after: level,
        });

        let decision = run.state.decision_accuracy(config.accuracy_scope).unwrap_or((correct, asked));
        let (rule, proposed) = match oscillation_escape(&run.state.level_history, config.n_level) {
            Some(l) => (LevelRule::Escape, l),
            None => (LevelRule::Adaptive, update_level(&run.state, config)),
        };
        let above = config.beta.compare_ratio(decision.0 as u64, decision.1 as u64) == Ordering::Greater;
        let level_after = if run.state.questions_asked < config.budget {
            exhaustion_fallback(proposed, above, run.pool).unwrap_or_else(|| {
                run.early_stop = true;
                proposed
            })
        } else {
            proposed
        };

        let record = run.state.rounds.last_mut().expect("round just pushed");
        record.decision_accuracy = decision;
        record.rule = rule;
        record.proposed_level = proposed;
        record.level_after = level_after;
        for e in &mut run.state.transcript[first_entry..] {
            e.level_after = level_after;
        }
        run.state.level = level_after;
    }

    Ok(run.finish())
}

/// Where a transcript replay disagreed with the recorded history.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("replay mismatch at round {round}: {message}")]
pub struct ReplayMismatch {
    pub round: usize,
    pub message: String,
}

/// Recompute every weight, level decision and score of a completed interview
/// from its transcript alone and compare with what was recorded.
pub fn replay(outcome: &InterviewOutcome) -> Result<(), ReplayMismatch> {
    let fail = |round: usize, message: String| Err(ReplayMismatch { round, message });
    let config = &outcome.config;

    let pre = &outcome.pre_interview;
    let expected_initial =
        initial_level(config.middle, pre.correct(), pre.answers.len() as u32, config.beta);
    if expected_initial != outcome.initial_level || pre.initial_level != outcome.initial_level {
        return fail(0, format!("initial level {} but pre-interview implies {expected_initial}", outcome.initial_level));
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for id in pre.answers.iter().map(|(id, _)| id.as_str()).chain(outcome.transcript.iter().map(|e| e.question_id.as_str())) {
        if !seen.insert(id) {
            return fail(0, format!("question `{id}` asked twice"));
        }
    }

    let mut panel = Panel::new(outcome.panel.interviewers.iter().cloned(), config.alpha)
        .map_err(|e| ReplayMismatch { round: 0, message: e.to_string() })?;
    let mut state = InterviewState::new(outcome.initial_level);
    let mut cursor = 0usize;
    let mut prev_after: Option<Level> = None;

    for record in &outcome.rounds {
        let r = record.round;
        if r != state.round_index + 1 {
            return fail(r, format!("round numbering jumps from {}", state.round_index));
        }
        if let Some(prev) = prev_after {
            if prev != record.level {
                return fail(r, format!("played level {} but previous round chose {prev}", record.level));
            }
        }
        let entries = outcome.transcript.get(cursor..cursor + record.asked as usize).unwrap_or(&[]);
        if entries.len() != record.asked as usize || entries.is_empty() {
            return fail(r, "transcript shorter than round record".into());
        }
        cursor += entries.len();

        let mut verdicts = Vec::with_capacity(entries.len());
        for e in entries {
            if e.round != r || e.level != record.level || e.interviewer_id != record.interviewer_id {
                return fail(r, format!("entry `{}` does not belong to this round", e.question_id));
            }
            let v = Verdict { question_id: e.question_id.clone(), correct: e.correct, judged_by: String::new() };
            if config.weight_updates == WeightUpdates::PerQuestion {
                panel.record_round(&record.interviewer_id, std::slice::from_ref(&v)).map_err(|err| ReplayMismatch { round: r, message: err.to_string() })?;
                if panel.weights() != e.weight_snapshot {
                    return fail(r, format!("weights after `{}` differ", e.question_id));
                }
            }
            verdicts.push(v);
        }
        if config.weight_updates == WeightUpdates::PerRound {
            panel.record_round(&record.interviewer_id, &verdicts).map_err(|err| ReplayMismatch { round: r, message: err.to_string() })?;
            if entries.iter().any(|e| e.weight_snapshot != panel.weights()) {
                return fail(r, "weight snapshot differs from recomputed weights".into());
            }
        }
        if panel.weights().iter().any(|w| !(0.5..=2.0).contains(w)) {
            return fail(r, "weight outside [0.5, 2.0]".into());
        }

        let correct = verdicts.iter().filter(|v| v.correct).count() as u32;
        if correct != record.correct {
            return fail(r, "round correct count differs".into());
        }
        state.level = record.level;
        state.round_index = r;
        state.level_history.push(record.level);
        let count = state.per_level_counts.entry(record.level).or_default();
        count.asked += record.asked;
        count.correct += correct;
        state.rounds.push(record.clone());

        let decision = state.decision_accuracy(config.accuracy_scope).unwrap_or((correct, record.asked));
        if decision != record.decision_accuracy {
            return fail(r, format!("decision accuracy {:?} recorded as {:?}", decision, record.decision_accuracy));
        }
        let (rule, proposed) = match oscillation_escape(&state.level_history, config.n_level) {
            Some(l) => (LevelRule::Escape, l),
            None => (LevelRule::Adaptive, update_level(&state, config)),
        };
        if rule != record.rule || proposed != record.proposed_level {
            return fail(r, format!("recomputed {rule:?} -> {proposed}, recorded {:?} -> {}", record.rule, record.proposed_level));
        }
        if entries.iter().any(|e| e.level_after != record.level_after) {
            return fail(r, "transcript level_after differs from round record".into());
        }
        prev_after = Some(record.level_after);
    }
    if cursor != outcome.transcript.len() {
        return fail(state.round_index, "transcript has entries beyond the last round".into());
    }
    if state.level_history != outcome.level_history {
        return fail(state.round_index, "level history differs".into());
    }
    if panel.interviewers() != outcome.final_weights.as_slice() {
        return fail(state.round_index, "final panel state differs".into());
    }
    let asked = outcome.transcript.len();
    if asked != outcome.questions_asked {
        return fail(state.round_index, "questions_asked differs from transcript length".into());
    }
    let raw = if asked == 0 { 0.0 } else { outcome.transcript.iter().filter(|e| e.correct).count() as f64 / asked as f64 };
    if raw != outcome.raw_score || level_profile(&outcome.transcript) != outcome.profile {
        return fail(state.round_index, "scores differ from transcript".into());
    }
    Ok(())
}
