//! Interviewees and judging.
//!
//! A [`Candidate`] answers one question at a time. Three implementations ship
//! here: a logistic [`SyntheticCandidate`] with a known ability, a
//! [`ScriptedCandidate`] backed by a fixed answer table, and a
//! [`RemoteCandidate`] that relays questions to an HTTP backend.

use std::collections::HashMap;
use std::io::BufRead;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::level::Level;
use crate::pool::{read_jsonl, PoolError, Question, QuestionOption};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAnswer {
    pub question_id: String,
    pub answer: String,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CandidateError {
    #[error("candidate unavailable while answering `{question_id}`: {reason}")]
    Unavailable { question_id: String, reason: String },
}

pub trait Candidate {
    fn id(&self) -> &str;

    fn answer(
        &mut self,
        question: &Question,
        rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError>;
}

impl<C: Candidate + ?Sized> Candidate for Box<C> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn answer(
        &mut self,
        question: &Question,
        rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError> {
        (**self).answer(question, rng)
    }
}

/// Answer token used by simulated candidates on open-ended questions they miss.
pub const WRONG_TOKEN: &str = "<wrong>";

fn wrong_answer(question: &Question, rng: &mut dyn RngCore) -> String {
    let wrong: Vec<&QuestionOption> =
        question.options.iter().filter(|o| o.label != question.answer_key).collect();
    if wrong.is_empty() {
        WRONG_TOKEN.to_string()
    } else {
        wrong[rng.random_range(0..wrong.len())].label.clone()
    }
}

/// Two-parameter logistic response curve with a guessing floor:
/// `p(level) = floor + (1 - floor) * logistic(slope * (ability - level))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub ability: f64,
    pub slope: f64,
    #[serde(default)]
    pub floor: f64,
}

impl SyntheticProfile {
    pub fn new(ability: f64, slope: f64, floor: f64) -> Result<SyntheticProfile, String> {
        let p = SyntheticProfile { ability, slope, floor };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.ability.is_finite() {
            return Err(format!("ability must be finite, got {}", self.ability));
        }
        if !(self.slope.is_finite() && self.slope > 0.0) {
            return Err(format!("slope must be positive, got {}", self.slope));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return Err(format!("floor must lie in [0, 1), got {}", self.floor));
        }
        Ok(())
    }

    pub fn p_correct_at(&self, difficulty: f64) -> f64 {
        let z = self.slope * (self.ability - difficulty);
        let logistic = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
        self.floor + (1.0 - self.floor) * logistic
    }

    pub fn p_correct(&self, level: Level) -> f64 {
        self.p_correct_at(level.get() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCandidate {
    id: String,
    profile: SyntheticProfile,
}

impl SyntheticCandidate {
    pub fn new(id: impl Into<String>, profile: SyntheticProfile) -> SyntheticCandidate {
        SyntheticCandidate { id: id.into(), profile }
    }

    pub fn profile(&self) -> &SyntheticProfile {
        &self.profile
    }
}

impl Candidate for SyntheticCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn answer(
        &mut self,
        question: &Question,
        rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError> {
        let correct = rng.random::<f64>() < self.profile.p_correct(question.level);
        let answer =
            if correct { question.answer_key.clone() } else { wrong_answer(question, rng) };
        Ok(CandidateAnswer {
            question_id: question.id.clone(),
            answer,
            latency: Duration::ZERO,
        })
    }
}

/// One line of a scripted-candidate file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedAnswer {
    pub question_id: String,
    pub answer: String,
}

/// Looks answers up in a fixed table; unscripted questions get an empty reply.
#[derive(Debug, Clone)]
pub struct ScriptedCandidate {
    id: String,
    table: HashMap<String, String>,
}

impl ScriptedCandidate {
    pub fn new(id: impl Into<String>, table: HashMap<String, String>) -> ScriptedCandidate {
        ScriptedCandidate { id: id.into(), table }
    }

    pub fn load<R: BufRead>(id: impl Into<String>, reader: R) -> Result<ScriptedCandidate, PoolError> {
        let table = read_jsonl::<ScriptedAnswer, _>(reader)?
            .into_iter()
            .map(|(_, r)| (r.question_id, r.answer))
            .collect();
        Ok(ScriptedCandidate::new(id, table))
    }

    /// A candidate that knows every answer key in `questions`.
    pub fn all_correct(id: impl Into<String>, questions: &[Question]) -> ScriptedCandidate {
        let table = questions.iter().map(|q| (q.id.clone(), q.answer_key.clone())).collect();
        ScriptedCandidate::new(id, table)
    }
}

impl Candidate for ScriptedCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn answer(
        &mut self,
        question: &Question,
        _rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError> {
        Ok(CandidateAnswer {
            question_id: question.id.clone(),
            answer: self.table.get(&question.id).cloned().unwrap_or_default(),
            latency: Duration::ZERO,
        })
    }
}

/// Answers correctly or not by cycling through a fixed pattern, regardless of
/// the question. Handy for driving the engine through exact branches.
#[derive(Debug, Clone)]
pub struct PatternCandidate {
    id: String,
    pattern: Vec<bool>,
    pos: usize,
}

impl PatternCandidate {
    pub fn new(id: impl Into<String>, pattern: Vec<bool>) -> PatternCandidate {
        assert!(!pattern.is_empty(), "pattern must not be empty");
        PatternCandidate { id: id.into(), pattern, pos: 0 }
    }
}

impl Candidate for PatternCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn answer(
        &mut self,
        question: &Question,
        rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError> {
        let correct = self.pattern[self.pos % self.pattern.len()];
        self.pos += 1;
        let answer =
            if correct { question.answer_key.clone() } else { wrong_answer(question, rng) };
        Ok(CandidateAnswer { question_id: question.id.clone(), answer, latency: Duration::ZERO })
    }
}

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    question_id: &'a str,
    prompt: &'a str,
    options: &'a [QuestionOption],
    media_refs: &'a [String],
}

#[derive(Debug, Deserialize)]
struct RemoteReply {
    answer: String,
}

pub const REMOTE_URL_ENV: &str = "INTERVIEW_REMOTE_URL";
pub const REMOTE_TIMEOUT_ENV: &str = "INTERVIEW_REMOTE_TIMEOUT_MS";

/// Relays each question to an HTTP backend: one JSON `POST` per question,
/// reply `{"answer": "..."}`. Non-2xx statuses, malformed replies and
/// timeouts become [`CandidateError::Unavailable`] once retries run out.
#[derive(Clone)]
pub struct RemoteCandidate {
    id: String,
    url: String,
    retries: u32,
    agent: ureq::Agent,
}

impl RemoteCandidate {
    pub fn new(id: impl Into<String>, url: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        RemoteCandidate { id: id.into(), url: url.into(), retries, agent }
    }

    /// Read the backend URL and timeout from the environment.
    pub fn from_env(id: impl Into<String>, retries: u32) -> Result<Self, String> {
        let url = std::env::var(REMOTE_URL_ENV).map_err(|_| format!("{REMOTE_URL_ENV} is not set"))?;
        let timeout_ms = match std::env::var(REMOTE_TIMEOUT_ENV) {
            Ok(v) => v.parse::<u64>().map_err(|e| format!("{REMOTE_TIMEOUT_ENV}: {e}"))?,
            Err(_) => 30_000,
        };
        Ok(RemoteCandidate::new(id, url, Duration::from_millis(timeout_ms), retries))
    }

    fn call(&self, question: &Question) -> Result<String, String> {
        let body = RemoteRequest {
            question_id: &question.id,
            prompt: &question.prompt,
            options: &question.options,
            media_refs: &question.media_refs,
        };
        let resp = self.agent.post(&self.url).send_json(&body).map_err(|e| e.to_string())?;
        let reply: RemoteReply = resp.into_body().read_json().map_err(|e| e.to_string())?;
        Ok(reply.answer)
    }
}

impl Candidate for RemoteCandidate {
    fn id(&self) -> &str {
        &self.id
    }

    fn answer(
        &mut self,
        question: &Question,
        _rng: &mut dyn RngCore,
    ) -> Result<CandidateAnswer, CandidateError> {
        let start = Instant::now();
        let mut last = String::new();
        for _ in 0..=self.retries {
            match self.call(question) {
                Ok(answer) => {
                    return Ok(CandidateAnswer {
                        question_id: question.id.clone(),
                        answer,
                        latency: start.elapsed(),
                    })
                }
                Err(e) => last = e,
            }
        }
        Err(CandidateError::Unavailable { question_id: question.id.clone(), reason: last })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub question_id: String,
    pub correct: bool,
    pub judged_by: String,
}

/// Decides whether an answer is correct. The default matches against the
/// answer key; a model-backed judge can be slotted in behind the same trait.
pub trait Judge {
    fn judge(&self, question: &Question, answer: &CandidateAnswer) -> Verdict;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnswerKeyJudge;

pub const ANSWER_KEY_JUDGE: &str = "answer-key";

/// Trim, case-fold and strip trailing punctuation.
pub fn normalize_answer(s: &str) -> String {
    s.trim()
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .trim()
        .to_lowercase()
}

impl Judge for AnswerKeyJudge {
    fn judge(&self, question: &Question, answer: &CandidateAnswer) -> Verdict {
        let reply = normalize_answer(&answer.answer);
        let key = normalize_answer(&question.answer_key);
        let correct = if reply.is_empty() {
            false
        } else if question.options.is_empty() {
            reply == key
        } else {
            // A reply naming an option by label or by its full text selects it.
            let chosen = question
                .options
                .iter()
                .find(|o| normalize_answer(&o.label) == reply)
                .or_else(|| question.options.iter().find(|o| normalize_answer(&o.text) == reply));
            match chosen {
                Some(opt) => normalize_answer(&opt.label) == key,
                None => reply == key,
            }
        };
        Verdict {
            question_id: question.id.clone(),
            correct,
            judged_by: ANSWER_KEY_JUDGE.to_string(),
        }
    }
}
