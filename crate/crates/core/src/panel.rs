//! Interviewer panel with dynamic weights.
//!
//! After a round, the asking interviewer's weight shrinks by `(1 - alpha)`
//! when the candidate has answered all or none of that interviewer's
//! questions so far, and grows by `(1 + alpha)` otherwise. Weights stay in
//! `[0.5, 2.0]`. The interviewer for each round is drawn with probability
//! proportional to weight.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::participants::Verdict;

pub const MIN_WEIGHT: f64 = 0.5;
pub const MAX_WEIGHT: f64 = 2.0;
pub const INITIAL_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PanelError {
    #[error("panel needs at least one interviewer")]
    Empty,
    #[error("duplicate interviewer id `{0}`")]
    DuplicateId(String),
    #[error("unknown interviewer `{0}`")]
    UnknownInterviewer(String),
    #[error("alpha must lie in [0, 1), got {0}")]
    BadAlpha(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interviewer {
    pub id: String,
    pub weight: f64,
    /// Questions this interviewer has posed.
    pub asked: u32,
    /// How many of those the candidate got right.
    pub correct: u32,
}

impl Interviewer {
    pub fn new(id: impl Into<String>) -> Interviewer {
        Interviewer { id: id.into(), weight: INITIAL_WEIGHT, asked: 0, correct: 0 }
    }

    /// True when the running accuracy is exactly 0 or exactly 1.
    fn uninformative(&self) -> bool {
        self.correct == 0 || self.correct == self.asked
    }
}

/// Apply one weight update from the interviewer's cumulative record.
/// With no questions asked yet there is no evidence and nothing changes.
pub fn update_weight(interviewer: &Interviewer, alpha: f64) -> Interviewer {
    let mut next = interviewer.clone();
    if interviewer.asked == 0 {
        return next;
    }
    let factor = if interviewer.uninformative() { 1.0 - alpha } else { 1.0 + alpha };
    next.weight = (interviewer.weight * factor).clamp(MIN_WEIGHT, MAX_WEIGHT);
    next
}

/// Panel block as stored in configuration and alongside transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    pub interviewers: Vec<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.2
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            interviewers: vec!["interviewer-1".into(), "interviewer-2".into(), "interviewer-3".into()],
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    interviewers: Vec<Interviewer>,
    alpha: f64,
}

impl Panel {
    pub fn new<I, S>(ids: I, alpha: f64) -> Result<Panel, PanelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(PanelError::BadAlpha(alpha.to_string()));
        }
        let mut interviewers: Vec<Interviewer> = Vec::new();
        for id in ids {
            let id = id.into();
            if interviewers.iter().any(|i| i.id == id) {
                return Err(PanelError::DuplicateId(id));
            }
            interviewers.push(Interviewer::new(id));
        }
        if interviewers.is_empty() {
            return Err(PanelError::Empty);
        }
        Ok(Panel { interviewers, alpha })
    }

    pub fn from_config(config: &PanelConfig) -> Result<Panel, PanelError> {
        Panel::new(config.interviewers.iter().cloned(), config.alpha)
    }

    pub fn config(&self) -> PanelConfig {
        PanelConfig { interviewers: self.ids().map(str::to_string).collect(), alpha: self.alpha }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn interviewers(&self) -> &[Interviewer] {
        &self.interviewers
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.interviewers.iter().map(|i| i.id.as_str())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.interviewers.iter().map(|i| i.weight).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Interviewer> {
        self.interviewers.iter().find(|i| i.id == id)
    }

    /// Roulette-wheel draw: interviewer `i` is picked with probability
    /// `weight_i / sum(weights)`.
    pub fn select(&self, rng: &mut dyn RngCore) -> &str {
        let total: f64 = self.interviewers.iter().map(|i| i.weight).sum();
        let mut target = rng.random::<f64>() * total;
        for interviewer in &self.interviewers {
            if target < interviewer.weight {
                return &interviewer.id;
            }
            target -= interviewer.weight;
        }
        // Rounding can leave a sliver past the last bucket.
        &self.interviewers[self.interviewers.len() - 1].id
    }

    /// Credit a round's verdicts to the interviewer who asked them, then
    /// update that interviewer's weight. Other weights are untouched.
    pub fn record_round(&mut self, interviewer_id: &str, verdicts: &[Verdict]) -> Result<(), PanelError> {
        let alpha = self.alpha;
        let interviewer = self
            .interviewers
            .iter_mut()
            .find(|i| i.id == interviewer_id)
            .ok_or_else(|| PanelError::UnknownInterviewer(interviewer_id.to_string()))?;
        if verdicts.is_empty() {
            return Ok(());
        }
        interviewer.asked += verdicts.len() as u32;
        interviewer.correct += verdicts.iter().filter(|v| v.correct).count() as u32;
        *interviewer = update_weight(interviewer, alpha);
        Ok(())
    }
}
