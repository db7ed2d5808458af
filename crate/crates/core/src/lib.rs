//! Budgeted adaptive evaluation of models through a multi-to-one interview.
//!
//! A candidate model first sits a short calibration test at middle difficulty,
//! then a panel of weighted interviewers takes turns asking rounds of questions
//! whose difficulty tracks the candidate's running accuracy. The [`harness`]
//! module checks the resulting scores against full-coverage ground truth and a
//! random-sampling baseline.

pub mod engine;
pub mod harness;
pub mod level;
pub mod metrics;
pub mod panel;
pub mod participants;
pub mod pool;
pub mod rng;
pub mod threshold;

pub use engine::{
    run_interview, InterviewConfig, InterviewOutcome, InterviewState, LevelRule, RoundRecord,
    ScoreKind, TranscriptEntry,
};
pub use level::Level;
pub use metrics::{krcc, plcc, srcc, MetricError, ScoreVector};
pub use panel::{Interviewer, Panel};
pub use participants::{
    AnswerKeyJudge, Candidate, CandidateAnswer, CandidateError, Judge, RemoteCandidate,
    ScriptedCandidate, SyntheticCandidate, SyntheticProfile, Verdict,
};
pub use pool::{Question, QuestionOption, QuestionPool, VerdictMatrix};
pub use threshold::Threshold;
