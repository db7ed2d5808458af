//! Question records, difficulty annotation and the per-(level, category)
//! stacks that interviews draw from without replacement.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::level::Level;

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate question id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: question `{id}` has level {level}, expected 1..=10")]
    LevelOutOfRange { id: String, level: i64, line: usize },
    #[error("line {line}: question `{id}` has no level")]
    MissingLevel { id: String, line: usize },
    #[error("line {line}: answer key of question `{id}` does not match exactly one option label")]
    AnswerKeyMismatch { id: String, line: usize },
    #[error("verdict matrix has no reference models")]
    NoModels,
    #[error("verdict matrix is malformed: {0}")]
    BadMatrix(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub category: String,
    pub level: Level,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<QuestionOption>,
    pub answer_key: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub media_refs: Vec<String>,
}

impl Question {
    pub fn option(&self, label: &str) -> Option<&QuestionOption> {
        self.options.iter().find(|o| o.label == label)
    }

    fn key_matches_one_option(&self) -> bool {
        self.options.is_empty()
            || self.options.iter().filter(|o| o.label == self.answer_key).count() == 1
    }
}

/// A question line as found on disk; `level` may be absent before annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<i64>,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<QuestionOption>,
    pub answer_key: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub media_refs: Vec<String>,
}

impl QuestionRecord {
    pub fn into_question(self, line: usize) -> Result<Question, PoolError> {
        let level = match self.level {
            None => return Err(PoolError::MissingLevel { id: self.id, line }),
            Some(l) => Level::new(l).ok_or(PoolError::LevelOutOfRange {
                id: self.id.clone(),
                level: l,
                line,
            })?,
        };
        let q = Question {
            id: self.id,
            category: self.category,
            level,
            prompt: self.prompt,
            options: self.options,
            answer_key: self.answer_key,
            media_refs: self.media_refs,
        };
        if !q.key_matches_one_option() {
            return Err(PoolError::AnswerKeyMismatch { id: q.id, line });
        }
        Ok(q)
    }
}

impl From<Question> for QuestionRecord {
    fn from(q: Question) -> Self {
        QuestionRecord {
            id: q.id,
            category: q.category,
            level: Some(q.level.get() as i64),
            prompt: q.prompt,
            options: q.options,
            answer_key: q.answer_key,
            media_refs: q.media_refs,
        }
    }
}

/// Parse line-delimited JSON records, skipping blank lines. Errors carry the
/// 1-based line number.
pub fn read_jsonl<T, R>(reader: R) -> Result<Vec<(usize, T)>, PoolError>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| PoolError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, rec));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_questions<R: BufRead>(reader: R) -> Result<Vec<Question>, PoolError> {
    let records = read_jsonl::<QuestionRecord, _>(reader)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, rec) in records {
        if !seen.insert(rec.id.clone()) {
            return Err(PoolError::DuplicateId { id: rec.id, line });
        }
        out.push(rec.into_question(line)?);
    }
    Ok(out)
}

pub fn write_questions<W: Write>(writer: W, questions: &[Question]) -> std::io::Result<()> {
    write_jsonl(writer, questions)
}

/// Per-(level, category) stacks of unasked questions.
///
/// The question set is shared behind an `Arc`, so cloning a pool for an
/// independent interview only copies the index stacks.
#[derive(Debug, Clone)]
pub struct QuestionPool {
    questions: Arc<[Question]>,
    categories: Arc<[String]>,
    // Category indices present at each level, in name order.
    level_categories: [Vec<usize>; 10],
    stacks: BTreeMap<(Level, usize), Vec<u32>>,
    asked: BTreeSet<u32>,
    cursor: [usize; 10],
}

/// Serializable view of a pool's stack order and consumption state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSnapshot {
    pub stacks: Vec<StackSnapshot>,
    pub asked: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackSnapshot {
    pub level: Level,
    pub category: String,
    /// Bottom to top; the last id is drawn next.
    pub ids: Vec<String>,
}

impl QuestionPool {
    pub fn empty() -> QuestionPool {
        QuestionPool {
            questions: Arc::from(Vec::new()),
            categories: Arc::from(Vec::new()),
            level_categories: Default::default(),
            stacks: BTreeMap::new(),
            asked: BTreeSet::new(),
            cursor: [0; 10],
        }
    }

    /// Build a pool from validated questions. The records are shuffled once
    /// with `rng` and then pushed onto their stacks.
    pub fn from_questions(
        questions: Vec<Question>,
        rng: &mut dyn RngCore,
    ) -> Result<QuestionPool, PoolError> {
        let mut seen = HashSet::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if !seen.insert(q.id.as_str()) {
                return Err(PoolError::DuplicateId { id: q.id.clone(), line: i + 1 });
            }
            if !q.key_matches_one_option() {
                return Err(PoolError::AnswerKeyMismatch { id: q.id.clone(), line: i + 1 });
            }
        }

        let names: BTreeSet<&str> = questions.iter().map(|q| q.category.as_str()).collect();
        let categories: Vec<String> = names.into_iter().map(str::to_string).collect();
        let cat_index: HashMap<&str, usize> =
            categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();

        let mut order: Vec<u32> = (0..questions.len() as u32).collect();
        order.shuffle(rng);

        let mut stacks: BTreeMap<(Level, usize), Vec<u32>> = BTreeMap::new();
        for idx in order {
            let q = &questions[idx as usize];
            stacks.entry((q.level, cat_index[q.category.as_str()])).or_default().push(idx);
        }
        let mut level_categories: [Vec<usize>; 10] = Default::default();
        for &(level, cat) in stacks.keys() {
            level_categories[level.get() as usize - 1].push(cat);
        }

        Ok(QuestionPool {
            questions: Arc::from(questions),
            categories: Arc::from(categories),
            level_categories,
            stacks,
            asked: BTreeSet::new(),
            cursor: [0; 10],
        })
    }

    /// Load line-delimited question records.
    pub fn load<R: BufRead>(reader: R, rng: &mut dyn RngCore) -> Result<QuestionPool, PoolError> {
        QuestionPool::from_questions(read_questions(reader)?, rng)
    }

    pub fn total(&self) -> usize {
        self.questions.len()
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn remaining(&self) -> usize {
        self.stacks.values().map(Vec::len).sum()
    }

    pub fn asked_count(&self) -> usize {
        self.asked.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn is_asked(&self, id: &str) -> bool {
        self.asked.iter().any(|&i| self.questions[i as usize].id == id)
    }

    /// Number of unconsumed questions at `level`.
    pub fn available(&self, level: Level) -> usize {
        self.level_categories[level.get() as usize - 1]
            .iter()
            .map(|&c| self.stacks.get(&(level, c)).map_or(0, Vec::len))
            .sum()
    }

    /// Pop up to `count` questions at exactly `level`, walking the level's
    /// categories round-robin and taking one question per category per pass.
    /// Returns fewer than `count` when the level runs dry.
    pub fn draw(&mut self, level: Level, count: usize) -> Vec<Question> {
        let li = level.get() as usize - 1;
        let cats = &self.level_categories[li];
        let mut out = Vec::with_capacity(count);
        if cats.is_empty() {
            return out;
        }
        let mut remaining = self.available(level);
        while out.len() < count && remaining > 0 {
            let cat = cats[self.cursor[li] % cats.len()];
            self.cursor[li] = (self.cursor[li] + 1) % cats.len();
            if let Some(idx) = self.stacks.get_mut(&(level, cat)).and_then(Vec::pop) {
                self.asked.insert(idx);
                out.push(self.questions[idx as usize].clone());
                remaining -= 1;
            }
        }
        out
    }

    pub fn snapshot(&self) -> PoolSnapshot {
        PoolSnapshot {
            stacks: self
                .stacks
                .iter()
                .map(|(&(level, cat), ids)| StackSnapshot {
                    level,
                    category: self.categories[cat].clone(),
                    ids: ids.iter().map(|&i| self.questions[i as usize].id.clone()).collect(),
                })
                .collect(),
            asked: self.asked.iter().map(|&i| self.questions[i as usize].id.clone()).collect(),
        }
    }
}

/// One line of a verdict file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub question_id: String,
    pub model_id: String,
    pub correct: bool,
}

/// Correctness of each reference model on each question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictMatrix {
    pub question_ids: Vec<String>,
    pub model_ids: Vec<String>,
    /// `verdicts[q][m]`: model `m` answered question `q` correctly.
    pub verdicts: Vec<Vec<bool>>,
}

impl VerdictMatrix {
    pub fn new(
        question_ids: Vec<String>,
        model_ids: Vec<String>,
        verdicts: Vec<Vec<bool>>,
    ) -> Result<VerdictMatrix, PoolError> {
        if verdicts.len() != question_ids.len() {
            return Err(PoolError::BadMatrix(format!(
                "{} rows for {} questions",
                verdicts.len(),
                question_ids.len()
            )));
        }
        if let Some((i, row)) = verdicts.iter().enumerate().find(|(_, r)| r.len() != model_ids.len())
        {
            return Err(PoolError::BadMatrix(format!(
                "question `{}` has {} verdicts for {} models",
                question_ids[i],
                row.len(),
                model_ids.len()
            )));
        }
        Ok(VerdictMatrix { question_ids, model_ids, verdicts })
    }

    /// Assemble a matrix from verdict records. Every question must have
    /// exactly one verdict from every model that appears in the file.
    pub fn from_records(records: &[VerdictRecord]) -> Result<VerdictMatrix, PoolError> {
        let mut question_ids: Vec<String> = Vec::new();
        let mut q_index: HashMap<&str, usize> = HashMap::new();
        let mut model_ids: Vec<String> = Vec::new();
        let mut m_index: HashMap<&str, usize> = HashMap::new();
        for r in records {
            if !q_index.contains_key(r.question_id.as_str()) {
                q_index.insert(&r.question_id, question_ids.len());
                question_ids.push(r.question_id.clone());
            }
            if !m_index.contains_key(r.model_id.as_str()) {
                m_index.insert(&r.model_id, model_ids.len());
                model_ids.push(r.model_id.clone());
            }
        }
        let mut cells: Vec<Vec<Option<bool>>> = vec![vec![None; model_ids.len()]; question_ids.len()];
        for r in records {
            let cell = &mut cells[q_index[r.question_id.as_str()]][m_index[r.model_id.as_str()]];
            if cell.replace(r.correct).is_some() {
                return Err(PoolError::BadMatrix(format!(
                    "duplicate verdict for question `{}` by model `{}`",
                    r.question_id, r.model_id
                )));
            }
        }
        let mut verdicts = Vec::with_capacity(cells.len());
        for (qi, row) in cells.into_iter().enumerate() {
            let row: Option<Vec<bool>> = row.into_iter().collect();
            verdicts.push(row.ok_or_else(|| {
                PoolError::BadMatrix(format!(
                    "question `{}` is missing verdicts from some models",
                    question_ids[qi]
                ))
            })?);
        }
        VerdictMatrix::new(question_ids, model_ids, verdicts)
    }

    pub fn to_records(&self) -> Vec<VerdictRecord> {
        let mut out = Vec::with_capacity(self.question_ids.len() * self.model_ids.len());
        for (q, row) in self.question_ids.iter().zip(&self.verdicts) {
            for (m, &correct) in self.model_ids.iter().zip(row) {
                out.push(VerdictRecord { question_id: q.clone(), model_id: m.clone(), correct });
            }
        }
        out
    }
}

/// Level of a question answered correctly by `correct` reference models:
/// eleven minus the count, with 11 folded onto 10. Counts above ten (larger
/// reference panels) fold onto level 1.
pub fn level_from_correct_count(correct: usize) -> Level {
    Level::clamped(11 - correct as i64)
}

/// Difficulty level of every question in the matrix.
pub fn annotate_difficulty(matrix: &VerdictMatrix) -> Result<BTreeMap<String, Level>, PoolError> {
    if matrix.model_ids.is_empty() {
        return Err(PoolError::NoModels);
    }
    Ok(matrix
        .question_ids
        .iter()
        .zip(&matrix.verdicts)
        .map(|(id, row)| (id.clone(), level_from_correct_count(row.iter().filter(|&&v| v).count())))
        .collect())
}
