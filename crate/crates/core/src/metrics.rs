//! Correlation statistics and per-level accuracy profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::TranscriptEntry;
use crate::level::Level;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("score vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("model ids differ at position {0}")]
    Misaligned(usize),
    #[error("correlation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite score at position {0}")]
    NonFinite(usize),
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub model_ids: Vec<String>,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(model_ids: Vec<String>, scores: Vec<f64>) -> Result<ScoreVector, MetricError> {
        if model_ids.len() != scores.len() {
            return Err(MetricError::LengthMismatch(model_ids.len(), scores.len()));
        }
        Ok(ScoreVector { model_ids, scores })
    }

    /// Scores with ids `m0, m1, ...`.
    pub fn anonymous(scores: Vec<f64>) -> ScoreVector {
        let model_ids = (0..scores.len()).map(|i| format!("m{i}")).collect();
        ScoreVector { model_ids, scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn aligned<'a>(x: &'a ScoreVector, y: &'a ScoreVector) -> Result<(&'a [f64], &'a [f64]), MetricError> {
    if x.model_ids.len() != x.scores.len() {
        return Err(MetricError::LengthMismatch(x.model_ids.len(), x.scores.len()));
    }
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if let Some(i) = x.model_ids.iter().zip(&y.model_ids).position(|(a, b)| a != b) {
        return Err(MetricError::Misaligned(i));
    }
    check(&x.scores, &y.scores)?;
    Ok((&x.scores, &y.scores))
}

fn check(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::TooFewPoints(x.len()));
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(MetricError::NonFinite(i));
    }
    Ok(())
}

pub fn plcc(x: &ScoreVector, y: &ScoreVector) -> Result<f64, MetricError> {
    let (x, y) = aligned(x, y)?;
    pearson(x, y)
}

pub fn srcc(x: &ScoreVector, y: &ScoreVector) -> Result<f64, MetricError> {
    let (x, y) = aligned(x, y)?;
    spearman(x, y)
}

pub fn krcc(x: &ScoreVector, y: &ScoreVector) -> Result<f64, MetricError> {
    let (x, y) = aligned(x, y)?;
    kendall_tau_b(x, y)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(MetricError::ZeroVariance("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    /// Tied in x only.
    pub tied_x: u64,
    /// Tied in y only.
    pub tied_y: u64,
}

impl PairCounts {
    pub fn tau_b(&self) -> Result<f64, MetricError> {
        let (c, d) = (self.concordant, self.discordant);
        let not_tied_y = c + d + self.tied_x;
        let not_tied_x = c + d + self.tied_y;
        if not_tied_x == 0 {
            return Err(MetricError::ZeroVariance("x"));
        }
        if not_tied_y == 0 {
            return Err(MetricError::ZeroVariance("y"));
        }
        let num = c as f64 - d as f64;
        Ok((num / ((not_tied_y as f64) * (not_tied_x as f64)).sqrt()).clamp(-1.0, 1.0))
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Concordant/discordant/tie counts in O(n log n): sort by (x, y), then count
/// inversions of y with a merge sort.
pub fn pair_counts(x: &[f64], y: &[f64]) -> PairCounts {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let run_pairs = |same: &dyn Fn(usize, usize) -> bool, seq: &[usize]| -> u64 {
        let mut total = 0;
        let mut run = 1u64;
        for w in seq.windows(2) {
            if same(w[0], w[1]) {
                run += 1;
            } else {
                total += pairs(run);
                run = 1;
            }
        }
        total + if seq.is_empty() { 0 } else { pairs(run) }
    };
    let ties_x = run_pairs(&|a, b| x[a] == x[b], &idx);
    let ties_xy = run_pairs(&|a, b| x[a] == x[b] && y[a] == y[b], &idx);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);
    let ties_y = {
        let order: Vec<usize> = (0..n).collect();
        run_pairs(&|a, b| ys[a] == ys[b], &order)
    };

    let total = pairs(n as u64);
    // Pairs not tied in x and not tied in y split into concordant and discordant.
    let untied = total + ties_xy - ties_x - ties_y;
    let discordant = swaps;
    PairCounts {
        concordant: untied - discordant,
        discordant,
        tied_x: ties_x - ties_xy,
        tied_y: ties_y - ties_xy,
    }
}

/// Stable merge sort returning the number of strict inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check(x, y)?;
    pair_counts(x, y).tau_b()
}

/// Accuracy per visited level. Levels never asked are absent.
pub fn level_profile(transcript: &[TranscriptEntry]) -> BTreeMap<Level, f64> {
    profile_of(transcript.iter().map(|e| (e.level, e.correct)))
}

pub fn profile_of<I>(responses: I) -> BTreeMap<Level, f64>
where
    I: IntoIterator<Item = (Level, bool)>,
{
    let mut counts: BTreeMap<Level, (u32, u32)> = BTreeMap::new();
    for (level, correct) in responses {
        let c = counts.entry(level).or_default();
        c.0 += correct as u32;
        c.1 += 1;
    }
    counts.into_iter().map(|(l, (c, a))| (l, c as f64 / a as f64)).collect()
}
