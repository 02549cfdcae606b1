use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::score::QuestionScore;
use super::spec::QuestionCategory;

/// One scored question in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredQuestion {
    pub trial: usize,
    pub category: QuestionCategory,
    #[serde(flatten)]
    pub score: QuestionScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_questions: usize,
    /// Mean over trials of the per-trial mean score.
    pub mean: f64,
    pub std_error: f64,
    pub failure_rate: f64,
    pub failure_std_error: f64,
    pub trial_means: Vec<f64>,
    pub trial_failure_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: QuestionCategory,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trials: usize,
    /// Scored runs: questions times trials.
    pub question_count: usize,
    pub categories: Vec<CategorySummary>,
    /// Weighted by question count per category.
    pub overall: Summary,
    pub scores: Vec<ScoredQuestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("InconsistentTrials: {0}")]
    InconsistentTrials(String),
    #[error("no scores to aggregate")]
    Empty,
}

/// Sample standard deviation divided by sqrt(n); zero for a single value.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Folds per-trial question scores into category and overall summaries.
/// Every trial must score the same questions under the same categories.
pub fn aggregate(scores: Vec<ScoredQuestion>) -> Result<RunReport, AggregateError> {
    if scores.is_empty() {
        return Err(AggregateError::Empty);
    }
    let mut by_trial: BTreeMap<usize, BTreeMap<&str, QuestionCategory>> = BTreeMap::new();
    for s in &scores {
        let seen = by_trial.entry(s.trial).or_default().insert(&s.score.question_id, s.category);
        if seen.is_some() {
            return Err(AggregateError::InconsistentTrials(format!(
                "question {} scored twice in trial {}",
                s.score.question_id, s.trial
            )));
        }
    }
    let (&first_trial, reference) = by_trial.iter().next().expect("non-empty");
    for (trial, set) in &by_trial {
        if set != reference {
            let a: BTreeSet<_> = reference.keys().collect();
            let b: BTreeSet<_> = set.keys().collect();
            let diff: Vec<_> = a.symmetric_difference(&b).collect();
            return Err(AggregateError::InconsistentTrials(format!(
                "trial {trial} differs from trial {first_trial} (questions {diff:?} or their categories)"
            )));
        }
    }
    let trials: Vec<usize> = by_trial.keys().copied().collect();
    let mut counts: BTreeMap<QuestionCategory, usize> = BTreeMap::new();
    for c in reference.values() {
        *counts.entry(*c).or_default() += 1;
    }

    let per_trial = |cat: Option<QuestionCategory>| -> (Vec<f64>, Vec<f64>) {
        trials
            .iter()
            .map(|&t| {
                let sel: Vec<&ScoredQuestion> =
                    scores.iter().filter(|s| s.trial == t && cat.is_none_or(|c| s.category == c)).collect();
                let n = sel.len() as f64;
                let m = sel.iter().map(|s| s.score.score).sum::<f64>() / n;
                let f = sel.iter().filter(|s| s.score.failed).count() as f64 / n;
                (m, f)
            })
            .unzip()
    };
    let summarize = |n_questions: usize, means: Vec<f64>, fails: Vec<f64>| Summary {
        n_questions,
        mean: mean(&means),
        std_error: standard_error(&means),
        failure_rate: mean(&fails),
        failure_std_error: standard_error(&fails),
        trial_means: means,
        trial_failure_rates: fails,
    };

    let categories: Vec<CategorySummary> = QuestionCategory::ALL
        .into_iter()
        .filter_map(|c| {
            let n = *counts.get(&c)?;
            let (m, f) = per_trial(Some(c));
            Some(CategorySummary { category: c, summary: summarize(n, m, f) })
        })
        .collect();
    let total: usize = counts.values().sum();
    let (mut overall_means, mut overall_fails) = (Vec::new(), Vec::new());
    for ti in 0..trials.len() {
        let w = |pick: fn(&Summary) -> &Vec<f64>| {
            categories.iter().map(|c| pick(&c.summary)[ti] * c.summary.n_questions as f64).sum::<f64>() / total as f64
        };
        overall_means.push(w(|s| &s.trial_means));
        overall_fails.push(w(|s| &s.trial_failure_rates));
    }
    let mut overall = summarize(total, overall_means, overall_fails);
    overall.mean = weighted(&categories, |s| s.mean);
    overall.failure_rate = weighted(&categories, |s| s.failure_rate);

    let mut scores = scores;
    scores.sort_by(|a, b| (a.trial, a.category, &a.score.question_id).cmp(&(b.trial, b.category, &b.score.question_id)));
    Ok(RunReport { trials: trials.len(), question_count: scores.len(), categories, overall, scores })
}

/// Mean of a per-category value weighted by question counts.
pub fn weighted(categories: &[CategorySummary], pick: impl Fn(&Summary) -> f64) -> f64 {
    let total: usize = categories.iter().map(|c| c.summary.n_questions).sum();
    categories.iter().map(|c| pick(&c.summary) * c.summary.n_questions as f64).sum::<f64>() / total as f64
}
