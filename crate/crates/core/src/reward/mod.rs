//! Hierarchical outcome reward: a format gate, answer accuracy and a bonus
//! for chains that use both search and code.

mod judge;
mod metrics;

pub use judge::{Judge, LlmJudge};
pub use metrics::{exact_match, normalize_answer, parse_number, token_f1};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{validate_format, FormatLimits, FormatReport, TagKind, TagSet, ViolationCode};
use crate::rollout::{Trajectory, DEFAULT_MAX_TOKENS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMetric {
    #[default]
    ExactMatchNormalized,
    TokenF1,
    ExternalJudge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Bonus for using both search and code in a correct answer.
    pub r_m: f64,
    pub accuracy_metric: AccuracyMetric,
    /// Accuracy at or below this value counts as zero.
    pub acc_positive_threshold: f64,
    pub max_chars: usize,
    #[serde(skip)]
    pub tags: TagSet,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            r_m: 0.1,
            accuracy_metric: AccuracyMetric::ExactMatchNormalized,
            acc_positive_threshold: 0.0,
            max_chars: DEFAULT_MAX_TOKENS * 4,
            tags: TagSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format_ok: bool,
    pub accuracy: f64,
    pub bonus: f64,
    pub total: f64,
    pub principle: String,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RewardError {
    #[error("no judge configured for external-judge scoring")]
    JudgeUnavailable,
    #[error("judge failed: {0}")]
    Judge(String),
    #[error("empty input")]
    EmptyInput,
    #[error("dataset {index} has no tool-using samples")]
    NoToolUse { index: usize },
}

/// Score `pred` against `gold`, in [0, 1].
pub fn accuracy(pred: &str, gold: &str, metric: AccuracyMetric, judge: Option<&dyn Judge>) -> Result<f64, RewardError> {
    match metric {
        AccuracyMetric::ExactMatchNormalized => Ok(if exact_match(pred, gold) { 1.0 } else { 0.0 }),
        AccuracyMetric::TokenF1 => Ok(token_f1(pred, gold)),
        AccuracyMetric::ExternalJudge => {
            let judge = judge.ok_or(RewardError::JudgeUnavailable)?;
            let verdict = judge.judge(pred, gold).map_err(|e| RewardError::Judge(e.to_string()))?;
            Ok(if verdict { 1.0 } else { 0.0 })
        }
    }
}

fn uses(traj: &Trajectory, kind: TagKind) -> bool {
    traj.model_tool_kinds().any(|k| k == kind)
}

/// `r_m` when the model itself wrote at least one search and one code call.
pub fn multi_tool_bonus(traj: &Trajectory, cfg: &RewardConfig) -> f64 {
    if uses(traj, TagKind::Search) && uses(traj, TagKind::Python) {
        cfg.r_m
    } else {
        0.0
    }
}

const FORMAT_BAD: &str = "The response format is incorrect";

fn format_principle(report: &FormatReport, tags: &TagSet) -> String {
    let pick = report
        .violations
        .iter()
        .find(|v| v.code == ViolationCode::OverMaxLength)
        .or_else(|| report.first());
    let Some(v) = pick else {
        return format!("{FORMAT_BAD}.");
    };
    let reason = match v.code {
        ViolationCode::UnbalancedTag | ViolationCode::MissingAnswer => {
            let kind = v.kind.unwrap_or(TagKind::Answer);
            format!("{} and {} are not matched", tags.open(kind), tags.close(kind))
        }
        ViolationCode::OverMaxLength => "the response over max length".to_string(),
        ViolationCode::MissingBoxed => "the final answer is not enclosed in \\boxed{}".to_string(),
        ViolationCode::DanglingToolCall => {
            let kind = v.kind.unwrap_or(TagKind::Search);
            format!(
                "the tool call {} has no matching {}",
                tags.open(kind),
                tags.open(TagKind::Result)
            )
        }
        ViolationCode::TagOrderViolation => "the special tokens are out of order".to_string(),
    };
    format!("{FORMAT_BAD}, {reason}.")
}

fn tool_usage_sentence(traj: &Trajectory, bonus: f64) -> &'static str {
    if bonus > 0.0 || (uses(traj, TagKind::Search) && uses(traj, TagKind::Python)) {
        "The reasoning chain contains multiple tool usage."
    } else if traj.model_tool_kinds().next().is_some() {
        "The reasoning chain contains single tool usage."
    } else {
        "The reasoning chain contains no tool usage."
    }
}

/// Score a finished trajectory with an optional judge for
/// [`AccuracyMetric::ExternalJudge`]. Without one, or if it fails, exact
/// match is used instead.
pub fn compute_reward_with(
    traj: &Trajectory,
    gold: &str,
    cfg: &RewardConfig,
    judge: Option<&dyn Judge>,
) -> RewardBreakdown {
    let report = validate_format(
        &traj.text,
        FormatLimits {
            max_chars: cfg.max_chars,
        },
        &cfg.tags,
    );
    if !report.ok {
        return RewardBreakdown {
            format_ok: false,
            accuracy: 0.0,
            bonus: 0.0,
            total: -1.0,
            principle: format_principle(&report, &cfg.tags),
        };
    }
    let pred = traj.answer().unwrap_or_default();
    let raw = accuracy(pred, gold, cfg.accuracy_metric, judge).unwrap_or_else(|e| {
        tracing::warn!(error = %e, "judge unavailable, falling back to exact match");
        accuracy(pred, gold, AccuracyMetric::ExactMatchNormalized, None).unwrap_or(0.0)
    });
    let acc = if raw > cfg.acc_positive_threshold {
        raw.clamp(0.0, 1.0)
    } else {
        0.0
    };
    if acc == 0.0 {
        return RewardBreakdown {
            format_ok: true,
            accuracy: 0.0,
            bonus: 0.0,
            total: 0.0,
            principle: "The response format is correct. The answer is incorrect.".into(),
        };
    }
    let bonus = multi_tool_bonus(traj, cfg);
    let verdict = if acc >= 1.0 {
        "The final answer is correct."
    } else {
        "The final answer is partially correct."
    };
    RewardBreakdown {
        format_ok: true,
        accuracy: acc,
        bonus,
        total: f64::max(acc + bonus, acc),
        principle: format!(
            "The response format is correct. {verdict} {}",
            tool_usage_sentence(traj, bonus)
        ),
    }
}

pub fn compute_reward(traj: &Trajectory, gold: &str, cfg: &RewardConfig) -> RewardBreakdown {
    compute_reward_with(traj, gold, cfg, None)
}

/// Correct answers `correct` among `total` tool-using samples of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolUseCount {
    pub correct: usize,
    pub total: usize,
}

/// Mean over datasets of the fraction of tool-using samples answered
/// correctly.
pub fn tool_efficiency(per_dataset: &[ToolUseCount]) -> Result<f64, RewardError> {
    if per_dataset.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let mut sum = 0.0;
    for (index, c) in per_dataset.iter().enumerate() {
        if c.total == 0 {
            return Err(RewardError::NoToolUse { index });
        }
        sum += c.correct as f64 / c.total as f64;
    }
    Ok(sum / per_dataset.len() as f64)
}

/// Full credit under `metric`. A missing prediction is never correct; an
/// external judge that is absent or fails falls back to exact match.
pub fn is_correct(pred: Option<&str>, gold: &str, metric: AccuracyMetric, judge: Option<&dyn Judge>) -> bool {
    let Some(pred) = pred else {
        return false;
    };
    let acc = accuracy(pred, gold, metric, judge)
        .or_else(|_| accuracy(pred, gold, AccuracyMetric::ExactMatchNormalized, None))
        .unwrap_or(0.0);
    acc >= 1.0
}
