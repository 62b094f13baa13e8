//! Benchmark harness: run rollouts over JSONL datasets and report accuracy,
//! tool statistics and tool-use efficiency.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{read_jsonl, JsonlError};
use crate::protocol::{extract_boxed, TagKind};
use crate::resilience::{robust_rollout, RepairModels, ResiliencePolicies};
use crate::reward::{accuracy, tool_efficiency, AccuracyMetric, Judge, ToolUseCount};
use crate::rollout::{Generator, Query, RolloutConfig, Trajectory};
use crate::toolkit::Registry;

pub use crate::reward::token_f1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Computational,
    KnowledgeIntensive,
}

impl TaskKind {
    pub fn default_metric(self) -> AccuracyMetric {
        match self {
            TaskKind::Computational => AccuracyMetric::ExactMatchNormalized,
            TaskKind::KnowledgeIntensive => AccuracyMetric::TokenF1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub task_kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<AccuracyMetric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

impl DatasetSpec {
    pub fn metric(&self) -> AccuracyMetric {
        self.metric.unwrap_or_else(|| self.task_kind.default_metric())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalExample {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no datasets to evaluate")]
    EmptyInput,
    #[error("{path}: line {line}: {message}")]
    SchemaError { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(JsonlError),
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Vec<EvalExample>, EvalError> {
    let mut rows: Vec<EvalExample> = read_jsonl(&spec.path).map_err(|e| match e {
        JsonlError::Schema { path, line, message } => EvalError::SchemaError { path, line, message },
        other => EvalError::Io(other),
    })?;
    if let Some(limit) = spec.limit {
        rows.truncate(limit);
    }
    Ok(rows)
}

/// What a trajectory answered: the boxed answer, else the raw answer
/// block, else the last box anywhere in the text.
pub fn predicted_answer(traj: &Trajectory) -> Option<String> {
    if let Some(a) = traj.answer() {
        return Some(a.to_string());
    }
    let raw = traj
        .chain
        .segments
        .iter()
        .rev()
        .find(|s| s.kind == TagKind::Answer && !s.bare)
        .map(|s| s.text.trim().to_string());
    raw.or_else(|| extract_boxed(&traj.text))
}

/// A sample counts as correct for tool-use efficiency at this accuracy.
pub const CORRECT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub task_kind: TaskKind,
    pub metric: AccuracyMetric,
    pub examples: usize,
    /// Mean accuracy.
    pub score: f64,
    /// Correct answers among samples that used a tool.
    pub s_i: usize,
    /// Samples that used a tool.
    pub t_i_c: usize,
    /// Number of tool calls to number of samples.
    pub tool_call_histogram: BTreeMap<usize, usize>,
    pub cache_hit_rate: f64,
    pub intervention_counts: BTreeMap<String, usize>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub datasets: Vec<DatasetReport>,
    pub mean_score: f64,
    /// Over datasets with at least one tool-using sample; absent when none.
    pub tool_efficiency: Option<f64>,
}

impl EvalReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:>8} {:>8} {:>6} {:>6} {:>8}",
            "dataset", "n", "score", "S_i", "T_i^c", "hit"
        );
        for d in &self.datasets {
            let _ = writeln!(
                out,
                "{:<20} {:>8} {:>8.4} {:>6} {:>6} {:>8.3}",
                d.name, d.examples, d.score, d.s_i, d.t_i_c, d.cache_hit_rate
            );
        }
        let _ = writeln!(out, "mean score {:.4}", self.mean_score);
        match self.tool_efficiency {
            Some(te) => {
                let _ = writeln!(out, "tool-use efficiency {te:.4}");
            }
            None => {
                let _ = writeln!(out, "tool-use efficiency n/a");
            }
        }
        out
    }
}

/// Everything needed to produce answers.
pub struct EvalEngine<'a> {
    pub generator: &'a dyn Generator,
    pub registry: &'a Registry,
    pub rollout: RolloutConfig,
    pub policies: ResiliencePolicies,
    pub models: RepairModels<'a>,
    pub judge: Option<&'a dyn Judge>,
}

fn score_one(engine: &EvalEngine<'_>, ex: &EvalExample, metric: AccuracyMetric) -> Option<(f64, Trajectory)> {
    let query = Query::new(ex.id.clone(), ex.question.clone()).with_gold(ex.answer.clone());
    let (traj, _) = match robust_rollout(
        &query,
        engine.generator,
        engine.registry,
        &engine.rollout,
        &engine.policies,
        engine.models,
    ) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(id = %ex.id, error = %e, "evaluation rollout failed");
            return None;
        }
    };
    let acc = match predicted_answer(&traj) {
        None => 0.0,
        Some(pred) => accuracy(&pred, &ex.answer, metric, engine.judge)
            .or_else(|_| accuracy(&pred, &ex.answer, AccuracyMetric::ExactMatchNormalized, None))
            .unwrap_or(0.0),
    };
    Some((acc, traj))
}

pub fn evaluate_dataset(spec: &DatasetSpec, examples: &[EvalExample], engine: &EvalEngine<'_>) -> DatasetReport {
    let metric = spec.metric();
    let mut report = DatasetReport {
        name: spec.name.clone(),
        task_kind: spec.task_kind,
        metric,
        examples: examples.len(),
        score: 0.0,
        s_i: 0,
        t_i_c: 0,
        tool_call_histogram: BTreeMap::new(),
        cache_hit_rate: 0.0,
        intervention_counts: BTreeMap::new(),
        failures: 0,
    };
    let mut total = 0.0;
    let (mut calls, mut hits) = (0usize, 0usize);
    for ex in examples {
        let Some((acc, traj)) = score_one(engine, ex, metric) else {
            report.failures += 1;
            *report.tool_call_histogram.entry(0).or_default() += 1;
            continue;
        };
        total += acc;
        let n = traj.tool_calls.len();
        *report.tool_call_histogram.entry(n).or_default() += 1;
        calls += n;
        hits += traj.tool_calls.iter().filter(|c| c.cached).count();
        if n > 0 {
            report.t_i_c += 1;
            if acc >= CORRECT_THRESHOLD {
                report.s_i += 1;
            }
        }
        for i in &traj.interventions {
            let key = serde_json::to_value(i.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string));
            *report.intervention_counts.entry(key.unwrap_or_default()).or_default() += 1;
        }
    }
    if !examples.is_empty() {
        report.score = total / examples.len() as f64;
    }
    if calls > 0 {
        report.cache_hit_rate = hits as f64 / calls as f64;
    }
    report
}

/// Evaluate every dataset in order. Per-example failures score 0.
pub fn evaluate(specs: &[DatasetSpec], engine: &EvalEngine<'_>) -> Result<EvalReport, EvalError> {
    if specs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut datasets = Vec::with_capacity(specs.len());
    for spec in specs {
        let examples = load_dataset(spec)?;
        datasets.push(evaluate_dataset(spec, &examples, engine));
    }
    Ok(report_from(datasets))
}

pub fn report_from(datasets: Vec<DatasetReport>) -> EvalReport {
    let mean_score = if datasets.is_empty() {
        0.0
    } else {
        datasets.iter().map(|d| d.score).sum::<f64>() / datasets.len() as f64
    };
    let counts: Vec<ToolUseCount> = datasets
        .iter()
        .filter(|d| d.t_i_c > 0)
        .map(|d| ToolUseCount {
            correct: d.s_i,
            total: d.t_i_c,
        })
        .collect();
    EvalReport {
        tool_efficiency: tool_efficiency(&counts).ok(),
        mean_score,
        datasets,
    }
}
