//! End-to-end run on the bundled toy data: synthesis, reward scoring,
//! evaluation and a training schedule against a recording trainer. No
//! network, no external processes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::eval::{evaluate, DatasetSpec, EvalEngine, EvalError, EvalReport, TaskKind};
use crate::fixtures::{reward_cases, ToyData};
use crate::jsonl::{write_jsonl, JsonlError};
use crate::resilience::{RepairModels, ResiliencePolicies};
use crate::reward::compute_reward;
use crate::rl::{run_schedule, GeneratorSampler, RecordingTrainer, ScheduleReport};
use crate::rollout::Query;
use crate::synthesis::{run_pipeline, SynthesisError};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCase {
    pub id: String,
    pub total: f64,
    pub principle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub questions: usize,
    pub d_tool_v1: usize,
    pub d_tool_v2: usize,
    pub rejections: usize,
    pub d_text_sub: usize,
    pub d_tool_sub: usize,
    pub d_sft: usize,
    pub d_rl: usize,
    /// Agreement with the hand-labeled categories.
    pub categories_match_oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub pipeline: PipelineSummary,
    pub rewards: Vec<ScoredCase>,
    pub eval: EvalReport,
    pub schedule: ScheduleReport,
}

impl DemoReport {
    pub fn render(&self) -> String {
        let p = &self.pipeline;
        let mut out = String::new();
        let _ = writeln!(out, "synthesis: {} questions", p.questions);
        let _ = writeln!(
            out,
            "  tool records {} -> {} after normalization ({} rejected)",
            p.d_tool_v1, p.d_tool_v2, p.rejections
        );
        let _ = writeln!(
            out,
            "  sft {} (text {}, tool {}), rl {}",
            p.d_sft, p.d_text_sub, p.d_tool_sub, p.d_rl
        );
        let _ = writeln!(out, "  categories match oracle: {}", p.categories_match_oracle);
        let _ = writeln!(out, "rewards:");
        for r in &self.rewards {
            let _ = writeln!(out, "  {:<10} {:>5} {}", r.id, r.total, r.principle);
        }
        let _ = writeln!(out, "evaluation:");
        for line in self.eval.render_table().lines() {
            let _ = writeln!(out, "  {line}");
        }
        let _ = writeln!(out, "schedule: {}", self.schedule.sequence().join(" "));
        let _ = writeln!(out, "  preference pairs per phase: {:?}", self.schedule.pair_counts);
        out
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    std::fs::write(path, text + "\n").map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Run everything and write the artifacts plus `report.json` and
/// `report.txt` under `out_dir`.
pub fn run_demo(cfg: &EngineConfig, out_dir: &Path) -> Result<DemoReport, DemoError> {
    let toy = ToyData::load();
    let tags = &cfg.tags;
    let generator = toy.generator(tags);
    let registry = toy.registry(cfg.tools.cache_capacity, cfg.tools.max_feedback_chars);

    let art = run_pipeline(
        &toy.questions,
        &generator,
        &registry,
        &cfg.synthesis,
        &cfg.hint,
        &cfg.normalization,
        Some(&out_dir.join("pipeline")),
    )?;
    let pipeline = PipelineSummary {
        questions: toy.questions.len(),
        d_tool_v1: art.d_tool_v1.len(),
        d_tool_v2: art.d_tool_v2.len(),
        rejections: art.rejections.len(),
        d_text_sub: art.d_text_sub.len(),
        d_tool_sub: art.d_tool_sub.len(),
        d_sft: art.d_sft.len(),
        d_rl: art.d_rl.len(),
        categories_match_oracle: art.categories == toy.oracle.categories,
    };

    let rewards: Vec<ScoredCase> = reward_cases(tags)
        .iter()
        .map(|(t, gold)| {
            let r = compute_reward(t, gold, &cfg.reward);
            ScoredCase {
                id: t.id.clone(),
                total: r.total,
                principle: r.principle,
            }
        })
        .collect();
    write_jsonl(&out_dir.join("rewards.jsonl"), &rewards)?;

    let data_dir: PathBuf = out_dir.join("data");
    write_jsonl(&data_dir.join("eval_math.jsonl"), &toy.eval_math)?;
    write_jsonl(&data_dir.join("eval_qa.jsonl"), &toy.eval_qa)?;
    let specs = [
        DatasetSpec {
            name: "toy_math".into(),
            path: data_dir.join("eval_math.jsonl"),
            task_kind: TaskKind::Computational,
            metric: None,
            limit: None,
        },
        DatasetSpec {
            name: "toy_qa".into(),
            path: data_dir.join("eval_qa.jsonl"),
            task_kind: TaskKind::KnowledgeIntensive,
            metric: None,
            limit: None,
        },
    ];
    let engine = EvalEngine {
        generator: &generator,
        registry: &registry,
        rollout: cfg.rollout.clone(),
        policies: ResiliencePolicies::disabled(),
        models: RepairModels::default(),
        judge: None,
    };
    let eval = evaluate(&specs, &engine)?;
    write_json(&out_dir.join("eval.json"), &eval)?;

    let queries: Vec<Query> = toy
        .questions
        .iter()
        .map(|q| Query::new(q.id.clone(), q.question.clone()).with_gold(q.gold.clone()))
        .collect();
    let mut sampler = GeneratorSampler {
        queries,
        generator: &generator,
        registry: &registry,
        cfg: cfg.rollout.clone(),
        batch_size: 4,
        seed: cfg.rollout.seed,
    };
    let mut trainer = RecordingTrainer::new();
    let reward_cfg = cfg.reward.clone();
    let reward_fn = move |q: &Query, t: &crate::rollout::Trajectory| {
        compute_reward(t, q.gold.as_deref().unwrap_or_default(), &reward_cfg)
    };
    let schedule = run_schedule(&mut trainer, &mut sampler, &reward_fn, &cfg.schedule, &cfg.grpo);
    write_json(&out_dir.join("schedule.json"), &schedule)?;

    let report = DemoReport {
        pipeline,
        rewards,
        eval,
        schedule,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    std::fs::write(out_dir.join("report.txt"), report.render()).map_err(|source| JsonlError::Io {
        path: out_dir.join("report.txt").display().to_string(),
        source,
    })?;
    Ok(report)
}
