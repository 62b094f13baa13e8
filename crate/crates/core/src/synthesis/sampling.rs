use serde::{Deserialize, Serialize};

use super::{insert_hint, HintConfig, RawSample, SampleKind, StageStats, SynthesisConfig, SynthesisError};
use crate::protocol::extract_boxed;
use crate::reward::is_correct;
use crate::rollout::{
    resume_rollout, run_rollout, GenerationMode, GenerationRequest, Generator, Query, RolloutConfig, Trajectory,
};
use crate::toolkit::Registry;

/// Outcome of the language-only pass on one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectResult {
    pub id: String,
    pub question: String,
    pub gold: String,
    pub trace: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<String>,
    pub dr_correct: bool,
}

fn query_of(s: &RawSample) -> Query {
    Query::new(s.id.clone(), s.question.clone()).with_gold(s.gold.clone())
}

fn direct_trace(s: &RawSample, generator: &dyn Generator, cfg: &SynthesisConfig) -> Result<String, String> {
    let mut text = String::new();
    for _ in 0..cfg.rollout.max_turns {
        let req = GenerationRequest {
            instruction: cfg.direct_instruction.clone(),
            question: s.question.clone(),
            prefix: text.clone(),
            stop: Vec::new(),
            temperature: cfg.rollout.temperature,
            top_p: cfg.rollout.top_p,
            seed: cfg.seed,
            mode: GenerationMode::Direct,
        };
        let gen = generator.generate(&req).map_err(|e| e.to_string())?;
        text.push_str(&gen.text);
        if gen.finished || gen.text.is_empty() {
            break;
        }
    }
    Ok(text)
}

/// Language-only answers for every sample. Failed generations count as
/// wrong with an empty trace.
pub fn direct_pass(
    samples: &[RawSample],
    generator: &dyn Generator,
    cfg: &SynthesisConfig,
) -> (Vec<DirectResult>, StageStats) {
    let mut stats = StageStats {
        input: samples.len(),
        ..StageStats::default()
    };
    let results = samples
        .iter()
        .map(|s| {
            let trace = direct_trace(s, generator, cfg).unwrap_or_else(|e| {
                tracing::warn!(id = %s.id, error = %e, "direct generation failed");
                stats.bump("errors");
                String::new()
            });
            let predicted = extract_boxed(&trace);
            let dr_correct = is_correct(predicted.as_deref(), &s.gold, cfg.metric, None);
            stats.bump(if dr_correct { "correct" } else { "wrong_answer" });
            DirectResult {
                id: s.id.clone(),
                question: s.question.clone(),
                gold: s.gold.clone(),
                trace,
                predicted,
                dr_correct,
            }
        })
        .collect::<Vec<_>>();
    stats.kept = results.len();
    (results, stats)
}

fn keep_if_correct(traj: &Trajectory, gold: &str, cfg: &SynthesisConfig, stats: &mut StageStats) -> bool {
    if is_correct(traj.answer(), gold, cfg.metric, None) {
        true
    } else {
        stats.bump("wrong_answer");
        false
    }
}

/// Tool-integrated sampling: `attempts` rollouts per language-only
/// question, keeping those with a correct final answer.
pub fn sample_tir(
    samples: &[RawSample],
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &SynthesisConfig,
) -> (Vec<Trajectory>, StageStats) {
    let mut stats = StageStats::default();
    let mut kept = Vec::new();
    for s in samples.iter().filter(|s| s.kind == SampleKind::LanguageOnly) {
        stats.input += 1;
        for attempt in 0..cfg.attempts {
            let rcfg = RolloutConfig {
                seed: cfg.seed.wrapping_add(attempt as u64),
                ..cfg.rollout.clone()
            };
            match run_rollout(&query_of(s), generator, registry, &rcfg) {
                Ok(mut t) => {
                    if keep_if_correct(&t, &s.gold, cfg, &mut stats) {
                        t.stage = Some("d_tool_p".into());
                        kept.push(t);
                    }
                }
                Err(e) => {
                    tracing::warn!(id = %s.id, attempt, error = %e, "rollout failed");
                    stats.bump("errors");
                }
            }
        }
    }
    stats.kept = kept.len();
    (kept, stats)
}

/// Resume tool-integrated generation from hinted language-only traces,
/// keeping correct results that made at least one tool call.
pub fn sample_hint_based(
    direct: &[DirectResult],
    generator: &dyn Generator,
    registry: &Registry,
    hcfg: &HintConfig,
    cfg: &SynthesisConfig,
) -> (Vec<Trajectory>, StageStats) {
    let mut stats = StageStats::default();
    let mut kept = Vec::new();
    for (i, d) in direct.iter().enumerate() {
        stats.input += 1;
        for &mode in &hcfg.modes {
            let site_cfg = HintConfig {
                seed: hcfg.seed.wrapping_add(i as u64),
                ..hcfg.clone()
            };
            let hinted = match insert_hint(&d.trace, &site_cfg, mode) {
                Ok(h) => h,
                Err(SynthesisError::NoSite) => {
                    stats.bump("no_site");
                    continue;
                }
                Err(e) => {
                    stats.bump("errors");
                    tracing::warn!(id = %d.id, error = %e, "hint insertion failed");
                    continue;
                }
            };
            let query = Query::new(d.id.clone(), d.question.clone()).with_gold(d.gold.clone());
            let rcfg = RolloutConfig {
                seed: cfg.seed,
                ..cfg.rollout.clone()
            };
            match resume_rollout(&query, &hinted.prefix, generator, registry, &rcfg) {
                Ok(mut t) => {
                    if t.tool_calls.is_empty() {
                        stats.bump("no_tool_call");
                        continue;
                    }
                    if keep_if_correct(&t, &d.gold, cfg, &mut stats) {
                        t.stage = Some("d_tool_h".into());
                        kept.push(t);
                    }
                }
                Err(e) => {
                    tracing::warn!(id = %d.id, error = %e, "resumed rollout failed");
                    stats.bump("errors");
                }
            }
        }
    }
    stats.kept = kept.len();
    (kept, stats)
}
