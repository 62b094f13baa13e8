//! Data synthesis: tool-integrated sampling, hint-based resumption, quality
//! normalization and difficulty-aware routing into SFT and RL sets.

mod category;
mod classify;
mod hint;
mod normalize;
mod pipeline;
mod sampling;

pub use category::DifficultyCategory;
pub use classify::{classify_difficulty, Classification, SftExample, SftSource};
pub use hint::{insert_hint, HintConfig, HintMode, HintedPrefix};
pub use normalize::{normalize_quality, NormalizationConfig, NormalizeOutcome, RejectReason, Rejection};
pub use pipeline::{merge_v1, run_pipeline, seed_trajectories, PipelineArtifacts};
pub use sampling::{direct_pass, sample_hint_based, sample_tir, DirectResult};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::DIRECT_MATH_INSTRUCTION;
use crate::reward::AccuracyMetric;
use crate::rollout::RolloutConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleKind {
    /// A question with a language-only solution.
    #[default]
    LanguageOnly,
    /// A question that already comes with a tool-integrated response.
    #[serde(rename = "ExistingTIR")]
    ExistingTir,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSample {
    pub id: String,
    pub question: String,
    pub gold: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub kind: SampleKind,
    /// Tool-integrated response text for `ExistingTIR` samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Sampling attempts per question.
    pub attempts: usize,
    pub metric: AccuracyMetric,
    pub rollout: RolloutConfig,
    /// Instruction for the language-only pass.
    pub direct_instruction: String,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            attempts: 3,
            metric: AccuracyMetric::ExactMatchNormalized,
            rollout: RolloutConfig {
                // above the normalization threshold so that it can act
                max_tool_calls: 8,
                ..RolloutConfig::default()
            },
            direct_instruction: DIRECT_MATH_INSTRUCTION.to_string(),
            seed: 0,
        }
    }
}

/// Counts for one pipeline stage, keyed by outcome.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    pub input: usize,
    pub kept: usize,
    pub counts: BTreeMap<String, usize>,
}

impl StageStats {
    pub(crate) fn bump(&mut self, key: &str) {
        *self.counts.entry(key.to_string()).or_default() += 1;
    }

    pub fn count(&self, key: &str) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("no insertion site for the hint")]
    NoSite,
    #[error("no direct-reasoning verdict for {0}")]
    MissingDirectVerdict(String),
    #[error(transparent)]
    Io(#[from] crate::jsonl::JsonlError),
}
