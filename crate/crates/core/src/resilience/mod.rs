//! Inference-time repair: a code debugger, a rule-based tool-call
//! backtracer and a reasoning-chain refiner for length overflow.

mod backtrace;
mod debugger;
mod refine;
mod robust;

pub use backtrace::{backtrace_position, rewind_offset};
pub use debugger::{debug_code, strip_code_fences, DebugAttempt, DebugOutcome};
pub use refine::{refine_chain, truncate_with_notice, TRUNCATION_NOTICE};
pub use robust::{robust_rollout, RepairModels, ResilienceLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{DEBUGGER_PROMPT, REFINER_PROMPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureKind {
    CodeExecutionError,
    ToolInvocationFailure,
    LengthOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub kind: FailureKind,
    /// Index into the chain's segments.
    pub at_segment: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResilienceError {
    #[error("debugger gave up after {} attempts", attempts.len())]
    GaveUp { attempts: Vec<DebugAttempt> },
    #[error("segment {0} is not a tool call")]
    InvalidSegment(usize),
    #[error("refiner unavailable: {0}")]
    RefinerUnavailable(String),
}

/// Which mechanisms are active and how far each may go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResiliencePolicies {
    pub debug: bool,
    pub backtrace: bool,
    pub refine: bool,
    pub max_debug_retries: usize,
    /// Backtraces allowed per rollout.
    pub backtrace_limit: usize,
    pub debugger_prompt: String,
    pub refiner_prompt: String,
}

impl Default for ResiliencePolicies {
    fn default() -> Self {
        Self {
            debug: true,
            backtrace: true,
            refine: true,
            max_debug_retries: 3,
            backtrace_limit: 2,
            debugger_prompt: DEBUGGER_PROMPT.to_string(),
            refiner_prompt: REFINER_PROMPT.to_string(),
        }
    }
}

impl ResiliencePolicies {
    pub fn disabled() -> Self {
        Self {
            debug: false,
            backtrace: false,
            refine: false,
            ..Self::default()
        }
    }
}
