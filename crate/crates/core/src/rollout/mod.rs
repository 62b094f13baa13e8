//! The generate / detect call / invoke tool / insert feedback loop.

mod driver;
mod generator;
mod trajectory;

pub use driver::{
    budget_notice, result_block, resume_rollout, run_group, run_group_parallel, run_rollout, sanitize_feedback,
    CacheScope, GroupRollout, Query, RolloutConfig, DEFAULT_MAX_TOKENS, TOOLS_DISABLED_NOTICE,
};
pub(crate) use driver::{drive, CallContext, FeedbackDecision, Hooks, OverflowDecision};
pub use generator::{
    strip_results, FnGenerator, Generation, GenerationMode, GenerationRequest, Generator, GeneratorError,
    HttpGenerator, ScriptedGenerator, Transcript,
};
pub use trajectory::{
    feedback_mask, Intervention, InterventionKind, MaskedLogprob, SegmentRecord, StopReason, ToolCallRecord,
    Trajectory, TrajectoryRecord,
};
