//! Training mathematics: group-normalized advantages, the clipped policy
//! objective with feedback masking, preference pairs and the DPO loss, and
//! the schedule that interleaves them.

mod export;
mod ipc;
mod loss;
mod pairs;
mod schedule;

pub use export::{dpo_record, sft_record, DpoRecord, DpoSide, SftRecord};
pub use ipc::IpcTrainer;
pub use loss::{dpo_loss, group_advantages, grpo_objective, GrpoConfig, GrpoValue, PairLogprobs, TokenLogprobSet};
pub use pairs::{build_preference_pairs, Candidate, CandidateGroup, PairReport, PreferencePair};
pub use schedule::{
    run_schedule, GeneratorSampler, RecordingTrainer, RolloutSampler, SchedulePlan, ScheduleReport, Trainer,
    TrainerCall,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RlError {
    #[error("logprob lists are misaligned: {0}")]
    AlignmentError(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("trainer failed: {0}")]
    Trainer(String),
    #[error("sampler failed: {0}")]
    Sampler(String),
}
