pub mod config;
pub mod demo;
pub mod eval;
pub mod fixtures;
pub mod jsonl;
pub mod llm;
pub mod prompts;
pub mod protocol;
pub mod resilience;
pub mod reward;
pub mod rl;
pub mod rollout;
pub mod synthesis;
pub mod toolkit;
