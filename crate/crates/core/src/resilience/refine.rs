use super::ResilienceError;
use crate::llm::Llm;
use crate::prompts::fill;
use crate::protocol::{repair_chain, TagSet};
use crate::toolkit::truncate_chars;

pub const TRUNCATION_NOTICE: &str = "\n[truncated]";

/// Cut `text` so that, with the notice appended, it fits in `max_chars`.
/// Tag literals left unpaired by the cut are dropped.
pub fn truncate_with_notice(text: &str, max_chars: usize, tags: &TagSet) -> String {
    let room = max_chars.saturating_sub(TRUNCATION_NOTICE.chars().count());
    let mut out = repair_chain(truncate_chars(text, room), tags);
    out.push_str(TRUNCATION_NOTICE);
    out
}

/// Ask `llm` to compress an over-long response. The reply is repaired so
/// that every remaining tag literal is paired.
pub fn refine_chain(
    question: &str,
    chain_text: &str,
    llm: &dyn Llm,
    prompt: &str,
    tags: &TagSet,
) -> Result<String, ResilienceError> {
    let reply = llm
        .complete(&fill(prompt, &[("prompt", question), ("response", chain_text)]))
        .map_err(|e| ResilienceError::RefinerUnavailable(e.to_string()))?;
    let refined = repair_chain(reply.trim(), tags);
    if refined.is_empty() {
        return Err(ResilienceError::RefinerUnavailable("empty refinement".into()));
    }
    Ok(refined)
}
