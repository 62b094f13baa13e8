use super::{FailureEvent, ResilienceError};
use crate::protocol::{ReasoningChain, TagKind, TagSet};

/// Offset of the last newline strictly before `open_offset`, or 0.
pub fn rewind_offset(text: &str, open_offset: usize) -> usize {
    text[..open_offset].rfind('\n').unwrap_or(0)
}

/// Where to resume generation after the tool call at `failed.at_segment`
/// failed: the newline preceding its open tag. A result segment stands for
/// the call it answers.
pub fn backtrace_position(
    chain: &ReasoningChain,
    failed: &FailureEvent,
    tags: &TagSet,
) -> Result<usize, ResilienceError> {
    let invalid = || ResilienceError::InvalidSegment(failed.at_segment);
    let mut idx = failed.at_segment;
    let seg = chain.segments.get(idx).ok_or_else(invalid)?;
    if !seg.bare && seg.kind == TagKind::Result {
        idx = idx.checked_sub(1).ok_or_else(invalid)?;
    }
    let call = &chain.segments[idx];
    if call.bare || !call.kind.is_tool_call() {
        return Err(invalid());
    }
    let text = chain.render(tags);
    Ok(rewind_offset(&text, call.span.start))
}
