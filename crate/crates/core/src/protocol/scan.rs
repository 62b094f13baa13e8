use serde::{Deserialize, Serialize};

use super::tags::{tokenize, TagKind, TagSet};

/// A complete tool request found in a streaming prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingCall {
    pub kind: TagKind,
    /// Inner text of the block, trimmed.
    pub request: String,
    /// Byte offset just past the close literal.
    pub end_offset: usize,
    /// Byte offset of the open literal.
    pub start_offset: usize,
}

/// Earliest complete Search/Python block in `partial_text` that is not yet
/// followed by a result block. Blocks whose body contains any other tag
/// literal are skipped.
pub fn scan_pending_call(partial_text: &str, tags: &TagSet) -> Option<PendingCall> {
    let tokens = tokenize(partial_text, tags);
    for (i, tok) in tokens.iter().enumerate() {
        if !(tok.open && tok.kind.is_tool_call()) {
            continue;
        }
        let close = tokens.get(i + 1)?;
        if close.kind != tok.kind || close.open {
            continue;
        }
        let serviced = tokens.get(i + 2).is_some_and(|t| t.open && t.kind == TagKind::Result);
        if serviced {
            continue;
        }
        return Some(PendingCall {
            kind: tok.kind,
            request: partial_text[tok.end..close.start].trim().to_string(),
            end_offset: close.end,
            start_offset: tok.start,
        });
    }
    None
}

/// Byte offset just past the first answer close literal, if any.
pub fn find_answer_end(text: &str, tags: &TagSet) -> Option<usize> {
    tokenize(text, tags)
        .into_iter()
        .find(|t| t.kind == TagKind::Answer && !t.open)
        .map(|t| t.end)
}
