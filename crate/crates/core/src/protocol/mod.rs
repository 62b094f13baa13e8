//! The tagged reasoning protocol: tag vocabulary, chain parsing and
//! rendering, format validation, boxed-answer extraction and detection of
//! pending tool calls in a streaming prefix.
//!
//! Every function here is pure.

mod boxed;
mod chain;
mod scan;
mod tags;
mod validate;

pub use boxed::extract_boxed;
pub use chain::{parse_chain, parse_chain_lenient, render_chain, repair_chain, Origin, ReasoningChain, Segment, Span};
pub use scan::{find_answer_end, scan_pending_call, PendingCall};
pub use tags::{TagKind, TagLiterals, TagSet};
pub use validate::{validate_format, FormatLimits, FormatReport, Violation, ViolationCode};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced {kind} tag at byte {offset}")]
    UnbalancedTag { kind: TagKind, offset: usize },
    #[error("{inner} tag at byte {offset} crosses the enclosing {outer} pair")]
    Interleaved {
        outer: TagKind,
        inner: TagKind,
        offset: usize,
    },
}

impl ParseError {
    fn unbalanced(kind: TagKind, offset: usize) -> Self {
        ParseError::UnbalancedTag { kind, offset }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid tag set: {0}")]
    InvalidTagSet(String),
}
