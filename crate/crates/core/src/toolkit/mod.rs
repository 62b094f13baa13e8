//! Tools the engine can call on behalf of the model: local and web search,
//! an optional browser agent, and a sandboxed code interpreter, all behind
//! one [`Tool`] contract with a shared request cache.

mod bm25;
mod browse;
mod cache;
mod registry;
mod sandbox;
mod search;
mod web;

pub use bm25::{Bm25Index, Bm25Params, Document};
pub use browse::{browse, clean_html, Fetcher, HttpFetcher, StaticFetcher, Summarizer};
pub use cache::{CacheKey, CacheStats, ToolCache};
pub use registry::{Registry, DEFAULT_CACHE_CAPACITY, DEFAULT_MAX_FEEDBACK_CHARS};
pub use sandbox::{
    execute_code, CodeInterpreterTool, ExecLimits, ExecResult, ProcessSandbox, Sandbox, ScriptedSandbox,
};
pub use search::{format_hits, SearchHit, SearchTool};
pub use web::{RetryPolicy, WebResults, WebSearchClient, WebSearchConfig, SEARCH_KEY_ENV};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::TagKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    Search,
    Python,
}

impl ToolKind {
    pub fn from_tag(kind: TagKind) -> Option<Self> {
        match kind {
            TagKind::Search => Some(ToolKind::Search),
            TagKind::Python => Some(ToolKind::Python),
            _ => None,
        }
    }

    pub fn tag(self) -> TagKind {
        match self {
            ToolKind::Search => TagKind::Search,
            ToolKind::Python => TagKind::Python,
        }
    }
}

impl std::fmt::Display for ToolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.tag().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    LocalSearch,
    WebSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolRequest {
    pub kind: ToolKind,
    /// The request as the model wrote it, trimmed.
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<SearchMode>,
}

impl ToolRequest {
    pub fn new(kind: ToolKind, payload: impl AsRef<str>) -> Self {
        Self {
            kind,
            payload: payload.as_ref().trim().to_string(),
            routing: None,
        }
    }

    pub fn search(payload: impl AsRef<str>) -> Self {
        Self::new(ToolKind::Search, payload)
    }

    pub fn python(payload: impl AsRef<str>) -> Self {
        Self::new(ToolKind::Python, payload)
    }

    pub fn with_routing(mut self, routing: SearchMode) -> Self {
        self.routing = Some(routing);
        self
    }

    pub fn normalized(&self) -> String {
        normalize_payload(self.kind, &self.payload)
    }

    pub fn key(&self) -> CacheKey {
        CacheKey {
            kind: self.kind,
            payload: self.normalized(),
            routing: self.routing,
        }
    }
}

/// Canonical form of a payload used for caching and duplicate detection.
///
/// Search queries are trimmed with internal whitespace collapsed. Code keeps
/// its indentation: line endings are unified, trailing whitespace is removed
/// from every line and blank leading/trailing lines are dropped.
pub fn normalize_payload(kind: ToolKind, payload: &str) -> String {
    match kind {
        ToolKind::Search => payload.split_whitespace().collect::<Vec<_>>().join(" "),
        ToolKind::Python => {
            let unified = payload.replace("\r\n", "\n").replace('\r', "\n");
            let lines: Vec<&str> = unified.lines().map(str::trim_end).collect();
            let first = lines.iter().position(|l| !l.is_empty());
            let last = lines.iter().rposition(|l| !l.is_empty());
            match (first, last) {
                (Some(a), Some(b)) => lines[a..=b].join("\n"),
                _ => String::new(),
            }
        }
    }
}

/// Output of one tool execution before caching metadata is attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolOutput {
    pub text: String,
    pub is_error: bool,
}

impl ToolOutput {
    pub fn ok(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            is_error: false,
        }
    }

    /// An error output; an empty message is replaced so that errors always
    /// carry text.
    pub fn error(text: impl Into<String>) -> Self {
        let mut text = text.into();
        if text.trim().is_empty() {
            text = "tool error".into();
        }
        Self { text, is_error: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolFeedback {
    pub text: String,
    pub is_error: bool,
    pub cached: bool,
    pub latency_ms: u64,
}

pub trait Tool: Send + Sync {
    fn kind(&self) -> ToolKind;
    fn execute(&self, request: &ToolRequest) -> ToolOutput;
}

impl<T: Tool + ?Sized> Tool for std::sync::Arc<T> {
    fn kind(&self) -> ToolKind {
        (**self).kind()
    }

    fn execute(&self, request: &ToolRequest) -> ToolOutput {
        (**self).execute(request)
    }
}

/// A tool backed by a closure, handy for mocks.
pub struct FnTool<F> {
    kind: ToolKind,
    f: F,
}

impl<F> FnTool<F>
where
    F: Fn(&ToolRequest) -> ToolOutput + Send + Sync,
{
    pub fn new(kind: ToolKind, f: F) -> Self {
        Self { kind, f }
    }
}

impl<F> Tool for FnTool<F>
where
    F: Fn(&ToolRequest) -> ToolOutput + Send + Sync,
{
    fn kind(&self) -> ToolKind {
        self.kind
    }

    fn execute(&self, request: &ToolRequest) -> ToolOutput {
        (self.f)(request)
    }
}

#[derive(Debug, Error)]
pub enum ToolkitError {
    #[error("no tool registered for {0}")]
    NoToolRegistered(ToolKind),
    #[error("the search index is empty")]
    EmptyIndex,
    #[error("network error after {retries} retries: {message}")]
    NetworkError { retries: u32, message: String },
    #[error("search quota exceeded (HTTP {status})")]
    QuotaExceeded { status: u16 },
    #[error("fetch failed for {url}: {message}")]
    FetchError { url: String, message: String },
    #[error("sandbox unavailable: {0}")]
    SandboxUnavailable(String),
    #[error("index i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("index format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Keep at most `max_chars` characters of `text`.
pub fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((idx, _)) => &text[..idx],
        None => text,
    }
}
