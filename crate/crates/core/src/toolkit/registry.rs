use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use super::{truncate_chars, Tool, ToolCache, ToolFeedback, ToolKind, ToolOutput, ToolRequest, ToolkitError};

pub const DEFAULT_MAX_FEEDBACK_CHARS: usize = 4000;
pub const DEFAULT_CACHE_CAPACITY: usize = 4096;

/// Tools by kind plus the run-scoped request cache.
pub struct Registry {
    tools: BTreeMap<ToolKind, Arc<dyn Tool>>,
    cache: ToolCache,
    max_feedback_chars: usize,
    executions: AtomicU64,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY, DEFAULT_MAX_FEEDBACK_CHARS)
    }
}

impl Registry {
    pub fn new(cache_capacity: usize, max_feedback_chars: usize) -> Self {
        Self {
            tools: BTreeMap::new(),
            cache: ToolCache::new(cache_capacity),
            max_feedback_chars,
            executions: AtomicU64::new(0),
        }
    }

    pub fn register(&mut self, tool: impl Tool + 'static) -> &mut Self {
        self.tools.insert(tool.kind(), Arc::new(tool));
        self
    }

    pub fn with(mut self, tool: impl Tool + 'static) -> Self {
        self.register(tool);
        self
    }

    pub fn has(&self, kind: ToolKind) -> bool {
        self.tools.contains_key(&kind)
    }

    pub fn cache(&self) -> &ToolCache {
        &self.cache
    }

    pub fn max_feedback_chars(&self) -> usize {
        self.max_feedback_chars
    }

    /// Number of underlying tool executions so far, across all caches.
    pub fn executions(&self) -> u64 {
        self.executions.load(Ordering::Relaxed)
    }

    /// Invoke through the registry's own cache.
    pub fn invoke(&self, request: &ToolRequest) -> Result<ToolFeedback, ToolkitError> {
        self.invoke_with(&self.cache, request)
    }

    /// Invoke through a caller-supplied cache, e.g. one scoped to a single
    /// rollout.
    pub fn invoke_with(&self, cache: &ToolCache, request: &ToolRequest) -> Result<ToolFeedback, ToolkitError> {
        let tool = self
            .tools
            .get(&request.kind)
            .ok_or(ToolkitError::NoToolRegistered(request.kind))?;
        let started = Instant::now();
        let (out, cached) = cache.get_or_execute(&request.key(), || {
            self.executions.fetch_add(1, Ordering::Relaxed);
            let out = tool.execute(request);
            ToolOutput {
                text: truncate_chars(&out.text, self.max_feedback_chars).to_string(),
                is_error: out.is_error,
            }
        });
        Ok(ToolFeedback {
            text: out.text,
            is_error: out.is_error,
            cached,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
