use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::browse::{browse, Fetcher};
use super::{Bm25Index, SearchMode, Tool, ToolKind, ToolOutput, ToolRequest, WebSearchClient};
use crate::llm::Llm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

/// Render hits the way result blocks show retrieved passages: a quoted title
/// line followed by the text.
pub fn format_hits(hits: &[SearchHit]) -> String {
    hits.iter()
        .map(|h| {
            if h.title.is_empty() {
                h.snippet.clone()
            } else {
                format!("\"{}\"\n{}", h.title, h.snippet)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

struct Browser {
    fetcher: Arc<dyn Fetcher>,
    summarizer: Option<Arc<dyn Llm>>,
    max_chars: usize,
}

/// The search tool: local BM25 or web search, optionally followed by the
/// browser agent reading the top web result.
pub struct SearchTool {
    local: Option<Bm25Index>,
    web: Option<WebSearchClient>,
    browser: Option<Browser>,
    default_mode: SearchMode,
    top_k: usize,
}

impl SearchTool {
    pub fn local(index: Bm25Index, top_k: usize) -> Self {
        Self {
            local: Some(index),
            web: None,
            browser: None,
            default_mode: SearchMode::LocalSearch,
            top_k,
        }
    }

    pub fn web(client: WebSearchClient, top_k: usize) -> Self {
        Self {
            local: None,
            web: Some(client),
            browser: None,
            default_mode: SearchMode::WebSearch,
            top_k,
        }
    }

    pub fn with_local(mut self, index: Bm25Index) -> Self {
        self.local = Some(index);
        self
    }

    pub fn with_browser(
        mut self,
        fetcher: Arc<dyn Fetcher>,
        summarizer: Option<Arc<dyn Llm>>,
        max_chars: usize,
    ) -> Self {
        self.browser = Some(Browser {
            fetcher,
            summarizer,
            max_chars,
        });
        self
    }

    fn run_local(&self, query: &str) -> ToolOutput {
        let Some(index) = &self.local else {
            return ToolOutput::error("local search is not configured");
        };
        match index.search(query, self.top_k) {
            Ok(hits) => ToolOutput::ok(format_hits(&hits)),
            Err(e) => ToolOutput::error(e.to_string()),
        }
    }

    fn run_web(&self, query: &str) -> ToolOutput {
        let Some(client) = &self.web else {
            return ToolOutput::error("web search is not configured");
        };
        let mut hits = match client.search(query, self.top_k) {
            Ok(res) => res.hits,
            Err(e) => return ToolOutput::error(e.to_string()),
        };
        if let (Some(browser), Some(top)) = (&self.browser, hits.first_mut()) {
            if let Some(url) = top.url.clone() {
                let summarizer = browser.summarizer.as_deref();
                match browse(browser.fetcher.as_ref(), &url, query, summarizer, browser.max_chars) {
                    Ok(page) => top.snippet = page,
                    Err(e) => tracing::debug!(error = %e, "browser fetch failed, keeping snippet"),
                }
            }
        }
        ToolOutput::ok(format_hits(&hits))
    }
}

impl Tool for SearchTool {
    fn kind(&self) -> ToolKind {
        ToolKind::Search
    }

    fn execute(&self, request: &ToolRequest) -> ToolOutput {
        match request.routing.unwrap_or(self.default_mode) {
            SearchMode::LocalSearch => self.run_local(&request.payload),
            SearchMode::WebSearch => self.run_web(&request.payload),
        }
    }
}
