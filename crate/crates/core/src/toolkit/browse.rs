use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;

use super::{truncate_chars, ToolkitError};
use crate::llm::Llm;

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<String, ToolkitError>;
}

pub struct HttpFetcher {
    http: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Result<Self, ToolkitError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ToolkitError::FetchError {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(Self { http })
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, ToolkitError> {
        let err = |message: String| ToolkitError::FetchError {
            url: url.to_string(),
            message,
        };
        let resp = self.http.get(url).send().map_err(|e| err(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(err(format!("HTTP {}", resp.status())));
        }
        resp.text().map_err(|e| err(e.to_string()))
    }
}

/// Serves pages from memory.
#[derive(Debug, Clone, Default)]
pub struct StaticFetcher {
    pages: HashMap<String, String>,
}

impl StaticFetcher {
    pub fn new(pages: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            pages: pages.into_iter().collect(),
        }
    }
}

impl Fetcher for StaticFetcher {
    fn fetch(&self, url: &str) -> Result<String, ToolkitError> {
        self.pages.get(url).cloned().ok_or_else(|| ToolkitError::FetchError {
            url: url.to_string(),
            message: "not found".into(),
        })
    }
}

pub type Summarizer<'a> = &'a dyn Llm;

fn patterns() -> &'static [Regex; 4] {
    static RE: OnceLock<[Regex; 4]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"(?is)<(script|style|noscript|head)\b.*?</(script|style|noscript|head)\s*>").unwrap(),
            Regex::new(r"(?s)<!--.*?-->").unwrap(),
            Regex::new(r"(?s)<[^>]*>").unwrap(),
            Regex::new(r"\s+").unwrap(),
        ]
    })
}

/// Rule-based markup removal: drop scripts, styles and comments, strip tags,
/// decode the common entities and collapse whitespace.
pub fn clean_html(html: &str) -> String {
    let [blocks, comments, tags, space] = patterns();
    let text = blocks.replace_all(html, " ");
    let text = comments.replace_all(&text, " ");
    let text = tags.replace_all(&text, " ");
    let text = text
        .replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&");
    space.replace_all(&text, " ").trim().to_string()
}

const SUMMARY_PROMPT: &str = "Read the web page below and extract the information relevant to the query. \
Reply with a concise summary only.\n\n**Query:**\n{query}\n\n**Web Page:**\n{page}\n\n**Summary:**";

/// Fetch `url`, clean it, and condense it for `query`. Without a summarizer,
/// or when the summarizer fails or returns nothing, the cleaned text cut to
/// `max_chars` is returned instead.
pub fn browse(
    fetcher: &dyn Fetcher,
    url: &str,
    query: &str,
    summarizer: Option<Summarizer<'_>>,
    max_chars: usize,
) -> Result<String, ToolkitError> {
    let cleaned = clean_html(&fetcher.fetch(url)?);
    let fallback = || truncate_chars(&cleaned, max_chars).to_string();
    let Some(llm) = summarizer else {
        return Ok(fallback());
    };
    let prompt = SUMMARY_PROMPT
        .replace("{query}", query)
        .replace("{page}", truncate_chars(&cleaned, max_chars.saturating_mul(4)));
    match llm.complete(&prompt) {
        Ok(summary) if !summary.trim().is_empty() => Ok(summary.trim().to_string()),
        Ok(_) => Ok(fallback()),
        Err(e) => {
            tracing::warn!(error = %e, url, "summarizer failed, using cleaned page");
            Ok(fallback())
        }
    }
}
