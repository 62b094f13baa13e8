use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::search::SearchHit;
use super::ToolkitError;

pub const SEARCH_KEY_ENV: &str = "TOOLSTAR_SEARCH_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 250,
            max_delay_ms: 4000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base * 2^(attempt-1),
    /// capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebSearchConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
}

impl Default for WebSearchConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_ms: 10_000,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct WireHit {
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    url: Option<String>,
}

/// Result of a web search together with the number of retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct WebResults {
    pub hits: Vec<SearchHit>,
    pub retries: u32,
}

/// Client for a JSON web-search endpoint: `GET endpoint?q=..&count=..`
/// answering with an array of `{title, snippet, url}` in rank order.
pub struct WebSearchClient {
    http: reqwest::blocking::Client,
    cfg: WebSearchConfig,
    api_key: Option<String>,
}

enum Attempt {
    Done(Vec<SearchHit>),
    Retry(String, Option<u16>),
    Fail(ToolkitError),
}

impl WebSearchClient {
    pub fn new(cfg: WebSearchConfig, api_key: Option<String>) -> Result<Self, ToolkitError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| ToolkitError::NetworkError {
                retries: 0,
                message: e.to_string(),
            })?;
        Ok(Self { http, cfg, api_key })
    }

    /// Like [`WebSearchClient::new`], reading the key from the environment.
    pub fn from_env(cfg: WebSearchConfig) -> Result<Self, ToolkitError> {
        Self::new(cfg, std::env::var(SEARCH_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }

    pub fn search(&self, query: &str, k: usize) -> Result<WebResults, ToolkitError> {
        let mut retries = 0;
        loop {
            let (message, status) = match self.attempt(query, k) {
                Attempt::Done(hits) => return Ok(WebResults { hits, retries }),
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(message, status) => (message, status),
            };
            if retries >= self.cfg.retry.max_retries {
                return Err(match status {
                    Some(429) => ToolkitError::QuotaExceeded { status: 429 },
                    _ => ToolkitError::NetworkError { retries, message },
                });
            }
            retries += 1;
            tracing::debug!(retries, %message, "web search retry");
            std::thread::sleep(self.cfg.retry.delay(retries));
        }
    }

    fn attempt(&self, query: &str, k: usize) -> Attempt {
        let mut req = self
            .http
            .get(&self.cfg.endpoint)
            .query(&[("q", query), ("count", &k.to_string())]);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(resp) => resp,
            Err(e) if e.is_timeout() || e.is_connect() => return Attempt::Retry(e.to_string(), None),
            Err(e) => {
                return Attempt::Fail(ToolkitError::NetworkError {
                    retries: 0,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"), Some(status.as_u16()));
        }
        if !status.is_success() {
            return Attempt::Fail(ToolkitError::NetworkError {
                retries: 0,
                message: format!("HTTP {status}"),
            });
        }
        let wire: Vec<WireHit> = match resp.json() {
            Ok(w) => w,
            Err(e) if e.is_timeout() => return Attempt::Retry(e.to_string(), None),
            Err(e) => {
                return Attempt::Fail(ToolkitError::NetworkError {
                    retries: 0,
                    message: format!("bad response body: {e}"),
                })
            }
        };
        Attempt::Done(
            wire.into_iter()
                .take(k)
                .enumerate()
                .map(|(rank, w)| SearchHit {
                    doc_id: w.url.clone().unwrap_or_else(|| format!("web-{rank}")),
                    title: w.title,
                    snippet: w.snippet,
                    score: 1.0 / (1.0 + rank as f64),
                    url: w.url,
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_retries: 5,
            base_delay_ms: 100,
            max_delay_ms: 350,
        };
        assert_eq!(p.delay(1), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(200));
        assert_eq!(p.delay(3), Duration::from_millis(350));
    }
}
