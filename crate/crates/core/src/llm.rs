//! Text-completion clients shared by the generator, browser summarizer,
//! debugger, refiner and judge.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::toolkit::RetryPolicy;

pub const LLM_KEY_ENV: &str = "TOOLSTAR_LLM_API_KEY";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("model unavailable: {0}")]
    Unavailable(String),
    #[error("http error: {0}")]
    Http(String),
    #[error("malformed model response: {0}")]
    BadResponse(String),
}

/// A single-prompt completion.
pub trait Llm: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<L: Llm + ?Sized> Llm for &L {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<L: Llm + ?Sized> Llm for std::sync::Arc<L> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

pub struct FnLlm<F>(F);

impl<F> FnLlm<F>
where
    F: Fn(&str) -> Result<String, LlmError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> Llm for FnLlm<F>
where
    F: Fn(&str) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (self.0)(prompt)
    }
}

/// Returns canned responses in order, then reports itself unavailable.
/// Every prompt it receives is recorded.
#[derive(Debug, Default)]
pub struct ScriptedLlm {
    responses: Vec<String>,
    state: Mutex<(usize, Vec<String>)>,
}

impl ScriptedLlm {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            state: Mutex::new((0, Vec::new())),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).1.clone()
    }
}

impl Llm for ScriptedLlm {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.1.push(prompt.to_string());
        let idx = state.0;
        state.0 += 1;
        self.responses
            .get(idx)
            .cloned()
            .ok_or_else(|| LlmError::Unavailable("script exhausted".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    /// Full URL of an OpenAI-compatible chat-completions route.
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_tokens: Option<u32>,
    pub retry: RetryPolicy,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            timeout_ms: 120_000,
            max_tokens: None,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub stop: Vec<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub seed: Option<u64>,
    pub logprobs: bool,
    /// Continue the final assistant message instead of starting a new turn.
    pub continue_final: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub text: String,
    pub logprobs: Option<Vec<TokenLogprob>>,
    pub finish_reason: Option<String>,
}

/// Blocking client for an OpenAI-compatible chat-completions endpoint.
pub struct ChatClient {
    http: reqwest::blocking::Client,
    cfg: ChatConfig,
    api_key: Option<String>,
}

impl ChatClient {
    pub fn new(cfg: ChatConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| LlmError::Http(e.to_string()))?;
        Ok(Self { http, cfg, api_key })
    }

    pub fn from_env(cfg: ChatConfig) -> Result<Self, LlmError> {
        Self::new(cfg, std::env::var(LLM_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }

    pub fn chat(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<ChatReply, LlmError> {
        let mut body = json!({
            "model": self.cfg.model,
            "messages": messages,
        });
        let obj = body.as_object_mut().expect("object literal");
        if !params.stop.is_empty() {
            obj.insert("stop".into(), json!(params.stop));
        }
        if let Some(t) = params.temperature {
            obj.insert("temperature".into(), json!(t));
        }
        if let Some(p) = params.top_p {
            obj.insert("top_p".into(), json!(p));
        }
        if let Some(s) = params.seed {
            obj.insert("seed".into(), json!(s));
        }
        if let Some(m) = self.cfg.max_tokens {
            obj.insert("max_tokens".into(), json!(m));
        }
        if params.logprobs {
            obj.insert("logprobs".into(), json!(true));
        }
        if params.continue_final {
            obj.insert("continue_final_message".into(), json!(true));
            obj.insert("add_generation_prompt".into(), json!(false));
        }

        let mut retries = 0;
        loop {
            match self.post(&body) {
                Ok(v) => return parse_reply(&v),
                Err((err, retryable)) => {
                    if !retryable || retries >= self.cfg.retry.max_retries {
                        return Err(err);
                    }
                    retries += 1;
                    std::thread::sleep(self.cfg.retry.delay(retries));
                }
            }
        }
    }

    fn post(&self, body: &Value) -> Result<Value, (LlmError, bool)> {
        let mut req = self.http.post(&self.cfg.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (LlmError::Http(e.to_string()), e.is_timeout() || e.is_connect()))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err((LlmError::Http(format!("HTTP {status}")), retryable));
        }
        resp.json().map_err(|e| (LlmError::BadResponse(e.to_string()), false))
    }
}

fn parse_reply(v: &Value) -> Result<ChatReply, LlmError> {
    let choice = v
        .pointer("/choices/0")
        .ok_or_else(|| LlmError::BadResponse("no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::BadResponse("no message content".into()))?
        .to_string();
    let logprobs = choice
        .pointer("/logprobs/content")
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(|t| {
                    Some(TokenLogprob {
                        token: t.get("token")?.as_str()?.to_string(),
                        logprob: t.get("logprob")?.as_f64()?,
                    })
                })
                .collect()
        });
    let finish_reason = choice.get("finish_reason").and_then(Value::as_str).map(str::to_string);
    Ok(ChatReply {
        text,
        logprobs,
        finish_reason,
    })
}

impl Llm for ChatClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.chat(&[ChatMessage::new("user", prompt)], &ChatParams::default())
            .map(|r| r.text)
    }
}
