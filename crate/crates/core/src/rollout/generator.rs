use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatClient, ChatMessage, ChatParams, LlmError, TokenLogprob};
use crate::protocol::{TagKind, TagSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// Language-only reasoning, no tools.
    Direct,
    #[default]
    ToolIntegrated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub instruction: String,
    pub question: String,
    /// Everything already in the response: model text and inserted feedback.
    pub prefix: String,
    pub stop: Vec<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
    pub mode: GenerationMode,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generation {
    pub text: String,
    pub logprobs: Option<Vec<TokenLogprob>>,
    /// False when the model stopped early (e.g. a token cap) and may continue.
    pub finished: bool,
}

impl Generation {
    pub fn finished(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            logprobs: None,
            finished: true,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeneratorError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("generator failed: {0}")]
    Other(String),
}

pub trait Generator: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError>;
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError> {
        (**self).generate(req)
    }
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError> {
        (**self).generate(req)
    }
}

pub struct FnGenerator<F>(F);

impl<F> FnGenerator<F>
where
    F: Fn(&GenerationRequest) -> Result<Generation, GeneratorError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> Generator for FnGenerator<F>
where
    F: Fn(&GenerationRequest) -> Result<Generation, GeneratorError> + Send + Sync,
{
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError> {
        (self.0)(req)
    }
}

/// One full model response a scripted generator can replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    /// Model output. Result blocks, if present, are ignored: feedback comes
    /// from the tools at replay time.
    pub text: String,
    #[serde(default)]
    pub mode: GenerationMode,
    /// Makes this a continuation: it applies once the prefix contains
    /// `anchor`, and `text` is what follows the anchor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
}

impl Transcript {
    pub fn tir(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            mode: GenerationMode::ToolIntegrated,
            anchor: None,
        }
    }

    pub fn direct(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            mode: GenerationMode::Direct,
            anchor: None,
        }
    }

    pub fn resume(anchor: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            mode: GenerationMode::ToolIntegrated,
            anchor: Some(anchor.into()),
        }
    }
}

/// Remove every result block, keeping only text the model wrote.
pub fn strip_results(text: &str, tags: &TagSet) -> String {
    let open = tags.open(TagKind::Result);
    let close = tags.close(TagKind::Result);
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(open) {
        out.push_str(&rest[..start]);
        match rest[start..].find(close) {
            Some(end) => rest = &rest[start + end + close.len()..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Replays transcripts keyed by question.
///
/// A transcript matches a request when its mode agrees and its model text
/// extends the model text already in the prefix; among matches the one at
/// `seed % n` is chosen and its remainder is returned. With no match the
/// generator returns an empty, finished generation.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGenerator {
    scripts: HashMap<String, Vec<Transcript>>,
    tags: TagSet,
}

impl ScriptedGenerator {
    pub fn new(tags: TagSet) -> Self {
        Self {
            scripts: HashMap::new(),
            tags,
        }
    }

    pub fn add(&mut self, question: impl Into<String>, transcript: Transcript) -> &mut Self {
        self.scripts.entry(question.into()).or_default().push(transcript);
        self
    }

    pub fn with(mut self, question: impl Into<String>, transcript: Transcript) -> Self {
        self.add(question, transcript);
        self
    }

    fn remainder(&self, t: &Transcript, so_far: &str) -> Option<String> {
        let model = strip_results(&t.text, &self.tags);
        let already = match &t.anchor {
            None => so_far,
            Some(anchor) => {
                let pos = so_far.rfind(anchor.as_str())?;
                &so_far[pos + anchor.len()..]
            }
        };
        model.strip_prefix(already).map(str::to_string)
    }
}

impl Generator for ScriptedGenerator {
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError> {
        let so_far = strip_results(&req.prefix, &self.tags);
        let Some(list) = self.scripts.get(&req.question) else {
            return Ok(Generation::finished(""));
        };
        // continuations take precedence over plain transcripts
        let mut matches: Vec<String> = list
            .iter()
            .filter(|t| t.mode == req.mode && t.anchor.is_some())
            .filter_map(|t| self.remainder(t, &so_far))
            .collect();
        if matches.is_empty() {
            matches = list
                .iter()
                .filter(|t| t.mode == req.mode && t.anchor.is_none())
                .filter_map(|t| self.remainder(t, &so_far))
                .collect();
        }
        if matches.is_empty() {
            return Ok(Generation::finished(""));
        }
        let pick = (req.seed % matches.len() as u64) as usize;
        Ok(Generation::finished(matches.swap_remove(pick)))
    }
}

/// Generator backed by a chat-completions endpoint. The response so far is
/// sent as a trailing assistant message to be continued.
pub struct HttpGenerator {
    client: ChatClient,
    logprobs: bool,
    tags: TagSet,
}

impl HttpGenerator {
    pub fn new(client: ChatClient, tags: TagSet, logprobs: bool) -> Self {
        Self { client, logprobs, tags }
    }
}

/// Close literal to re-append when a server stopped on it and dropped it
/// from the text.
fn dropped_stop(text: &str, tags: &TagSet) -> Option<TagKind> {
    [TagKind::Search, TagKind::Python, TagKind::Answer]
        .into_iter()
        .find(|&kind| {
            text.rfind(tags.open(kind))
                .is_some_and(|i| !text[i..].contains(tags.close(kind)))
        })
}

pub(crate) fn build_messages(req: &GenerationRequest) -> Vec<ChatMessage> {
    let mut messages = Vec::new();
    if req.instruction.contains("{question}") {
        let user = req
            .instruction
            .replace("{question}", &req.question)
            .replace("{reference}", "");
        messages.push(ChatMessage::new("user", user));
    } else {
        if !req.instruction.is_empty() {
            messages.push(ChatMessage::new("system", req.instruction.clone()));
        }
        messages.push(ChatMessage::new("user", req.question.clone()));
    }
    if !req.prefix.is_empty() {
        messages.push(ChatMessage::new("assistant", req.prefix.clone()));
    }
    messages
}

impl Generator for HttpGenerator {
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, GeneratorError> {
        let params = ChatParams {
            stop: req.stop.clone(),
            temperature: Some(req.temperature),
            top_p: Some(req.top_p),
            seed: Some(req.seed),
            logprobs: self.logprobs,
            continue_final: !req.prefix.is_empty(),
        };
        let reply = self.client.chat(&build_messages(req), &params)?;
        let mut text = reply.text;
        // most servers drop the matched stop string; put the close tag back
        if reply.finish_reason.as_deref() == Some("stop") {
            if let Some(kind) = dropped_stop(&text, &self.tags) {
                text.push_str(self.tags.close(kind));
            }
        }
        Ok(Generation {
            text,
            logprobs: reply.logprobs,
            finished: reply.finish_reason.as_deref() != Some("length"),
        })
    }
}
