use serde::{Deserialize, Serialize};

use super::generator::{GenerationMode, GenerationRequest, Generator, GeneratorError};
use super::trajectory::{MaskedLogprob, StopReason, ToolCallRecord, Trajectory};
use crate::llm::TokenLogprob;
use crate::prompts::TOOL_INSTRUCTION;
use crate::protocol::{
    find_answer_end, parse_chain_lenient, scan_pending_call, Origin, PendingCall, ReasoningChain, TagKind, TagSet,
};
use crate::toolkit::{Registry, ToolCache, ToolFeedback, ToolKind, ToolRequest};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheScope {
    /// A fresh cache for every rollout.
    Rollout,
    /// The registry's cache, shared by every rollout of the run.
    #[default]
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub max_tool_calls: usize,
    /// Character budget standing in for the token limit.
    pub max_chars: usize,
    pub chars_per_token: usize,
    pub group_size: usize,
    pub stop_on_close_tags: Vec<TagKind>,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
    pub cache_scope: CacheScope,
    /// Upper bound on generator calls per rollout.
    pub max_turns: usize,
    pub instruction: String,
    #[serde(skip)]
    pub tags: TagSet,
}

pub const DEFAULT_MAX_TOKENS: usize = 4096;

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            max_tool_calls: 3,
            max_chars: DEFAULT_MAX_TOKENS * 4,
            chars_per_token: 4,
            group_size: 8,
            stop_on_close_tags: vec![TagKind::Search, TagKind::Python, TagKind::Answer],
            temperature: 0.7,
            top_p: 0.95,
            seed: 0,
            cache_scope: CacheScope::Run,
            max_turns: 64,
            instruction: TOOL_INSTRUCTION.to_string(),
            tags: TagSet::default(),
        }
    }
}

impl RolloutConfig {
    /// Set `max_chars` from a token budget using `chars_per_token`.
    pub fn with_token_budget(mut self, tokens: usize) -> Self {
        self.max_chars = tokens * self.chars_per_token;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub gold: Option<String>,
}

impl Query {
    pub fn new(id: impl Into<String>, question: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            gold: None,
        }
    }

    pub fn with_gold(mut self, gold: impl Into<String>) -> Self {
        self.gold = Some(gold.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRollout {
    pub query: Query,
    pub members: Vec<Trajectory>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

pub fn budget_notice(max_tool_calls: usize) -> String {
    format!(
        "Tool call limit reached: at most {max_tool_calls} tool calls are allowed. \
Continue reasoning without tools and give the final answer."
    )
}

pub const TOOLS_DISABLED_NOTICE: &str =
    "Tools are disabled for the rest of this response. Continue reasoning and give the final answer.";

/// Remove tag literals from tool output so it cannot break the chain.
pub fn sanitize_feedback(text: &str, tags: &TagSet) -> String {
    let mut out = text.to_string();
    for kind in TagKind::ALL {
        out = out.replace(tags.close(kind), "").replace(tags.open(kind), "");
    }
    out
}

pub fn result_block(feedback: &str, tags: &TagSet) -> String {
    format!(
        "{}\n{}\n{}",
        tags.open(TagKind::Result),
        sanitize_feedback(feedback, tags),
        tags.close(TagKind::Result)
    )
}

/// What a hook wants done with a tool call's feedback.
pub(crate) enum FeedbackDecision {
    Insert(ToolFeedback),
    /// Discard the call and regenerate from this byte offset.
    Rewind(usize),
}

pub(crate) enum OverflowDecision {
    Stop,
    /// Continue from this text with tools disabled.
    Replace(String),
    /// Use this text and stop.
    Finish(String),
}

/// Context handed to hooks when a tool call completes.
pub(crate) struct CallContext<'a> {
    pub text: &'a str,
    /// Absolute byte offset of the call's open literal.
    pub open_offset: usize,
    pub request: &'a ToolRequest,
    pub invoke: &'a dyn Fn(&ToolRequest) -> ToolFeedback,
}

/// Interception points used by the resilient rollout.
pub(crate) trait Hooks {
    fn review_feedback(&mut self, _ctx: &CallContext<'_>, fb: ToolFeedback) -> FeedbackDecision {
        FeedbackDecision::Insert(fb)
    }

    fn on_overflow(&mut self, _question: &str, _text: &str) -> OverflowDecision {
        OverflowDecision::Stop
    }
}

pub(crate) struct NoHooks;

impl Hooks for NoHooks {}

#[derive(Debug, Clone)]
struct Piece {
    text: String,
    origin: Origin,
    logprobs: Vec<TokenLogprob>,
}

struct Working {
    pieces: Vec<Piece>,
    text: String,
    have_logprobs: bool,
}

impl Working {
    fn push(&mut self, text: &str, origin: Origin, logprobs: Vec<TokenLogprob>) {
        if text.is_empty() {
            return;
        }
        self.text.push_str(text);
        match self.pieces.last_mut() {
            Some(last) if last.origin == origin && origin == Origin::ModelGenerated => {
                last.text.push_str(text);
                last.logprobs.extend(logprobs);
            }
            _ => self.pieces.push(Piece {
                text: text.to_string(),
                origin,
                logprobs,
            }),
        }
    }

    /// Byte offset where the current run of model text begins.
    fn run_start(&self) -> usize {
        match self.pieces.last() {
            Some(p) if p.origin == Origin::ModelGenerated => self.text.len() - p.text.len(),
            _ => self.text.len(),
        }
    }

    /// Cut the text back to `len`, which must lie in the current model run.
    fn truncate(&mut self, len: usize) {
        let start = self.run_start();
        debug_assert!(len >= start);
        self.text.truncate(len);
        if let Some(last) = self.pieces.last_mut().filter(|p| p.origin == Origin::ModelGenerated) {
            let keep = len - start;
            last.text.truncate(keep);
            trim_logprobs(&mut last.logprobs, keep);
            if last.text.is_empty() {
                self.pieces.pop();
            }
        }
    }

    /// Swap in rewritten text. Result blocks in it stay engine-inserted so
    /// the mask still covers them.
    fn replace_all(&mut self, text: &str, tags: &TagSet) {
        self.pieces.clear();
        self.text.clear();
        self.have_logprobs = false;
        let chain = parse_chain_lenient(text, tags);
        let mut cursor = 0;
        for seg in &chain.segments {
            if !seg.bare && seg.kind == TagKind::Result {
                self.push(&text[cursor..seg.span.start], Origin::ModelGenerated, Vec::new());
                self.push(&text[seg.span.start..seg.span.end], Origin::EngineInserted, Vec::new());
                cursor = seg.span.end;
            }
        }
        self.push(&text[cursor..], Origin::ModelGenerated, Vec::new());
    }
}

/// Keep the tokens needed to cover the first `len` bytes.
fn trim_logprobs(lps: &mut Vec<TokenLogprob>, len: usize) {
    let mut covered = 0;
    let mut keep = 0;
    for tok in lps.iter() {
        if covered >= len {
            break;
        }
        covered += tok.token.len();
        keep += 1;
    }
    lps.truncate(keep);
}

/// Build the chain piece by piece so that origins follow what was actually
/// inserted, whatever the model wrote.
fn assemble(pieces: &[Piece], tags: &TagSet) -> (ReasoningChain, Option<Vec<MaskedLogprob>>) {
    let mut segments = Vec::new();
    let mut pending_lead = String::new();
    for piece in pieces {
        let mut part = parse_chain_lenient(&piece.text, tags);
        for seg in &mut part.segments {
            seg.origin = piece.origin;
        }
        if let Some(first) = part.segments.first_mut() {
            if !pending_lead.is_empty() {
                first.lead = std::mem::take(&mut pending_lead) + &first.lead;
            }
        }
        if part.segments.is_empty() {
            pending_lead.push_str(&part.trailing);
        } else {
            pending_lead = part.trailing;
        }
        segments.extend(part.segments);
    }
    let chain = ReasoningChain::new(segments, pending_lead, tags);
    let logprobs = pieces
        .iter()
        .map(|p| match p.origin {
            Origin::ModelGenerated => p
                .logprobs
                .iter()
                .map(|t| MaskedLogprob {
                    token_text: t.token.clone(),
                    logprob: t.logprob,
                    masked: false,
                })
                .collect::<Vec<_>>(),
            Origin::EngineInserted => vec![MaskedLogprob {
                token_text: p.text.clone(),
                logprob: 0.0,
                masked: true,
            }],
        })
        .collect::<Vec<_>>()
        .concat();
    (chain, Some(logprobs))
}

enum Event {
    Call(PendingCall),
    Answer(usize),
}

/// Earliest tool call or answer close in `run` (offsets relative to `run`).
fn next_event(run: &str, cfg: &RolloutConfig) -> Option<Event> {
    let call = scan_pending_call(run, &cfg.tags).filter(|c| cfg.stop_on_close_tags.contains(&c.kind));
    let answer = find_answer_end(run, &cfg.tags).filter(|_| cfg.stop_on_close_tags.contains(&TagKind::Answer));
    match (call, answer) {
        (Some(c), Some(a)) if a < c.end_offset => Some(Event::Answer(a)),
        (Some(c), _) => Some(Event::Call(c)),
        (None, Some(a)) => Some(Event::Answer(a)),
        (None, None) => None,
    }
}

pub(crate) fn drive(
    query: &Query,
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &RolloutConfig,
    seed: u64,
    prefix: &str,
    hooks: &mut dyn Hooks,
) -> Result<Trajectory, GeneratorError> {
    let tags = &cfg.tags;
    let local_cache;
    let cache = match cfg.cache_scope {
        CacheScope::Run => registry.cache(),
        CacheScope::Rollout => {
            local_cache = ToolCache::new(crate::toolkit::DEFAULT_CACHE_CAPACITY);
            &local_cache
        }
    };
    let invoke = |req: &ToolRequest| -> ToolFeedback {
        registry.invoke_with(cache, req).unwrap_or_else(|e| ToolFeedback {
            text: e.to_string(),
            is_error: true,
            cached: false,
            latency_ms: 0,
        })
    };

    let mut work = Working {
        pieces: Vec::new(),
        text: String::new(),
        have_logprobs: prefix.is_empty(),
    };
    work.push(prefix, Origin::ModelGenerated, Vec::new());
    let mut tool_calls: Vec<ToolCallRecord> = Vec::new();
    let mut notices = 0usize;
    let mut tools_disabled = false;
    let mut stop = StopReason::GeneratorEnded;

    for _turn in 0..cfg.max_turns {
        let req = GenerationRequest {
            instruction: cfg.instruction.clone(),
            question: query.question.clone(),
            prefix: work.text.clone(),
            stop: cfg
                .stop_on_close_tags
                .iter()
                .map(|k| tags.close(*k).to_string())
                .collect(),
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            seed,
            mode: GenerationMode::ToolIntegrated,
        };
        let gen = generator.generate(&req)?;
        if gen.text.is_empty() {
            stop = StopReason::GeneratorEnded;
            break;
        }
        if gen.logprobs.is_none() {
            work.have_logprobs = false;
        }
        let run_start = work.run_start();
        work.push(&gen.text, Origin::ModelGenerated, gen.logprobs.unwrap_or_default());
        let event = next_event(&work.text[run_start..], cfg);
        let cut = match &event {
            Some(Event::Call(c)) => run_start + c.end_offset,
            Some(Event::Answer(end)) => run_start + end,
            None => work.text.len(),
        };
        if cut < work.text.len() {
            work.truncate(cut);
        }

        if work.text.chars().count() > cfg.max_chars {
            match hooks.on_overflow(&query.question, &work.text) {
                OverflowDecision::Stop => {
                    stop = StopReason::LengthExceeded;
                    break;
                }
                OverflowDecision::Finish(text) => {
                    work.replace_all(&text, tags);
                    stop = StopReason::LengthExceeded;
                    break;
                }
                OverflowDecision::Replace(text) => {
                    work.replace_all(&text, tags);
                    tools_disabled = true;
                    if let Some(end) = find_answer_end(&work.text, tags) {
                        work.truncate(end);
                        stop = StopReason::AnswerEmitted;
                        break;
                    }
                    continue;
                }
            }
        }

        match event {
            None => {
                if gen.finished {
                    stop = StopReason::GeneratorEnded;
                    break;
                }
            }
            Some(Event::Answer(_)) => {
                stop = StopReason::AnswerEmitted;
                break;
            }
            Some(Event::Call(call)) => {
                let kind = ToolKind::from_tag(call.kind).expect("tool-call kind");
                if tools_disabled || tool_calls.len() >= cfg.max_tool_calls {
                    notices += 1;
                    let notice = if tools_disabled {
                        TOOLS_DISABLED_NOTICE.to_string()
                    } else {
                        budget_notice(cfg.max_tool_calls)
                    };
                    work.push(&result_block(&notice, tags), Origin::EngineInserted, Vec::new());
                    if notices > 1 {
                        stop = StopReason::ToolBudgetExhausted;
                        break;
                    }
                    continue;
                }
                let request = ToolRequest::new(kind, &call.request);
                let feedback = invoke(&request);
                let ctx = CallContext {
                    text: &work.text,
                    open_offset: run_start + call.start_offset,
                    request: &request,
                    invoke: &invoke,
                };
                match hooks.review_feedback(&ctx, feedback) {
                    FeedbackDecision::Rewind(offset) => {
                        work.truncate(offset.clamp(run_start, work.text.len()));
                    }
                    FeedbackDecision::Insert(fb) => {
                        work.push(&result_block(&fb.text, tags), Origin::EngineInserted, Vec::new());
                        tool_calls.push(ToolCallRecord {
                            kind,
                            request: request.payload.clone(),
                            feedback: fb.text,
                            is_error: fb.is_error,
                            cached: fb.cached,
                        });
                    }
                }
            }
        }
    }

    let (chain, logprobs) = assemble(&work.pieces, tags);
    let chain = chain.with_query(query.question.clone(), cfg.instruction.clone());
    let mut traj = Trajectory::from_chain(chain, tags);
    debug_assert_eq!(traj.text, work.text);
    traj.id = query.id.clone();
    traj.gold = query.gold.clone();
    traj.tool_calls = tool_calls;
    traj.stop_reason = stop;
    traj.logprobs = logprobs.filter(|_| work.have_logprobs);
    Ok(traj)
}

/// Generate, call tools, insert feedback, repeat: one tool-integrated
/// response for `query`.
pub fn run_rollout(
    query: &Query,
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &RolloutConfig,
) -> Result<Trajectory, GeneratorError> {
    drive(query, generator, registry, cfg, cfg.seed, "", &mut NoHooks)
}

/// Continue a response that already starts with `prefix`, which counts as
/// model text.
pub fn resume_rollout(
    query: &Query,
    prefix: &str,
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &RolloutConfig,
) -> Result<Trajectory, GeneratorError> {
    drive(query, generator, registry, cfg, cfg.seed, prefix, &mut NoHooks)
}

fn failed_member(query: &Query, cfg: &RolloutConfig, err: &GeneratorError) -> Trajectory {
    tracing::warn!(id = %query.id, error = %err, "rollout failed");
    let chain = ReasoningChain::default().with_query(query.question.clone(), cfg.instruction.clone());
    let mut traj = Trajectory::from_chain(chain, &cfg.tags);
    traj.id = query.id.clone();
    traj.gold = query.gold.clone();
    traj.stop_reason = StopReason::GeneratorEnded;
    traj
}

fn group_from(query: &Query, members: Vec<Trajectory>) -> GroupRollout {
    let n = members.len();
    GroupRollout {
        query: query.clone(),
        members,
        rewards: vec![0.0; n],
        advantages: vec![0.0; n],
    }
}

/// `group_size` rollouts with seeds `seed, seed+1, ...`, run in order.
pub fn run_group(query: &Query, generator: &dyn Generator, registry: &Registry, cfg: &RolloutConfig) -> GroupRollout {
    let members = (0..cfg.group_size as u64)
        .map(|i| {
            drive(
                query,
                generator,
                registry,
                cfg,
                cfg.seed.wrapping_add(i),
                "",
                &mut NoHooks,
            )
            .unwrap_or_else(|e| failed_member(query, cfg, &e))
        })
        .collect();
    group_from(query, members)
}

/// As [`run_group`], with members fanned out over threads. Members keep
/// sampling-index order.
pub fn run_group_parallel(
    query: &Query,
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &RolloutConfig,
) -> GroupRollout {
    let members = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.group_size as u64)
            .map(|i| {
                s.spawn(move || {
                    drive(
                        query,
                        generator,
                        registry,
                        cfg,
                        cfg.seed.wrapping_add(i),
                        "",
                        &mut NoHooks,
                    )
                    .unwrap_or_else(|e| failed_member(query, cfg, &e))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rollout worker panicked"))
            .collect()
    });
    group_from(query, members)
}
