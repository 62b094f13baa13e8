use serde::{Deserialize, Serialize};

use super::boxed::extract_boxed;
use super::tags::{tokenize, TagKind, TagSet, TagToken};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    ModelGenerated,
    EngineInserted,
}

impl Origin {
    pub fn for_kind(kind: TagKind) -> Self {
        if kind == TagKind::Result {
            Origin::EngineInserted
        } else {
            Origin::ModelGenerated
        }
    }
}

/// Half-open byte range into a rendered chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// One block of a reasoning chain.
///
/// A `bare` segment is free text found outside any tag pair; it is always of
/// kind `Think` and renders verbatim, without literals. `lead` holds the
/// whitespace separating a tagged segment from whatever precedes it. `span`
/// covers the open literal through the close literal (or the bare text) and
/// never includes `lead`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: TagKind,
    pub text: String,
    pub origin: Origin,
    pub lead: String,
    pub bare: bool,
    pub span: Span,
}

impl Segment {
    pub fn tagged(kind: TagKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
            origin: Origin::for_kind(kind),
            lead: String::new(),
            bare: false,
            span: Span::new(0, 0),
        }
    }

    pub fn bare(text: impl Into<String>) -> Self {
        Self {
            kind: TagKind::Think,
            text: text.into(),
            origin: Origin::ModelGenerated,
            lead: String::new(),
            bare: true,
            span: Span::new(0, 0),
        }
    }

    pub fn with_lead(mut self, lead: impl Into<String>) -> Self {
        self.lead = lead.into();
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Rendered form of the segment including its lead.
    pub fn render(&self, tags: &TagSet) -> String {
        let mut out = String::with_capacity(self.lead.len() + self.text.len() + 20);
        self.render_into(&mut out, tags);
        out
    }

    fn render_into(&self, out: &mut String, tags: &TagSet) {
        out.push_str(&self.lead);
        if self.bare {
            out.push_str(&self.text);
        } else {
            out.push_str(tags.open(self.kind));
            out.push_str(&self.text);
            out.push_str(tags.close(self.kind));
        }
    }
}

/// An ordered, typed decomposition of a trajectory's text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReasoningChain {
    pub query: String,
    pub instruction: String,
    pub segments: Vec<Segment>,
    /// Whitespace after the last segment.
    pub trailing: String,
    pub final_answer: Option<String>,
}

impl ReasoningChain {
    pub fn new(segments: Vec<Segment>, trailing: impl Into<String>, tags: &TagSet) -> Self {
        let mut chain = Self {
            segments,
            trailing: trailing.into(),
            ..Self::default()
        };
        chain.relayout(tags);
        chain
    }

    pub fn with_query(mut self, query: impl Into<String>, instruction: impl Into<String>) -> Self {
        self.query = query.into();
        self.instruction = instruction.into();
        self
    }

    /// Recompute spans and the final answer after segments were edited.
    pub fn relayout(&mut self, tags: &TagSet) {
        let mut offset = 0;
        for seg in &mut self.segments {
            offset += seg.lead.len();
            let len = if seg.bare {
                seg.text.len()
            } else {
                tags.open(seg.kind).len() + seg.text.len() + tags.close(seg.kind).len()
            };
            seg.span = Span::new(offset, offset + len);
            offset += len;
        }
        self.final_answer = self
            .segments
            .iter()
            .rev()
            .find(|s| s.kind == TagKind::Answer && !s.bare)
            .and_then(|s| extract_boxed(&s.text));
    }

    pub fn render(&self, tags: &TagSet) -> String {
        render_chain(self, tags)
    }

    /// Model-generated Search and Python segments, in order.
    pub fn tool_calls(&self) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(|s| !s.bare && s.kind.is_tool_call() && s.origin == Origin::ModelGenerated)
    }

    pub fn answer(&self) -> Option<&Segment> {
        self.segments
            .iter()
            .rev()
            .find(|s| s.kind == TagKind::Answer && !s.bare)
    }
}

/// Concatenate every segment as lead + open literal + text + close literal.
pub fn render_chain(chain: &ReasoningChain, tags: &TagSet) -> String {
    let mut out = String::new();
    for seg in &chain.segments {
        seg.render_into(&mut out, tags);
    }
    out.push_str(&chain.trailing);
    out
}

/// Strict parse. Free text between tag pairs becomes bare Think segments;
/// whitespace-only gaps become the lead of the following segment.
pub fn parse_chain(text: &str, tags: &TagSet) -> Result<ReasoningChain, ParseError> {
    let tokens = tokenize(text, tags);
    let pairs = pair_tokens(&tokens).map_err(|(err, _)| err)?;
    Ok(build_chain(text, &pairs, tags))
}

/// Lenient parse that never fails: literals that cannot be paired are kept as
/// ordinary text. Rendering the result reproduces `text` exactly.
pub fn parse_chain_lenient(text: &str, tags: &TagSet) -> ReasoningChain {
    let (pairs, _) = lenient_pairs(text, tags);
    build_chain(text, &pairs, tags)
}

/// Remove every tag literal that cannot be paired, so the output parses
/// strictly.
pub fn repair_chain(text: &str, tags: &TagSet) -> String {
    let (_, dropped) = lenient_pairs(text, tags);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for tok in dropped {
        out.push_str(&text[cursor..tok.start]);
        cursor = tok.end;
    }
    out.push_str(&text[cursor..]);
    out
}

fn lenient_pairs(text: &str, tags: &TagSet) -> (Vec<(TagToken, TagToken)>, Vec<TagToken>) {
    let mut tokens = tokenize(text, tags);
    let mut dropped = Vec::new();
    loop {
        match pair_tokens(&tokens) {
            Ok(pairs) => {
                dropped.sort_by_key(|t: &TagToken| t.start);
                return (pairs, dropped);
            }
            Err((_, culprit)) => dropped.push(tokens.remove(culprit)),
        }
    }
}

/// Pair open/close tokens of a flat protocol. On failure returns the error and
/// the index of the token to blame.
fn pair_tokens(tokens: &[TagToken]) -> Result<Vec<(TagToken, TagToken)>, (ParseError, usize)> {
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let open = tokens[i];
        if !open.open {
            return Err((ParseError::unbalanced(open.kind, open.start), i));
        }
        let Some(next) = tokens.get(i + 1) else {
            return Err((ParseError::unbalanced(open.kind, open.start), i));
        };
        if next.kind == open.kind {
            if next.open {
                return Err((ParseError::unbalanced(open.kind, open.start), i));
            }
            pairs.push((open, *next));
            i += 2;
            continue;
        }
        if !next.open {
            return Err((ParseError::unbalanced(next.kind, next.start), i + 1));
        }
        // A foreign open inside the current pair: crossing or nesting when both
        // kinds close before either reopens, otherwise something is dangling.
        let next_of = |kind: TagKind| tokens[i + 2..].iter().find(|t| t.kind == kind);
        let outer_closes = next_of(open.kind).is_some_and(|t| !t.open);
        let inner_closes = next_of(next.kind).is_some_and(|t| !t.open);
        return match (outer_closes, inner_closes) {
            (true, true) => Err((
                ParseError::Interleaved {
                    outer: open.kind,
                    inner: next.kind,
                    offset: next.start,
                },
                i + 1,
            )),
            (false, _) => Err((ParseError::unbalanced(open.kind, open.start), i)),
            (true, false) => Err((ParseError::unbalanced(next.kind, next.start), i + 1)),
        };
    }
    Ok(pairs)
}

fn build_chain(text: &str, pairs: &[(TagToken, TagToken)], tags: &TagSet) -> ReasoningChain {
    let mut segments = Vec::with_capacity(pairs.len() * 2);
    let mut cursor = 0;
    for (open, close) in pairs {
        let gap = &text[cursor..open.start];
        let mut lead = String::new();
        if is_blank(gap) {
            lead.push_str(gap);
        } else {
            segments.push(Segment::bare(gap));
        }
        segments.push(Segment::tagged(open.kind, &text[open.end..close.start]).with_lead(lead));
        cursor = close.end;
    }
    let tail = &text[cursor..];
    let trailing = if is_blank(tail) {
        tail.to_string()
    } else {
        segments.push(Segment::bare(tail));
        String::new()
    };
    ReasoningChain::new(segments, trailing, tags)
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}
