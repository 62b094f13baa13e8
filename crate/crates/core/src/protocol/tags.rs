use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// The five block kinds of the reasoning protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Think,
    Search,
    Python,
    Result,
    Answer,
}

impl TagKind {
    pub const ALL: [TagKind; 5] = [
        TagKind::Think,
        TagKind::Search,
        TagKind::Python,
        TagKind::Result,
        TagKind::Answer,
    ];

    /// Search and Python blocks are requests the engine must service.
    pub fn is_tool_call(self) -> bool {
        matches!(self, TagKind::Search | TagKind::Python)
    }

    pub fn name(self) -> &'static str {
        match self {
            TagKind::Think => "think",
            TagKind::Search => "search",
            TagKind::Python => "python",
            TagKind::Result => "result",
            TagKind::Answer => "answer",
        }
    }
}

impl std::fmt::Display for TagKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagLiterals {
    pub open: String,
    pub close: String,
}

impl TagLiterals {
    fn html(name: &str) -> Self {
        Self {
            open: format!("<{name}>"),
            close: format!("</{name}>"),
        }
    }
}

/// The configured tag vocabulary. Defaults to `<think>`, `<search>`,
/// `<python>`, `<result>` and `<answer>` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagSet {
    pub think: TagLiterals,
    pub search: TagLiterals,
    pub python: TagLiterals,
    pub result: TagLiterals,
    pub answer: TagLiterals,
}

impl Default for TagSet {
    fn default() -> Self {
        Self {
            think: TagLiterals::html("think"),
            search: TagLiterals::html("search"),
            python: TagLiterals::html("python"),
            result: TagLiterals::html("result"),
            answer: TagLiterals::html("answer"),
        }
    }
}

impl TagSet {
    pub fn get(&self, kind: TagKind) -> &TagLiterals {
        match kind {
            TagKind::Think => &self.think,
            TagKind::Search => &self.search,
            TagKind::Python => &self.python,
            TagKind::Result => &self.result,
            TagKind::Answer => &self.answer,
        }
    }

    pub fn open(&self, kind: TagKind) -> &str {
        &self.get(kind).open
    }

    pub fn close(&self, kind: TagKind) -> &str {
        &self.get(kind).close
    }

    /// Every literal must be non-empty and distinct from every other literal,
    /// and no literal may contain another one.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let literals: Vec<&str> = TagKind::ALL
            .iter()
            .flat_map(|k| [self.open(*k), self.close(*k)])
            .collect();
        for (i, a) in literals.iter().enumerate() {
            if a.is_empty() {
                return Err(ProtocolError::InvalidTagSet("empty tag literal".into()));
            }
            for (j, b) in literals.iter().enumerate() {
                if i != j && b.contains(a) {
                    return Err(ProtocolError::InvalidTagSet(format!(
                        "tag literal {a:?} overlaps {b:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Stop sequences that end a generation turn: the close literals of the
    /// tool-call kinds and of the answer.
    pub fn stop_sequences(&self) -> Vec<String> {
        [TagKind::Search, TagKind::Python, TagKind::Answer]
            .iter()
            .map(|k| self.close(*k).to_string())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TagToken {
    pub kind: TagKind,
    pub open: bool,
    pub start: usize,
    pub end: usize,
}

/// Locate every tag literal in `text`, left to right, never overlapping.
pub(crate) fn tokenize(text: &str, tags: &TagSet) -> Vec<TagToken> {
    let mut literals: Vec<(&str, TagKind, bool)> = Vec::with_capacity(10);
    for kind in TagKind::ALL {
        literals.push((tags.open(kind), kind, true));
        literals.push((tags.close(kind), kind, false));
    }
    // longest literal first so that a prefix literal never shadows a longer one
    literals.sort_by_key(|l| std::cmp::Reverse(l.0.len()));
    let first_bytes: Vec<u8> = literals
        .iter()
        .filter_map(|(lit, _, _)| lit.as_bytes().first().copied())
        .collect();

    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if first_bytes.contains(&bytes[i]) {
            if let Some((lit, kind, open)) = literals
                .iter()
                .find(|(lit, _, _)| !lit.is_empty() && bytes[i..].starts_with(lit.as_bytes()))
            {
                tokens.push(TagToken {
                    kind: *kind,
                    open: *open,
                    start: i,
                    end: i + lit.len(),
                });
                i += lit.len();
                continue;
            }
        }
        i += 1;
    }
    tokens
}
