use serde::{Deserialize, Serialize};

use crate::protocol::{parse_chain_lenient, Origin, ReasoningChain, Segment, Span, TagKind, TagSet};
use crate::synthesis::DifficultyCategory;
use crate::toolkit::ToolKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    AnswerEmitted,
    ToolBudgetExhausted,
    LengthExceeded,
    GeneratorEnded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCallRecord {
    pub kind: ToolKind,
    pub request: String,
    pub feedback: String,
    pub is_error: bool,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedLogprob {
    pub token_text: String,
    pub logprob: f64,
    /// True for engine-inserted text, which is excluded from the loss.
    pub masked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    Debug,
    Backtrace,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub kind: InterventionKind,
    pub detail: String,
}

/// A completed rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub question: String,
    pub gold: Option<String>,
    pub chain: ReasoningChain,
    /// The rendered chain; every span refers to it.
    pub text: String,
    pub tool_calls: Vec<ToolCallRecord>,
    pub stop_reason: StopReason,
    pub mask: Vec<Span>,
    pub logprobs: Option<Vec<MaskedLogprob>>,
    pub interventions: Vec<Intervention>,
    pub stage: Option<String>,
    pub category: Option<DifficultyCategory>,
}

impl Trajectory {
    /// Wrap a finished chain, deriving the rendered text and mask from it.
    pub fn from_chain(chain: ReasoningChain, tags: &TagSet) -> Self {
        let text = chain.render(tags);
        let mut traj = Self {
            id: String::new(),
            question: chain.query.clone(),
            gold: None,
            text,
            tool_calls: Vec::new(),
            stop_reason: StopReason::AnswerEmitted,
            mask: Vec::new(),
            logprobs: None,
            interventions: Vec::new(),
            stage: None,
            category: None,
            chain,
        };
        traj.mask = feedback_mask(&traj);
        traj
    }

    /// Text the model wrote: everything outside the mask.
    pub fn model_text(&self) -> String {
        let mut out = String::with_capacity(self.text.len());
        let mut cursor = 0;
        for span in &self.mask {
            out.push_str(&self.text[cursor..span.start]);
            cursor = span.end;
        }
        out.push_str(&self.text[cursor..]);
        out
    }

    /// Text the engine inserted: everything inside the mask.
    pub fn inserted_text(&self) -> String {
        self.mask.iter().map(|s| &self.text[s.start..s.end]).collect()
    }

    pub fn answer(&self) -> Option<&str> {
        self.chain.final_answer.as_deref()
    }

    /// Kinds of tool-call segments the model wrote.
    pub fn model_tool_kinds(&self) -> impl Iterator<Item = TagKind> + '_ {
        self.chain.tool_calls().map(|s| s.kind)
    }
}

/// Spans of every engine-inserted segment, including the tag literals,
/// sorted and disjoint.
pub fn feedback_mask(traj: &Trajectory) -> Vec<Span> {
    traj.chain
        .segments
        .iter()
        .filter(|s| s.origin == Origin::EngineInserted)
        .map(|s| s.span)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub tag: TagKind,
    pub text: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub lead: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bare: bool,
}

/// One line of a trajectory JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub gold: Option<String>,
    #[serde(default)]
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub trailing: String,
    /// Raw response text; used only when `segments` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub tool_calls: Vec<ToolCallRecord>,
    pub stop_reason: StopReason,
    #[serde(default)]
    pub mask: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<MaskedLogprob>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interventions: Vec<Intervention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<DifficultyCategory>,
}

impl Trajectory {
    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            id: self.id.clone(),
            question: self.question.clone(),
            gold: self.gold.clone(),
            segments: self
                .chain
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    tag: s.kind,
                    text: s.text.clone(),
                    origin: s.origin,
                    lead: s.lead.clone(),
                    bare: s.bare,
                })
                .collect(),
            trailing: self.chain.trailing.clone(),
            text: None,
            tool_calls: self.tool_calls.clone(),
            stop_reason: self.stop_reason,
            mask: self.mask.iter().map(|s| (s.start, s.end)).collect(),
            logprobs: self.logprobs.clone(),
            interventions: self.interventions.clone(),
            stage: self.stage.clone(),
            category: self.category,
        }
    }

    /// Rebuild from a record. The mask is recomputed from segment origins.
    /// Records that carry only raw text are parsed leniently, with every
    /// result block taken as engine-inserted.
    pub fn from_record(rec: TrajectoryRecord, tags: &TagSet) -> Self {
        let chain = if rec.segments.is_empty() {
            let mut chain = parse_chain_lenient(rec.text.as_deref().unwrap_or(""), tags);
            for seg in &mut chain.segments {
                if !seg.bare {
                    seg.origin = Origin::for_kind(seg.kind);
                }
            }
            chain
        } else {
            let segments = rec
                .segments
                .into_iter()
                .map(|s| {
                    let seg = if s.bare {
                        Segment::bare(s.text)
                    } else {
                        Segment::tagged(s.tag, s.text)
                    };
                    seg.with_lead(s.lead).with_origin(s.origin)
                })
                .collect();
            ReasoningChain::new(segments, rec.trailing, tags)
        };
        let chain = chain.with_query(rec.question.clone(), String::new());
        let mut traj = Trajectory::from_chain(chain, tags);
        traj.id = rec.id;
        traj.gold = rec.gold;
        traj.tool_calls = rec.tool_calls;
        traj.stop_reason = rec.stop_reason;
        traj.logprobs = rec.logprobs;
        traj.interventions = rec.interventions;
        traj.stage = rec.stage;
        traj.category = rec.category;
        traj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let tags = TagSet::default();
        let chain = ReasoningChain::new(
            vec![
                Segment::tagged(TagKind::Think, "t"),
                Segment::tagged(TagKind::Search, "q").with_lead("\n"),
                Segment::tagged(TagKind::Result, "r"),
                Segment::tagged(TagKind::Answer, "\\boxed{1}").with_lead("\n"),
            ],
            "",
            &tags,
        );
        Trajectory::from_chain(chain, &tags)
    }

    #[test]
    fn mask_covers_result_block() {
        let t = sample();
        assert_eq!(t.mask.len(), 1);
        assert_eq!(&t.text[t.mask[0].start..t.mask[0].end], "<result>r</result>");
        assert_eq!(t.inserted_text(), "<result>r</result>");
        assert_eq!(
            t.model_text(),
            "<think>t</think>\n<search>q</search>\n<answer>\\boxed{1}</answer>"
        );
    }

    #[test]
    fn no_tool_calls_no_mask() {
        let tags = TagSet::default();
        let chain = ReasoningChain::new(vec![Segment::tagged(TagKind::Answer, "\\boxed{2}")], "", &tags);
        assert!(Trajectory::from_chain(chain, &tags).mask.is_empty());
    }

    #[test]
    fn record_round_trip() {
        let t = sample();
        let line = serde_json::to_string(&t.to_record()).unwrap();
        let back: TrajectoryRecord = serde_json::from_str(&line).unwrap();
        let t2 = Trajectory::from_record(back, &TagSet::default());
        assert_eq!(t2.text, t.text);
        assert_eq!(t2.mask, t.mask);
        assert_eq!(t2.chain.segments, t.chain.segments);
    }

    #[test]
    fn raw_text_record() {
        let rec: TrajectoryRecord = serde_json::from_str(
            r#"{"id":"x","question":"q","text":"<python>1</python><result>1</result><answer>\\boxed{1}</answer>","stop_reason":"AnswerEmitted"}"#,
        )
        .unwrap();
        let t = Trajectory::from_record(rec, &TagSet::default());
        assert_eq!(t.mask.len(), 1);
        assert_eq!(t.answer(), Some("1"));
    }
}
