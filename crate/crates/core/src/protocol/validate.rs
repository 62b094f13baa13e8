use serde::{Deserialize, Serialize};

use super::boxed::extract_boxed;
use super::chain::parse_chain;
use super::tags::{TagKind, TagSet};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    UnbalancedTag,
    MissingAnswer,
    MissingBoxed,
    OverMaxLength,
    DanglingToolCall,
    TagOrderViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Tag kind involved, when the violation concerns one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<TagKind>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl FormatReport {
    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatLimits {
    pub max_chars: usize,
}

/// Check a model output against the protocol. Checks run in a fixed order:
/// pairing, length, answer presence and boxing, tool-call feedback, then
/// result placement.
pub fn validate_format(text: &str, limits: FormatLimits, tags: &TagSet) -> FormatReport {
    let mut violations = Vec::new();
    let parsed = parse_chain(text, tags);
    if let Err(err) = &parsed {
        violations.push(match *err {
            ParseError::UnbalancedTag { kind, offset } => Violation {
                code: ViolationCode::UnbalancedTag,
                kind: Some(kind),
                detail: format!(
                    "{} and {} are not matched (at byte {offset})",
                    tags.open(kind),
                    tags.close(kind)
                ),
            },
            ParseError::Interleaved { outer, inner, offset } => Violation {
                code: ViolationCode::TagOrderViolation,
                kind: Some(inner),
                detail: format!(
                    "{} opened inside {} at byte {offset}",
                    tags.open(inner),
                    tags.open(outer)
                ),
            },
        });
    }

    let chars = text.chars().count();
    if chars > limits.max_chars {
        violations.push(Violation {
            code: ViolationCode::OverMaxLength,
            kind: None,
            detail: format!("{chars} characters exceed the limit of {}", limits.max_chars),
        });
    }

    if let Ok(chain) = &parsed {
        let segs = &chain.segments;
        let answers: Vec<usize> = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == TagKind::Answer && !s.bare)
            .map(|(i, _)| i)
            .collect();
        match answers.as_slice() {
            [] => violations.push(Violation {
                code: ViolationCode::MissingAnswer,
                kind: Some(TagKind::Answer),
                detail: format!("no {} block", tags.open(TagKind::Answer)),
            }),
            [idx] => {
                if *idx + 1 != segs.len() {
                    violations.push(Violation {
                        code: ViolationCode::TagOrderViolation,
                        kind: Some(TagKind::Answer),
                        detail: "content follows the answer block".into(),
                    });
                }
                if extract_boxed(&segs[*idx].text).is_none() {
                    violations.push(Violation {
                        code: ViolationCode::MissingBoxed,
                        kind: Some(TagKind::Answer),
                        detail: "the answer block has no \\boxed{} expression".into(),
                    });
                }
            }
            _ => violations.push(Violation {
                code: ViolationCode::TagOrderViolation,
                kind: Some(TagKind::Answer),
                detail: format!("{} answer blocks", answers.len()),
            }),
        }

        for (i, seg) in segs.iter().enumerate() {
            if seg.bare || !seg.kind.is_tool_call() {
                continue;
            }
            let serviced = segs.get(i + 1).is_some_and(|n| !n.bare && n.kind == TagKind::Result);
            if !serviced {
                violations.push(Violation {
                    code: ViolationCode::DanglingToolCall,
                    kind: Some(seg.kind),
                    detail: format!(
                        "{} call at byte {} has no {}",
                        tags.open(seg.kind),
                        seg.span.start,
                        tags.open(TagKind::Result)
                    ),
                });
            }
        }

        for (i, seg) in segs.iter().enumerate() {
            if seg.bare || seg.kind != TagKind::Result {
                continue;
            }
            let after_call = i > 0 && !segs[i - 1].bare && segs[i - 1].kind.is_tool_call();
            if !after_call {
                violations.push(Violation {
                    code: ViolationCode::TagOrderViolation,
                    kind: Some(TagKind::Result),
                    detail: format!(
                        "{} at byte {} does not follow a tool call",
                        tags.open(TagKind::Result),
                        seg.span.start
                    ),
                });
            }
        }
    }

    FormatReport {
        ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(text: &str) -> FormatReport {
        validate_format(text, FormatLimits { max_chars: 1000 }, &TagSet::default())
    }

    #[test]
    fn clean_chain_is_ok() {
        let r = check("<think>a</think>\n<search>q</search><result>r</result>\n<answer>\\boxed{1}</answer>");
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn dangling_call() {
        let r = check("<think>a</think><search>q</search><answer>\\boxed{1}</answer>");
        assert_eq!(r.first().unwrap().code, ViolationCode::DanglingToolCall);
    }

    #[test]
    fn model_written_result() {
        let r = check("<think>a</think><result>fake</result><answer>\\boxed{1}</answer>");
        assert_eq!(r.first().unwrap().code, ViolationCode::TagOrderViolation);
    }

    #[test]
    fn missing_box_and_missing_answer() {
        assert_eq!(
            check("<answer>42</answer>").first().unwrap().code,
            ViolationCode::MissingBoxed
        );
        assert_eq!(
            check("<think>a</think> The answer is \\boxed{A}.")
                .first()
                .unwrap()
                .code,
            ViolationCode::MissingAnswer
        );
    }

    #[test]
    fn over_length() {
        let long = format!("<think>{}</think><answer>\\boxed{{1}}</answer>", "x".repeat(2000));
        let r = check(&long);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.first().unwrap().code, ViolationCode::OverMaxLength);
    }

    #[test]
    fn crossing_reports_order_violation() {
        let r = check("<think>a<answer>b</think>\\boxed{1}</answer>");
        assert_eq!(r.first().unwrap().code, ViolationCode::TagOrderViolation);
    }

    #[test]
    fn deterministic() {
        let t = "<python>\n<python>x</python>";
        assert_eq!(check(t), check(t));
        assert_eq!(check(t).first().unwrap().kind, Some(TagKind::Python));
    }
}
