use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::protocol::{parse_chain, Origin, TagSet};
use crate::rollout::Trajectory;
use crate::toolkit::{normalize_payload, ToolKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    /// Maximum tool calls per response.
    pub beta: usize,
    /// Drop repeated records (same id and text).
    pub dedup: bool,
    /// Rewrite alias tag literals to the canonical ones and require the
    /// result to parse.
    pub format_canon: bool,
    /// Alias literal to canonical literal, e.g. `"<code>"` to `"<python>"`.
    pub tag_aliases: BTreeMap<String, String>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            beta: 5,
            dedup: true,
            format_canon: true,
            tag_aliases: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    FrequencyExceeded,
    DuplicateToolCall,
    FormatViolation,
    DuplicateRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizeOutcome {
    pub kept: Vec<Trajectory>,
    pub rejections: Vec<Rejection>,
}

fn canonicalize(traj: &Trajectory, ncfg: &NormalizationConfig, tags: &TagSet) -> Result<Trajectory, String> {
    let mut text = traj.text.clone();
    for (alias, canonical) in &ncfg.tag_aliases {
        text = text.replace(alias.as_str(), canonical);
    }
    let mut chain = parse_chain(&text, tags).map_err(|e| e.to_string())?;
    if text == traj.text {
        return Ok(traj.clone());
    }
    for seg in &mut chain.segments {
        seg.origin = if seg.bare {
            Origin::ModelGenerated
        } else {
            Origin::for_kind(seg.kind)
        };
    }
    let chain = chain.with_query(traj.chain.query.clone(), traj.chain.instruction.clone());
    let mut out = Trajectory::from_chain(chain, tags);
    out.id = traj.id.clone();
    out.question = traj.question.clone();
    out.gold = traj.gold.clone();
    out.tool_calls = traj.tool_calls.clone();
    out.stop_reason = traj.stop_reason;
    out.interventions = traj.interventions.clone();
    out.stage = traj.stage.clone();
    out.category = traj.category;
    Ok(out)
}

fn check(traj: &Trajectory, ncfg: &NormalizationConfig) -> Result<(), (RejectReason, String)> {
    let calls: Vec<_> = traj.chain.tool_calls().collect();
    if calls.len() > ncfg.beta {
        return Err((
            RejectReason::FrequencyExceeded,
            format!("{} tool calls exceed {}", calls.len(), ncfg.beta),
        ));
    }
    let mut seen = HashSet::new();
    for seg in calls {
        let kind = ToolKind::from_tag(seg.kind).expect("tool-call segment");
        let key = (kind, normalize_payload(kind, &seg.text));
        if !seen.insert(key) {
            return Err((
                RejectReason::DuplicateToolCall,
                format!("repeated {kind} call: {}", normalize_payload(kind, &seg.text)),
            ));
        }
    }
    Ok(())
}

/// Quality filter: canonical tags, at most `beta` tool calls and no
/// repeated tool call within one response. Applying it twice changes
/// nothing.
pub fn normalize_quality(stage: &[Trajectory], ncfg: &NormalizationConfig, tags: &TagSet) -> NormalizeOutcome {
    let mut out = NormalizeOutcome::default();
    let mut seen_records = HashSet::new();
    for traj in stage {
        let reject = |reason, detail| Rejection {
            id: traj.id.clone(),
            reason,
            detail,
        };
        if ncfg.dedup && !seen_records.insert((traj.id.clone(), traj.text.clone())) {
            out.rejections
                .push(reject(RejectReason::DuplicateRecord, "repeated record".into()));
            continue;
        }
        let canon = if ncfg.format_canon {
            match canonicalize(traj, ncfg, tags) {
                Ok(t) => t,
                Err(e) => {
                    out.rejections.push(reject(RejectReason::FormatViolation, e));
                    continue;
                }
            }
        } else {
            traj.clone()
        };
        match check(&canon, ncfg) {
            Ok(()) => out.kept.push(canon),
            Err((reason, detail)) => out.rejections.push(reject(reason, detail)),
        }
    }
    out
}
