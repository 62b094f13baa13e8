use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{DifficultyCategory, DirectResult, RawSample, SynthesisError};
use crate::rollout::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftSource {
    /// A language-only trace.
    Text,
    /// A tool-integrated trajectory.
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub id: String,
    pub question: String,
    pub gold: String,
    pub response: String,
    pub source: SftSource,
    pub category: DifficultyCategory,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classification {
    pub categories: BTreeMap<String, DifficultyCategory>,
    pub d_text_sub: Vec<SftExample>,
    pub d_tool_sub: Vec<Trajectory>,
    pub d_sft: Vec<SftExample>,
    /// Questions only.
    pub d_rl: Vec<RawSample>,
}

/// Route every question by whether direct reasoning and tool-integrated
/// reasoning got it right. A question with no surviving tool-integrated
/// record counts as a tool-integrated failure.
pub fn classify_difficulty(
    questions: &[RawSample],
    v2_tool_stage: &[Trajectory],
    direct: &BTreeMap<String, DirectResult>,
) -> Result<Classification, SynthesisError> {
    let mut best_tool: BTreeMap<&str, &Trajectory> = BTreeMap::new();
    for t in v2_tool_stage {
        let entry = best_tool.entry(t.id.as_str()).or_insert(t);
        if t.chain.tool_calls().count() < entry.chain.tool_calls().count() {
            *entry = t;
        }
    }
    for id in best_tool.keys() {
        if !direct.contains_key(*id) {
            return Err(SynthesisError::MissingDirectVerdict(id.to_string()));
        }
    }

    let mut out = Classification::default();
    let mut seen = HashSet::new();
    for q in questions {
        if !seen.insert(q.id.as_str()) {
            continue;
        }
        let d = direct
            .get(&q.id)
            .ok_or_else(|| SynthesisError::MissingDirectVerdict(q.id.clone()))?;
        let tool = best_tool.get(q.id.as_str());
        let category = DifficultyCategory::from_verdicts(d.dr_correct, tool.is_some());
        out.categories.insert(q.id.clone(), category);
        match category {
            DifficultyCategory::Cat1_DRok_TIRok | DifficultyCategory::Cat2_DRok_TIRbad => {
                out.d_text_sub.push(SftExample {
                    id: q.id.clone(),
                    question: q.question.clone(),
                    gold: q.gold.clone(),
                    response: d.trace.clone(),
                    source: SftSource::Text,
                    category,
                });
            }
            DifficultyCategory::Cat3_DRbad_TIRok => {
                let mut t = (*tool.expect("tool record for a tool-correct question")).clone();
                t.category = Some(category);
                out.d_tool_sub.push(t);
            }
            DifficultyCategory::Cat4_DRbad_TIRbad => out.d_rl.push(q.clone()),
        }
    }
    out.d_sft = out.d_text_sub.clone();
    out.d_sft.extend(out.d_tool_sub.iter().map(|t| SftExample {
        id: t.id.clone(),
        question: t.question.clone(),
        gold: t.gold.clone().unwrap_or_default(),
        response: t.text.clone(),
        source: SftSource::Tool,
        category: DifficultyCategory::Cat3_DRbad_TIRok,
    }));
    Ok(out)
}
