use serde::{Deserialize, Serialize};

use super::PreferencePair;
use crate::rollout::Trajectory;

/// One supervised example: prompt in, full response out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub input: String,
    pub output: String,
}

pub fn sft_record(traj: &Trajectory, instruction: &str) -> SftRecord {
    let input = if instruction.is_empty() {
        traj.question.clone()
    } else {
        format!("{instruction}\n\n{}", traj.question)
    };
    SftRecord {
        input,
        output: traj.text.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoSide {
    pub response: String,
    pub reward: f64,
    pub principle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoRecord {
    pub id: String,
    pub question: String,
    pub chosen: DpoSide,
    pub rejected: DpoSide,
}

pub fn dpo_record(pair: &PreferencePair) -> DpoRecord {
    let side = |c: &super::Candidate| DpoSide {
        response: c.response.clone(),
        reward: c.reward.total,
        principle: c.reward.principle.clone(),
    };
    DpoRecord {
        id: pair.id.clone(),
        question: pair.question.clone(),
        chosen: side(&pair.chosen),
        rejected: side(&pair.rejected),
    }
}
