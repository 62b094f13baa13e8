use serde::{Deserialize, Serialize};

use crate::reward::RewardBreakdown;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub response: String,
    pub reward: RewardBreakdown,
}

/// Every sampled response for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub id: String,
    pub question: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub question: String,
    pub chosen: Candidate,
    pub rejected: Candidate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub pairs: Vec<PreferencePair>,
    /// Ids of queries without both a positive and a negative candidate.
    pub skipped: Vec<String>,
}

/// Positive means total reward of at least 1.
pub const POSITIVE_THRESHOLD: f64 = 1.0;

fn pick<'a>(cands: impl Iterator<Item = &'a Candidate>, better: impl Fn(f64, f64) -> bool) -> Option<&'a Candidate> {
    let mut best: Option<&Candidate> = None;
    for c in cands {
        best = match best {
            None => Some(c),
            Some(b) => {
                let (ct, bt) = (c.reward.total, b.reward.total);
                let shorter = c.response.chars().count() < b.response.chars().count();
                if better(ct, bt) || (ct == bt && shorter) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// One pair per query: the highest-scoring positive against the
/// lowest-scoring negative, shorter responses winning ties.
pub fn build_preference_pairs(groups: &[CandidateGroup]) -> PairReport {
    let mut report = PairReport::default();
    for g in groups {
        let chosen = pick(
            g.candidates.iter().filter(|c| c.reward.total >= POSITIVE_THRESHOLD),
            |a, b| a > b,
        );
        let rejected = pick(
            g.candidates.iter().filter(|c| c.reward.total < POSITIVE_THRESHOLD),
            |a, b| a < b,
        );
        match (chosen, rejected) {
            (Some(w), Some(l)) => report.pairs.push(PreferencePair {
                id: g.id.clone(),
                question: g.question.clone(),
                chosen: w.clone(),
                rejected: l.clone(),
            }),
            _ => report.skipped.push(g.id.clone()),
        }
    }
    report
}
