use serde::{Deserialize, Serialize};

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    pub clip_eps: f64,
    pub kl_beta: f64,
    /// Guard added to the group standard deviation.
    pub adv_eps: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            clip_eps: 0.2,
            kl_beta: 0.0,
            adv_eps: 1e-8,
        }
    }
}

/// `(r - mean) / (std + adv_eps)` with the population standard deviation.
pub fn group_advantages(rewards: &[f64], adv_eps: f64) -> Vec<f64> {
    let n = rewards.len();
    if n == 0 {
        return Vec::new();
    }
    let first = rewards[0];
    if rewards.iter().all(|&r| r == first) {
        return vec![0.0; n];
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
    let denom = var.sqrt() + adv_eps;
    rewards.iter().map(|r| (r - mean) / denom).collect()
}

/// Per-token log-probabilities of one response under the current, sampling
/// and reference policies. `mask[t]` marks engine-inserted tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobSet {
    pub new: Vec<f64>,
    pub old: Vec<f64>,
    pub reference: Vec<f64>,
    pub mask: Vec<bool>,
}

impl TokenLogprobSet {
    fn check(&self, member: usize) -> Result<(), RlError> {
        let n = self.mask.len();
        if self.new.len() != n || self.old.len() != n || self.reference.len() != n {
            return Err(RlError::AlignmentError(format!(
                "member {member}: new {}, old {}, ref {}, mask {n}",
                self.new.len(),
                self.old.len(),
                self.reference.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoValue {
    pub value: f64,
    /// Per member, per token; masked positions hold 0.
    pub per_token_terms: Vec<Vec<f64>>,
    /// Share of unmasked tokens where the clipped branch is taken.
    pub clip_fraction: f64,
}

/// The clipped surrogate objective, to be maximized. Masked tokens are left
/// out of every sum and of each member's length.
pub fn grpo_objective(members: &[TokenLogprobSet], advantages: &[f64], cfg: &GrpoConfig) -> Result<GrpoValue, RlError> {
    if members.len() != advantages.len() {
        return Err(RlError::AlignmentError(format!(
            "{} members but {} advantages",
            members.len(),
            advantages.len()
        )));
    }
    let (lo, hi) = (1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    let mut per_token_terms = Vec::with_capacity(members.len());
    let mut total = 0.0;
    let mut clipped = 0usize;
    let mut counted = 0usize;
    for (i, (m, &adv)) in members.iter().zip(advantages).enumerate() {
        m.check(i)?;
        let mut terms = vec![0.0; m.mask.len()];
        let mut sum = 0.0;
        let mut len = 0usize;
        #[allow(clippy::needless_range_loop)]
        for t in 0..m.mask.len() {
            if m.mask[t] {
                continue;
            }
            let ratio = (m.new[t] - m.old[t]).exp();
            let unclipped = ratio * adv;
            let clipped_term = ratio.clamp(lo, hi) * adv;
            let surrogate = unclipped.min(clipped_term);
            if clipped_term < unclipped {
                clipped += 1;
            }
            let mut term = surrogate;
            if cfg.kl_beta > 0.0 {
                let d = m.reference[t] - m.new[t];
                term -= cfg.kl_beta * (d.exp() - d - 1.0);
            }
            terms[t] = term;
            sum += term;
            len += 1;
        }
        counted += len;
        if len > 0 {
            total += sum / len as f64;
        }
        per_token_terms.push(terms);
    }
    let g = members.len().max(1) as f64;
    Ok(GrpoValue {
        value: total / g,
        per_token_terms,
        clip_fraction: if counted == 0 {
            0.0
        } else {
            clipped as f64 / counted as f64
        },
    })
}

/// Summed log-probabilities of a chosen (w) and rejected (l) response under
/// the policy and the frozen reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLogprobs {
    pub policy_w: f64,
    pub ref_w: f64,
    pub policy_l: f64,
    pub ref_l: f64,
}

/// `-ln sigmoid(beta * margin)`, computed as a stable softplus.
pub fn dpo_loss(lp: &PairLogprobs, beta: f64) -> f64 {
    let margin = (lp.policy_w - lp.ref_w) - (lp.policy_l - lp.ref_l);
    let x = -beta * margin;
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
