use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_preference_pairs, group_advantages, Candidate, CandidateGroup, GrpoConfig, PreferencePair, RlError};
use crate::reward::RewardBreakdown;
use crate::rollout::{run_group, Generator, GroupRollout, Query, RolloutConfig, Trajectory};
use crate::toolkit::Registry;

/// `cycles` repetitions of `grpo_steps_per_cycle` policy-gradient steps
/// followed by one self-critic preference step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulePlan {
    pub cycles: usize,
    pub grpo_steps_per_cycle: usize,
    /// Queries sampled for each self-critic phase.
    pub critic_sample_count: usize,
    /// Responses sampled per self-critic query.
    pub candidates_per_query: usize,
}

impl Default for SchedulePlan {
    fn default() -> Self {
        Self {
            cycles: 1,
            grpo_steps_per_cycle: 1,
            critic_sample_count: 8,
            candidates_per_query: 8,
        }
    }
}

impl SchedulePlan {
    pub fn validate(&self) -> Result<(), RlError> {
        if self.cycles == 0 || self.critic_sample_count == 0 || self.candidates_per_query == 0 {
            return Err(RlError::InvalidPlan(
                "cycles, critic_sample_count and candidates_per_query must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The training side. Groups arrive with rewards and advantages filled in;
/// the trainer owns optimizers, the reference snapshot for preference
/// steps and the sign convention of the objective.
pub trait Trainer {
    fn grpo_step(&mut self, batch: &[GroupRollout]) -> Result<(), RlError>;
    fn dpo_step(&mut self, pairs: &[PreferencePair]) -> Result<(), RlError>;
}

/// Draws rollouts from the current policy.
pub trait RolloutSampler {
    fn sample_groups(&mut self, step: usize) -> Result<Vec<GroupRollout>, RlError>;
    /// `k` queries with `n` responses each.
    fn sample_candidates(&mut self, cycle: usize, k: usize, n: usize) -> Result<Vec<GroupRollout>, RlError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TrainerCall {
    Grpo { cycle: usize, step: usize, groups: usize },
    Dpo { cycle: usize, pairs: usize },
}

impl TrainerCall {
    pub fn name(&self) -> &'static str {
        match self {
            TrainerCall::Grpo { .. } => "grpo",
            TrainerCall::Dpo { .. } => "dpo",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub calls: Vec<TrainerCall>,
    /// Mean reward of each policy-gradient step.
    pub grpo_reward_means: Vec<f64>,
    /// Pairs built in each self-critic phase.
    pub pair_counts: Vec<usize>,
    /// Queries skipped for lack of a positive or negative, per phase.
    pub skipped_queries: Vec<usize>,
    /// Set when a trainer or sampler error stopped the schedule early.
    pub aborted: Option<String>,
}

impl ScheduleReport {
    pub fn sequence(&self) -> Vec<&'static str> {
        self.calls.iter().map(TrainerCall::name).collect()
    }
}

/// Trainer that only records what it was asked to do.
#[derive(Debug, Clone, Default)]
pub struct RecordingTrainer {
    pub calls: Vec<TrainerCall>,
    pub grpo_batches: Vec<Vec<GroupRollout>>,
    pub dpo_batches: Vec<Vec<PreferencePair>>,
    /// Fail on the call with this index.
    pub fail_at: Option<usize>,
    cycle: usize,
    step: usize,
}

impl RecordingTrainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn failing_at(index: usize) -> Self {
        Self {
            fail_at: Some(index),
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), RlError> {
        if self.fail_at == Some(self.calls.len()) {
            return Err(RlError::Trainer(format!(
                "injected failure at call {}",
                self.calls.len()
            )));
        }
        Ok(())
    }
}

impl Trainer for RecordingTrainer {
    fn grpo_step(&mut self, batch: &[GroupRollout]) -> Result<(), RlError> {
        self.check()?;
        self.calls.push(TrainerCall::Grpo {
            cycle: self.cycle,
            step: self.step,
            groups: batch.len(),
        });
        self.step += 1;
        self.grpo_batches.push(batch.to_vec());
        Ok(())
    }

    fn dpo_step(&mut self, pairs: &[PreferencePair]) -> Result<(), RlError> {
        self.check()?;
        self.calls.push(TrainerCall::Dpo {
            cycle: self.cycle,
            pairs: pairs.len(),
        });
        self.cycle += 1;
        self.step = 0;
        self.dpo_batches.push(pairs.to_vec());
        Ok(())
    }
}

pub type RewardFn<'a> = dyn Fn(&Query, &Trajectory) -> RewardBreakdown + 'a;

fn score(group: &mut GroupRollout, reward_fn: &RewardFn<'_>) -> Vec<RewardBreakdown> {
    let breakdowns: Vec<RewardBreakdown> = group.members.iter().map(|m| reward_fn(&group.query, m)).collect();
    group.rewards = breakdowns.iter().map(|b| b.total).collect();
    breakdowns
}

/// Run the plan: for each cycle, the policy-gradient steps and then one
/// self-critic phase. Errors end the run early; the report says where.
pub fn run_schedule(
    trainer: &mut dyn Trainer,
    sampler: &mut dyn RolloutSampler,
    reward_fn: &RewardFn<'_>,
    plan: &SchedulePlan,
    grpo: &GrpoConfig,
) -> ScheduleReport {
    let mut report = ScheduleReport::default();
    if let Err(e) = plan.validate() {
        report.aborted = Some(e.to_string());
        return report;
    }
    let mut global_step = 0;
    for cycle in 0..plan.cycles {
        for step in 0..plan.grpo_steps_per_cycle {
            let result = sampler.sample_groups(global_step).and_then(|mut groups| {
                let mut sum = 0.0;
                let mut n = 0usize;
                for g in &mut groups {
                    score(g, reward_fn);
                    g.advantages = group_advantages(&g.rewards, grpo.adv_eps);
                    sum += g.rewards.iter().sum::<f64>();
                    n += g.rewards.len();
                }
                trainer.grpo_step(&groups)?;
                Ok((groups.len(), if n == 0 { 0.0 } else { sum / n as f64 }))
            });
            global_step += 1;
            match result {
                Ok((groups, mean)) => {
                    report.calls.push(TrainerCall::Grpo { cycle, step, groups });
                    report.grpo_reward_means.push(mean);
                }
                Err(e) => {
                    report.aborted = Some(e.to_string());
                    return report;
                }
            }
        }

        let result = sampler
            .sample_candidates(cycle, plan.critic_sample_count, plan.candidates_per_query)
            .and_then(|groups| {
                let candidate_groups: Vec<CandidateGroup> = groups
                    .into_iter()
                    .map(|mut g| {
                        let breakdowns = score(&mut g, reward_fn);
                        CandidateGroup {
                            id: g.query.id.clone(),
                            question: g.query.question.clone(),
                            candidates: g
                                .members
                                .iter()
                                .zip(breakdowns)
                                .map(|(m, reward)| Candidate {
                                    response: m.text.clone(),
                                    reward,
                                })
                                .collect(),
                        }
                    })
                    .collect();
                let pairs = build_preference_pairs(&candidate_groups);
                trainer.dpo_step(&pairs.pairs)?;
                Ok(pairs)
            });
        match result {
            Ok(pairs) => {
                report.calls.push(TrainerCall::Dpo {
                    cycle,
                    pairs: pairs.pairs.len(),
                });
                report.pair_counts.push(pairs.pairs.len());
                report.skipped_queries.push(pairs.skipped.len());
            }
            Err(e) => {
                report.aborted = Some(e.to_string());
                return report;
            }
        }
    }
    report
}

/// Sampler that runs rollouts with a generator over a fixed question pool.
pub struct GeneratorSampler<'a> {
    pub queries: Vec<Query>,
    pub generator: &'a dyn Generator,
    pub registry: &'a Registry,
    pub cfg: RolloutConfig,
    /// Queries per policy-gradient step.
    pub batch_size: usize,
    pub seed: u64,
}

impl GeneratorSampler<'_> {
    fn group(&self, query: &Query, seed: u64, size: usize) -> GroupRollout {
        let cfg = RolloutConfig {
            seed,
            group_size: size,
            ..self.cfg.clone()
        };
        run_group(query, self.generator, self.registry, &cfg)
    }
}

impl RolloutSampler for GeneratorSampler<'_> {
    fn sample_groups(&mut self, step: usize) -> Result<Vec<GroupRollout>, RlError> {
        if self.queries.is_empty() {
            return Err(RlError::Sampler("no queries".into()));
        }
        let n = self.queries.len();
        Ok((0..self.batch_size.max(1))
            .map(|j| {
                let q = &self.queries[(step * self.batch_size + j) % n];
                self.group(q, self.seed.wrapping_add((step * 1000) as u64), self.cfg.group_size)
            })
            .collect())
    }

    fn sample_candidates(&mut self, cycle: usize, k: usize, n: usize) -> Result<Vec<GroupRollout>, RlError> {
        if self.queries.is_empty() {
            return Err(RlError::Sampler("no queries".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (cycle as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut order: Vec<usize> = (0..self.queries.len()).collect();
        order.shuffle(&mut rng);
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| self.group(&self.queries[i], self.seed.wrapping_add(cycle as u64), n))
            .collect())
    }
}
