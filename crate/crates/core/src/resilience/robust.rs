use serde::{Deserialize, Serialize};

use super::{
    debug_code, refine_chain, rewind_offset, truncate_with_notice, DebugAttempt, ResilienceError, ResiliencePolicies,
};
use crate::llm::Llm;
use crate::rollout::{
    drive, CallContext, FeedbackDecision, Generator, GeneratorError, Hooks, Intervention, InterventionKind,
    OverflowDecision, Query, RolloutConfig, Trajectory,
};
use crate::toolkit::{Registry, ToolFeedback, ToolKind, ToolOutput, ToolRequest};

/// Models used by the debugger and the refiner. A missing model disables
/// the mechanism that needs it.
#[derive(Clone, Copy, Default)]
pub struct RepairModels<'a> {
    pub debugger: Option<&'a dyn Llm>,
    pub refiner: Option<&'a dyn Llm>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResilienceLog {
    pub interventions: Vec<Intervention>,
    pub debug_attempts: Vec<DebugAttempt>,
}

impl ResilienceLog {
    pub fn count(&self, kind: InterventionKind) -> usize {
        self.interventions.iter().filter(|i| i.kind == kind).count()
    }

    fn push(&mut self, kind: InterventionKind, detail: String) {
        tracing::debug!(?kind, %detail, "intervention");
        self.interventions.push(Intervention { kind, detail });
    }
}

struct RepairHooks<'a> {
    policies: &'a ResiliencePolicies,
    models: RepairModels<'a>,
    cfg: &'a RolloutConfig,
    backtraces: usize,
    refined: bool,
    log: ResilienceLog,
}

impl RepairHooks<'_> {
    fn try_debug(&mut self, ctx: &CallContext<'_>, fb: &ToolFeedback) -> Option<ToolFeedback> {
        let llm = self.models.debugger.filter(|_| self.policies.debug)?;
        let exec = |code: &str| {
            let out = (ctx.invoke)(&ToolRequest::python(code));
            ToolOutput {
                text: out.text,
                is_error: out.is_error,
            }
        };
        let result = debug_code(
            &ctx.request.payload,
            &fb.text,
            llm,
            &exec,
            self.policies.max_debug_retries,
            &self.policies.debugger_prompt,
        );
        match result {
            Ok(outcome) => {
                let n = outcome.attempts.len();
                self.log.debug_attempts.extend(outcome.attempts);
                self.log
                    .push(InterventionKind::Debug, format!("fixed after {n} attempt(s)"));
                Some(ToolFeedback {
                    text: outcome.output.text,
                    is_error: false,
                    cached: false,
                    latency_ms: fb.latency_ms,
                })
            }
            Err(ResilienceError::GaveUp { attempts }) => {
                let n = attempts.len();
                self.log.debug_attempts.extend(attempts);
                self.log
                    .push(InterventionKind::Debug, format!("gave up after {n} attempt(s)"));
                None
            }
            Err(_) => None,
        }
    }

    fn truncated(&mut self, text: &str) -> OverflowDecision {
        self.log.push(InterventionKind::Refine, "hard truncation".into());
        OverflowDecision::Finish(truncate_with_notice(text, self.cfg.max_chars, &self.cfg.tags))
    }
}

impl Hooks for RepairHooks<'_> {
    fn review_feedback(&mut self, ctx: &CallContext<'_>, fb: ToolFeedback) -> FeedbackDecision {
        let mut fb = fb;
        if ctx.request.kind == ToolKind::Python && fb.is_error {
            if let Some(fixed) = self.try_debug(ctx, &fb) {
                fb = fixed;
            }
        }
        let failed = fb.is_error || fb.text.trim().is_empty();
        if failed && self.policies.backtrace && self.backtraces < self.policies.backtrace_limit {
            self.backtraces += 1;
            let pos = rewind_offset(ctx.text, ctx.open_offset);
            // keep the newline itself; generation resumes right after it
            let resume = if ctx.text[pos..].starts_with('\n') {
                pos + 1
            } else {
                pos
            };
            self.log
                .push(InterventionKind::Backtrace, format!("rewound to byte {resume}"));
            return FeedbackDecision::Rewind(resume);
        }
        FeedbackDecision::Insert(fb)
    }

    fn on_overflow(&mut self, question: &str, text: &str) -> OverflowDecision {
        if !self.policies.refine {
            return OverflowDecision::Stop;
        }
        let Some(llm) = self.models.refiner.filter(|_| !self.refined) else {
            return self.truncated(text);
        };
        self.refined = true;
        match refine_chain(question, text, llm, &self.policies.refiner_prompt, &self.cfg.tags) {
            Ok(refined) if refined.chars().count() <= self.cfg.max_chars => {
                self.log.push(
                    InterventionKind::Refine,
                    format!("refined {} to {} chars", text.chars().count(), refined.chars().count()),
                );
                OverflowDecision::Replace(refined)
            }
            Ok(_) => self.truncated(text),
            Err(e) => {
                tracing::warn!(error = %e, "refiner failed");
                self.truncated(text)
            }
        }
    }
}

/// A rollout with the active repair mechanisms applied. With every policy
/// off this is exactly [`crate::rollout::run_rollout`].
pub fn robust_rollout(
    query: &Query,
    generator: &dyn Generator,
    registry: &Registry,
    cfg: &RolloutConfig,
    policies: &ResiliencePolicies,
    models: RepairModels<'_>,
) -> Result<(Trajectory, ResilienceLog), GeneratorError> {
    let mut hooks = RepairHooks {
        policies,
        models,
        cfg,
        backtraces: 0,
        refined: false,
        log: ResilienceLog::default(),
    };
    let mut traj = drive(query, generator, registry, cfg, cfg.seed, "", &mut hooks)?;
    traj.interventions = hooks.log.interventions.clone();
    Ok((traj, hooks.log))
}
