use serde::{Deserialize, Serialize};

use super::ResilienceError;
use crate::llm::Llm;
use crate::prompts::fill;
use crate::toolkit::ToolOutput;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebugAttempt {
    pub original_code: String,
    pub error_message: String,
    pub revised_code: String,
    /// 1-based.
    pub attempt_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebugOutcome {
    pub fixed_code: String,
    pub output: ToolOutput,
    pub attempts: Vec<DebugAttempt>,
}

/// Models often wrap code in a markdown fence despite being told not to.
pub fn strip_code_fences(reply: &str) -> String {
    let trimmed = reply.trim();
    let Some(start) = trimmed.find("```") else {
        return trimmed.to_string();
    };
    let after = &trimmed[start + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let body = body.find("```").map_or(body, |end| &body[..end]);
    body.trim_end().to_string()
}

/// Ask `llm` to repair `code` given its `error`, run each revision with
/// `exec`, and return the first that runs cleanly. Each failed attempt
/// feeds its own error into the next.
pub fn debug_code(
    code: &str,
    error: &str,
    llm: &dyn Llm,
    exec: &dyn Fn(&str) -> ToolOutput,
    max_retries: usize,
    prompt: &str,
) -> Result<DebugOutcome, ResilienceError> {
    let mut attempts = Vec::new();
    let mut current_code = code.to_string();
    let mut current_error = error.to_string();
    for attempt_index in 1..=max_retries {
        let reply = match llm.complete(&fill(prompt, &[("code", &current_code), ("error", &current_error)])) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(error = %e, "debugger model failed");
                break;
            }
        };
        let revised = strip_code_fences(&reply);
        attempts.push(DebugAttempt {
            original_code: current_code.clone(),
            error_message: current_error.clone(),
            revised_code: revised.clone(),
            attempt_index,
        });
        let output = exec(&revised);
        if !output.is_error {
            return Ok(DebugOutcome {
                fixed_code: revised,
                output,
                attempts,
            });
        }
        current_code = revised;
        current_error = output.text;
    }
    Err(ResilienceError::GaveUp { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fences_are_removed() {
        assert_eq!(strip_code_fences("```python\nprint(1)\n```"), "print(1)");
        assert_eq!(strip_code_fences("  print(2)\n"), "print(2)");
        assert_eq!(strip_code_fences("Here:\n```\nx = 1\ny = 2\n```\nDone"), "x = 1\ny = 2");
    }
}
