use crate::llm::{Llm, LlmError};
use crate::prompts::{fill, JUDGE_PROMPT};

/// Decides whether a predicted answer matches the reference.
pub trait Judge: Send + Sync {
    fn judge(&self, pred: &str, gold: &str) -> Result<bool, LlmError>;
}

/// Judge backed by a chat model answering yes or no.
pub struct LlmJudge<L> {
    llm: L,
    prompt: String,
}

impl<L: Llm> LlmJudge<L> {
    pub fn new(llm: L) -> Self {
        Self {
            llm,
            prompt: JUDGE_PROMPT.to_string(),
        }
    }

    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt = prompt.into();
        self
    }
}

pub(crate) fn parse_verdict(reply: &str) -> Result<bool, LlmError> {
    let word: String = reply
        .trim()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(LlmError::BadResponse(format!("judge reply is not yes/no: {reply:?}"))),
    }
}

impl<L: Llm> Judge for LlmJudge<L> {
    fn judge(&self, pred: &str, gold: &str) -> Result<bool, LlmError> {
        let prompt = fill(&self.prompt, &[("pred", pred), ("gold", gold)]);
        parse_verdict(&self.llm.complete(&prompt)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedLlm;

    #[test]
    fn verdict_parsing() {
        assert_eq!(parse_verdict(" Yes."), Ok(true));
        assert_eq!(parse_verdict("no"), Ok(false));
        assert!(parse_verdict("maybe").is_err());
    }

    #[test]
    fn prompt_carries_both_answers() {
        let llm = ScriptedLlm::new(["yes"]);
        let judge = LlmJudge::new(&llm);
        assert!(judge.judge("1/2", "0.5").unwrap());
        let sent = &llm.prompts()[0];
        assert!(sent.contains("1/2") && sent.contains("0.5"));
    }
}
