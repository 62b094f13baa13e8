//! The engine config file: one TOML document holding every knob. Secrets
//! never live here; API keys come from the environment.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatClient, ChatConfig, LlmError};
use crate::protocol::{ProtocolError, TagSet};
use crate::resilience::ResiliencePolicies;
use crate::reward::RewardConfig;
use crate::rl::{GrpoConfig, SchedulePlan};
use crate::rollout::{HttpGenerator, RolloutConfig};
use crate::synthesis::{HintConfig, NormalizationConfig, SynthesisConfig};
use crate::toolkit::{
    Bm25Index, Bm25Params, CodeInterpreterTool, ExecLimits, HttpFetcher, ProcessSandbox, Registry, SearchTool,
    ToolkitError, WebSearchClient, WebSearchConfig, DEFAULT_CACHE_CAPACITY, DEFAULT_MAX_FEEDBACK_CHARS,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Tags(#[from] ProtocolError),
    #[error(transparent)]
    Toolkit(#[from] ToolkitError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpoConfig {
    pub beta: f64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        Self { beta: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    /// Driver executable. Unset means no Python tool.
    pub program: Option<PathBuf>,
    pub args: Vec<String>,
    pub limits: ExecLimits,
    pub workers: usize,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            program: None,
            args: Vec::new(),
            limits: ExecLimits::default(),
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolsConfig {
    pub cache_capacity: usize,
    pub max_feedback_chars: usize,
    pub top_k: usize,
    /// Directory of `{"id","title","text"}` JSONL files for local search.
    pub local_index: Option<PathBuf>,
    /// Web search is enabled when the endpoint is non-empty.
    pub web: WebSearchConfig,
    pub browser: bool,
    pub browse_max_chars: usize,
    pub sandbox: SandboxConfig,
}

impl Default for ToolsConfig {
    fn default() -> Self {
        Self {
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            max_feedback_chars: DEFAULT_MAX_FEEDBACK_CHARS,
            top_k: 3,
            local_index: None,
            web: WebSearchConfig::default(),
            browser: false,
            browse_max_chars: 2000,
            sandbox: SandboxConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub tags: TagSet,
    pub rollout: RolloutConfig,
    pub reward: RewardConfig,
    pub normalization: NormalizationConfig,
    pub hint: HintConfig,
    pub synthesis: SynthesisConfig,
    pub resilience: ResiliencePolicies,
    pub grpo: GrpoConfig,
    pub dpo: DpoConfig,
    pub schedule: SchedulePlan,
    pub tools: ToolsConfig,
    /// Policy model endpoint. Also serves as debugger, refiner and judge.
    pub llm: ChatConfig,
    pub paths: PathsConfig,
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text)?;
        cfg.sync_tags();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Copy the top-level vocabulary into every sub-config that parses text.
    pub fn sync_tags(&mut self) {
        self.rollout.tags = self.tags.clone();
        self.reward.tags = self.tags.clone();
        self.synthesis.rollout.tags = self.tags.clone();
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tags.validate()?;
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.normalization.beta < 1 {
            return bad("normalization.beta must be at least 1");
        }
        if !(self.grpo.clip_eps > 0.0) || !(self.grpo.kl_beta >= 0.0) {
            return bad("grpo.clip_eps must be positive and grpo.kl_beta non-negative");
        }
        if !(self.dpo.beta > 0.0) {
            return bad("dpo.beta must be positive");
        }
        if self.rollout.chars_per_token == 0 {
            return bad("rollout.chars_per_token must be positive");
        }
        self.schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Tools described by the `tools` section. Search needs a local index
    /// or a web endpoint; Python needs a sandbox driver.
    pub fn build_registry(&self) -> Result<Registry, ConfigError> {
        let t = &self.tools;
        let mut registry = Registry::new(t.cache_capacity, t.max_feedback_chars);
        let local = match &t.local_index {
            Some(dir) => Some(Bm25Index::from_jsonl_dir(dir, Bm25Params::default())?),
            None => None,
        };
        let search = if t.web.endpoint.is_empty() {
            local.map(|idx| SearchTool::local(idx, t.top_k))
        } else {
            let mut tool = SearchTool::web(WebSearchClient::from_env(t.web.clone())?, t.top_k);
            if let Some(idx) = local {
                tool = tool.with_local(idx);
            }
            if t.browser {
                let fetcher = HttpFetcher::new(Duration::from_millis(t.web.timeout_ms))?;
                tool = tool.with_browser(Arc::new(fetcher), None, t.browse_max_chars);
            }
            Some(tool)
        };
        if let Some(tool) = search {
            registry.register(tool);
        }
        if let Some(program) = &t.sandbox.program {
            let sandbox = ProcessSandbox::new(program.clone(), t.sandbox.args.clone());
            registry.register(CodeInterpreterTool::new(
                Arc::new(sandbox),
                t.sandbox.limits,
                t.sandbox.workers,
            ));
        }
        Ok(registry)
    }

    /// Chat client for the configured endpoint, if any.
    pub fn chat_client(&self) -> Result<Option<ChatClient>, ConfigError> {
        if self.llm.endpoint.is_empty() {
            return Ok(None);
        }
        Ok(Some(ChatClient::from_env(self.llm.clone())?))
    }

    pub fn http_generator(&self, logprobs: bool) -> Result<Option<HttpGenerator>, ConfigError> {
        Ok(self
            .chat_client()?
            .map(|c| HttpGenerator::new(c, self.tags.clone(), logprobs)))
    }
}
