//! Bundled data: the self-critic reward cases and a small offline corpus
//! with scripted model transcripts, a scripted sandbox and a search index.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eval::EvalExample;
use crate::jsonl::{parse_jsonl, write_jsonl, JsonlError};
use crate::protocol::TagSet;
use crate::rollout::{ScriptedGenerator, Trajectory, TrajectoryRecord, Transcript};
use crate::synthesis::{DifficultyCategory, RawSample, RejectReason};
use crate::toolkit::{
    Bm25Index, Bm25Params, CodeInterpreterTool, Document, ExecLimits, ExecResult, Registry, ScriptedSandbox, SearchTool,
};

const CASES: &str = include_str!("../data/reward_cases/cases.jsonl");
const CASE_GOLD: &str = include_str!("../data/reward_cases/gold.jsonl");

const QUESTIONS: &str = include_str!("../data/toy/questions.jsonl");
const SCRIPTS: &str = include_str!("../data/toy/scripts.jsonl");
const SANDBOX: &str = include_str!("../data/toy/sandbox.jsonl");
const DOCS: &str = include_str!("../data/toy/docs/corpus.jsonl");
const EVAL_MATH: &str = include_str!("../data/toy/eval_math.jsonl");
const EVAL_QA: &str = include_str!("../data/toy/eval_qa.jsonl");
const ORACLE: &str = include_str!("../data/toy/oracle.json");

/// Reward totals of the eight self-critic cases, in file order.
pub const CASE_TOTALS: [f64; 8] = [1.0, 0.0, 1.0, -1.0, 1.0, -1.0, 1.1, -1.0];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub gold: String,
}

fn bundled<T: serde::de::DeserializeOwned>(text: &str, name: &str) -> Vec<T> {
    parse_jsonl(text, name).unwrap_or_else(|e| panic!("bundled data is malformed: {e}"))
}

pub fn case_records() -> Vec<TrajectoryRecord> {
    bundled(CASES, "cases.jsonl")
}

pub fn case_gold() -> Vec<GoldRecord> {
    bundled(CASE_GOLD, "gold.jsonl")
}

/// The self-critic cases as trajectories paired with their gold answers.
pub fn reward_cases(tags: &TagSet) -> Vec<(Trajectory, String)> {
    case_records()
        .into_iter()
        .zip(case_gold())
        .map(|(rec, gold)| (Trajectory::from_record(rec, tags), gold.gold))
        .collect()
}

/// Write `cases.jsonl` and `gold.jsonl` into `dir`.
pub fn write_reward_cases(dir: &Path) -> Result<(), JsonlError> {
    write_jsonl(&dir.join("cases.jsonl"), case_records())?;
    write_jsonl(&dir.join("gold.jsonl"), case_gold())
}

/// One scripted model response for a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptLine {
    pub question: String,
    #[serde(flatten)]
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxEntry {
    pub code: String,
    pub stdout: String,
}

/// Hand-labeled expectations for the toy corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyOracle {
    pub categories: std::collections::BTreeMap<String, DifficultyCategory>,
    pub rejections: Vec<OracleRejection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRejection {
    pub id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub questions: Vec<RawSample>,
    pub scripts: Vec<ScriptLine>,
    pub sandbox: Vec<SandboxEntry>,
    pub docs: Vec<Document>,
    pub eval_math: Vec<EvalExample>,
    pub eval_qa: Vec<EvalExample>,
    pub oracle: ToyOracle,
}

impl ToyData {
    pub fn load() -> Self {
        Self {
            questions: bundled(QUESTIONS, "questions.jsonl"),
            scripts: bundled(SCRIPTS, "scripts.jsonl"),
            sandbox: bundled(SANDBOX, "sandbox.jsonl"),
            docs: bundled(DOCS, "corpus.jsonl"),
            eval_math: bundled(EVAL_MATH, "eval_math.jsonl"),
            eval_qa: bundled(EVAL_QA, "eval_qa.jsonl"),
            oracle: serde_json::from_str(ORACLE).expect("bundled oracle is valid"),
        }
    }

    pub fn generator(&self, tags: &TagSet) -> ScriptedGenerator {
        let mut g = ScriptedGenerator::new(tags.clone());
        for s in &self.scripts {
            g.add(s.question.clone(), s.transcript.clone());
        }
        g
    }

    pub fn sandbox(&self) -> ScriptedSandbox {
        let mut sb = ScriptedSandbox::new();
        for e in &self.sandbox {
            sb.insert(&e.code, ExecResult::success(e.stdout.clone()));
        }
        sb
    }

    pub fn index(&self) -> Bm25Index {
        Bm25Index::build(self.docs.clone(), Bm25Params::default())
    }

    /// Python backed by the scripted sandbox and search over the bundled
    /// documents.
    pub fn registry(&self, cache_capacity: usize, max_feedback_chars: usize) -> Registry {
        Registry::new(cache_capacity, max_feedback_chars)
            .with(CodeInterpreterTool::new(
                Arc::new(self.sandbox()),
                ExecLimits::default(),
                4,
            ))
            .with(SearchTool::local(self.index(), 3))
    }

    /// Write every file under `dir` using the bundled layout.
    pub fn write_to(&self, dir: &Path) -> Result<(), JsonlError> {
        write_jsonl(&dir.join("questions.jsonl"), &self.questions)?;
        write_jsonl(&dir.join("scripts.jsonl"), &self.scripts)?;
        write_jsonl(&dir.join("sandbox.jsonl"), &self.sandbox)?;
        write_jsonl(&dir.join("docs").join("corpus.jsonl"), &self.docs)?;
        write_jsonl(&dir.join("eval_math.jsonl"), &self.eval_math)?;
        write_jsonl(&dir.join("eval_qa.jsonl"), &self.eval_qa)?;
        let path = dir.join("oracle.json");
        let text = serde_json::to_string_pretty(&self.oracle).expect("serializable oracle");
        std::fs::write(&path, text + "\n").map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
