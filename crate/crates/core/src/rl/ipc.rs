use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::Serialize;
use serde_json::{json, Value};

use super::{dpo_record, DpoRecord, PreferencePair, RlError, Trainer};
use crate::rollout::{GroupRollout, MaskedLogprob};

/// Trainer living in another process, driven by one JSON object per line
/// on its stdin. Each request gets one reply line: `{"ok": true}` or
/// `{"ok": false, "error": "..."}`.
pub struct IpcTrainer {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

#[derive(Serialize)]
struct MemberMsg<'a> {
    id: &'a str,
    text: &'a str,
    mask: Vec<(usize, usize)>,
    reward: f64,
    advantage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprobs: Option<&'a [MaskedLogprob]>,
}

#[derive(Serialize)]
struct GroupMsg<'a> {
    query_id: &'a str,
    question: &'a str,
    members: Vec<MemberMsg<'a>>,
}

impl IpcTrainer {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, RlError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RlError::Trainer(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self { child, stdin, stdout })
    }

    fn call(&mut self, msg: &Value) -> Result<Value, RlError> {
        let io = |e: std::io::Error| RlError::Trainer(format!("trainer pipe: {e}"));
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| RlError::Trainer("trainer closed".into()))?;
        writeln!(stdin, "{msg}").map_err(io)?;
        stdin.flush().map_err(io)?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line).map_err(io)? == 0 {
            return Err(RlError::Trainer("trainer exited without replying".into()));
        }
        let reply: Value =
            serde_json::from_str(line.trim()).map_err(|e| RlError::Trainer(format!("bad reply {line:?}: {e}")))?;
        if reply.get("ok").and_then(Value::as_bool) == Some(true) {
            Ok(reply)
        } else {
            let err = reply
                .get("error")
                .and_then(Value::as_str)
                .unwrap_or("unspecified error");
            Err(RlError::Trainer(err.to_string()))
        }
    }
}

impl Trainer for IpcTrainer {
    fn grpo_step(&mut self, batch: &[GroupRollout]) -> Result<(), RlError> {
        let groups: Vec<GroupMsg<'_>> = batch
            .iter()
            .map(|g| GroupMsg {
                query_id: &g.query.id,
                question: &g.query.question,
                members: g
                    .members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| MemberMsg {
                        id: &m.id,
                        text: &m.text,
                        mask: m.mask.iter().map(|s| (s.start, s.end)).collect(),
                        reward: g.rewards.get(i).copied().unwrap_or(0.0),
                        advantage: g.advantages.get(i).copied().unwrap_or(0.0),
                        logprobs: m.logprobs.as_deref(),
                    })
                    .collect(),
            })
            .collect();
        self.call(&json!({"op": "grpo_step", "groups": groups})).map(drop)
    }

    fn dpo_step(&mut self, pairs: &[PreferencePair]) -> Result<(), RlError> {
        let records: Vec<DpoRecord> = pairs.iter().map(dpo_record).collect();
        self.call(&json!({"op": "dpo_step", "pairs": records})).map(drop)
    }
}

impl Drop for IpcTrainer {
    fn drop(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", json!({"op": "shutdown"}));
        }
        let _ = self.child.wait();
    }
}
