use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{normalize_payload, Tool, ToolKind, ToolOutput, ToolRequest, ToolkitError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResult {
    pub stdout: String,
    pub stderr: String,
    pub exit_ok: bool,
    pub timed_out: bool,
    #[serde(default)]
    pub wall_ms: u64,
}

impl ExecResult {
    pub fn success(stdout: impl Into<String>) -> Self {
        Self {
            stdout: stdout.into(),
            stderr: String::new(),
            exit_ok: true,
            timed_out: false,
            wall_ms: 0,
        }
    }

    pub fn failure(stderr: impl Into<String>) -> Self {
        Self {
            stdout: String::new(),
            stderr: stderr.into(),
            exit_ok: false,
            timed_out: false,
            wall_ms: 0,
        }
    }

    pub fn timeout(timeout_s: u64) -> Self {
        Self {
            stdout: String::new(),
            stderr: format!("TimeoutError: execution exceeded {timeout_s} s"),
            exit_ok: false,
            timed_out: true,
            wall_ms: timeout_s * 1000,
        }
    }

    /// Text the model sees in its result block.
    pub fn feedback(&self) -> ToolOutput {
        if self.exit_ok {
            return ToolOutput::ok(self.stdout.trim_end());
        }
        let mut parts = Vec::new();
        if !self.stdout.trim().is_empty() {
            parts.push(self.stdout.trim_end());
        }
        if !self.stderr.trim().is_empty() {
            parts.push(self.stderr.trim_end());
        }
        ToolOutput::error(parts.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecLimits {
    pub timeout_s: u64,
    pub mem_mb: u64,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self {
            timeout_s: 5,
            mem_mb: 512,
        }
    }
}

pub trait Sandbox: Send + Sync {
    fn run(&self, code: &str, limits: ExecLimits) -> Result<ExecResult, ToolkitError>;
}

/// Run `code` and enforce that a timed-out run is never reported as ok.
pub fn execute_code(sandbox: &dyn Sandbox, code: &str, limits: ExecLimits) -> Result<ExecResult, ToolkitError> {
    let mut res = sandbox.run(code, limits)?;
    if res.timed_out {
        res.exit_ok = false;
    }
    Ok(res)
}

/// Spawns the external driver once per execution: code on stdin,
/// `--timeout-s N --mem-mb M` flags, and a JSON result record as the last
/// line of stdout.
#[derive(Debug, Clone)]
pub struct ProcessSandbox {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub grace: Duration,
}

impl ProcessSandbox {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            grace: Duration::from_secs(2),
        }
    }
}

fn parse_driver_line(stdout: &str) -> Option<ExecResult> {
    let last = stdout.lines().rev().find(|l| !l.trim().is_empty())?;
    serde_json::from_str(last.trim()).ok()
}

impl Sandbox for ProcessSandbox {
    fn run(&self, code: &str, limits: ExecLimits) -> Result<ExecResult, ToolkitError> {
        let unavailable = |m: String| ToolkitError::SandboxUnavailable(m);
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg("--timeout-s")
            .arg(limits.timeout_s.to_string())
            .arg("--mem-mb")
            .arg(limits.mem_mb.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| unavailable(format!("cannot start {}: {e}", self.program.display())))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload = code.to_string();
        let writer = std::thread::spawn(move || {
            // a driver that exits early closes the pipe; that is not our error
            let _ = stdin.write_all(payload.as_bytes());
        });
        let mut out_pipe = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = out_pipe.read_to_string(&mut buf);
            buf
        });
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = err_pipe.read_to_string(&mut buf);
            buf
        });

        let deadline = Duration::from_secs(limits.timeout_s) + self.grace;
        let status = child.wait_timeout(deadline).map_err(|e| unavailable(e.to_string()))?;
        let Some(status) = status else {
            let _ = child.kill();
            let _ = child.wait();
            let _ = writer.join();
            let _ = reader.join();
            let _ = err_reader.join();
            let mut res = ExecResult::timeout(limits.timeout_s);
            res.wall_ms = started.elapsed().as_millis() as u64;
            return Ok(res);
        };
        let _ = writer.join();
        let stdout = reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(unavailable(format!("driver exited with {status}: {}", stderr.trim())));
        }
        let mut res =
            parse_driver_line(&stdout).ok_or_else(|| unavailable("driver produced no result record".into()))?;
        if res.timed_out {
            res.exit_ok = false;
        }
        Ok(res)
    }
}

/// Answers from a fixed table keyed by normalized code. Unknown code fails
/// with a `NameError`-style message.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSandbox {
    table: HashMap<String, ExecResult>,
}

impl ScriptedSandbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, code: &str, result: ExecResult) -> Self {
        self.insert(code, result);
        self
    }

    pub fn insert(&mut self, code: &str, result: ExecResult) {
        self.table.insert(normalize_payload(ToolKind::Python, code), result);
    }
}

impl Sandbox for ScriptedSandbox {
    fn run(&self, code: &str, _limits: ExecLimits) -> Result<ExecResult, ToolkitError> {
        Ok(self
            .table
            .get(&normalize_payload(ToolKind::Python, code))
            .cloned()
            .unwrap_or_else(|| ExecResult::failure("NameError: no scripted result for this code")))
    }
}

struct Pool {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Pool);

impl Pool {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// The Python tool: runs request payloads in a sandbox, at most `workers`
/// at a time.
pub struct CodeInterpreterTool {
    sandbox: Arc<dyn Sandbox>,
    limits: ExecLimits,
    pool: Pool,
}

impl CodeInterpreterTool {
    pub fn new(sandbox: Arc<dyn Sandbox>, limits: ExecLimits, workers: usize) -> Self {
        Self {
            sandbox,
            limits,
            pool: Pool {
                free: Mutex::new(workers.max(1)),
                cv: Condvar::new(),
            },
        }
    }

    pub fn run(&self, code: &str) -> Result<ExecResult, ToolkitError> {
        let _permit = self.pool.acquire();
        execute_code(self.sandbox.as_ref(), code, self.limits)
    }
}

impl Tool for CodeInterpreterTool {
    fn kind(&self) -> ToolKind {
        ToolKind::Python
    }

    fn execute(&self, request: &ToolRequest) -> ToolOutput {
        match self.run(&request.payload) {
            Ok(res) => res.feedback(),
            Err(e) => ToolOutput::error(e.to_string()),
        }
    }
}
