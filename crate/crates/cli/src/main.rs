use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use toolstar_core::config::EngineConfig;
use toolstar_core::demo::run_demo;
use toolstar_core::eval::{evaluate, DatasetSpec, EvalEngine, TaskKind};
use toolstar_core::fixtures::{GoldRecord, SandboxEntry, ScriptLine, ToyData};
use toolstar_core::jsonl::{read_jsonl, write_jsonl};
use toolstar_core::llm::{ChatClient, Llm};
use toolstar_core::protocol::TagSet;
use toolstar_core::resilience::{robust_rollout, RepairModels, ResiliencePolicies};
use toolstar_core::reward::{compute_reward_with, Judge, LlmJudge};
use toolstar_core::rl::{run_schedule, GeneratorSampler, IpcTrainer, RecordingTrainer, Trainer};
use toolstar_core::rollout::{
    run_group, run_rollout, Generator, Query, ScriptedGenerator, Trajectory, TrajectoryRecord,
};
use toolstar_core::synthesis::{
    classify_difficulty, direct_pass, merge_v1, normalize_quality, run_pipeline, sample_hint_based, sample_tir,
    seed_trajectories, DirectResult, RawSample, SampleKind,
};
use toolstar_core::toolkit::{
    Bm25Index, Bm25Params, CodeInterpreterTool, ExecLimits, ExecResult, Registry, ScriptedSandbox, SearchTool,
};

#[derive(Parser)]
#[command(
    name = "toolstar",
    version,
    about = "Tool-integrated reasoning: data synthesis, rollouts, rewards, training schedules and evaluation"
)]
struct Cli {
    /// Engine config file (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample tool-integrated data: language-only pass, tool-integrated
    /// sampling and hint-based resumption
    Synthesize(SynthesizeArgs),
    /// Apply the quality filter to a tool-integrated stage
    Normalize(NormalizeArgs),
    /// Route questions into SFT and RL sets by difficulty
    Classify(ClassifyArgs),
    /// Run rollouts for a question file
    Rollout(RolloutArgs),
    /// Score a trajectory file against gold answers
    Reward(RewardArgs),
    /// Run the training schedule against a recording or external trainer
    Schedule(ScheduleArgs),
    /// Evaluate on one or more datasets
    Eval(EvalArgs),
    /// End-to-end run on the bundled toy data, offline
    Demo(DemoArgs),
    /// Print the effective config as TOML
    Config(ConfigArgs),
}

/// Where generations and tool results come from.
#[derive(Args, Clone, Default)]
struct Sources {
    /// Use the bundled toy transcripts, sandbox table and documents
    #[arg(long)]
    toy: bool,
    /// Scripted transcripts JSONL: {"question","text","mode","anchor"}
    #[arg(long, value_name = "PATH", conflicts_with = "toy")]
    scripts: Option<PathBuf>,
    /// Scripted sandbox JSONL: {"code","stdout"}
    #[arg(long, value_name = "PATH")]
    sandbox_table: Option<PathBuf>,
    /// Directory of {"id","title","text"} JSONL files for local search
    #[arg(long, value_name = "DIR")]
    docs: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Raw samples JSONL: {"id","question","gold","kind","response"}
    #[arg(long, value_name = "PATH")]
    questions: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Also normalize and classify
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    sources: Sources,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Trajectory JSONL
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Where to write rejections as JSONL
    #[arg(long, value_name = "PATH")]
    rejections: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, value_name = "PATH")]
    questions: PathBuf,
    /// Normalized tool-integrated trajectories
    #[arg(long, value_name = "PATH")]
    tool: PathBuf,
    /// Language-only results written by `synthesize`
    #[arg(long, value_name = "PATH")]
    direct: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct RolloutArgs {
    /// Queries JSONL: {"id","question","gold"}
    #[arg(long, value_name = "PATH")]
    questions: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Rollouts per question
    #[arg(long, default_value_t = 1)]
    group: usize,
    /// Enable debugging, backtracking and refinement
    #[arg(long)]
    robust: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    sources: Sources,
}

#[derive(Args)]
struct RewardArgs {
    /// Trajectory JSONL
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Gold answers JSONL: {"id","gold"}
    #[arg(long, value_name = "PATH")]
    gold: Option<PathBuf>,
    /// Output JSONL; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_name = "PATH")]
    questions: Option<PathBuf>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Policy-gradient steps per cycle
    #[arg(long)]
    steps: Option<usize>,
    /// Queries per policy-gradient step
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    /// External trainer command speaking the JSON-lines protocol
    #[arg(long, value_name = "CMD")]
    trainer_cmd: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the schedule report as JSON
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    sources: Sources,
}

#[derive(Args)]
struct EvalArgs {
    /// NAME:KIND:PATH with KIND one of math, qa
    #[arg(long = "dataset", value_name = "SPEC", required_unless_present = "toy")]
    datasets: Vec<String>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    robust: bool,
    /// Write the report as JSON
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    sources: Sources,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, value_name = "DIR", default_value = "toolstar-demo")]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

struct Engine {
    generator: Box<dyn Generator>,
    registry: Registry,
    chat: Option<Arc<ChatClient>>,
    toy: Option<ToyData>,
}

impl Engine {
    fn build(sources: &Sources, cfg: &EngineConfig) -> Result<Self> {
        let chat = cfg.chat_client()?.map(Arc::new);
        if sources.toy {
            let toy = ToyData::load();
            return Ok(Self {
                generator: Box::new(toy.generator(&cfg.tags)),
                registry: toy.registry(cfg.tools.cache_capacity, cfg.tools.max_feedback_chars),
                chat,
                toy: Some(toy),
            });
        }
        let mut registry = cfg.build_registry()?;
        if let Some(path) = &sources.sandbox_table {
            let mut sb = ScriptedSandbox::new();
            for e in read_jsonl::<SandboxEntry>(path)? {
                sb.insert(&e.code, ExecResult::success(e.stdout));
            }
            let limits = ExecLimits::default();
            registry.register(CodeInterpreterTool::new(
                Arc::new(sb),
                limits,
                cfg.tools.sandbox.workers,
            ));
        }
        if let Some(dir) = &sources.docs {
            let index = Bm25Index::from_jsonl_dir(dir, Bm25Params::default())?;
            registry.register(SearchTool::local(index, cfg.tools.top_k));
        }
        let generator: Box<dyn Generator> = match &sources.scripts {
            Some(path) => {
                let mut g = ScriptedGenerator::new(cfg.tags.clone());
                for line in read_jsonl::<ScriptLine>(path)? {
                    g.add(line.question, line.transcript);
                }
                Box::new(g)
            }
            None => match cfg.http_generator(false)? {
                Some(g) => Box::new(g),
                None => bail!("no generator: pass --toy or --scripts, or set llm.endpoint in the config"),
            },
        };
        Ok(Self {
            generator,
            registry,
            chat,
            toy: None,
        })
    }

    fn models(&self) -> RepairModels<'_> {
        let llm = self.chat.as_deref().map(|c| c as &dyn Llm);
        RepairModels {
            debugger: llm,
            refiner: llm,
        }
    }

    fn toy_questions(&self) -> Option<Vec<RawSample>> {
        self.toy.as_ref().map(|t| t.questions.clone())
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => Ok(EngineConfig::load(p)?),
        None => Ok(EngineConfig::default()),
    }
}

fn questions_from(path: Option<&PathBuf>, engine: &Engine) -> Result<Vec<RawSample>> {
    match path {
        Some(p) => Ok(read_jsonl(p)?),
        None => engine
            .toy_questions()
            .ok_or_else(|| anyhow!("--questions is required unless --toy is given")),
    }
}

fn queries_from(path: Option<&PathBuf>, engine: &Engine) -> Result<Vec<Query>> {
    match path {
        Some(p) => Ok(read_jsonl(p)?),
        None => Ok(questions_from(None, engine)?
            .into_iter()
            .map(|q| Query::new(q.id, q.question).with_gold(q.gold))
            .collect()),
    }
}

fn records(ts: &[Trajectory]) -> Vec<TrajectoryRecord> {
    ts.iter().map(Trajectory::to_record).collect()
}

fn read_trajectories(path: &Path, tags: &TagSet) -> Result<Vec<Trajectory>> {
    Ok(read_jsonl::<TrajectoryRecord>(path)?
        .into_iter()
        .map(|r| Trajectory::from_record(r, tags))
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn synthesize(args: SynthesizeArgs, mut cfg: EngineConfig) -> Result<()> {
    if let Some(seed) = args.seed {
        cfg.synthesis.seed = seed;
        cfg.hint.seed = seed;
    }
    let engine = Engine::build(&args.sources, &cfg)?;
    let samples = questions_from(args.questions.as_ref(), &engine)?;
    if args.full {
        let art = run_pipeline(
            &samples,
            engine.generator.as_ref(),
            &engine.registry,
            &cfg.synthesis,
            &cfg.hint,
            &cfg.normalization,
            Some(&args.out),
        )?;
        write_json(&args.out.join("categories.json"), &art.categories)?;
        println!(
            "{} questions: {} sft, {} rl, {} rejected",
            samples.len(),
            art.d_sft.len(),
            art.d_rl.len(),
            art.rejections.len()
        );
        return Ok(());
    }
    let gen = engine.generator.as_ref();
    let (direct, direct_stats) = direct_pass(&samples, gen, &cfg.synthesis);
    let language: Vec<DirectResult> = samples
        .iter()
        .zip(&direct)
        .filter(|(s, _)| s.kind == SampleKind::LanguageOnly)
        .map(|(_, d)| d.clone())
        .collect();
    let (p, p_stats) = sample_tir(&samples, gen, &engine.registry, &cfg.synthesis);
    let (h, h_stats) = sample_hint_based(&language, gen, &engine.registry, &cfg.hint, &cfg.synthesis);
    let seeds = seed_trajectories(&samples, &cfg.tags);
    let v1 = merge_v1(&[&p, &h, &seeds]);
    write_jsonl(&args.out.join("questions.jsonl"), &samples)?;
    write_jsonl(&args.out.join("d_text_v2.jsonl"), &direct)?;
    write_jsonl(&args.out.join("d_tool_p.jsonl"), records(&p))?;
    write_jsonl(&args.out.join("d_tool_h.jsonl"), records(&h))?;
    write_jsonl(&args.out.join("d_tool_v1.jsonl"), records(&v1))?;
    let stats = BTreeMap::from([
        ("d_text_v2", direct_stats),
        ("d_tool_p", p_stats),
        ("d_tool_h", h_stats),
    ]);
    write_json(&args.out.join("stats.json"), &stats)?;
    println!("{} questions: {} tool-integrated records", samples.len(), v1.len());
    Ok(())
}

fn normalize(args: NormalizeArgs, cfg: EngineConfig) -> Result<()> {
    let stage = read_trajectories(&args.input, &cfg.tags)?;
    let out = normalize_quality(&stage, &cfg.normalization, &cfg.tags);
    write_jsonl(&args.out, records(&out.kept))?;
    if let Some(path) = &args.rejections {
        write_jsonl(path, &out.rejections)?;
    }
    println!(
        "{} records: {} kept, {} rejected",
        stage.len(),
        out.kept.len(),
        out.rejections.len()
    );
    Ok(())
}

fn classify(args: ClassifyArgs, cfg: EngineConfig) -> Result<()> {
    let questions: Vec<RawSample> = read_jsonl(&args.questions)?;
    let tool = read_trajectories(&args.tool, &cfg.tags)?;
    let direct: BTreeMap<String, DirectResult> = read_jsonl::<DirectResult>(&args.direct)?
        .into_iter()
        .map(|d| (d.id.clone(), d))
        .collect();
    let c = classify_difficulty(&questions, &tool, &direct)?;
    write_jsonl(&args.out.join("d_text_sub.jsonl"), &c.d_text_sub)?;
    write_jsonl(&args.out.join("d_tool_sub.jsonl"), records(&c.d_tool_sub))?;
    write_jsonl(&args.out.join("d_sft.jsonl"), &c.d_sft)?;
    write_jsonl(&args.out.join("d_rl.jsonl"), &c.d_rl)?;
    write_json(&args.out.join("categories.json"), &c.categories)?;
    println!(
        "{} questions: {} sft, {} rl",
        questions.len(),
        c.d_sft.len(),
        c.d_rl.len()
    );
    Ok(())
}

fn rollout(args: RolloutArgs, mut cfg: EngineConfig) -> Result<()> {
    if args.group == 0 {
        bail!("--group must be at least 1");
    }
    if let Some(seed) = args.seed {
        cfg.rollout.seed = seed;
    }
    let engine = Engine::build(&args.sources, &cfg)?;
    let queries = queries_from(args.questions.as_ref(), &engine)?;
    let mut out = Vec::new();
    for q in &queries {
        if args.robust {
            for i in 0..args.group as u64 {
                let rcfg = toolstar_core::rollout::RolloutConfig {
                    seed: cfg.rollout.seed.wrapping_add(i),
                    ..cfg.rollout.clone()
                };
                let (t, _) = robust_rollout(
                    q,
                    engine.generator.as_ref(),
                    &engine.registry,
                    &rcfg,
                    &cfg.resilience,
                    engine.models(),
                )?;
                out.push(t);
            }
        } else if args.group == 1 {
            out.push(run_rollout(
                q,
                engine.generator.as_ref(),
                &engine.registry,
                &cfg.rollout,
            )?);
        } else {
            let rcfg = toolstar_core::rollout::RolloutConfig {
                group_size: args.group,
                ..cfg.rollout.clone()
            };
            out.extend(run_group(q, engine.generator.as_ref(), &engine.registry, &rcfg).members);
        }
    }
    write_jsonl(&args.out, records(&out))?;
    println!("{} rollouts for {} questions", out.len(), queries.len());
    Ok(())
}

#[derive(Serialize)]
struct RewardLine<'a> {
    id: &'a str,
    total: f64,
    format_ok: bool,
    accuracy: f64,
    bonus: f64,
    principle: &'a str,
}

fn judge_for(cfg: &EngineConfig) -> Result<Option<Box<dyn Judge>>> {
    Ok(cfg.chat_client()?.map(|c| Box::new(LlmJudge::new(c)) as Box<dyn Judge>))
}

fn reward(args: RewardArgs, cfg: EngineConfig) -> Result<()> {
    let trajs = read_trajectories(&args.input, &cfg.tags)?;
    let gold: BTreeMap<String, String> = match &args.gold {
        Some(p) => read_jsonl::<GoldRecord>(p)?
            .into_iter()
            .map(|g| (g.id, g.gold))
            .collect(),
        None => BTreeMap::new(),
    };
    let judge = judge_for(&cfg)?;
    let mut lines = Vec::new();
    for t in &trajs {
        let g = gold
            .get(&t.id)
            .or(t.gold.as_ref())
            .ok_or_else(|| anyhow!("no gold answer for {}", t.id))?;
        let r = compute_reward_with(t, g, &cfg.reward, judge.as_deref());
        lines.push(serde_json::to_string(&RewardLine {
            id: &t.id,
            total: r.total,
            format_ok: r.format_ok,
            accuracy: r.accuracy,
            bonus: r.bonus,
            principle: &r.principle,
        })?);
    }
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    match &args.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn schedule(args: ScheduleArgs, mut cfg: EngineConfig) -> Result<()> {
    if let Some(c) = args.cycles {
        cfg.schedule.cycles = c;
    }
    if let Some(s) = args.steps {
        cfg.schedule.grpo_steps_per_cycle = s;
    }
    cfg.schedule.validate()?;
    let engine = Engine::build(&args.sources, &cfg)?;
    let queries = queries_from(args.questions.as_ref(), &engine)?;
    let mut sampler = GeneratorSampler {
        queries,
        generator: engine.generator.as_ref(),
        registry: &engine.registry,
        cfg: cfg.rollout.clone(),
        batch_size: args.batch_size,
        seed: args.seed.unwrap_or(cfg.rollout.seed),
    };
    let mut trainer: Box<dyn Trainer> = match &args.trainer_cmd {
        Some(cmd) => {
            let mut parts = cmd.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or_else(|| anyhow!("--trainer-cmd is empty"))?;
            let rest: Vec<String> = parts.collect();
            Box::new(IpcTrainer::spawn(&program, &rest)?)
        }
        None => Box::new(RecordingTrainer::new()),
    };
    let reward_cfg = cfg.reward.clone();
    let reward_fn = move |q: &Query, t: &Trajectory| {
        toolstar_core::reward::compute_reward(t, q.gold.as_deref().unwrap_or_default(), &reward_cfg)
    };
    let report = run_schedule(trainer.as_mut(), &mut sampler, &reward_fn, &cfg.schedule, &cfg.grpo);
    drop(trainer);
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    println!("{}", report.sequence().join(" "));
    if let Some(reason) = report.aborted {
        bail!("schedule aborted: {reason}");
    }
    Ok(())
}

fn parse_dataset(spec: &str, limit: Option<usize>) -> Result<DatasetSpec> {
    let mut parts = spec.splitn(3, ':');
    let (Some(name), Some(kind), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
        bail!("dataset spec {spec:?} is not NAME:KIND:PATH");
    };
    let task_kind = match kind {
        "math" | "computational" => TaskKind::Computational,
        "qa" | "knowledge_intensive" => TaskKind::KnowledgeIntensive,
        other => bail!("unknown dataset kind {other:?}; use math or qa"),
    };
    Ok(DatasetSpec {
        name: name.to_string(),
        path: PathBuf::from(path),
        task_kind,
        metric: None,
        limit,
    })
}

fn eval(args: EvalArgs, cfg: EngineConfig) -> Result<()> {
    let engine = Engine::build(&args.sources, &cfg)?;
    let mut specs = args
        .datasets
        .iter()
        .map(|s| parse_dataset(s, args.limit))
        .collect::<Result<Vec<_>>>()?;
    let mut scratch = None;
    if specs.is_empty() {
        // --toy without datasets: the bundled evaluation sets
        let toy = engine.toy.as_ref().expect("--toy given");
        let dir = std::env::temp_dir().join(format!("toolstar-eval-{}", std::process::id()));
        write_jsonl(&dir.join("math.jsonl"), &toy.eval_math)?;
        write_jsonl(&dir.join("qa.jsonl"), &toy.eval_qa)?;
        specs.push(parse_dataset(
            &format!("toy_math:math:{}", dir.join("math.jsonl").display()),
            args.limit,
        )?);
        specs.push(parse_dataset(
            &format!("toy_qa:qa:{}", dir.join("qa.jsonl").display()),
            args.limit,
        )?);
        scratch = Some(dir);
    }
    let judge = judge_for(&cfg)?;
    let eval_engine = EvalEngine {
        generator: engine.generator.as_ref(),
        registry: &engine.registry,
        rollout: cfg.rollout.clone(),
        policies: if args.robust {
            cfg.resilience.clone()
        } else {
            ResiliencePolicies::disabled()
        },
        models: engine.models(),
        judge: judge.as_deref(),
    };
    let report = evaluate(&specs, &eval_engine);
    if let Some(dir) = &scratch {
        let _ = std::fs::remove_dir_all(dir);
    }
    let report = report?;
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    print!("{}", report.render_table());
    Ok(())
}

fn demo(args: DemoArgs, cfg: EngineConfig) -> Result<()> {
    let report = run_demo(&cfg, &args.out)?;
    print!("{}", report.render());
    println!("report written to {}", args.out.join("report.json").display());
    Ok(())
}

fn config(args: ConfigArgs, cfg: EngineConfig) -> Result<()> {
    let text = cfg.to_toml()?;
    match &args.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Synthesize(a) => synthesize(a, cfg),
        Command::Normalize(a) => normalize(a, cfg),
        Command::Classify(a) => classify(a, cfg),
        Command::Rollout(a) => rollout(a, cfg),
        Command::Reward(a) => reward(a, cfg),
        Command::Schedule(a) => schedule(a, cfg),
        Command::Eval(a) => eval(a, cfg),
        Command::Demo(a) => demo(a, cfg),
        Command::Config(a) => config(a, cfg),
    }
}

/// Help for the subcommand named in `argv`, or the top-level help.
fn help_for(argv: &[String]) -> String {
    let mut cmd = Cli::command();
    let name = argv
        .iter()
        .skip(1)
        .find(|a| cmd.get_subcommands().any(|s| s.get_name() == a.as_str()))
        .cloned();
    match name.and_then(|n| cmd.find_subcommand_mut(&n).map(|s| s.render_help())) {
        Some(help) => help.to_string(),
        None => cmd.render_help().to_string(),
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            eprintln!("\n{}", help_for(&argv));
            return ExitCode::from(1);
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("TOOLSTAR_LOG"))
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(2)
        }
    }
}
