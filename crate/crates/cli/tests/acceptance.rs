//! One pass/fail line per acceptance criterion, each with its time budget.

#[path = "../../core/tests/common/backtrace_fixtures.rs"]
mod backtrace_fixtures;
#[path = "../../core/tests/common/chains.rs"]
mod chains;

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toolstar_core::eval::{evaluate, token_f1, DatasetSpec, EvalEngine, TaskKind};
use toolstar_core::fixtures::{reward_cases, ToyData};
use toolstar_core::jsonl::write_jsonl;
use toolstar_core::llm::ScriptedLlm;
use toolstar_core::protocol::{
    parse_chain, parse_chain_lenient, render_chain, validate_format, FormatLimits, Origin, TagKind, TagSet,
};
use toolstar_core::resilience::{
    backtrace_position, debug_code, robust_rollout, FailureEvent, FailureKind, RepairModels, ResilienceError,
    ResiliencePolicies,
};
use toolstar_core::reward::{compute_reward, RewardBreakdown, RewardConfig};
use toolstar_core::rl::{
    dpo_loss, group_advantages, grpo_objective, run_schedule, GrpoConfig, PairLogprobs, RecordingTrainer, RlError,
    RolloutSampler, SchedulePlan, TokenLogprobSet,
};
use toolstar_core::rollout::{
    budget_notice, feedback_mask, run_group, run_rollout, strip_results, GroupRollout, Query, RolloutConfig,
    ScriptedGenerator, Trajectory, Transcript,
};
use toolstar_core::synthesis::{
    run_pipeline, DifficultyCategory, HintConfig, NormalizationConfig, PipelineArtifacts, SynthesisConfig,
};
use toolstar_core::toolkit::{normalize_payload, FnTool, Registry, ToolKind, ToolOutput, ToolRequest};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn reward_golden() -> Outcome {
    let cfg = RewardConfig::default();
    let totals: Vec<f64> = reward_cases(&TagSet::default())
        .iter()
        .map(|(t, gold)| compute_reward(t, gold, &cfg).total)
        .collect();
    let want = [1.0, 0.0, 1.0, -1.0, 1.0, -1.0, 1.1, -1.0];
    ensure!(totals == want, "totals {totals:?}");
    Ok(())
}

/// Standardized rewards via the one-pass moment formula.
fn oracle_advantages(r: &[f64]) -> Vec<f64> {
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let std = (r.iter().map(|x| x * x).sum::<f64>() / n - mean * mean).max(0.0).sqrt();
    r.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}

fn rl_math() -> Outcome {
    for (r, want) in [
        (vec![1.0, 0.0], vec![1.0, -1.0]),
        (vec![1.1, 0.0, -1.0, 0.0], vec![1.4471, -0.0337, -1.3797, -0.0337]),
    ] {
        let a = group_advantages(&r, 1e-8);
        let oracle = oracle_advantages(&r);
        for i in 0..r.len() {
            ensure!(
                close(a[i], want[i], 1e-3) && close(a[i], oracle[i], 1e-9),
                "advantages {a:?} for {r:?}"
            );
        }
        ensure!(
            a.iter().sum::<f64>().abs() < 1e-9,
            "advantages of {r:?} do not sum to zero"
        );
    }

    let lp = vec![-0.5, -1.0, -2.0];
    let same = |mask: Vec<bool>| TokenLogprobSet {
        new: lp.clone(),
        old: lp.clone(),
        reference: lp.clone(),
        mask,
    };
    let adv = [0.8, -0.3];
    let v = grpo_objective(
        &[same(vec![false; 3]), same(vec![false; 3])],
        &adv,
        &GrpoConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        close(v.value, (adv[0] + adv[1]) / 2.0, 1e-12),
        "ratio-one objective {}",
        v.value
    );

    let cfg = GrpoConfig {
        kl_beta: 0.04,
        ..GrpoConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(1..20);
        let mut base = TokenLogprobSet {
            new: (0..n).map(|_| rng.random_range(-3.0..0.0)).collect(),
            old: (0..n).map(|_| rng.random_range(-3.0..0.0)).collect(),
            reference: (0..n).map(|_| rng.random_range(-3.0..0.0)).collect(),
            mask: (0..n).map(|_| rng.random_bool(0.4)).collect(),
        };
        base.mask[0] = false;
        let mut moved = base.clone();
        for t in 0..n {
            if moved.mask[t] {
                moved.new[t] = rng.random_range(-50.0..50.0);
                moved.old[t] = rng.random_range(-50.0..50.0);
                moved.reference[t] = rng.random_range(-50.0..50.0);
            }
        }
        let a = grpo_objective(&[base], &[0.7], &cfg).map_err(|e| e.to_string())?;
        let b = grpo_objective(&[moved], &[0.7], &cfg).map_err(|e| e.to_string())?;
        ensure!(
            a.value.to_bits() == b.value.to_bits(),
            "masked positions moved the objective"
        );
    }

    let zero = PairLogprobs {
        policy_w: -2.0,
        ref_w: -2.0,
        policy_l: -2.0,
        ref_l: -2.0,
    };
    ensure!(
        close(dpo_loss(&zero, 0.3), std::f64::consts::LN_2, 1e-9),
        "zero-margin loss"
    );
    let ex = PairLogprobs {
        policy_w: -1.0,
        ref_w: -1.0,
        policy_l: -3.0,
        ref_l: -1.0,
    };
    let oracle = (1.0 + (-0.3f64 * 2.0).exp()).ln();
    ensure!(
        close(dpo_loss(&ex, 0.3), 0.437488, 1e-6) && close(dpo_loss(&ex, 0.3), oracle, 1e-12),
        "beta 0.3 loss"
    );
    Ok(())
}

fn protocol_fuzz() -> Outcome {
    let tags = TagSet::default();
    let limits = FormatLimits { max_chars: usize::MAX };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 0..10_000 {
        let segments = chains::random_segments(&mut rng);
        let text = chains::render(&segments, "", &tags);
        let chain = parse_chain(&text, &tags).map_err(|e| format!("chain {n}: {e}"))?;
        ensure!(render_chain(&chain, &tags) == text, "chain {n} does not round-trip");
        ensure!(chain.segments.len() == segments.len(), "chain {n} segment count");
        ensure!(validate_format(&text, limits, &tags).ok, "chain {n} rejected");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 0..1_000 {
        let segments = chains::random_segments(&mut rng);
        let m = chains::mutate(&segments, &tags, &mut rng);
        let report = validate_format(&m.text, limits, &tags);
        let got = report.first().map(|v| v.code);
        ensure!(
            got == Some(m.expected),
            "mutant {n}: got {got:?}, want {:?}",
            m.expected
        );
    }
    Ok(())
}

fn pipeline_once(toy: &ToyData) -> Result<PipelineArtifacts, String> {
    let tags = TagSet::default();
    run_pipeline(
        &toy.questions,
        &toy.generator(&tags),
        &toy.registry(1024, 4000),
        &SynthesisConfig::default(),
        &HintConfig::default(),
        &NormalizationConfig::default(),
        None,
    )
    .map_err(|e| e.to_string())
}

fn pipeline_golden() -> Outcome {
    let toy = ToyData::load();
    ensure!(toy.questions.len() == 50, "{} questions", toy.questions.len());
    let a = pipeline_once(&toy)?;
    let b = pipeline_once(&toy)?;
    let ids = |art: &PipelineArtifacts| {
        (
            art.d_sft.iter().map(|e| e.id.clone()).collect::<Vec<_>>(),
            art.d_rl.iter().map(|q| q.id.clone()).collect::<Vec<_>>(),
        )
    };
    ensure!(ids(&a) == ids(&b), "split differs between runs");

    let got: BTreeSet<_> = a.rejections.iter().map(|r| (r.id.clone(), r.reason)).collect();
    let want: BTreeSet<_> = toy.oracle.rejections.iter().map(|r| (r.id.clone(), r.reason)).collect();
    ensure!(got == want, "rejections {got:?}");
    ensure!(
        a.categories == toy.oracle.categories,
        "categories differ from the labels"
    );

    let with = |cats: &[DifficultyCategory]| -> BTreeSet<String> {
        toy.oracle
            .categories
            .iter()
            .filter(|(_, c)| cats.contains(c))
            .map(|(id, _)| id.clone())
            .collect()
    };
    let text: BTreeSet<String> = a.d_text_sub.iter().map(|e| e.id.clone()).collect();
    let tool: BTreeSet<String> = a.d_tool_sub.iter().map(|t| t.id.clone()).collect();
    let rl: BTreeSet<String> = a.d_rl.iter().map(|q| q.id.clone()).collect();
    let sft: BTreeSet<String> = a.d_sft.iter().map(|e| e.id.clone()).collect();
    ensure!(
        text == with(&[
            DifficultyCategory::Cat1_DRok_TIRok,
            DifficultyCategory::Cat2_DRok_TIRbad
        ]),
        "text routing"
    );
    ensure!(tool == with(&[DifficultyCategory::Cat3_DRbad_TIRok]), "tool routing");
    ensure!(rl == with(&[DifficultyCategory::Cat4_DRbad_TIRbad]), "rl routing");
    ensure!(sft.is_disjoint(&rl), "sft and rl overlap");
    ensure!(
        sft.len() + rl.len() == 50,
        "split covers {} questions",
        sft.len() + rl.len()
    );
    Ok(())
}

type Counts = Arc<Mutex<BTreeMap<String, usize>>>;

fn counting_registry() -> (Registry, Counts) {
    let counts: Counts = Arc::default();
    let tool = |kind: ToolKind, counts: Counts| {
        FnTool::new(kind, move |r: &ToolRequest| {
            *counts
                .lock()
                .unwrap()
                .entry(format!("{kind:?}:{}", normalize_payload(kind, &r.payload)))
                .or_insert(0) += 1;
            ToolOutput::ok(format!("out({})", r.payload.trim()))
        })
    };
    let reg = Registry::default()
        .with(tool(ToolKind::Search, counts.clone()))
        .with(tool(ToolKind::Python, counts.clone()));
    (reg, counts)
}

fn scripted(texts: &[&str]) -> ScriptedGenerator {
    let mut g = ScriptedGenerator::new(TagSet::default());
    for t in texts {
        g.add("q", Transcript::tir(*t));
    }
    g
}

/// Model-side text rebuilt from segment origins, independent of the
/// library's own split.
fn model_side(t: &Trajectory) -> String {
    let mut model = String::new();
    let mut cursor = 0;
    for seg in &t.chain.segments {
        if seg.origin == Origin::EngineInserted {
            model.push_str(&t.text[cursor..seg.span.start]);
        } else {
            model.push_str(&t.text[cursor..seg.span.end]);
        }
        cursor = seg.span.end;
    }
    model.push_str(&t.text[cursor..]);
    model
}

fn rollout_cache() -> Outcome {
    let q = Query::new("1", "q");
    let (reg, _) = counting_registry();
    let g = scripted(&["<think>plan</think>\n<search>a</search>\n<search>b</search>\n<python>print(1)</python>\n<search>d</search>\n<answer>\\boxed{1}</answer>"]);
    let t = run_rollout(&q, &g, &reg, &RolloutConfig::default()).map_err(|e| e.to_string())?;
    ensure!(
        t.tool_calls.len() == 3,
        "{} tool calls under budget 3",
        t.tool_calls.len()
    );
    let results: Vec<&str> = t
        .chain
        .segments
        .iter()
        .filter(|s| s.kind == TagKind::Result)
        .map(|s| s.text.trim())
        .collect();
    ensure!(
        results.len() == 4 && results[3] == budget_notice(3),
        "fourth call feedback {results:?}"
    );

    let tags = TagSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 0..1_000 {
        let transcript = chains::render(&chains::random_segments(&mut rng), "", &tags);
        let (reg, _) = counting_registry();
        let g = scripted(&[&transcript]);
        let cfg = RolloutConfig {
            max_tool_calls: rng.random_range(1..5),
            max_chars: rng.random_range(200..4000),
            seed: n,
            ..RolloutConfig::default()
        };
        let t = run_rollout(&Query::new(format!("f{n}"), "q"), &g, &reg, &cfg).map_err(|e| e.to_string())?;
        let inserted: Vec<_> = t
            .chain
            .segments
            .iter()
            .filter(|s| s.origin == Origin::EngineInserted)
            .map(|s| s.span)
            .collect();
        ensure!(
            t.mask == inserted && t.mask == feedback_mask(&t),
            "rollout {n}: mask differs from inserted spans"
        );
        let model = model_side(&t);
        ensure!(
            strip_results(&transcript, &tags).starts_with(&model),
            "rollout {n}: model text not from the script"
        );
        ensure!(
            model.len() + t.mask.iter().map(|s| s.end - s.start).sum::<usize>() == t.text.len(),
            "rollout {n}: coverage"
        );
    }

    let (reg, counts) = counting_registry();
    let g = scripted(&[
        "<think>a</think>\n<search>capital of France</search>\n<python>print(2+2)</python>\n<answer>\\boxed{4}</answer>",
        "<think>b</think>\n<search>capital  of   France </search>\n<search>population of Paris</search>\n<answer>\\boxed{4}</answer>",
        "<think>c</think>\n<python>print(2+2)</python>\n<python>print(3*3)</python>\n<answer>\\boxed{9}</answer>",
    ]);
    let cfg = RolloutConfig {
        group_size: 8,
        ..RolloutConfig::default()
    };
    let group = run_group(&Query::new("g", "q"), &g, &reg, &cfg);
    ensure!(group.members.len() == 8, "group size {}", group.members.len());
    let distinct: BTreeSet<String> = group
        .members
        .iter()
        .flat_map(|m| &m.tool_calls)
        .map(|c| format!("{:?}:{}", c.kind, normalize_payload(c.kind, &c.request)))
        .collect();
    let counts = counts.lock().unwrap();
    ensure!(
        reg.executions() as usize == distinct.len(),
        "{} executions for {} requests",
        reg.executions(),
        distinct.len()
    );
    ensure!(counts.values().all(|&c| c == 1), "repeated executions {counts:?}");
    Ok(())
}

struct FixedSampler {
    totals: Vec<f64>,
}

impl FixedSampler {
    fn group(&self, id: usize) -> GroupRollout {
        let tags = TagSet::default();
        GroupRollout {
            query: Query::new(format!("q{id}"), "question"),
            members: self
                .totals
                .iter()
                .map(|t| {
                    Trajectory::from_chain(
                        parse_chain_lenient(&format!("<answer>\\boxed{{{t}}}</answer>"), &tags),
                        &tags,
                    )
                })
                .collect(),
            rewards: Vec::new(),
            advantages: Vec::new(),
        }
    }
}

impl RolloutSampler for FixedSampler {
    fn sample_groups(&mut self, step: usize) -> Result<Vec<GroupRollout>, RlError> {
        Ok(vec![self.group(step)])
    }

    fn sample_candidates(&mut self, _cycle: usize, k: usize, _n: usize) -> Result<Vec<GroupRollout>, RlError> {
        Ok((0..k).map(|i| self.group(i)).collect())
    }
}

fn reward_from_text(_: &Query, t: &Trajectory) -> RewardBreakdown {
    let total: f64 = t.answer().and_then(|a| a.trim().parse().ok()).unwrap_or(0.0);
    RewardBreakdown {
        format_ok: true,
        accuracy: total.clamp(0.0, 1.0),
        bonus: (total - 1.0).max(0.0),
        total,
        principle: String::new(),
    }
}

fn schedule_ordering() -> Outcome {
    for (c, s) in [(1, 1), (2, 3), (1, 0)] {
        let mut trainer = RecordingTrainer::new();
        let mut sampler = FixedSampler {
            totals: vec![1.1, 0.0, -1.0],
        };
        let plan = SchedulePlan {
            cycles: c,
            grpo_steps_per_cycle: s,
            critic_sample_count: 2,
            candidates_per_query: 3,
        };
        let report = run_schedule(
            &mut trainer,
            &mut sampler,
            &reward_from_text,
            &plan,
            &GrpoConfig::default(),
        );
        let mut want = Vec::new();
        for _ in 0..c {
            want.extend(std::iter::repeat_n("grpo", s));
            want.push("dpo");
        }
        ensure!(report.aborted.is_none(), "C={c} S={s} aborted: {:?}", report.aborted);
        ensure!(report.sequence() == want, "C={c} S={s}: {:?}", report.sequence());
    }
    Ok(())
}

fn resilience() -> Outcome {
    use backtrace_fixtures::{expected_rewind, nth_call_offset, FIXTURES};
    let tags = TagSet::default();
    for (n, (text, call)) in FIXTURES.iter().enumerate() {
        let chain = parse_chain(text, &tags).map_err(|e| format!("fixture {n}: {e}"))?;
        let open = nth_call_offset(text, *call);
        let seg = chain
            .segments
            .iter()
            .position(|s| !s.bare && s.span.start == open)
            .ok_or(format!("fixture {n}: no call at {open}"))?;
        let event = FailureEvent {
            kind: FailureKind::ToolInvocationFailure,
            at_segment: seg,
            detail: String::new(),
        };
        let got = backtrace_position(&chain, &event, &tags).map_err(|e| format!("fixture {n}: {e}"))?;
        ensure!(got == expected_rewind(text, open), "fixture {n}: rewound to {got}");
    }

    let exec = |_: &str| ToolOutput::error("ZeroDivisionError: division by zero");
    for cap in 0..5 {
        let llm = ScriptedLlm::new(vec!["print(1/0)"; 10]);
        match debug_code("print(1/0)", "ZeroDivisionError", &llm, &exec, cap, "{code}{error}") {
            Err(ResilienceError::GaveUp { attempts }) => {
                ensure!(
                    attempts.len() == cap && llm.prompts().len() == cap,
                    "cap {cap}: {} attempts",
                    attempts.len()
                )
            }
            other => return Err(format!("cap {cap}: {other:?}")),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let llm = ScriptedLlm::new(vec!["print(0)"; 10_000]);
    for n in 0..300 {
        let mut transcript = chains::render(&chains::random_segments(&mut rng), "", &tags);
        if rng.random_bool(0.3) {
            transcript = transcript.replacen("</python>", "1/0</python>", 1);
        }
        let g = scripted(&[&transcript]);
        let cfg = RolloutConfig {
            max_chars: rng.random_range(100..2000),
            max_tool_calls: rng.random_range(1..4),
            seed: n,
            ..RolloutConfig::default()
        };
        let q = Query::new(format!("p{n}"), "q");
        let plain = run_rollout(&q, &g, &counting_registry().0, &cfg).map_err(|e| e.to_string())?;
        let models = RepairModels {
            debugger: Some(&llm),
            refiner: Some(&llm),
        };
        let (robust, _) = robust_rollout(
            &q,
            &g,
            &counting_registry().0,
            &cfg,
            &ResiliencePolicies::disabled(),
            models,
        )
        .map_err(|e| e.to_string())?;
        let a = serde_json::to_string(&plain.to_record()).map_err(|e| e.to_string())?;
        let b = serde_json::to_string(&robust.to_record()).map_err(|e| e.to_string())?;
        ensure!(a == b, "rollout {n}: policies-off output differs");
    }
    Ok(())
}

fn eval_and_demo() -> Outcome {
    ensure!(
        close(token_f1("drifting", "Drifting"), 1.0, 1e-4),
        "f1 case-insensitive match"
    );
    ensure!(
        close(token_f1("the capital of france", "capital france"), 0.6667, 1e-4),
        "f1 partial match"
    );
    ensure!(token_f1("abc", "xyz") == 0.0, "f1 disjoint");

    let toy = ToyData::load();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let math = dir.path().join("math.jsonl");
    let qa = dir.path().join("qa.jsonl");
    write_jsonl(&math, &toy.eval_math).map_err(|e| e.to_string())?;
    write_jsonl(&qa, &toy.eval_qa).map_err(|e| e.to_string())?;
    let spec = |name: &str, path, task_kind| DatasetSpec {
        name: name.into(),
        path,
        task_kind,
        metric: None,
        limit: None,
    };
    let tags = TagSet::default();
    let generator = toy.generator(&tags);
    let registry = toy.registry(256, 4000);
    let engine = EvalEngine {
        generator: &generator,
        registry: &registry,
        rollout: RolloutConfig::default(),
        policies: ResiliencePolicies::disabled(),
        models: RepairModels::default(),
        judge: None,
    };
    let report = evaluate(
        &[
            spec("toy_math", math, TaskKind::Computational),
            spec("toy_qa", qa, TaskKind::KnowledgeIntensive),
        ],
        &engine,
    )
    .map_err(|e| e.to_string())?;
    let te = report.tool_efficiency.ok_or("no tool efficiency")?;
    ensure!(
        close(te, (8.0 / 10.0 + 1.0 / 2.0) / 2.0, 1e-9) && close(te, 0.65, 1e-9),
        "T_E = {te}"
    );

    let out = dir.path().join("demo");
    let started = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_toolstar"))
        .args(["demo", "--out"])
        .arg(&out)
        .env_remove("TOOLSTAR_LLM_API_KEY")
        .env_remove("TOOLSTAR_SEARCH_API_KEY")
        .env("HTTP_PROXY", "http://127.0.0.1:9")
        .env("HTTPS_PROXY", "http://127.0.0.1:9")
        .env("ALL_PROXY", "http://127.0.0.1:9")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        o.status.success(),
        "demo failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    ensure!(
        started.elapsed() < Duration::from_secs(60),
        "demo took {:?}",
        started.elapsed()
    );
    ensure!(out.join("report.json").is_file(), "demo wrote no report");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reward golden cases", reward_golden, Some(Duration::from_secs(1))),
        ("rl math oracle", rl_math, Some(Duration::from_secs(1))),
        (
            "protocol round trip and mutation fuzz",
            protocol_fuzz,
            Some(Duration::from_secs(30)),
        ),
        (
            "synthesis pipeline golden",
            pipeline_golden,
            Some(Duration::from_secs(10)),
        ),
        (
            "rollout budget, mask and cache",
            rollout_cache,
            Some(Duration::from_secs(30)),
        ),
        ("training schedule ordering", schedule_ordering, None),
        (
            "resilience backtrace, debug cap, policies off",
            resilience,
            Some(Duration::from_secs(5)),
        ),
        (
            "evaluation metrics and offline demo",
            eval_and_demo,
            Some(Duration::from_secs(60)),
        ),
    ];
    let mut failed = 0;
    for (n, (name, check, budget)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let mut outcome = check();
        let took = started.elapsed();
        if let (Ok(()), Some(limit)) = (&outcome, budget) {
            if took > limit {
                outcome = Err(format!("took {took:?}, budget {limit:?}"));
            }
        }
        let budget = budget
            .map(|b| format!(" (budget {}s)", b.as_secs()))
            .unwrap_or_default();
        match outcome {
            Ok(()) => println!("PASS {}. {name}: {:.3}s{budget}", n + 1, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {:.3}s{budget}: {why}", n + 1, took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
