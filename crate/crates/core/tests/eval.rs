use std::path::Path;

use toolstar_core::eval::{evaluate, load_dataset, token_f1, DatasetSpec, EvalEngine, EvalError, EvalReport, TaskKind};
use toolstar_core::fixtures::ToyData;
use toolstar_core::jsonl::write_jsonl;
use toolstar_core::protocol::TagSet;
use toolstar_core::resilience::{RepairModels, ResiliencePolicies};
use toolstar_core::reward::{tool_efficiency, ToolUseCount};
use toolstar_core::rollout::RolloutConfig;

fn specs(dir: &Path, toy: &ToyData) -> Vec<DatasetSpec> {
    write_jsonl(&dir.join("math.jsonl"), &toy.eval_math).unwrap();
    write_jsonl(&dir.join("qa.jsonl"), &toy.eval_qa).unwrap();
    vec![
        DatasetSpec {
            name: "toy_math".into(),
            path: dir.join("math.jsonl"),
            task_kind: TaskKind::Computational,
            metric: None,
            limit: None,
        },
        DatasetSpec {
            name: "toy_qa".into(),
            path: dir.join("qa.jsonl"),
            task_kind: TaskKind::KnowledgeIntensive,
            metric: None,
            limit: None,
        },
    ]
}

fn run_eval(dir: &Path) -> EvalReport {
    let toy = ToyData::load();
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
    evaluate(&specs(dir, &toy), &engine).unwrap()
}

#[test]
fn tool_efficiency_on_two_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_eval(dir.path());
    let (math, qa) = (&report.datasets[0], &report.datasets[1]);
    assert_eq!((math.s_i, math.t_i_c), (8, 10));
    assert_eq!((qa.s_i, qa.t_i_c), (1, 2));
    // (8/10 + 1/2) / 2
    let oracle = (8.0 / 10.0 + 1.0 / 2.0) / 2.0;
    assert!((report.tool_efficiency.unwrap() - oracle).abs() < 1e-9);
    assert!((report.tool_efficiency.unwrap() - 0.65).abs() < 1e-9);
}

#[test]
fn aggregate_agrees_with_per_dataset_counts() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_eval(dir.path());
    let counts: Vec<ToolUseCount> = report
        .datasets
        .iter()
        .filter(|d| d.t_i_c > 0)
        .map(|d| ToolUseCount {
            correct: d.s_i,
            total: d.t_i_c,
        })
        .collect();
    assert_eq!(report.tool_efficiency, Some(tool_efficiency(&counts).unwrap()));
    for d in &report.datasets {
        assert!((0.0..=1.0).contains(&d.score));
    }
    assert!((0.0..=1.0).contains(&report.mean_score));
}

#[test]
fn scores_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_eval(dir.path());
    let math = &report.datasets[0];
    assert!((math.score - 0.8).abs() < 1e-12);
    assert_eq!(math.tool_call_histogram.get(&1), Some(&10));
    // "drifting" against "Drifting" scores 1, "1991" against a name scores 0
    assert!((report.datasets[1].score - 0.5).abs() < 1e-12);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = serde_json::to_string(&run_eval(a.path())).unwrap();
    let rb = serde_json::to_string(&run_eval(b.path())).unwrap();
    // paths differ between the two temp dirs but are not part of the report
    assert_eq!(ra, rb);
}

#[test]
fn empty_spec_list() {
    let toy = ToyData::load();
    let tags = TagSet::default();
    let generator = toy.generator(&tags);
    let registry = toy.registry(16, 4000);
    let engine = EvalEngine {
        generator: &generator,
        registry: &registry,
        rollout: RolloutConfig::default(),
        policies: ResiliencePolicies::disabled(),
        models: RepairModels::default(),
        judge: None,
    };
    assert!(matches!(evaluate(&[], &engine), Err(EvalError::EmptyInput)));
}

fn spec_for(path: &Path, limit: Option<usize>) -> DatasetSpec {
    DatasetSpec {
        name: "d".into(),
        path: path.to_path_buf(),
        task_kind: TaskKind::Computational,
        metric: None,
        limit,
    }
}

#[test]
fn dataset_loading() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    std::fs::write(
        &good,
        "{\"id\":\"1\",\"question\":\"a\",\"answer\":\"x\"}\n{\"id\":\"2\",\"question\":\"b\",\"answer\":\"y\"}\n{\"id\":\"3\",\"question\":\"c\",\"answer\":\"z\"}\n",
    )
    .unwrap();
    assert_eq!(load_dataset(&spec_for(&good, None)).unwrap().len(), 3);
    let first = load_dataset(&spec_for(&good, Some(1))).unwrap();
    assert_eq!(first.len(), 1);
    assert_eq!(first[0].id, "1");

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"id\":\"1\",\"question\":\"a\",\"answer\":\"x\"}\n{\"id\":\"2\",\"question\":\"b\"}\n",
    )
    .unwrap();
    match load_dataset(&spec_for(&bad, None)) {
        Err(EvalError::SchemaError { line, message, .. }) => {
            assert_eq!(line, 2);
            assert!(message.contains("answer"));
        }
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn token_f1_worked_examples() {
    assert!((token_f1("drifting", "Drifting") - 1.0).abs() < 1e-4);
    // pred tokens {the, capital, of, france}, gold {capital, france}:
    // P = 2/4, R = 2/2, F1 = 2PR/(P+R) = 2/3
    let p: f64 = 2.0 / 4.0;
    let r: f64 = 2.0 / 2.0;
    let oracle = 2.0 * p * r / (p + r);
    assert!((token_f1("the capital of france", "capital france") - oracle).abs() < 1e-9);
    assert!((token_f1("the capital of france", "capital france") - 0.6667).abs() < 1e-4);
    assert_eq!(token_f1("abc", "xyz"), 0.0);
}

#[test]
fn failing_generator_scores_zero_without_aborting() {
    use toolstar_core::rollout::{FnGenerator, GeneratorError};
    let toy = ToyData::load();
    let generator = FnGenerator::new(|_req: &_| Err(GeneratorError::Other("down".into())));
    let registry = toy.registry(16, 4000);
    let engine = EvalEngine {
        generator: &generator,
        registry: &registry,
        rollout: RolloutConfig::default(),
        policies: ResiliencePolicies::disabled(),
        models: RepairModels::default(),
        judge: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let report = evaluate(&specs(dir.path(), &toy), &engine).unwrap();
    assert_eq!(report.datasets[0].failures, 10);
    assert_eq!(report.datasets[0].score, 0.0);
    assert_eq!(report.tool_efficiency, None);
}
