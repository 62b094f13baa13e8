use std::collections::{BTreeMap, BTreeSet};

use toolstar_core::fixtures::ToyData;
use toolstar_core::protocol::TagSet;
use toolstar_core::synthesis::{
    run_pipeline, DifficultyCategory, HintConfig, NormalizationConfig, PipelineArtifacts, RejectReason, SynthesisConfig,
};

fn run(toy: &ToyData) -> PipelineArtifacts {
    let tags = TagSet::default();
    let generator = toy.generator(&tags);
    let registry = toy.registry(1024, 4000);
    run_pipeline(
        &toy.questions,
        &generator,
        &registry,
        &SynthesisConfig::default(),
        &HintConfig::default(),
        &NormalizationConfig::default(),
        None,
    )
    .unwrap()
}

#[test]
fn rejects_exactly_the_labeled_fixtures() {
    let toy = ToyData::load();
    let art = run(&toy);
    let got: BTreeSet<(String, RejectReason)> = art.rejections.iter().map(|r| (r.id.clone(), r.reason)).collect();
    let want: BTreeSet<(String, RejectReason)> =
        toy.oracle.rejections.iter().map(|r| (r.id.clone(), r.reason)).collect();
    assert_eq!(got, want);
}

#[test]
fn categories_match_the_hand_labels() {
    let toy = ToyData::load();
    let art = run(&toy);
    assert_eq!(art.categories, toy.oracle.categories);
}

#[test]
fn routing_by_category() {
    let toy = ToyData::load();
    let art = run(&toy);
    let ids_with = |cats: &[DifficultyCategory]| -> BTreeSet<String> {
        toy.oracle
            .categories
            .iter()
            .filter(|(_, c)| cats.contains(c))
            .map(|(id, _)| id.clone())
            .collect()
    };
    let text: BTreeSet<String> = art.d_text_sub.iter().map(|e| e.id.clone()).collect();
    let tool: BTreeSet<String> = art.d_tool_sub.iter().map(|t| t.id.clone()).collect();
    let rl: BTreeSet<String> = art.d_rl.iter().map(|q| q.id.clone()).collect();
    assert_eq!(
        text,
        ids_with(&[
            DifficultyCategory::Cat1_DRok_TIRok,
            DifficultyCategory::Cat2_DRok_TIRbad
        ])
    );
    assert_eq!(tool, ids_with(&[DifficultyCategory::Cat3_DRbad_TIRok]));
    assert_eq!(rl, ids_with(&[DifficultyCategory::Cat4_DRbad_TIRbad]));

    let sft: BTreeSet<String> = art.d_sft.iter().map(|e| e.id.clone()).collect();
    assert!(sft.is_disjoint(&rl));
    assert_eq!(sft.len() + rl.len(), 50);
}

#[test]
fn hinted_sampling_contributes_records() {
    let art = run(&ToyData::load());
    let hinted: BTreeSet<&str> = art.d_tool_h.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(hinted, BTreeSet::from(["t27", "t28", "t29", "t30"]));
    for t in &art.d_tool_h {
        assert!(!t.tool_calls.is_empty());
        assert_eq!(t.answer(), t.gold.as_deref());
    }
}

#[test]
fn v1_keeps_the_fewest_tool_calls() {
    let art = run(&ToyData::load());
    let by_id: BTreeMap<&str, usize> = art
        .d_tool_v1
        .iter()
        .map(|t| (t.id.as_str(), t.chain.tool_calls().count()))
        .collect();
    assert_eq!(by_id.len(), art.d_tool_v1.len());
    for id in ["t01", "t02", "t03", "t04"] {
        assert_eq!(by_id[id], 1, "{id}");
    }
}

#[test]
fn every_kept_tool_record_is_correct() {
    let art = run(&ToyData::load());
    for t in art.d_tool_p.iter().chain(&art.d_tool_h) {
        assert_eq!(t.answer(), t.gold.as_deref(), "{}", t.id);
    }
}

#[test]
fn deterministic_artifacts() {
    let toy = ToyData::load();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&toy).save(a.path()).unwrap();
    run(&toy).save(b.path()).unwrap();
    for name in [
        "d_tool_v2.jsonl",
        "d_sft.jsonl",
        "d_rl.jsonl",
        "rejections.jsonl",
        "stats.json",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
