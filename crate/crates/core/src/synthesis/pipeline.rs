use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::{
    classify_difficulty, direct_pass, normalize_quality, sample_hint_based, sample_tir, DifficultyCategory,
    DirectResult, HintConfig, NormalizationConfig, RawSample, Rejection, SampleKind, SftExample, StageStats,
    SynthesisConfig, SynthesisError,
};
use crate::jsonl::write_jsonl;
use crate::protocol::TagSet;
use crate::rollout::{Generator, StopReason, Trajectory, TrajectoryRecord};
use crate::toolkit::Registry;

/// Every intermediate and final dataset of one pipeline run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineArtifacts {
    pub d_tool_p: Vec<Trajectory>,
    pub d_tool_h: Vec<Trajectory>,
    pub d_tool_v1: Vec<Trajectory>,
    pub d_tool_v2: Vec<Trajectory>,
    pub d_text_v2: Vec<DirectResult>,
    pub d_text_sub: Vec<SftExample>,
    pub d_tool_sub: Vec<Trajectory>,
    pub d_sft: Vec<SftExample>,
    pub d_rl: Vec<RawSample>,
    pub categories: BTreeMap<String, DifficultyCategory>,
    pub rejections: Vec<Rejection>,
    pub stage_stats: BTreeMap<String, StageStats>,
}

#[derive(Serialize)]
struct StatsFile<'a> {
    stages: &'a BTreeMap<String, StageStats>,
    rejections: BTreeMap<String, usize>,
}

fn records(ts: &[Trajectory]) -> impl Iterator<Item = TrajectoryRecord> + '_ {
    ts.iter().map(Trajectory::to_record)
}

impl PipelineArtifacts {
    /// Write each stage as JSONL plus `stats.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), SynthesisError> {
        write_jsonl(&dir.join("d_tool_p.jsonl"), records(&self.d_tool_p))?;
        write_jsonl(&dir.join("d_tool_h.jsonl"), records(&self.d_tool_h))?;
        write_jsonl(&dir.join("d_tool_v1.jsonl"), records(&self.d_tool_v1))?;
        write_jsonl(&dir.join("d_tool_v2.jsonl"), records(&self.d_tool_v2))?;
        write_jsonl(&dir.join("d_text_v2.jsonl"), &self.d_text_v2)?;
        write_jsonl(&dir.join("d_text_sub.jsonl"), &self.d_text_sub)?;
        write_jsonl(&dir.join("d_tool_sub.jsonl"), records(&self.d_tool_sub))?;
        write_jsonl(&dir.join("d_sft.jsonl"), &self.d_sft)?;
        write_jsonl(&dir.join("d_rl.jsonl"), &self.d_rl)?;
        write_jsonl(&dir.join("rejections.jsonl"), &self.rejections)?;
        let mut by_reason = BTreeMap::new();
        for r in &self.rejections {
            *by_reason.entry(format!("{:?}", r.reason)).or_insert(0) += 1;
        }
        let stats = StatsFile {
            stages: &self.stage_stats,
            rejections: by_reason,
        };
        let json = serde_json::to_string_pretty(&stats).expect("serializable stats");
        std::fs::write(dir.join("stats.json"), json + "\n").map_err(|source| crate::jsonl::JsonlError::Io {
            path: dir.join("stats.json").display().to_string(),
            source,
        })?;
        Ok(())
    }
}

/// Trajectories for samples that arrive with a tool-integrated response.
pub fn seed_trajectories(samples: &[RawSample], tags: &TagSet) -> Vec<Trajectory> {
    samples
        .iter()
        .filter(|s| s.kind == SampleKind::ExistingTir)
        .filter_map(|s| {
            let rec = TrajectoryRecord {
                id: s.id.clone(),
                question: s.question.clone(),
                gold: Some(s.gold.clone()),
                segments: Vec::new(),
                trailing: String::new(),
                text: Some(s.response.clone()?),
                tool_calls: Vec::new(),
                stop_reason: StopReason::AnswerEmitted,
                mask: Vec::new(),
                logprobs: None,
                interventions: Vec::new(),
                stage: Some("seed".into()),
                category: None,
            };
            Some(Trajectory::from_record(rec, tags))
        })
        .collect()
}

/// Union of the sampled stages and seeds, one record per id: the one with
/// the fewest tool calls, earliest on ties.
pub fn merge_v1(stages: &[&[Trajectory]]) -> Vec<Trajectory> {
    let mut order: Vec<String> = Vec::new();
    let mut best: BTreeMap<String, Trajectory> = BTreeMap::new();
    for t in stages.iter().flat_map(|s| s.iter()) {
        match best.get(&t.id) {
            None => {
                order.push(t.id.clone());
                best.insert(t.id.clone(), t.clone());
            }
            Some(b) if t.chain.tool_calls().count() < b.chain.tool_calls().count() => {
                best.insert(t.id.clone(), t.clone());
            }
            Some(_) => {}
        }
    }
    order.into_iter().filter_map(|id| best.remove(&id)).collect()
}

/// Run every step on `samples`. With `out_dir`, artifacts are written
/// there at the end.
pub fn run_pipeline(
    samples: &[RawSample],
    generator: &dyn Generator,
    registry: &Registry,
    scfg: &SynthesisConfig,
    hcfg: &HintConfig,
    ncfg: &NormalizationConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineArtifacts, SynthesisError> {
    let tags = &scfg.rollout.tags;
    let mut art = PipelineArtifacts::default();

    let (direct, stats) = direct_pass(samples, generator, scfg);
    art.stage_stats.insert("d_text_v2".into(), stats);
    let language: Vec<DirectResult> = samples
        .iter()
        .zip(&direct)
        .filter(|(s, _)| s.kind == SampleKind::LanguageOnly)
        .map(|(_, d)| d.clone())
        .collect();

    let (p, stats) = sample_tir(samples, generator, registry, scfg);
    art.stage_stats.insert("d_tool_p".into(), stats);
    let (h, stats) = sample_hint_based(&language, generator, registry, hcfg, scfg);
    art.stage_stats.insert("d_tool_h".into(), stats);
    let seeds = seed_trajectories(samples, tags);

    art.d_tool_v1 = merge_v1(&[&p, &h, &seeds]);
    art.stage_stats.insert(
        "d_tool_v1".into(),
        StageStats {
            input: p.len() + h.len() + seeds.len(),
            kept: art.d_tool_v1.len(),
            ..StageStats::default()
        },
    );
    art.d_tool_p = p;
    art.d_tool_h = h;

    let norm = normalize_quality(&art.d_tool_v1, ncfg, tags);
    let mut stats = StageStats {
        input: art.d_tool_v1.len(),
        kept: norm.kept.len(),
        ..StageStats::default()
    };
    for r in &norm.rejections {
        stats.bump(&format!("{:?}", r.reason));
    }
    art.stage_stats.insert("d_tool_v2".into(), stats);
    art.d_tool_v2 = norm.kept;
    art.rejections = norm.rejections;

    let by_id: BTreeMap<String, DirectResult> = direct.iter().map(|d| (d.id.clone(), d.clone())).collect();
    let class = classify_difficulty(samples, &art.d_tool_v2, &by_id)?;
    art.d_text_v2 = direct;
    art.categories = class.categories;
    art.d_text_sub = class.d_text_sub;
    art.d_tool_sub = class.d_tool_sub;
    art.d_sft = class.d_sft;
    art.d_rl = class.d_rl;

    if let Some(dir) = out_dir {
        art.save(dir)?;
    }
    Ok(art)
}
