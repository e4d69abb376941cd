//! Running the agent over a query set.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use oltground_agent::{label_only_plan_from_query, run_scripted, AnswerRecord, GroundingAnswer, ToolConfig, SCRIPTED_FALLBACK};
use oltground_core::olt::{build_olt, SceneOlt};
use oltground_core::plan::validate_plan;
use oltground_core::ply::parse_ply;
use oltground_core::scene::PointCloud;
use oltground_core::segmentation::parse_segmentation;
use oltground_core::vocab::LabelVocabulary;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EvalError;
use crate::query::{load_queries, QueryRecord, Stratum};

pub struct SceneData {
    pub olt: SceneOlt,
    pub cloud: Option<PointCloud>,
}

/// Reads every `<id>.ply` + `<id>.seg.json` pair in `dir` and fits its table.
pub fn load_scene_dir(dir: &Path) -> Result<BTreeMap<String, SceneData>, EvalError> {
    let mut out = BTreeMap::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        let name = e.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_suffix(".ply") else { continue };
        let seg_path = dir.join(format!("{stem}.seg.json"));
        let bad = |what: &str, msg: String| EvalError::Io(format!("{}: {what}: {msg}", path.display()));
        let cloud = parse_ply(&std::fs::read(&path)?).map_err(|e| bad("ply", e.to_string()))?;
        let seg = parse_segmentation(&std::fs::read(&seg_path)?).map_err(|e| bad("segmentation", e.to_string()))?;
        let olt = build_olt(&cloud, &seg).map_err(|e| bad("table", e.to_string()))?;
        out.insert(olt.scene_id().to_string(), SceneData { olt, cloud: Some(cloud) });
    }
    Ok(out)
}

/// Scenes and queries of a generated benchmark directory.
pub fn load_benchmark_dir(dir: &Path) -> Result<(BTreeMap<String, SceneData>, Vec<QueryRecord>), EvalError> {
    let scenes = load_scene_dir(&dir.join("scenes"))?;
    let (queries, _) = load_queries(&std::fs::read(dir.join("queries.jsonl"))?)?;
    Ok((scenes, queries))
}

fn failure(scene_id: &str, code: &str, message: String) -> GroundingAnswer {
    GroundingAnswer {
        scene_id: scene_id.to_string(),
        object_id: None,
        bbox: None,
        rationale: format!("no answer: {message}"),
        tool_trace: vec![],
        fallbacks_used: vec![],
        failure: Some(oltground_agent::Failure { code: code.to_string(), message }),
    }
}

/// Scripted answer for one query. Queries without a plan get a label-only
/// plan from their text, flagged as a fallback.
pub fn ground_scripted(
    q: &QueryRecord,
    scene: &SceneData,
    config: &ToolConfig,
    aliases: &BTreeMap<String, String>,
) -> GroundingAnswer {
    let vocab = LabelVocabulary::from_olt(&scene.olt, aliases.clone());
    let (plan, fallback) = match &q.plan {
        Some(p) => match validate_plan(p, &scene.olt, &vocab) {
            Ok(c) => (c, false),
            Err(e) => return failure(&q.scene_id, e.code(), e.to_string()),
        },
        None => match label_only_plan_from_query(&q.text, &vocab) {
            Some(c) => (c, true),
            None => return failure(&q.scene_id, "E_UNKNOWN_LABEL", format!("no scene label found in {:?}", q.text)),
        },
    };
    let mut a = run_scripted(&scene.olt, scene.cloud.as_ref(), &plan, config);
    if fallback {
        a.fallbacks_used.push(SCRIPTED_FALLBACK.to_string());
    }
    a
}

/// Applies `run` to every query on `workers` threads; output keeps query
/// order. Queries naming an unknown scene get a failure record.
pub fn run_queries<F>(queries: &[QueryRecord], scenes: &BTreeMap<String, SceneData>, workers: usize, run: F) -> Vec<AnswerRecord>
where
    F: Fn(&QueryRecord, &SceneData) -> GroundingAnswer + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<AnswerRecord>>> = Mutex::new(vec![None; queries.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1).min(queries.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(q) = queries.get(i) else { break };
                let answer = match scenes.get(&q.scene_id) {
                    Some(scene) => run(q, scene),
                    None => failure(&q.scene_id, "E_UNKNOWN_SCENE", format!("scene {:?} not loaded", q.scene_id)),
                };
                slots.lock().expect("result slots")[i] = Some(answer.to_record(&q.query_id));
            });
        }
    });
    slots.into_inner().expect("result slots").into_iter().map(|a| a.expect("every query ran")).collect()
}

pub fn run_benchmark(
    queries: &[QueryRecord],
    scenes: &BTreeMap<String, SceneData>,
    config: &ToolConfig,
    workers: usize,
) -> Vec<AnswerRecord> {
    let aliases = oltground_core::vocab::default_aliases();
    run_queries(queries, scenes, workers, |q, s| ground_scripted(q, s, config, &aliases))
}

/// `n` queries drawn without replacement, proportionally from the groups
/// defined by which of `tags` each query carries (largest remainder), in
/// input order. Deterministic in `seed`.
pub fn stratified_sample(queries: &[QueryRecord], n: usize, tags: &[Stratum], seed: u64) -> Vec<QueryRecord> {
    if n >= queries.len() {
        return queries.to_vec();
    }
    let mut groups: BTreeMap<Vec<Stratum>, Vec<usize>> = BTreeMap::new();
    for (i, q) in queries.iter().enumerate() {
        let key: Vec<Stratum> = tags.iter().copied().filter(|t| q.has(*t)).collect();
        groups.entry(key).or_default().push(i);
    }
    let total = queries.len();
    let mut quota: Vec<(usize, usize, usize)> = groups
        .values()
        .enumerate()
        .map(|(g, members)| {
            let exact = members.len() * n;
            (g, exact / total, exact % total)
        })
        .collect();
    let mut left = n - quota.iter().map(|q| q.1).sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..quota.len()).collect();
    by_remainder.sort_by(|&a, &b| quota[b].2.cmp(&quota[a].2).then(a.cmp(&b)));
    for g in by_remainder {
        if left == 0 {
            break;
        }
        quota[g].1 += 1;
        left -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for ((_, members), (_, take, _)) in groups.iter().zip(&quota) {
        let mut m = members.clone();
        m.shuffle(&mut rng);
        picked.extend(m.into_iter().take(*take));
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| queries[i].clone()).collect()
}
