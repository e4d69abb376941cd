//! Deterministic pipeline: plan, retrieve, rank, optionally render, finalize.

use std::collections::BTreeMap;

use oltground_core::olt::SceneOlt;
use oltground_core::plan::{plan_to_value, view_to_value, CheckedPlan, PredicatePlan};
use oltground_core::scene::PointCloud;
use oltground_core::vocab::{resolve_label, LabelVocabulary};
use serde_json::{json, Value};

use crate::answer::{Failure, GroundingAnswer, TraceEntry};
use crate::config::ToolConfig;
use crate::tools::{dispatch_tool, ToolCall, ToolContext, FINALIZE, RANK, RENDER, RETRIEVE, EMIT_PLAN};

pub const SCRIPTED_FALLBACK: &str = "scripted_fallback";

fn call(ctx: &mut ToolContext, name: &str, arguments: Value) -> Result<Value, crate::error::ToolError> {
    dispatch_tool(&ToolCall { name: name.to_string(), arguments }, ctx).map(|o| o.result)
}

pub(crate) fn failure_answer(olt: &SceneOlt, code: &str, message: String, trace: Vec<TraceEntry>) -> GroundingAnswer {
    GroundingAnswer {
        scene_id: olt.scene_id().to_string(),
        object_id: None,
        bbox: None,
        rationale: format!("no answer: {message}"),
        tool_trace: trace,
        fallbacks_used: vec![],
        failure: Some(Failure { code: code.to_string(), message }),
    }
}

fn describe_choice(olt: &SceneOlt, plan: &CheckedPlan, id: u64, n_candidates: usize, top: Option<&Value>) -> String {
    let label = olt.get(id).map(|r| r.label.as_str()).unwrap_or("?");
    let mut s = format!(
        "selected {label} #{id} among {n_candidates} candidate(s) labeled {}",
        plan.plan.target_labels.join("|")
    );
    if let Some(preds) = top.and_then(|t| t.get("per_predicate")).and_then(Value::as_array) {
        let parts: Vec<String> = preds
            .iter()
            .filter_map(|p| Some(format!("{} = {:.3}", p.get("predicate")?.as_str()?, p.get("value")?.as_f64()?)))
            .collect();
        if !parts.is_empty() {
            s.push_str(&format!("; {}", parts.join(", ")));
        }
    }
    let mapped = plan.resolution_summary();
    if !mapped.is_empty() {
        s.push_str(&format!("; label mapping: {mapped}"));
    }
    s
}

/// Runs the fixed tool sequence for a validated plan. Never panics on
/// missing candidates; those come back as a structured failure.
pub fn run_scripted(olt: &SceneOlt, cloud: Option<&PointCloud>, plan: &CheckedPlan, config: &ToolConfig) -> GroundingAnswer {
    let vocab = LabelVocabulary::from_olt(olt, BTreeMap::new());
    let mut ctx = ToolContext::new(olt, cloud, &vocab, config);
    run_scripted_in(&mut ctx, plan)
}

pub(crate) fn run_scripted_in(ctx: &mut ToolContext, plan: &CheckedPlan) -> GroundingAnswer {
    let olt = ctx.olt;
    let config = ctx.config;
    if config.planning {
        // Recorded for the trace; a label absent from the scene surfaces below.
        let _ = call(ctx, EMIT_PLAN, json!({"plan": plan_to_value(&plan.plan)}));
    }
    // The scripted pipeline always ranks the caller's own plan.
    ctx.plan = Some(plan.clone());

    let retrieved = call(ctx, RETRIEVE, json!({"labels": plan.plan.target_labels})).unwrap_or(Value::Null);
    let ids: Vec<u64> = retrieved["candidates"]
        .as_array()
        .map(|c| c.iter().filter_map(|r| r["id"].as_u64()).collect())
        .unwrap_or_default();
    if ids.is_empty() {
        let trace = std::mem::take(&mut ctx.trace);
        let msg = format!("no object labeled {} in scene {}", plan.plan.target_labels.join("|"), olt.scene_id());
        return failure_answer(olt, "E_NO_CANDIDATES", msg, trace);
    }

    let (order, top): (Vec<u64>, Option<Value>) = if config.distance {
        let ranked = call(ctx, RANK, json!({})).unwrap_or(Value::Null);
        if let Some(f) = ranked.get("failure") {
            let trace = std::mem::take(&mut ctx.trace);
            let code = f["code"].as_str().unwrap_or("E_NO_CANDIDATES").to_string();
            let msg = f["message"].as_str().unwrap_or("no candidates").to_string();
            return failure_answer(olt, &code, msg, trace);
        }
        let rows = ranked["ranked"].as_array().cloned().unwrap_or_default();
        (rows.iter().filter_map(|r| r["id"].as_u64()).collect(), rows.first().cloned())
    } else {
        (ids.clone(), None)
    };
    let Some(&best) = order.first() else {
        let trace = std::mem::take(&mut ctx.trace);
        return failure_answer(olt, "E_NO_CANDIDATES", "ranking returned no candidates".into(), trace);
    };

    let mut rendered = false;
    if plan.plan.view_dependent() && config.rendering && ctx.cloud.is_some() {
        let top2: Vec<u64> = order.iter().take(2).copied().collect();
        rendered = call(ctx, RENDER, json!({"ids": top2, "view": view_to_value(&plan.plan.viewpoint)})).is_ok();
    }

    let mut rationale = describe_choice(olt, plan, best, ids.len(), top.as_ref());
    if !config.distance && ids.len() > 1 {
        rationale.push_str("; geometric ranking disabled, first candidate by id");
    }
    if rendered {
        rationale.push_str("; rendered top candidates for inspection, kept the geometric choice");
    }
    let _ = call(ctx, FINALIZE, json!({"id": best, "rationale": rationale}));
    let record = olt.get(best).expect("ranked ids come from the table");
    GroundingAnswer {
        scene_id: olt.scene_id().to_string(),
        object_id: Some(best),
        bbox: Some(record.bbox()),
        rationale,
        tool_trace: std::mem::take(&mut ctx.trace),
        fallbacks_used: vec![],
        failure: None,
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "it", "its", "of", "to", "in", "on", "at", "by", "and", "or", "with", "that", "this",
    "which", "one", "from", "near", "next", "left", "right", "front", "behind", "above", "below", "under", "between",
    "closest", "nearest", "farthest", "smallest", "largest", "big", "small", "when", "facing", "you", "are",
];

/// Label-only plan for the first scene label named in `query`, scanning
/// left to right and preferring longer phrases at each position.
pub fn label_only_plan_from_query(query: &str, vocab: &LabelVocabulary) -> Option<CheckedPlan> {
    let words: Vec<String> = query
        .split(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    for start in 0..words.len() {
        for len in (1..=3.min(words.len() - start)).rev() {
            let gram = &words[start..start + len];
            if gram.iter().all(|w| STOPWORDS.contains(&w.as_str())) {
                continue;
            }
            if let Ok(res) = resolve_label(&gram.join(" "), vocab) {
                return Some(CheckedPlan {
                    plan: PredicatePlan::label_only(vec![res.label.clone()]),
                    resolutions: vec![res],
                    empty_roles: vec![],
                });
            }
        }
    }
    None
}

/// Scripted answer used when the language-model path cannot finish. Uses
/// `prior` if the model managed to emit a valid plan.
pub fn run_scripted_fallback(
    olt: &SceneOlt,
    cloud: Option<&PointCloud>,
    query: &str,
    vocab: &LabelVocabulary,
    config: &ToolConfig,
    prior: Option<CheckedPlan>,
    mut trace: Vec<TraceEntry>,
) -> GroundingAnswer {
    let mut answer = match prior.or_else(|| label_only_plan_from_query(query, vocab)) {
        Some(plan) => {
            let mut a = run_scripted(olt, cloud, &plan, config);
            trace.append(&mut a.tool_trace);
            a.tool_trace = trace;
            a
        }
        None => failure_answer(olt, "E_UNKNOWN_LABEL", format!("no scene label found in query {query:?}"), trace),
    };
    answer.fallbacks_used.push(SCRIPTED_FALLBACK.to_string());
    answer.rationale = format!("{} (scripted fallback)", answer.rationale);
    answer
}
