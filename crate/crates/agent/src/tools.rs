//! Tool registry shared by the scripted pipeline and the LLM loop.

use std::collections::BTreeMap;
use std::time::Instant;

use oltground_core::camera::{auto_camera, facing_camera, ViewSpec};
use oltground_core::geo::{pairwise_distance, score_candidates_with, FrameSet, ScoredCandidate};
use oltground_core::olt::{retrieve_by_label, SceneOlt};
use oltground_core::plan::{
    plan_from_value, plan_to_value, validate_plan_with_context, view_from_value, CheckedPlan, PLAN_SCHEMA,
};
use oltground_core::render::{legend_json, render, write_png, HighlightSet, RenderOptions};
use oltground_core::scene::PointCloud;
use oltground_core::vocab::{resolve_label, LabelVocabulary};
use serde_json::{json, Value};

use crate::answer::{result_digest, TraceEntry};
use crate::config::{ToolConfig, MAX_RENDER_IDS};
use crate::error::ToolError;

pub const EMIT_PLAN: &str = "emit_plan";
pub const RETRIEVE: &str = "retrieve_by_label";
pub const DISTANCE: &str = "distance";
pub const RANK: &str = "rank";
pub const RENDER: &str = "render";
pub const FINALIZE: &str = "finalize";
pub const ALL_TOOLS: [&str; 6] = [EMIT_PLAN, RETRIEVE, DISTANCE, RANK, RENDER, FINALIZE];

#[derive(Debug, Clone, PartialEq)]
pub struct ToolCall {
    pub name: String,
    pub arguments: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub mime: &'static str,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolOutput {
    pub result: Value,
    pub attachments: Vec<Attachment>,
}

/// Mutable state of one grounding run.
pub struct ToolContext<'a> {
    pub olt: &'a SceneOlt,
    pub cloud: Option<&'a PointCloud>,
    pub vocab: &'a LabelVocabulary,
    pub config: &'a ToolConfig,
    /// Last plan accepted by `emit_plan`.
    pub plan: Option<CheckedPlan>,
    pub ranking: Option<Vec<ScoredCandidate>>,
    pub finalized: Option<(u64, String)>,
    pub trace: Vec<TraceEntry>,
}

impl<'a> ToolContext<'a> {
    pub fn new(olt: &'a SceneOlt, cloud: Option<&'a PointCloud>, vocab: &'a LabelVocabulary, config: &'a ToolConfig) -> Self {
        Self { olt, cloud, vocab, config, plan: None, ranking: None, finalized: None, trace: Vec::new() }
    }
}

pub fn tool_enabled(name: &str, config: &ToolConfig) -> Option<bool> {
    Some(match name {
        EMIT_PLAN => config.planning,
        RETRIEVE => config.retrieval,
        DISTANCE | RANK => config.distance,
        RENDER => config.rendering,
        FINALIZE => true,
        _ => return None,
    })
}

/// JSON-schema descriptions of the enabled tools.
pub fn tool_specs(config: &ToolConfig) -> Vec<Value> {
    let view = json!({"description": "\"top\", \"front\", \"side\" or {\"pose\": {\"eye\": [x,y,z], \"target\": [x,y,z]}}"});
    let specs = [
        (
            EMIT_PLAN,
            "Submit the structured plan for the query. Labels are resolved against the scene; the response reports the mapping.",
            json!({"type": "object", "properties": {
                "plan": {"type": "object", "description": format!("{PLAN_SCHEMA} plan: target_labels, anchors [{{name, labels}}], constraints [{{kind, anchor_refs, frame?, params?}}], viewpoint?")},
                "label_context": {"type": "object", "description": "optional map from query term to a scene label you chose from context"}
            }, "required": ["plan"]}),
        ),
        (
            RETRIEVE,
            "List scene objects whose label matches any of the given labels.",
            json!({"type": "object", "properties": {"labels": {"type": "array", "items": {"type": "string"}}}, "required": ["labels"]}),
        ),
        (
            DISTANCE,
            "Euclidean distance in meters between two objects' box centers.",
            json!({"type": "object", "properties": {"a": {"type": "integer"}, "b": {"type": "integer"}}, "required": ["a", "b"]}),
        ),
        (
            RANK,
            "Score the target candidates of the current (or given) plan; best first.",
            json!({"type": "object", "properties": {"plan": {"type": "object"}}}),
        ),
        (
            RENDER,
            "Render the scene with up to 8 objects outlined. Returns an image and an id-to-color legend.",
            json!({"type": "object", "properties": {
                "ids": {"type": "array", "items": {"type": "integer"}, "maxItems": MAX_RENDER_IDS},
                "view": view,
                "facing": {"type": "integer", "description": "object id to look at from the far side of the scene; overrides view"}
            }, "required": ["ids"]}),
        ),
        (
            FINALIZE,
            "Commit to the answer object.",
            json!({"type": "object", "properties": {"id": {"type": "integer"}, "rationale": {"type": "string"}}, "required": ["id", "rationale"]}),
        ),
    ];
    specs
        .into_iter()
        .filter(|(name, _, _)| tool_enabled(name, config) == Some(true))
        .map(|(name, description, parameters)| json!({"name": name, "description": description, "parameters": parameters}))
        .collect()
}

fn arg_err(msg: impl Into<String>) -> ToolError {
    ToolError::ToolArgError(msg.into())
}

fn id_arg(v: Option<&Value>, what: &str) -> Result<u64, ToolError> {
    let v = v.ok_or_else(|| arg_err(format!("missing {what}")))?;
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
        .ok_or_else(|| arg_err(format!("{what} must be a non-negative integer")))
}

fn record_json(r: &oltground_core::ObjectRecord) -> Value {
    json!({"id": r.id, "label": r.label, "center": r.center, "size": r.size})
}

fn checked_from_args(args: &Value, ctx: &ToolContext) -> Result<CheckedPlan, ToolError> {
    let plan_value = if args.get("schema").is_some() { args } else { args.get("plan").ok_or_else(|| arg_err("missing plan"))? };
    let plan = plan_from_value(plan_value).map_err(|e| arg_err(format!("{}: {e}", e.code())))?;
    let mut hints = BTreeMap::new();
    if let Some(map) = args.get("label_context").and_then(Value::as_object) {
        for (k, v) in map {
            if let Some(v) = v.as_str() {
                hints.insert(oltground_core::segmentation::normalize_label(k), oltground_core::segmentation::normalize_label(v));
            }
        }
    }
    validate_plan_with_context(&plan, ctx.olt, ctx.vocab, &hints).map_err(|e| arg_err(format!("{}: {e}", e.code())))
}

fn emit_plan(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let checked = checked_from_args(args, ctx)?;
    let result = json!({
        "ok": true,
        "plan": plan_to_value(&checked.plan),
        "resolutions": checked.resolutions,
        "empty_roles": checked.empty_roles,
    });
    ctx.plan = Some(checked);
    Ok(ToolOutput { result, attachments: vec![] })
}

fn retrieve(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let labels = args
        .get("labels")
        .and_then(Value::as_array)
        .ok_or_else(|| arg_err("labels must be an array of strings"))?;
    let mut resolved = Vec::new();
    let mut resolutions = Vec::new();
    let mut unresolved = Vec::new();
    for l in labels {
        let term = l.as_str().ok_or_else(|| arg_err("labels must be strings"))?;
        match resolve_label(term, ctx.vocab) {
            Ok(r) => {
                resolved.push(r.label.clone());
                resolutions.push(r);
            }
            Err(_) => unresolved.push(term.to_string()),
        }
    }
    let records: Vec<Value> = retrieve_by_label(ctx.olt, &resolved).iter().map(record_json).collect();
    Ok(ToolOutput {
        result: json!({"candidates": records, "resolutions": resolutions, "unresolved": unresolved}),
        attachments: vec![],
    })
}

fn distance(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let (a, b) = match args.get("ids").and_then(Value::as_array) {
        Some(ids) if ids.len() == 2 => (id_arg(ids.first(), "ids[0]")?, id_arg(ids.get(1), "ids[1]")?),
        Some(_) => return Err(arg_err("ids must hold exactly two ids")),
        None => (id_arg(args.get("a"), "a")?, id_arg(args.get("b"), "b")?),
    };
    let ra = ctx.olt.get(a).ok_or_else(|| arg_err(format!("unknown object id {a}")))?;
    let rb = ctx.olt.get(b).ok_or_else(|| arg_err(format!("unknown object id {b}")))?;
    Ok(ToolOutput { result: json!({"a": a, "b": b, "meters": pairwise_distance(ra, rb)}), attachments: vec![] })
}

/// Scores the plan's target candidates under the configured composition.
pub fn rank_plan(plan: &CheckedPlan, ctx: &ToolContext) -> Result<Vec<ScoredCandidate>, oltground_core::GeoError> {
    let candidates = retrieve_by_label(ctx.olt, &plan.plan.target_labels);
    let frames = FrameSet::for_plan(ctx.olt, &plan.plan)?;
    score_candidates_with(&candidates, &plan.plan, ctx.olt, &frames, &ctx.config.scoring_options())
}

pub(crate) fn ranking_json(ranked: &[ScoredCandidate]) -> Value {
    let rows: Vec<Value> = ranked
        .iter()
        .map(|s| json!({"id": s.record.id, "label": s.record.label, "score": s.score, "per_predicate": s.per_predicate}))
        .collect();
    Value::Array(rows)
}

fn rank(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let plan = match args.get("plan").filter(|p| !p.is_null()) {
        Some(_) => checked_from_args(args, ctx)?,
        None => ctx.plan.clone().ok_or_else(|| arg_err("no plan: call emit_plan first or pass a plan"))?,
    };
    let result = match rank_plan(&plan, ctx) {
        Ok(ranked) => {
            let r = json!({"ranked": ranking_json(&ranked)});
            ctx.ranking = Some(ranked);
            r
        }
        Err(e) => {
            ctx.ranking = Some(vec![]);
            json!({"ranked": [], "failure": {"code": e.code(), "message": e.to_string()}})
        }
    };
    Ok(ToolOutput { result, attachments: vec![] })
}

/// Renders `ids` outlined from `view`; returns the legend JSON and PNG bytes.
pub fn render_ids(ctx: &ToolContext, ids: &[u64], view: ViewSpec) -> Result<(Value, Vec<u8>), ToolError> {
    let cloud = ctx.cloud.ok_or_else(|| arg_err("no point cloud is loaded for this scene"))?;
    let bounds = ctx.olt.bounds().ok_or_else(|| arg_err("scene has no objects"))?;
    let camera = auto_camera(&bounds, view).map_err(|e| arg_err(e.to_string()))?;
    let hl = HighlightSet::new(ids, ctx.olt).map_err(|e| arg_err(e.to_string()))?;
    let opts = RenderOptions { width: ctx.config.render_width, height: ctx.config.render_height, ..Default::default() };
    let img = render(cloud, &camera, &hl, ctx.olt, &opts).map_err(|e| arg_err(e.to_string()))?;
    let png = write_png(&img).map_err(|e| arg_err(e.to_string()))?;
    let legend: Value = serde_json::from_slice(&legend_json(&hl, &camera)).expect("legend is JSON");
    Ok((legend, png))
}

fn render_tool(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let ids = args.get("ids").and_then(Value::as_array).ok_or_else(|| arg_err("ids must be an array"))?;
    if ids.is_empty() || ids.len() > MAX_RENDER_IDS {
        return Err(arg_err(format!("render takes 1 to {MAX_RENDER_IDS} ids, got {}", ids.len())));
    }
    let ids = ids.iter().map(|v| id_arg(Some(v), "ids[]")).collect::<Result<Vec<_>, _>>()?;
    let view = match (args.get("facing").filter(|v| !v.is_null()), args.get("view")) {
        (Some(f), _) => {
            let id = id_arg(Some(f), "facing")?;
            let anchor = ctx.olt.get(id).ok_or_else(|| arg_err(format!("unknown object id {id}")))?;
            let bounds = ctx.olt.bounds().ok_or_else(|| arg_err("scene has no objects"))?;
            let pose = facing_camera(&bounds, anchor.center).map_err(|e| arg_err(e.to_string()))?;
            ViewSpec::Pose { eye: pose.eye, target: pose.target }
        }
        (None, Some(v)) if !v.is_null() => {
            view_from_value(Some(v)).map_err(|e| arg_err(e.to_string()))?.unwrap_or(ViewSpec::Top)
        }
        _ => ctx.plan.as_ref().and_then(|p| p.plan.viewpoint).unwrap_or(ViewSpec::Top),
    };
    let (legend, png) = render_ids(ctx, &ids, view)?;
    Ok(ToolOutput { result: legend, attachments: vec![Attachment { mime: "image/png", data: png }] })
}

fn finalize(args: &Value, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let id = id_arg(args.get("id"), "id")?;
    if ctx.olt.get(id).is_none() {
        return Err(arg_err(format!("unknown object id {id}")));
    }
    let rationale = args.get("rationale").and_then(Value::as_str).unwrap_or("").to_string();
    ctx.finalized = Some((id, rationale));
    Ok(ToolOutput { result: json!({"ok": true, "id": id}), attachments: vec![] })
}

/// Runs one tool call and appends it to the trace, successful or not.
pub fn dispatch_tool(call: &ToolCall, ctx: &mut ToolContext) -> Result<ToolOutput, ToolError> {
    let start = Instant::now();
    let out = match tool_enabled(&call.name, ctx.config) {
        None => Err(ToolError::UnknownTool(call.name.clone())),
        Some(false) => Err(ToolError::ToolDisabled(call.name.clone())),
        Some(true) => match call.name.as_str() {
            EMIT_PLAN => emit_plan(&call.arguments, ctx),
            RETRIEVE => retrieve(&call.arguments, ctx),
            DISTANCE => distance(&call.arguments, ctx),
            RANK => rank(&call.arguments, ctx),
            RENDER => render_tool(&call.arguments, ctx),
            FINALIZE => finalize(&call.arguments, ctx),
            _ => unreachable!("tool_enabled covers every registered tool"),
        },
    };
    let result_digest = match &out {
        Ok(o) => {
            let atts: Vec<&[u8]> = o.attachments.iter().map(|a| a.data.as_slice()).collect();
            result_digest(&o.result, &atts)
        }
        Err(e) => result_digest(&error_json(e), &[]),
    };
    ctx.trace.push(TraceEntry {
        tool: call.name.clone(),
        args: call.arguments.clone(),
        result_digest,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    });
    out
}

pub fn error_json(e: &ToolError) -> Value {
    json!({"error": {"code": e.code(), "message": e.to_string()}})
}

#[cfg(test)]
mod tests {
    use super::*;
    use oltground_core::olt::ObjectRecord;
    use oltground_core::vocab::default_aliases;

    fn olt() -> SceneOlt {
        let rec = |id, label: &str, x| ObjectRecord { id, label: label.into(), center: [x, 0.0, 0.0], size: [1.0; 3] };
        SceneOlt::new("s", vec![rec(3, "chair", 0.0), rec(7, "table", 3.0)]).unwrap()
    }

    #[test]
    fn distance_matches_engine() {
        let olt = olt();
        let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
        let config = ToolConfig::default();
        let mut ctx = ToolContext::new(&olt, None, &vocab, &config);
        let out = dispatch_tool(&ToolCall { name: DISTANCE.into(), arguments: json!({"a": 3, "b": 7}) }, &mut ctx).unwrap();
        assert_eq!(out.result["meters"], json!(3.0));
        assert_eq!(ctx.trace.len(), 1);
    }

    #[test]
    fn gating_and_unknown_tools_are_traced() {
        let olt = olt();
        let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
        let config = ToolConfig { rendering: false, ..ToolConfig::default() };
        let mut ctx = ToolContext::new(&olt, None, &vocab, &config);
        let r = dispatch_tool(&ToolCall { name: RENDER.into(), arguments: json!({"ids": [3]}) }, &mut ctx);
        assert_eq!(r, Err(ToolError::ToolDisabled(RENDER.into())));
        let r = dispatch_tool(&ToolCall { name: "teleport".into(), arguments: json!({}) }, &mut ctx);
        assert_eq!(r, Err(ToolError::UnknownTool("teleport".into())));
        assert_eq!(ctx.trace.iter().map(|t| t.tool.as_str()).collect::<Vec<_>>(), vec![RENDER, "teleport"]);
        assert!(tool_specs(&config).iter().all(|s| s["name"] != RENDER));
    }

    #[test]
    fn render_id_cap() {
        let olt = olt();
        let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
        let config = ToolConfig::default();
        let mut ctx = ToolContext::new(&olt, None, &vocab, &config);
        let ids: Vec<u64> = (0..20).collect();
        let r = dispatch_tool(&ToolCall { name: RENDER.into(), arguments: json!({"ids": ids}) }, &mut ctx);
        assert!(matches!(r, Err(ToolError::ToolArgError(m)) if m.contains("1 to 8")));
    }

    #[test]
    fn render_facing_looks_at_the_object() {
        let olt = olt();
        let points: Vec<[f64; 3]> = olt.records().iter().map(|r| r.center).collect();
        let cloud = PointCloud::new("s", points.clone(), vec![[90, 90, 90]; points.len()]).unwrap();
        let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
        let config = ToolConfig::default();
        let mut ctx = ToolContext::new(&olt, Some(&cloud), &vocab, &config);
        let out = dispatch_tool(&ToolCall { name: RENDER.into(), arguments: json!({"ids": [3], "facing": 3}) }, &mut ctx).unwrap();
        let want = facing_camera(&olt.bounds().unwrap(), olt.get(3).unwrap().center).unwrap();
        assert_eq!(out.result["camera"]["eye"], json!(want.eye));
        assert_eq!(out.result["camera"]["target"], json!(want.target));
        let r = dispatch_tool(&ToolCall { name: RENDER.into(), arguments: json!({"ids": [3], "facing": 77}) }, &mut ctx);
        assert!(matches!(r, Err(ToolError::ToolArgError(_))));
    }

    #[test]
    fn finalize_rejects_unknown_id() {
        let olt = olt();
        let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
        let config = ToolConfig::default();
        let mut ctx = ToolContext::new(&olt, None, &vocab, &config);
        let bad = ToolCall { name: FINALIZE.into(), arguments: json!({"id": 99, "rationale": "x"}) };
        assert!(dispatch_tool(&bad, &mut ctx).is_err());
        let good = ToolCall { name: FINALIZE.into(), arguments: json!({"id": "3", "rationale": "x"}) };
        dispatch_tool(&good, &mut ctx).unwrap();
        assert_eq!(ctx.finalized, Some((3, "x".into())));
    }
}
