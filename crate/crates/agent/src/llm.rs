//! Tool-calling loop against a chat backend.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use oltground_core::geo::TIE_TOLERANCE;
use oltground_core::olt::SceneOlt;
use oltground_core::scene::PointCloud;
use oltground_core::vocab::LabelVocabulary;
use serde_json::{json, Value};

use crate::answer::{result_digest, GroundingAnswer, TraceEntry};
use crate::backend::{ChatBackend, ChatRequest, RawToolCall};
use crate::config::{ToolConfig, MAX_RENDER_IDS};
use crate::error::AgentError;
use crate::scripted::run_scripted_fallback;
use crate::tools::{dispatch_tool, error_json, tool_specs, ToolCall, ToolContext};

/// Extra flag recorded when the model never called `finalize`.
pub const BUDGET_EXHAUSTED: &str = "no_finalize_within_budget";
/// Malformed tool-argument payloads tolerated before falling back.
pub const MALFORMED_LIMIT: usize = 2;

const VISUAL_WORDS: &[&str] = &[
    "color", "colour", "colored", "coloured", "red", "green", "blue", "yellow", "orange", "purple", "pink", "brown",
    "black", "white", "gray", "grey", "beige", "dark", "light", "bright", "wooden", "wood", "metal", "metallic",
    "glass", "plastic", "leather", "fabric", "cloth", "stone", "marble", "material", "texture", "textured",
    "striped", "patterned", "shiny", "matte",
];

/// True when the query names a color, material or texture.
pub fn names_visual_attribute(query: &str) -> bool {
    query
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .any(|w| VISUAL_WORDS.contains(&w.as_str()))
}

pub fn system_prompt(olt: &SceneOlt, config: &ToolConfig) -> String {
    let mut s = String::from(
        "You ground a referring expression to one object of a 3D scene. The scene is summarized as an object table; \
         every object has an integer id, a label and an axis-aligned box (center and size in meters, z up).\n",
    );
    if config.planning {
        s.push_str(
            "First call emit_plan with a plan/1 JSON plan: target_labels, anchors [{name, labels}], constraints \
             [{kind, anchor_refs}] with kind one of left_of, right_of, in_front_of, behind, above, below, next_to, \
             between, nearest, farthest, smallest, largest, and an optional viewpoint. If a query term does not match a \
             scene label, pass label_context mapping it to the scene label you infer.\n",
        );
    }
    s.push_str("Use retrieve_by_label to list candidates");
    if config.distance {
        s.push_str(", distance and rank for geometric reasoning");
    }
    s.push_str(".\n");
    if config.rendering {
        s.push_str(&format!(
            "Call render only if the query names a color, material or texture, or if the plan is view-dependent. \
             A render highlights at most {MAX_RENDER_IDS} ids. For \"when facing X\" queries pass facing with X's id. Prefer the geometric top-1 unless the image shows it \
             contradicts a visual attribute named in the query.\n"
        ));
    }
    s.push_str("Finish with finalize(id, rationale).\nScene labels: ");
    s.push_str(&olt.labels().into_iter().collect::<Vec<_>>().join(", "));
    s
}

fn assistant_message(text: &Option<String>, calls: &[RawToolCall], turn: usize) -> Value {
    let calls: Vec<Value> = calls
        .iter()
        .enumerate()
        .map(|(i, c)| json!({"id": call_id(turn, i), "name": c.name, "arguments": c.arguments}))
        .collect();
    json!({"role": "assistant", "content": text.clone().unwrap_or_default(), "tool_calls": calls})
}

fn call_id(turn: usize, i: usize) -> String {
    format!("call_{turn}_{i}")
}

fn tool_message(id: &str, name: &str, result: &Value) -> Value {
    json!({"role": "tool", "tool_call_id": id, "name": name, "content": result.to_string()})
}

/// Keeps an unambiguous geometric top-1 unless the query names a visual
/// attribute. Returns the id to commit and a note for the rationale.
fn resolve_override(ctx: &ToolContext, chosen: u64, query: &str) -> (u64, Option<String>) {
    let Some(ranked) = ctx.ranking.as_ref().filter(|r| !r.is_empty()) else { return (chosen, None) };
    let top = &ranked[0];
    if top.record.id == chosen {
        return (chosen, None);
    }
    let unambiguous = ranked.len() == 1 || top.score - ranked[1].score > TIE_TOLERANCE;
    if !unambiguous {
        return (chosen, None);
    }
    if names_visual_attribute(query) {
        (chosen, Some(format!("visual judgment overrode geometric top-1 #{}", top.record.id)))
    } else {
        (top.record.id, Some(format!("kept geometric top-1 #{} over model choice #{chosen}", top.record.id)))
    }
}

/// Runs the model loop. Transport failures are returned as errors; protocol
/// trouble inside the loop degrades to the scripted fallback.
pub fn run_llm(
    olt: &SceneOlt,
    cloud: Option<&PointCloud>,
    query: &str,
    backend: &dyn ChatBackend,
    config: &ToolConfig,
    vocab: &LabelVocabulary,
) -> Result<GroundingAnswer, AgentError> {
    config.validate()?;
    if query.trim().is_empty() {
        return Err(AgentError::EmptyQuery);
    }
    let mut ctx = ToolContext::new(olt, cloud, vocab, config);
    let mut messages = vec![
        json!({"role": "system", "content": system_prompt(olt, config)}),
        json!({"role": "user", "content": query}),
    ];
    let tools = tool_specs(config);
    let mut budget = config.max_tool_calls;
    let mut malformed = 0usize;
    let mut turn = 0usize;

    let fallback = |ctx: ToolContext, flag: Option<&str>| {
        let mut a = run_scripted_fallback(olt, cloud, query, vocab, config, ctx.plan, ctx.trace);
        if let Some(f) = flag {
            a.fallbacks_used.insert(0, f.to_string());
        }
        a
    };

    while budget > 0 {
        let req = ChatRequest { model: backend.model().to_string(), messages: messages.clone(), tools: tools.clone() };
        let resp = backend.chat(&req)?;
        turn += 1;
        messages.push(assistant_message(&resp.text, &resp.tool_calls, turn));
        if resp.tool_calls.is_empty() {
            budget -= 1;
            messages.push(json!({"role": "user", "content": "Continue with a tool call; finish with finalize."}));
            continue;
        }
        let mut images = Vec::new();
        for (i, raw) in resp.tool_calls.iter().enumerate() {
            if budget == 0 {
                break;
            }
            budget -= 1;
            let id = call_id(turn, i);
            let args = match serde_json::from_str::<Value>(&raw.arguments) {
                Ok(v) if v.is_object() => v,
                bad => {
                    malformed += 1;
                    let why = match bad {
                        Ok(_) => "arguments must be a JSON object".to_string(),
                        Err(e) => format!("arguments are not valid JSON: {e}"),
                    };
                    let err = json!({"error": {"code": "E_MALFORMED_ARGS", "message": why}});
                    ctx.trace.push(TraceEntry {
                        tool: raw.name.clone(),
                        args: json!({"raw": raw.arguments}),
                        result_digest: result_digest(&err, &[]),
                        elapsed_ms: 0.0,
                    });
                    if malformed >= MALFORMED_LIMIT {
                        return Ok(fallback(ctx, None));
                    }
                    let mut note = err.clone();
                    note["hint"] = json!("resend this call with a valid JSON object as arguments");
                    messages.push(tool_message(&id, &raw.name, &note));
                    continue;
                }
            };
            let call = ToolCall { name: raw.name.clone(), arguments: args };
            match dispatch_tool(&call, &mut ctx) {
                Ok(out) => {
                    messages.push(tool_message(&id, &raw.name, &out.result));
                    for att in &out.attachments {
                        images.push(json!({"type": "image", "data": B64.encode(&att.data)}));
                    }
                }
                Err(e) => messages.push(tool_message(&id, &raw.name, &error_json(&e))),
            }
            if let Some((chosen, rationale)) = ctx.finalized.take() {
                let (final_id, note) = resolve_override(&ctx, chosen, query);
                let record = olt.get(final_id).expect("finalize validated the id");
                let rationale = match note {
                    Some(n) if rationale.is_empty() => n,
                    Some(n) => format!("{rationale}; {n}"),
                    None => rationale,
                };
                return Ok(GroundingAnswer {
                    scene_id: olt.scene_id().to_string(),
                    object_id: Some(final_id),
                    bbox: Some(record.bbox()),
                    rationale,
                    tool_trace: ctx.trace,
                    fallbacks_used: vec![],
                    failure: None,
                });
            }
        }
        if !images.is_empty() {
            let mut content = vec![json!({"type": "text", "text": "Rendered view; colors follow the legend above."})];
            content.extend(images);
            messages.push(json!({"role": "user", "content": content}));
        }
    }
    Ok(fallback(ctx, Some(BUDGET_EXHAUSTED)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visual_words() {
        assert!(names_visual_attribute("the Red chair"));
        assert!(names_visual_attribute("a wooden table near the door"));
        assert!(!names_visual_attribute("the chair closest to the window"));
    }
}
