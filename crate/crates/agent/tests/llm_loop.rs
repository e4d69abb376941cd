use std::collections::BTreeMap;

use oltground_agent::mock::{conformance_policy, malformed_policy, oversized_render_policy, text_message, PolicyBackend};
use oltground_agent::tools::{DISTANCE, EMIT_PLAN, FINALIZE, RANK, RENDER, RETRIEVE};
use oltground_agent::{run_llm, run_scripted, ToolConfig, SCRIPTED_FALLBACK};
use oltground_core::olt::{ObjectRecord, SceneOlt};
use oltground_core::plan::{parse_plan, plan_to_value, validate_plan};
use oltground_core::scene::PointCloud;
use oltground_core::vocab::{default_aliases, LabelVocabulary};
use serde_json::Value;
use std::sync::Arc;

fn scene() -> (SceneOlt, PointCloud) {
    let rec = |id, label: &str, c: [f64; 3]| ObjectRecord { id, label: label.into(), center: c, size: [0.6, 0.6, 0.9] };
    let recs = vec![
        rec(1, "chair", [0.0, 0.0, 0.45]),
        rec(2, "chair", [2.0, 0.0, 0.45]),
        rec(3, "chair", [4.0, 1.0, 0.45]),
        rec(4, "table", [4.5, 0.0, 0.45]),
    ];
    let mut pts = Vec::new();
    for r in &recs {
        for i in 0..50 {
            let t = i as f64 / 50.0;
            pts.push([r.center[0] - 0.3 + 0.6 * t, r.center[1], r.center[2]]);
        }
    }
    let colors = vec![[200, 200, 200]; pts.len()];
    (SceneOlt::new("s", recs).unwrap(), PointCloud::new("s", pts, colors).unwrap())
}

fn trace_tools(a: &oltground_agent::GroundingAnswer) -> Vec<&str> {
    a.tool_trace.iter().map(|t| t.tool.as_str()).collect()
}

#[test]
fn conformance_matches_scripted() {
    let (olt, cloud) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let plan = validate_plan(&parse_plan("target chair; anchor t: table; next_to(t, 2.5); nearest(t)").unwrap(), &olt, &vocab)
        .unwrap();
    let config = ToolConfig::default();
    let expected = run_scripted(&olt, Some(&cloud), &plan, &config);
    let backend = PolicyBackend::new(conformance_policy(plan_to_value(&plan.plan)));
    let got = run_llm(&olt, Some(&cloud), "the chair next to the table", &backend, &config, &vocab).unwrap();
    assert_eq!(got.object_id, expected.object_id);
    assert_eq!(got.bbox, expected.bbox);
    assert!(got.fallbacks_used.is_empty());
    assert_eq!(trace_tools(&got), vec![EMIT_PLAN, RETRIEVE, DISTANCE, RANK, FINALIZE]);
    let first = &backend.requests.lock().unwrap()[0];
    assert_eq!(first["temperature"], 0);
    assert!(first["tools"].as_array().unwrap().iter().any(|t| t["name"] == RENDER));
}

#[test]
fn malformed_twice_falls_back() {
    let (olt, cloud) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let backend = PolicyBackend::new(malformed_policy());
    let a = run_llm(&olt, Some(&cloud), "the table", &backend, &ToolConfig::default(), &vocab).unwrap();
    assert_eq!(a.fallbacks_used, vec![SCRIPTED_FALLBACK.to_string()]);
    assert_eq!(a.object_id, Some(4));
    assert_eq!(backend.requests.lock().unwrap().len(), 2);
    // Both malformed attempts are in the trace ahead of the fallback's own calls.
    assert_eq!(&trace_tools(&a)[..2], &[EMIT_PLAN, EMIT_PLAN]);
}

#[test]
fn render_cap_is_enforced_then_retried() {
    let (olt, cloud) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let ids: Vec<u64> = std::iter::repeat([1u64, 2, 3, 4]).flatten().take(20).collect();
    let backend = PolicyBackend::new(oversized_render_policy(ids));
    let a = run_llm(&olt, Some(&cloud), "the red chair", &backend, &ToolConfig::default(), &vocab).unwrap();
    assert_eq!(trace_tools(&a), vec![RENDER, RENDER, FINALIZE]);
    let reqs = backend.requests.lock().unwrap();
    let error_msg = reqs[1]["messages"].as_array().unwrap().last().unwrap();
    assert!(error_msg["content"].as_str().unwrap().contains("E_TOOL_ARGS"));
    // The successful render reached the model as an image.
    let image_turn = reqs[2]["messages"].as_array().unwrap().last().unwrap();
    assert!(image_turn["content"].as_array().unwrap().iter().any(|c| c["type"] == "image" && c["data"].is_string()));
    let sizes: Vec<usize> = a.tool_trace[..2].iter().map(|t| t.args["ids"].as_array().unwrap().len()).collect();
    assert_eq!(sizes, vec![20, 8]);
}

#[test]
fn budget_exhaustion_is_flagged() {
    let (olt, cloud) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let backend = PolicyBackend::new(Arc::new(|_: &Value| text_message("thinking")));
    let config = ToolConfig { max_tool_calls: 3, ..ToolConfig::default() };
    let a = run_llm(&olt, Some(&cloud), "the table", &backend, &config, &vocab).unwrap();
    assert_eq!(backend.requests.lock().unwrap().len(), 3);
    assert_eq!(a.fallbacks_used.last().map(String::as_str), Some(SCRIPTED_FALLBACK));
    assert!(a.fallbacks_used.len() == 2);
    assert_eq!(a.object_id, Some(4));
}

#[test]
fn context_mapping_resolves_unmatched_term() {
    let (olt, _) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, BTreeMap::new());
    let plan: Value = serde_json::json!({"schema": "plan/1", "target_labels": ["seat"]});
    let policy = Arc::new(move |req: &Value| match oltground_agent::mock::turn_index(req) {
        0 => oltground_agent::mock::call_message(EMIT_PLAN, serde_json::json!({"plan": plan, "label_context": {"seat": "chair"}})),
        _ => oltground_agent::mock::call_message(FINALIZE, serde_json::json!({"id": 1, "rationale": "seat means chair"})),
    });
    let backend = PolicyBackend::new(policy);
    let a = run_llm(&olt, None, "the seat", &backend, &ToolConfig::default(), &vocab).unwrap();
    assert_eq!(a.object_id, Some(1));
    let reqs = backend.requests.lock().unwrap();
    let tool_msg = reqs[1]["messages"].as_array().unwrap().last().unwrap();
    assert!(tool_msg["content"].as_str().unwrap().contains("\"context\""), "{tool_msg}");
}

#[test]
fn empty_query_is_rejected() {
    let (olt, _) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let backend = PolicyBackend::new(malformed_policy());
    assert!(run_llm(&olt, None, "  ", &backend, &ToolConfig::default(), &vocab).is_err());
}

#[cfg(feature = "mock-server")]
#[test]
fn conformance_over_http() {
    use oltground_agent::mock::MockServer;
    use oltground_agent::{BackendEndpoint, HttpBackend};
    let (olt, cloud) = scene();
    let vocab = LabelVocabulary::from_olt(&olt, default_aliases());
    let plan = validate_plan(&parse_plan("target chair; anchor t: table; nearest(t)").unwrap(), &olt, &vocab).unwrap();
    let config = ToolConfig::default();
    let expected = run_scripted(&olt, Some(&cloud), &plan, &config);
    let server = MockServer::start(conformance_policy(plan_to_value(&plan.plan))).unwrap();
    let backend = HttpBackend::new(BackendEndpoint {
        base_url: server.base_url(),
        model: "mock".into(),
        api_key: Some("k".into()),
        timeout_s: 5.0,
    })
    .unwrap();
    let got = run_llm(&olt, Some(&cloud), "the chair nearest the table", &backend, &config, &vocab).unwrap();
    assert_eq!((got.object_id, got.bbox), (expected.object_id, expected.bbox));
    assert_eq!(server.requests().len(), 5);
}
