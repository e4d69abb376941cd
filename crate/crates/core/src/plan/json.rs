//! `plan/1` JSON form of the AST. This is also the argument schema of the
//! agent's `emit_plan` tool.

use serde_json::{json, Map, Value};

use crate::camera::ViewSpec;
use crate::error::PlanError;
use crate::plan::ast::{Anchor, Frame, Predicate, PredicateKind, PredicatePlan};

pub const PLAN_SCHEMA: &str = "plan/1";

/// `null`, a named view, or `{"pose": {"eye": [..], "target": [..]}}`.
pub fn view_to_value(v: &Option<ViewSpec>) -> Value {
    match v {
        None => Value::Null,
        Some(ViewSpec::Top) => json!("top"),
        Some(ViewSpec::Front) => json!("front"),
        Some(ViewSpec::Side) => json!("side"),
        Some(ViewSpec::Pose { eye, target }) => json!({"pose": {"eye": eye, "target": target}}),
    }
}

pub fn plan_to_value(plan: &PredicatePlan) -> Value {
    let anchors: Vec<Value> = plan.anchors.iter().map(|a| json!({"name": a.name, "labels": a.labels})).collect();
    let constraints: Vec<Value> = plan
        .constraints
        .iter()
        .map(|c| {
            json!({
                "kind": c.kind.name(),
                "anchor_refs": c.anchor_refs,
                "frame": match c.frame { Frame::Scene => "scene", Frame::Camera => "camera" },
                "params": c.param,
            })
        })
        .collect();
    json!({
        "schema": PLAN_SCHEMA,
        "target_labels": plan.target_labels,
        "anchors": anchors,
        "constraints": constraints,
        "viewpoint": view_to_value(&plan.viewpoint),
        "view_dependent": plan.view_dependent(),
    })
}

/// Compact, key-sorted encoding.
pub fn plan_to_json(plan: &PredicatePlan) -> Vec<u8> {
    serde_json::to_vec(&plan_to_value(plan)).expect("plan serializes")
}

fn malformed(msg: impl Into<String>) -> PlanError {
    PlanError::MalformedJson(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn string_list(v: Option<&Value>, what: &str) -> Result<Vec<String>, PlanError> {
    let arr = v.and_then(Value::as_array).ok_or_else(|| malformed(format!("{what} must be an array of strings")))?;
    arr.iter()
        .map(|s| s.as_str().map(str::to_string).ok_or_else(|| malformed(format!("{what} must contain strings"))))
        .collect()
}

fn vec3(v: Option<&Value>, what: &str) -> Result<[f64; 3], PlanError> {
    let arr = v.and_then(Value::as_array).filter(|a| a.len() == 3);
    let arr = arr.ok_or_else(|| malformed(format!("{what} must be [x, y, z]")))?;
    let mut out = [0.0; 3];
    for (o, x) in out.iter_mut().zip(arr) {
        *o = x.as_f64().ok_or_else(|| malformed(format!("{what} must hold numbers")))?;
    }
    Ok(out)
}

pub fn view_from_value(v: Option<&Value>) -> Result<Option<ViewSpec>, PlanError> {
    let Some(v) = v.filter(|v| !v.is_null()) else { return Ok(None) };
    if let Some(s) = v.as_str() {
        return match s {
            "top" => Ok(Some(ViewSpec::Top)),
            "front" => Ok(Some(ViewSpec::Front)),
            "side" => Ok(Some(ViewSpec::Side)),
            other => Err(malformed(format!("unknown viewpoint {other:?}"))),
        };
    }
    let pose = v
        .as_object()
        .and_then(|o| o.get("pose"))
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("viewpoint must be \"top\", \"front\", \"side\" or {\"pose\": {...}}"))?;
    Ok(Some(ViewSpec::Pose { eye: vec3(pose.get("eye"), "pose.eye")?, target: vec3(pose.get("target"), "pose.target")? }))
}

pub fn plan_from_value(value: &Value) -> Result<PredicatePlan, PlanError> {
    let obj = value.as_object().ok_or_else(|| malformed("plan must be a JSON object"))?;
    match obj.get("schema").and_then(Value::as_str) {
        Some(PLAN_SCHEMA) => {}
        found => {
            return Err(PlanError::SchemaVersionMismatch {
                expected: PLAN_SCHEMA,
                found: found.unwrap_or_default().to_string(),
            })
        }
    }
    let target_labels = string_list(field(obj, "target_labels"), "target_labels")?;
    let mut anchors = Vec::new();
    if let Some(list) = field(obj, "anchors") {
        for a in list.as_array().ok_or_else(|| malformed("anchors must be an array"))? {
            let a = a.as_object().ok_or_else(|| malformed("anchor must be an object"))?;
            let name = a.get("name").and_then(Value::as_str).ok_or_else(|| malformed("anchor.name must be a string"))?;
            anchors.push(Anchor { name: name.to_string(), labels: string_list(a.get("labels"), "anchor.labels")? });
        }
    }
    let viewpoint = view_from_value(field(obj, "viewpoint"))?;
    let mut plan = PredicatePlan { target_labels, anchors, constraints: vec![], viewpoint };
    if let Some(list) = field(obj, "constraints") {
        for c in list.as_array().ok_or_else(|| malformed("constraints must be an array"))? {
            let c = c.as_object().ok_or_else(|| malformed("constraint must be an object"))?;
            let name = c.get("kind").and_then(Value::as_str).ok_or_else(|| malformed("constraint.kind must be a string"))?;
            let kind = PredicateKind::from_name(name)
                .or_else(|| PredicateKind::from_superlative(name))
                .ok_or_else(|| PlanError::UnknownKind(name.to_string()))?;
            let anchor_refs = match field(c, "anchor_refs") {
                Some(v) => string_list(Some(v), "constraint.anchor_refs")?,
                None => vec![],
            };
            let mut pred = Predicate::new(kind, anchor_refs);
            if let Some(p) = field(c, "params") {
                let r = p
                    .as_f64()
                    .or_else(|| p.get("radius").and_then(Value::as_f64))
                    .ok_or_else(|| malformed("constraint.params must be a number"))?;
                pred.param = Some(r);
            }
            pred.frame = match field(c, "frame").map(|f| f.as_str()) {
                None => plan.default_frame(kind),
                Some(Some("scene")) => Frame::Scene,
                Some(Some("camera")) => Frame::Camera,
                Some(_) => return Err(malformed("constraint.frame must be \"scene\" or \"camera\"")),
            };
            plan.constraints.push(pred);
        }
    }
    plan.check()?;
    if let Some(declared) = field(obj, "view_dependent") {
        let declared = declared.as_bool().ok_or_else(|| malformed("view_dependent must be a boolean"))?;
        if declared != plan.view_dependent() {
            return Err(PlanError::InconsistentViewDependence { declared });
        }
    }
    Ok(plan)
}

pub fn plan_from_json(bytes: &[u8]) -> Result<PredicatePlan, PlanError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    plan_from_value(&value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;

    #[test]
    fn canonical_round_trip() {
        let p = parse_plan("target chair; anchor t: table; nearest(t)").unwrap();
        let bytes = plan_to_json(&p);
        assert_eq!(plan_from_json(&bytes).unwrap(), p);
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"anchors":[{"labels":["table"],"name":"t"}],"constraints":[{"anchor_refs":["t"],"frame":"scene","kind":"nearest","params":null}],"schema":"plan/1","target_labels":["chair"],"view_dependent":false,"viewpoint":null}"#
        );
    }

    #[test]
    fn unknown_kind_and_schema() {
        let bad = br#"{"schema":"plan/1","target_labels":["chair"],"constraints":[{"kind":"teleports_to"}]}"#;
        assert_eq!(plan_from_json(bad), Err(PlanError::UnknownKind("teleports_to".into())));
        let v2 = br#"{"schema":"plan/2","target_labels":["chair"]}"#;
        assert!(matches!(plan_from_json(v2), Err(PlanError::SchemaVersionMismatch { .. })));
        assert!(matches!(plan_from_json(b"{"), Err(PlanError::MalformedJson(_))));
    }

    #[test]
    fn minimal_input_gets_defaults() {
        let src = br#"{"schema":"plan/1","target_labels":["chair"],"anchors":[{"name":"t","labels":["table"]}],
            "viewpoint":"front","constraints":[{"kind":"next_to","anchor_refs":["t"]},{"kind":"leftmost"}]}"#;
        let p = plan_from_json(src).unwrap();
        assert_eq!(p.constraints[0].param, Some(1.0));
        assert_eq!(p.constraints[1].kind, PredicateKind::LeftOf);
        assert_eq!(p.constraints[1].frame, Frame::Camera);
        assert!(p.view_dependent());
    }

    #[test]
    fn declared_view_dependence_must_agree() {
        let src = br#"{"schema":"plan/1","target_labels":["chair"],"constraints":[{"kind":"smallest"}],"view_dependent":true}"#;
        assert_eq!(plan_from_json(src), Err(PlanError::InconsistentViewDependence { declared: true }));
    }
}
