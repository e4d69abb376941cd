//! Query JSONL: one grounding query with its ground truth per line.

use std::collections::BTreeSet;

use oltground_core::olt::SceneOlt;
use oltground_core::plan::{plan_from_value, plan_to_value, PredicatePlan};
use oltground_core::Aabb;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{EvalError, LineError};

/// Table columns of the benchmark reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Unique,
    Multiple,
    Easy,
    Hard,
    ViewDep,
    ViewIndep,
}

impl Stratum {
    pub const ALL: [Stratum; 6] =
        [Self::Unique, Self::Multiple, Self::Easy, Self::Hard, Self::ViewDep, Self::ViewIndep];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unique => "unique",
            Self::Multiple => "multiple",
            Self::Easy => "easy",
            Self::Hard => "hard",
            Self::ViewDep => "view_dep",
            Self::ViewIndep => "view_indep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// The other member of this tag's exclusive pair.
    pub fn opposite(self) -> Self {
        match self {
            Self::Unique => Self::Multiple,
            Self::Multiple => Self::Unique,
            Self::Easy => Self::Hard,
            Self::Hard => Self::Easy,
            Self::ViewDep => Self::ViewIndep,
            Self::ViewIndep => Self::ViewDep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub scene_id: String,
    pub text: String,
    pub plan: Option<PredicatePlan>,
    pub gt_object_id: Option<u64>,
    /// Authoritative when present; otherwise filled from the table by id.
    pub gt_bbox: Option<Aabb>,
    pub strata: BTreeSet<Stratum>,
}

impl QueryRecord {
    pub fn has(&self, s: Stratum) -> bool {
        self.strata.contains(&s)
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("query_id".into(), json!(self.query_id));
        m.insert("scene_id".into(), json!(self.scene_id));
        m.insert("text".into(), json!(self.text));
        if let Some(p) = &self.plan {
            m.insert("plan".into(), plan_to_value(p));
        }
        if let Some(id) = self.gt_object_id {
            m.insert("gt_object_id".into(), json!(id));
        }
        if let Some(b) = &self.gt_bbox {
            m.insert("gt_bbox".into(), json!({"center": b.center, "size": b.size}));
        }
        m.insert("strata".into(), json!(self.strata.iter().map(|s| s.as_str()).collect::<Vec<_>>()));
        Value::Object(m)
    }

    pub fn to_line(&self) -> String {
        self.to_value().to_string()
    }

    /// Parses one record. Accepts the field names of common referring
    /// datasets (`description`/`utterance`, `object_id`/`target_id`,
    /// `scan_id`) and numeric strings for ids; unknown fields are ignored.
    pub fn from_value(v: &Value, line: usize) -> Result<Self, String> {
        let o = v.as_object().ok_or("record must be a JSON object")?;
        let get = |keys: &[&str]| keys.iter().find_map(|k| o.get(*k).filter(|x| !x.is_null()));
        let scene_id = get(&["scene_id", "scan_id"])
            .map(scalar_string)
            .transpose()?
            .ok_or("missing scene_id")?;
        let text = get(&["text", "description", "utterance"]).and_then(Value::as_str).unwrap_or("").to_string();
        let gt_object_id = get(&["gt_object_id", "object_id", "target_id"]).map(id_value).transpose()?;
        let query_id = match get(&["query_id", "id"]) {
            Some(q) => scalar_string(q)?,
            None => match (gt_object_id, get(&["ann_id"])) {
                (Some(obj), Some(ann)) => format!("{scene_id}:{obj}:{}", scalar_string(ann)?),
                _ => format!("{scene_id}:line{line}"),
            },
        };
        let plan = match get(&["plan"]) {
            Some(p) => Some(plan_from_value(p).map_err(|e| format!("plan: {e}"))?),
            None => None,
        };
        let gt_bbox = match get(&["gt_bbox"]) {
            Some(b) => Some(Aabb::deserialize(b).map_err(|e| format!("gt_bbox: {e}"))?),
            None => None,
        };
        if gt_bbox.is_none() && gt_object_id.is_none() {
            return Err("no ground truth: need gt_bbox or an object id".into());
        }
        let mut strata = BTreeSet::new();
        if let Some(tags) = get(&["strata"]) {
            for t in tags.as_array().ok_or("strata must be an array")? {
                let s = t.as_str().ok_or("strata must hold strings")?;
                strata.insert(Stratum::parse(s).ok_or_else(|| format!("unknown stratum {s:?}"))?);
            }
        }
        if let Some(kind) = get(&["eval_type"]).and_then(Value::as_str).and_then(Stratum::parse) {
            strata.insert(kind);
        }
        for (key, yes) in [("is_hard", Stratum::Hard), ("is_view_dep", Stratum::ViewDep), ("is_unique", Stratum::Unique)] {
            if let Some(b) = o.get(key).and_then(Value::as_bool) {
                strata.insert(if b { yes } else { yes.opposite() });
            }
        }
        if !strata.contains(&Stratum::Easy) && !strata.contains(&Stratum::Hard) {
            if let Some(n) = get(&["stimulus_id"]).and_then(Value::as_str).and_then(stimulus_instances) {
                strata.insert(if n >= 3 { Stratum::Hard } else { Stratum::Easy });
            }
        }
        for s in &strata {
            if strata.contains(&s.opposite()) {
                return Err(format!("strata {} and {} are exclusive", s.as_str(), s.opposite().as_str()));
            }
        }
        Ok(Self { query_id, scene_id, text, plan, gt_object_id, gt_bbox, strata })
    }
}

/// Same-class instance count from a `scan-class-count-target-distractors...`
/// stimulus id.
fn stimulus_instances(stimulus: &str) -> Option<usize> {
    stimulus.split('-').skip(2).find_map(|t| t.parse().ok())
}

/// Words that make a description depend on where the observer stands.
pub const VIEW_DEP_WORDS: [&str; 10] =
    ["facing", "looking", "front", "behind", "back", "right", "left", "leftmost", "rightmost", "across"];

fn set_if_missing(q: &mut QueryRecord, pair: Stratum, yes: bool) {
    if !q.has(pair) && !q.has(pair.opposite()) {
        q.strata.insert(if yes { pair } else { pair.opposite() });
    }
}

/// Fills strata a record does not carry: unique/multiple (>= 2 same-label
/// objects) and easy/hard (>= 3) from the scene table, view dependence from
/// the wording. Tags already present are kept.
pub fn derive_strata(q: &mut QueryRecord, olt: Option<&SceneOlt>) {
    if let Some(label) = olt.zip(q.gt_object_id).and_then(|(o, id)| o.get(id)).map(|r| r.label.clone()) {
        let same = olt.map_or(0, |o| o.label_index().get(&label).map_or(0, Vec::len));
        set_if_missing(q, Stratum::Multiple, same >= 2);
        set_if_missing(q, Stratum::Hard, same >= 3);
    }
    if !q.text.trim().is_empty() {
        let lower = q.text.to_lowercase();
        let dep = lower.split(|c: char| !c.is_alphanumeric()).any(|w| VIEW_DEP_WORDS.contains(&w));
        set_if_missing(q, Stratum::ViewDep, dep);
    }
}

fn scalar_string(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err("id fields must be strings or numbers".into()),
    }
}

fn id_value(v: &Value) -> Result<u64, String> {
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
        .ok_or_else(|| format!("object id must be a non-negative integer, got {v}"))
}

/// Valid records plus per-line errors. Fails only when no line is usable.
pub fn load_queries(bytes: &[u8]) -> Result<(Vec<QueryRecord>, Vec<LineError>), EvalError> {
    let text = String::from_utf8_lossy(bytes);
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(line)
            .map_err(|e| e.to_string())
            .and_then(|v| QueryRecord::from_value(&v, n));
        match parsed {
            Ok(r) if !seen.insert(r.query_id.clone()) => {
                errors.push(LineError { line: n, message: format!("duplicate query_id {:?}", r.query_id) })
            }
            Ok(r) => records.push(r),
            Err(message) => errors.push(LineError { line: n, message }),
        }
    }
    if records.is_empty() && !errors.is_empty() {
        return Err(EvalError::MalformedJsonLine(errors));
    }
    Ok((records, errors))
}

pub fn save_queries(records: &[QueryRecord]) -> Vec<u8> {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out.into_bytes()
}
