use oltground_core::Aabb;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tool: String,
    pub args: Value,
    pub result_digest: String,
    /// Wall-clock time; written under `meta`, never compared.
    #[serde(skip)]
    pub elapsed_ms: f64,
}

impl PartialEq for TraceEntry {
    fn eq(&self, other: &Self) -> bool {
        self.tool == other.tool && self.args == other.args && self.result_digest == other.result_digest
    }
}

/// Hex SHA-256 over the compact JSON result followed by any attachment bytes.
pub fn result_digest(result: &Value, attachments: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(result).expect("JSON value serializes"));
    for a in attachments {
        h.update(a);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

/// Selected object with its exact table box, or a structured failure.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingAnswer {
    pub scene_id: String,
    pub object_id: Option<u64>,
    pub bbox: Option<Aabb>,
    pub rationale: String,
    pub tool_trace: Vec<TraceEntry>,
    pub fallbacks_used: Vec<String>,
    pub failure: Option<Failure>,
}

impl GroundingAnswer {
    pub fn is_failure(&self) -> bool {
        self.object_id.is_none()
    }

    pub fn to_record(&self, query_id: &str) -> AnswerRecord {
        let elapsed: Vec<f64> = self.tool_trace.iter().map(|t| t.elapsed_ms).collect();
        AnswerRecord {
            query_id: query_id.to_string(),
            scene_id: self.scene_id.clone(),
            object_id: self.object_id,
            bbox: self.bbox,
            rationale: self.rationale.clone(),
            fallbacks_used: self.fallbacks_used.clone(),
            tool_trace: self.tool_trace.clone(),
            failure: self.failure.clone(),
            meta: serde_json::json!({ "tool_elapsed_ms": elapsed }),
        }
    }
}

/// One line of an answers JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub query_id: String,
    pub scene_id: String,
    pub object_id: Option<u64>,
    pub bbox: Option<Aabb>,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub fallbacks_used: Vec<String>,
    #[serde(default)]
    pub tool_trace: Vec<TraceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    /// Timing and other run-dependent fields.
    #[serde(default)]
    pub meta: Value,
}

impl AnswerRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("answer serializes")
    }
}

/// Parses answers JSONL, skipping blank lines. Errors carry 1-based line numbers.
pub fn load_answers(text: &str) -> Result<Vec<AnswerRecord>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?);
    }
    Ok(out)
}
