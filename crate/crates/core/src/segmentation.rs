//! Serialized instance-segmentation output (one mask + label per instance).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::scene::PointCloud;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub instance_id: u64,
    pub label: String,
    pub point_indices: Vec<u64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSegmentation {
    pub scene_id: String,
    pub instances: Vec<Instance>,
}

#[derive(Deserialize)]
struct RawInstance {
    instance_id: u64,
    label: String,
    point_indices: Vec<u64>,
    #[serde(default)]
    confidence: Option<f64>,
}

#[derive(Deserialize)]
struct RawSegmentation {
    scene_id: String,
    instances: Vec<RawInstance>,
}

/// Normalizes labels the way the lookup table stores them: trimmed,
/// lowercased, internal whitespace collapsed to single spaces.
pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Parses segmentation JSON; labels are normalized and point indices are
/// sorted and deduplicated. Instances keep file order.
pub fn parse_segmentation(bytes: &[u8]) -> Result<InstanceSegmentation, IngestError> {
    let raw: RawSegmentation =
        serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut instances = Vec::with_capacity(raw.instances.len());
    for inst in raw.instances {
        if !seen.insert(inst.instance_id) {
            return Err(IngestError::DuplicateInstanceId(inst.instance_id));
        }
        let label = normalize_label(&inst.label);
        if label.is_empty() {
            return Err(IngestError::EmptyLabel(inst.instance_id));
        }
        let mut point_indices = inst.point_indices;
        point_indices.sort_unstable();
        point_indices.dedup();
        if point_indices.is_empty() {
            return Err(IngestError::EmptyInstance(inst.instance_id));
        }
        let confidence = inst.confidence.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&confidence) {
            return Err(IngestError::InvalidConfidence { instance_id: inst.instance_id, value: confidence });
        }
        instances.push(Instance { instance_id: inst.instance_id, label, point_indices, confidence });
    }
    Ok(InstanceSegmentation { scene_id: raw.scene_id, instances })
}

impl InstanceSegmentation {
    /// Checks every index against a concrete cloud.
    pub fn validate(&self, cloud: &PointCloud) -> Result<(), IngestError> {
        let len = cloud.len();
        for inst in &self.instances {
            if let Some(&index) = inst.point_indices.last() {
                if index >= len as u64 {
                    return Err(IngestError::IndexOutOfRange { instance_id: inst.instance_id, index, len });
                }
            }
        }
        Ok(())
    }

    /// Drops instances with fewer than `min_points` points.
    pub fn retain_min_points(&mut self, min_points: usize) {
        self.instances.retain(|i| i.point_indices.len() >= min_points);
    }

    /// Stable JSON: instances sorted by id, keys sorted.
    pub fn to_json(&self) -> Vec<u8> {
        let mut sorted = self.clone();
        sorted.instances.sort_by_key(|i| i.instance_id);
        let value = serde_json::to_value(&sorted).expect("segmentation serializes");
        let mut out = serde_json::to_vec(&value).expect("value serializes");
        out.push(b'\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_label_and_indices() {
        let seg = parse_segmentation(
            br#"{"scene_id":"s1","instances":[{"instance_id":3,"label":"Chair","point_indices":[2,0,2]}]}"#,
        )
        .unwrap();
        assert_eq!(seg.instances.len(), 1);
        let inst = &seg.instances[0];
        assert_eq!(inst.instance_id, 3);
        assert_eq!(inst.label, "chair");
        assert_eq!(inst.point_indices, vec![0, 2]);
        assert_eq!(inst.confidence, 1.0);
    }

    #[test]
    fn label_whitespace_collapsed() {
        assert_eq!(normalize_label("  Kitchen   Cabinet "), "kitchen cabinet");
    }

    #[test]
    fn duplicate_instance_id() {
        let r = parse_segmentation(
            br#"{"scene_id":"s","instances":[{"instance_id":5,"label":"a","point_indices":[0]},{"instance_id":5,"label":"b","point_indices":[1]}]}"#,
        );
        assert_eq!(r, Err(IngestError::DuplicateInstanceId(5)));
    }

    #[test]
    fn malformed_and_invalid_inputs() {
        assert!(matches!(parse_segmentation(b"{not json"), Err(IngestError::MalformedJson(_))));
        assert!(matches!(
            parse_segmentation(br#"{"scene_id":"s","instances":[{"instance_id":1,"label":"a","point_indices":[]}]}"#),
            Err(IngestError::EmptyInstance(1))
        ));
        assert!(matches!(
            parse_segmentation(br#"{"scene_id":"s","instances":[{"instance_id":1,"label":" ","point_indices":[0]}]}"#),
            Err(IngestError::EmptyLabel(1))
        ));
        assert!(matches!(
            parse_segmentation(
                br#"{"scene_id":"s","instances":[{"instance_id":1,"label":"a","point_indices":[0],"confidence":1.5}]}"#
            ),
            Err(IngestError::InvalidConfidence { .. })
        ));
    }

    #[test]
    fn overlapping_masks_are_kept() {
        let seg = parse_segmentation(
            br#"{"scene_id":"s","instances":[{"instance_id":1,"label":"a","point_indices":[0,1]},{"instance_id":2,"label":"b","point_indices":[1,2]}]}"#,
        )
        .unwrap();
        assert_eq!(seg.instances[0].point_indices, vec![0, 1]);
        assert_eq!(seg.instances[1].point_indices, vec![1, 2]);
    }

    #[test]
    fn validate_against_cloud() {
        let cloud = PointCloud::new("s", vec![[0.0; 3]; 100], vec![[0; 3]; 100]).unwrap();
        let seg = parse_segmentation(
            br#"{"scene_id":"s","instances":[{"instance_id":1,"label":"a","point_indices":[1000000000]}]}"#,
        )
        .unwrap();
        assert_eq!(
            seg.validate(&cloud),
            Err(IngestError::IndexOutOfRange { instance_id: 1, index: 1_000_000_000, len: 100 })
        );
    }

    #[test]
    fn min_point_filter_is_opt_in() {
        let mut seg = parse_segmentation(
            br#"{"scene_id":"s","instances":[{"instance_id":1,"label":"a","point_indices":[0]},{"instance_id":2,"label":"b","point_indices":[1,2,3]}]}"#,
        )
        .unwrap();
        assert_eq!(seg.instances.len(), 2);
        seg.retain_min_points(2);
        assert_eq!(seg.instances.len(), 1);
        assert_eq!(seg.instances[0].instance_id, 2);
    }
}
