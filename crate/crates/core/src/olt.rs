//! Object lookup table: one `(id, label, center, size)` row per instance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aabb::{compute_bbox, Aabb};
use crate::error::OltError;
use crate::math::Vec3;
use crate::scene::PointCloud;
use crate::segmentation::InstanceSegmentation;

pub const OLT_SCHEMA: &str = "olt/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: u64,
    pub label: String,
    pub center: Vec3,
    pub size: Vec3,
}

impl ObjectRecord {
    pub fn bbox(&self) -> Aabb {
        Aabb::new(self.center, self.size)
    }

    fn check(&self) -> Result<(), OltError> {
        let bad = |reason: &str| OltError::InvalidRecord { id: self.id, reason: reason.to_string() };
        if self.label.trim().is_empty() {
            return Err(bad("empty label"));
        }
        if !crate::math::is_finite(self.center) || !crate::math::is_finite(self.size) {
            return Err(bad("non-finite geometry"));
        }
        if self.size.iter().any(|s| *s < 0.0) {
            return Err(bad("negative size"));
        }
        Ok(())
    }
}

/// Immutable per-scene table. Records are sorted by id and the label index
/// is kept in sync by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneOlt {
    scene_id: String,
    records: Vec<ObjectRecord>,
    label_index: BTreeMap<String, Vec<u64>>,
}

impl SceneOlt {
    pub fn new(scene_id: impl Into<String>, mut records: Vec<ObjectRecord>) -> Result<Self, OltError> {
        records.sort_by_key(|r| r.id);
        for pair in records.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(OltError::DuplicateInstanceId(pair[0].id));
            }
        }
        let mut label_index: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        for r in &records {
            r.check()?;
            label_index.entry(r.label.clone()).or_default().push(r.id);
        }
        Ok(Self { scene_id: scene_id.into(), records, label_index })
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn records(&self) -> &[ObjectRecord] {
        &self.records
    }

    pub fn label_index(&self) -> &BTreeMap<String, Vec<u64>> {
        &self.label_index
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&ObjectRecord> {
        self.records.binary_search_by_key(&id, |r| r.id).ok().map(|i| &self.records[i])
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.label_index.keys().cloned().collect()
    }

    /// Union of every record's box, `None` for an empty table.
    pub fn bounds(&self) -> Option<Aabb> {
        let mut it = self.records.iter().map(|r| r.bbox());
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.union(&b)))
    }

    /// Mean of record centers; the world origin for an empty table.
    pub fn centroid(&self) -> Vec3 {
        if self.records.is_empty() {
            return [0.0; 3];
        }
        let mut acc = [0.0; 3];
        for r in &self.records {
            acc = crate::math::add(acc, r.center);
        }
        crate::math::scale(acc, 1.0 / self.records.len() as f64)
    }
}

/// Fits one box per instance. Records come out sorted by id regardless of
/// the instance order in the segmentation file.
pub fn build_olt(cloud: &PointCloud, seg: &InstanceSegmentation) -> Result<SceneOlt, OltError> {
    if seg.instances.is_empty() {
        return Err(OltError::EmptyScene);
    }
    seg.validate(cloud)?;
    let mut records = Vec::with_capacity(seg.instances.len());
    for inst in &seg.instances {
        let bbox = compute_bbox(inst.point_indices.iter().map(|&i| &cloud.points[i as usize]))?;
        records.push(ObjectRecord {
            id: inst.instance_id,
            label: inst.label.clone(),
            center: bbox.center,
            size: bbox.size,
        });
    }
    let scene_id = if seg.scene_id.is_empty() { cloud.scene_id.clone() } else { seg.scene_id.clone() };
    SceneOlt::new(scene_id, records)
}

/// Records whose label is in `labels`, ascending id.
pub fn retrieve_by_label<S: AsRef<str>>(olt: &SceneOlt, labels: &[S]) -> Vec<ObjectRecord> {
    let mut ids: Vec<u64> = labels
        .iter()
        .filter_map(|l| olt.label_index.get(l.as_ref()))
        .flatten()
        .copied()
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.iter().filter_map(|&id| olt.get(id).cloned()).collect()
}

/// Key-sorted, pretty-printed JSON; byte-identical for equal tables.
pub fn persist_olt(olt: &SceneOlt) -> Vec<u8> {
    let value = json!({
        "schema": OLT_SCHEMA,
        "scene_id": olt.scene_id,
        "objects": olt.records,
    });
    let mut out = serde_json::to_vec_pretty(&value).expect("OLT serializes");
    out.push(b'\n');
    out
}

#[derive(Deserialize)]
struct OltFile {
    schema: String,
    scene_id: String,
    objects: Vec<ObjectRecord>,
}

pub fn load_olt(bytes: &[u8]) -> Result<SceneOlt, OltError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| OltError::MalformedJson(e.to_string()))?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(OLT_SCHEMA) => {}
        Some(other) => {
            return Err(OltError::SchemaVersionMismatch { expected: OLT_SCHEMA, found: other.to_string() })
        }
        None => return Err(OltError::SchemaVersionMismatch { expected: OLT_SCHEMA, found: String::new() }),
    }
    let file: OltFile = serde_json::from_value(value).map_err(|e| OltError::MalformedJson(e.to_string()))?;
    debug_assert_eq!(file.schema, OLT_SCHEMA);
    SceneOlt::new(file.scene_id, file.objects)
}
