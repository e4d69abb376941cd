use std::collections::BTreeMap;

use serde_json::json;

use crate::camera::CameraPose;
use crate::error::RenderError;
use crate::olt::SceneOlt;
use crate::scene::Rgb;

/// Highlight colors, assigned in id order of the request and cycled after 8.
pub const PALETTE: [Rgb; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HighlightSet {
    pub ids: Vec<u64>,
    pub colors: Vec<Rgb>,
}

impl HighlightSet {
    /// Duplicate ids are dropped, first occurrence wins.
    pub fn new(ids: &[u64], olt: &SceneOlt) -> Result<Self, RenderError> {
        let mut out = Self::default();
        for &id in ids {
            if olt.get(id).is_none() {
                return Err(RenderError::UnknownObjectId(id));
            }
            if !out.ids.contains(&id) {
                out.colors.push(PALETTE[out.ids.len() % PALETTE.len()]);
                out.ids.push(id);
            }
        }
        Ok(out)
    }

    pub fn legend(&self) -> BTreeMap<u64, Rgb> {
        self.ids.iter().copied().zip(self.colors.iter().copied()).collect()
    }
}

/// Sidecar `{"legend": {"<id>": [r, g, b]}, "camera": {...}}`.
pub fn legend_json(highlights: &HighlightSet, camera: &CameraPose) -> Vec<u8> {
    let legend: serde_json::Map<String, serde_json::Value> =
        highlights.legend().into_iter().map(|(id, c)| (id.to_string(), json!(c))).collect();
    let mut out = serde_json::to_vec_pretty(&json!({"legend": legend, "camera": camera})).expect("legend serializes");
    out.push(b'\n');
    out
}
