use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::geo::frame::ReferenceFrame;
use crate::math::{self, Vec3};
use crate::olt::ObjectRecord;
use crate::plan::PredicateKind;

/// Euclidean distance between box centers.
pub fn pairwise_distance(a: &ObjectRecord, b: &ObjectRecord) -> f64 {
    math::distance(a.center, b.center)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeProxy {
    #[default]
    Volume,
    Footprint,
    Height,
}

pub fn size_proxy(record: &ObjectRecord, proxy: SizeProxy) -> f64 {
    let [dx, dy, dz] = record.size;
    match proxy {
        SizeProxy::Volume => dx * dy * dz,
        SizeProxy::Footprint => dx * dy,
        SizeProxy::Height => dz,
    }
}

/// Signed axis for a directional kind.
pub fn directional_axis(frame: &ReferenceFrame, kind: PredicateKind) -> Result<Vec3, GeoError> {
    Ok(match kind {
        PredicateKind::RightOf => frame.right,
        PredicateKind::LeftOf => math::scale(frame.right, -1.0),
        PredicateKind::Above => frame.up,
        PredicateKind::Below => math::scale(frame.up, -1.0),
        // The camera looks along +forward, so "in front" is toward the viewer.
        PredicateKind::InFrontOf => math::scale(frame.forward, -1.0),
        PredicateKind::Behind => frame.forward,
        other => return Err(GeoError::NotDirectional(other.name().to_string())),
    })
}

/// Projection of `candidate - anchor` on the kind's axis and whether it is
/// positive. Without an anchor the offset from the frame origin is used and
/// the test always passes; that value is what superlatives rank on.
pub fn eval_directional(
    candidate: &ObjectRecord,
    anchor: Option<&ObjectRecord>,
    frame: &ReferenceFrame,
    kind: PredicateKind,
) -> Result<(f64, bool), GeoError> {
    let axis = directional_axis(frame, kind)?;
    match anchor {
        Some(a) => {
            let v = math::dot(math::sub(candidate.center, a.center), axis);
            Ok((v, v > 0.0))
        }
        None => Ok((math::dot(math::sub(candidate.center, frame.origin), axis), true)),
    }
}

/// `between(a, b)`: returns the perpendicular distance to the segment's line
/// and whether the center projects strictly inside the segment and lies
/// closer than the larger anchor half-diagonal.
pub fn eval_between(candidate: &ObjectRecord, a: &ObjectRecord, b: &ObjectRecord) -> (f64, bool) {
    let ab = math::sub(b.center, a.center);
    let ac = math::sub(candidate.center, a.center);
    let len2 = math::dot(ab, ab);
    if len2 <= 0.0 {
        return (math::norm(ac), false);
    }
    let t = math::dot(ac, ab) / len2;
    let perp = math::norm(math::sub(ac, math::scale(ab, t)));
    let limit = 0.5 * a.bbox().diagonal().max(b.bbox().diagonal());
    (perp, t > 0.0 && t < 1.0 && perp < limit)
}
