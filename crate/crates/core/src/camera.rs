//! Camera poses and automatic viewpoint selection.

use serde::{Deserialize, Serialize};

use crate::aabb::Aabb;
use crate::error::RenderError;
use crate::math::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Projection {
    Perspective { fov_y_deg: f64 },
    Orthographic { half_height_m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub eye: Vec3,
    pub target: Vec3,
    pub worldup: Vec3,
    pub projection: Projection,
}

impl CameraPose {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::InvalidCamera(m.to_string()));
        if !(math::is_finite(self.eye) && math::is_finite(self.target) && math::is_finite(self.worldup)) {
            return bad("non-finite pose");
        }
        if self.eye == self.target {
            return bad("eye equals target");
        }
        match self.projection {
            Projection::Perspective { fov_y_deg } if !(fov_y_deg > 10.0 && fov_y_deg < 140.0) => {
                bad("fov_y must lie in (10, 140) degrees")
            }
            Projection::Orthographic { half_height_m } if !(half_height_m > 0.0) => bad("half_height must be > 0"),
            _ => Ok(()),
        }
    }
}

/// Where to look from. `Pose` carries an explicit eye and target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewSpec {
    Top,
    Front,
    Side,
    Pose { eye: Vec3, target: Vec3 },
}

pub const DEFAULT_FOV_DEG: f64 = 60.0;
const VIEW_DISTANCE_FACTOR: f64 = 1.5;

/// Camera for a named view of `bounds`.
///
/// Named views sit on an axis through the bounds center at 1.5x the scene
/// diagonal: `top` above the scene looking down (orthographic), `front` on
/// -y looking +y, `side` on +x looking -x (both perspective, 60 degrees).
/// A pose view keeps its eye/target and uses the default perspective.
pub fn auto_camera(bounds: &Aabb, view: ViewSpec) -> Result<CameraPose, RenderError> {
    if let ViewSpec::Pose { eye, target } = view {
        let pose = CameraPose {
            eye,
            target,
            worldup: [0.0, 0.0, 1.0],
            projection: Projection::Perspective { fov_y_deg: DEFAULT_FOV_DEG },
        };
        pose.validate()?;
        return Ok(pose);
    }
    let diag = bounds.diagonal();
    if !(diag > 1e-9) || !diag.is_finite() {
        return Err(RenderError::DegenerateBounds);
    }
    let d = VIEW_DISTANCE_FACTOR * diag;
    let c = bounds.center;
    let persp = Projection::Perspective { fov_y_deg: DEFAULT_FOV_DEG };
    let pose = match view {
        ViewSpec::Top => CameraPose {
            eye: [c[0], c[1], c[2] + d],
            target: c,
            worldup: [0.0, 1.0, 0.0],
            projection: Projection::Orthographic { half_height_m: 0.5 * diag },
        },
        ViewSpec::Front => CameraPose { eye: [c[0], c[1] - d, c[2]], target: c, worldup: [0.0, 0.0, 1.0], projection: persp },
        ViewSpec::Side => CameraPose { eye: [c[0] + d, c[1], c[2]], target: c, worldup: [0.0, 0.0, 1.0], projection: persp },
        ViewSpec::Pose { .. } => unreachable!(),
    };
    Ok(pose)
}

/// Camera that faces `anchor` from the far side of the scene: the eye lies on
/// the horizontal ray from the anchor through the scene center.
pub fn facing_camera(bounds: &Aabb, anchor: Vec3) -> Result<CameraPose, RenderError> {
    let diag = bounds.diagonal();
    if !(diag > 1e-9) {
        return Err(RenderError::DegenerateBounds);
    }
    let c = bounds.center;
    let mut dir = math::sub(c, anchor);
    dir[2] = 0.0;
    let dir = math::normalize(dir).unwrap_or([0.0, -1.0, 0.0]);
    let d = VIEW_DISTANCE_FACTOR * diag;
    let eye = [c[0] + dir[0] * d, c[1] + dir[1] * d, c[2] + 0.25 * diag];
    let pose = CameraPose {
        eye,
        target: anchor,
        worldup: [0.0, 0.0, 1.0],
        projection: Projection::Perspective { fov_y_deg: DEFAULT_FOV_DEG },
    };
    pose.validate()?;
    Ok(pose)
}
