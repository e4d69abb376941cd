use serde::Serialize;

use crate::camera::CameraPose;
use crate::error::GeoError;
use crate::math::{self, Vec3};
use crate::olt::SceneOlt;
use crate::scene::PointCloud;

const ORTHO_TOL: f64 = 1e-6;

/// Right-handed orthonormal triad plus origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceFrame {
    pub right: Vec3,
    pub forward: Vec3,
    pub up: Vec3,
    pub origin: Vec3,
}

impl ReferenceFrame {
    pub fn new(right: Vec3, forward: Vec3, up: Vec3, origin: Vec3) -> Result<Self, GeoError> {
        let f = Self { right, forward, up, origin };
        if f.is_valid() {
            Ok(f)
        } else {
            Err(GeoError::InvalidFrame)
        }
    }

    /// World axes at `origin`.
    pub fn world(origin: Vec3) -> Self {
        Self { right: [1.0, 0.0, 0.0], forward: [0.0, 1.0, 0.0], up: [0.0, 0.0, 1.0], origin }
    }

    pub fn is_valid(&self) -> bool {
        let axes = [self.right, self.forward, self.up];
        if !axes.iter().chain([&self.origin]).all(|a| math::is_finite(*a)) {
            return false;
        }
        for (i, a) in axes.iter().enumerate() {
            for (j, b) in axes.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (math::dot(*a, *b) - want).abs() > ORTHO_TOL {
                    return false;
                }
            }
        }
        math::distance(math::cross(self.right, self.forward), self.up) <= ORTHO_TOL
    }
}

/// World axes with the origin at the mean object center.
pub fn scene_frame_from_olt(olt: &SceneOlt) -> ReferenceFrame {
    ReferenceFrame::world(olt.centroid())
}

/// World axes with the origin at the point centroid.
pub fn scene_frame_from_cloud(cloud: &PointCloud) -> ReferenceFrame {
    ReferenceFrame::world(cloud.centroid())
}

/// Look-at frame: `forward` toward the target, `right = forward x worldup`,
/// `up = right x forward`, origin at the eye.
pub fn camera_frame(pose: &CameraPose) -> Result<ReferenceFrame, GeoError> {
    let forward = math::normalize(math::sub(pose.target, pose.eye)).ok_or(GeoError::DegeneratePose("eye equals target"))?;
    let right = math::normalize(math::cross(forward, pose.worldup))
        .ok_or(GeoError::DegeneratePose("view direction is parallel to worldup"))?;
    let up = math::cross(right, forward);
    Ok(ReferenceFrame { right, forward, up, origin: pose.eye })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Projection;

    fn pose(eye: Vec3, target: Vec3) -> CameraPose {
        CameraPose { eye, target, worldup: [0.0, 0.0, 1.0], projection: Projection::Perspective { fov_y_deg: 60.0 } }
    }

    #[test]
    fn axis_aligned_look_at() {
        let f = camera_frame(&pose([0.0, -5.0, 1.0], [0.0, 0.0, 1.0])).unwrap();
        assert_eq!(f.forward, [0.0, 1.0, 0.0]);
        assert_eq!(f.right, [1.0, 0.0, 0.0]);
        assert_eq!(f.up, [0.0, 0.0, 1.0]);
        assert!(f.is_valid());
    }

    #[test]
    fn degenerate_poses() {
        assert!(matches!(camera_frame(&pose([1.0; 3], [1.0; 3])), Err(GeoError::DegeneratePose(_))));
        assert!(matches!(camera_frame(&pose([0.0; 3], [0.0, 0.0, -3.0])), Err(GeoError::DegeneratePose(_))));
    }

    #[test]
    fn rejects_left_handed_triad() {
        let r = ReferenceFrame::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [0.0; 3]);
        assert_eq!(r, Err(GeoError::InvalidFrame));
    }
}
