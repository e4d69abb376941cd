use crate::error::IngestError;
use crate::math::Vec3;

pub type Rgb = [u8; 3];

/// Colored point cloud of one scene, z-up, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub scene_id: String,
    pub points: Vec<Vec3>,
    pub colors: Vec<Rgb>,
}

impl PointCloud {
    pub fn new(scene_id: impl Into<String>, points: Vec<Vec3>, colors: Vec<Rgb>) -> Result<Self, IngestError> {
        let pc = Self { scene_id: scene_id.into(), points, colors };
        pc.validate()?;
        Ok(pc)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.points.is_empty() {
            return Err(IngestError::EmptyCloud);
        }
        if self.points.len() != self.colors.len() {
            return Err(IngestError::MalformedBody(format!(
                "{} points but {} colors",
                self.points.len(),
                self.colors.len()
            )));
        }
        if !self.points.iter().all(|p| crate::math::is_finite(*p)) {
            return Err(IngestError::NonFiniteCoordinate);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.points.len().max(1) as f64;
        let mut acc = [0.0; 3];
        for p in &self.points {
            acc = crate::math::add(acc, *p);
        }
        crate::math::scale(acc, 1.0 / n)
    }
}
