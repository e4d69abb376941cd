use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::math::Vec3;

/// Axis-aligned box stored as center and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub center: Vec3,
    pub size: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, size: Vec3) -> Self {
        Self { center, size }
    }

    pub fn from_min_max(min: Vec3, max: Vec3) -> Self {
        let mut center = [0.0; 3];
        let mut size = [0.0; 3];
        for k in 0..3 {
            center[k] = 0.5 * (min[k] + max[k]);
            size[k] = max[k] - min[k];
            // Widen by ulps until the derived corners enclose the inputs; the
            // midpoint/extent pair does not always reproduce min/max exactly.
            while center[k] - 0.5 * size[k] > min[k] || center[k] + 0.5 * size[k] < max[k] {
                size[k] = size[k].next_up();
            }
        }
        Self { center, size }
    }

    pub fn min(&self) -> Vec3 {
        [
            self.center[0] - 0.5 * self.size[0],
            self.center[1] - 0.5 * self.size[1],
            self.center[2] - 0.5 * self.size[2],
        ]
    }

    pub fn max(&self) -> Vec3 {
        [
            self.center[0] + 0.5 * self.size[0],
            self.center[1] + 0.5 * self.size[1],
            self.center[2] + 0.5 * self.size[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.size[2]
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec3) -> bool {
        let (lo, hi) = (self.min(), self.max());
        (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k])
    }

    /// The eight corners, indexed by bit pattern (bit 0 = x, bit 1 = y, bit 2 = z).
    pub fn corners(&self) -> [Vec3; 8] {
        let (lo, hi) = (self.min(), self.max());
        let mut out = [[0.0; 3]; 8];
        for (i, c) in out.iter_mut().enumerate() {
            for k in 0..3 {
                c[k] = if i >> k & 1 == 1 { hi[k] } else { lo[k] };
            }
        }
        out
    }

    /// The 12 edges as corner index pairs into [`Aabb::corners`].
    pub const EDGES: [(usize, usize); 12] = [
        (0, 1),
        (2, 3),
        (4, 5),
        (6, 7),
        (0, 2),
        (1, 3),
        (4, 6),
        (5, 7),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ];

    /// Smallest box containing both boxes.
    pub fn union(&self, other: &Aabb) -> Aabb {
        let (a0, a1, b0, b1) = (self.min(), self.max(), other.min(), other.max());
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..3 {
            lo[k] = a0[k].min(b0[k]);
            hi[k] = a1[k].max(b1[k]);
        }
        Aabb::from_min_max(lo, hi)
    }

    pub fn diagonal(&self) -> f64 {
        crate::math::norm(self.size)
    }
}

/// Minimal axis-aligned box around a non-empty point set.
pub fn compute_bbox<'a, I>(points: I) -> Result<Aabb, IngestError>
where
    I: IntoIterator<Item = &'a Vec3>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(IngestError::EmptyMask)?;
    let (mut lo, mut hi) = (*first, *first);
    for p in iter {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !(crate::math::is_finite(lo) && crate::math::is_finite(hi)) {
        return Err(IngestError::NonFiniteCoordinate);
    }
    Ok(Aabb::from_min_max(lo, hi))
}
