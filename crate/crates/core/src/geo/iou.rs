use crate::aabb::Aabb;

/// Sizes below this are raised to it so point-like boxes stay well defined.
pub const MIN_EXTENT: f64 = 1e-6;

/// Axis-aligned 3D intersection over union in `[0, 1]`.
pub fn aabb_iou(a: &Aabb, b: &Aabb) -> f64 {
    let mut inter = 1.0;
    let mut va = 1.0;
    let mut vb = 1.0;
    for k in 0..3 {
        let sa = a.size[k].max(MIN_EXTENT);
        let sb = b.size[k].max(MIN_EXTENT);
        let (a0, a1) = (a.center[k] - 0.5 * sa, a.center[k] + 0.5 * sa);
        let (b0, b1) = (b.center[k] - 0.5 * sb, b.center[k] + 0.5 * sb);
        inter *= (a1.min(b1) - a0.max(b0)).max(0.0);
        // Extents from the same endpoints, so a box against itself is exactly 1.
        va *= a1 - a0;
        vb *= b1 - b0;
    }
    let union = va + vb - inter;
    if !(union > 0.0) || !inter.is_finite() {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
