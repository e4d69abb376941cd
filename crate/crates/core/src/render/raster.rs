//! Point splatting with a z-buffer and wireframe overlays.

use crate::aabb::Aabb;
use crate::camera::{CameraPose, Projection};
use crate::error::RenderError;
use crate::geo::camera_frame;
use crate::math::{self, Vec3};
use crate::olt::SceneOlt;
use crate::render::highlight::HighlightSet;
use crate::render::image::Image;
use crate::scene::{PointCloud, Rgb};

pub const BACKGROUND: Rgb = [40, 40, 40];
pub const DEFAULT_WIDTH: usize = 640;
pub const DEFAULT_HEIGHT: usize = 480;
/// Perspective near plane, meters in front of the eye.
pub const NEAR_PLANE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    /// Half-width of the square splat; 0 draws single pixels.
    pub splat_radius: usize,
    /// Rasterizer threads; output does not depend on this.
    pub workers: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { width: DEFAULT_WIDTH, height: DEFAULT_HEIGHT, splat_radius: 1, workers: 1 }
    }
}

/// World-to-screen mapping for one camera and image size.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    eye: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    perspective: bool,
    scale: f64,
    cx: f64,
    cy: f64,
}

impl Projector {
    pub fn new(camera: &CameraPose, width: usize, height: usize) -> Result<Self, RenderError> {
        camera.validate()?;
        let f = camera_frame(camera)?;
        let half_h = height as f64 / 2.0;
        let (perspective, scale) = match camera.projection {
            Projection::Perspective { fov_y_deg } => (true, half_h / (fov_y_deg.to_radians() / 2.0).tan()),
            Projection::Orthographic { half_height_m } => (false, half_h / half_height_m),
        };
        Ok(Self {
            eye: camera.eye,
            right: f.right,
            up: f.up,
            forward: f.forward,
            perspective,
            scale,
            cx: width as f64 / 2.0,
            cy: half_h,
        })
    }

    /// Camera-space coordinates `(x right, y up, depth)`.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = math::sub(p, self.eye);
        [math::dot(d, self.right), math::dot(d, self.up), math::dot(d, self.forward)]
    }

    pub fn visible(&self, c: Vec3) -> bool {
        if self.perspective {
            c[2] >= NEAR_PLANE
        } else {
            c[2] >= 0.0
        }
    }

    /// Continuous screen position of a visible camera-space point; pixel
    /// `(floor(x), floor(y))` contains it.
    pub fn to_screen(&self, c: Vec3) -> (f64, f64) {
        let s = if self.perspective { self.scale / c[2] } else { self.scale };
        (self.cx + s * c[0], self.cy - s * c[1])
    }

    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        self.visible(c).then(|| {
            let (x, y) = self.to_screen(c);
            (x, y, c[2])
        })
    }
}

struct ZBuffer {
    depth: Vec<f64>,
    index: Vec<u32>,
}

impl ZBuffer {
    fn new(n: usize) -> Self {
        Self { depth: vec![f64::INFINITY; n], index: vec![u32::MAX; n] }
    }

    #[inline]
    fn offer(&mut self, px: usize, depth: f64, idx: u32) {
        let key = (self.depth[px].total_cmp(&depth), idx.cmp(&self.index[px]));
        // Strictly nearer wins; equal depth goes to the lower point index.
        if key.0.is_gt() || (key.0.is_eq() && key.1.is_lt()) {
            self.depth[px] = depth;
            self.index[px] = idx;
        }
    }

    fn merge(&mut self, other: &ZBuffer) {
        for px in 0..self.depth.len() {
            if other.index[px] != u32::MAX {
                self.offer(px, other.depth[px], other.index[px]);
            }
        }
    }
}

fn rasterize(points: &[Vec3], offset: usize, proj: &Projector, opts: &RenderOptions) -> ZBuffer {
    let (w, h) = (opts.width as i64, opts.height as i64);
    let r = opts.splat_radius as i64;
    let mut zb = ZBuffer::new(opts.width * opts.height);
    for (k, p) in points.iter().enumerate() {
        let Some((x, y, depth)) = proj.project(*p) else { continue };
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let (ix, iy) = (x.floor(), y.floor());
        if ix < -(r as f64) || iy < -(r as f64) || ix >= (w + r) as f64 || iy >= (h + r) as f64 {
            continue;
        }
        let (ix, iy) = (ix as i64, iy as i64);
        let idx = (offset + k) as u32;
        for py in (iy - r).max(0)..=(iy + r).min(h - 1) {
            for px in (ix - r).max(0)..=(ix + r).min(w - 1) {
                zb.offer((py * w + px) as usize, depth, idx);
            }
        }
    }
    zb
}

/// Liang-Barsky clip of a segment to `[0, xmax] x [0, ymax]`.
fn clip_to_rect(p: (f64, f64), q: (f64, f64), xmax: f64, ymax: f64) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (pk, qk) in [(-dx, p.0), (dx, xmax - p.0), (-dy, p.1), (dy, ymax - p.1)] {
        if pk == 0.0 {
            if qk < 0.0 {
                return None;
            }
        } else {
            let t = qk / pk;
            if pk < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some(((p.0 + t0 * dx, p.1 + t0 * dy), (p.0 + t1 * dx, p.1 + t1 * dy)))
}

/// Screen-space segment for a world-space edge after near-plane and image
/// clipping, or `None` when nothing is visible.
pub fn clip_edge(proj: &Projector, a: Vec3, b: Vec3, width: usize, height: usize) -> Option<((f64, f64), (f64, f64))> {
    let (mut ca, mut cb) = (proj.to_camera(a), proj.to_camera(b));
    let near = if proj.perspective { NEAR_PLANE } else { 0.0 };
    match (ca[2] >= near, cb[2] >= near) {
        (false, false) => return None,
        (true, false) | (false, true) => {
            let t = (near - ca[2]) / (cb[2] - ca[2]);
            let cut = math::add(ca, math::scale(math::sub(cb, ca), t));
            let cut = [cut[0], cut[1], near];
            if ca[2] < near {
                ca = cut;
            } else {
                cb = cut;
            }
        }
        (true, true) => {}
    }
    let (p, q) = (proj.to_screen(ca), proj.to_screen(cb));
    if ![p.0, p.1, q.0, q.1].iter().all(|v| v.is_finite()) {
        return None;
    }
    let eps = 1e-9;
    clip_to_rect(p, q, width as f64 - eps, height as f64 - eps)
}

fn draw_line(img: &mut Image, p: (f64, f64), q: (f64, f64), color: Rgb) {
    let (mut x0, mut y0) = (p.0.floor() as i64, p.1.floor() as i64);
    let (x1, y1) = (q.0.floor() as i64, q.1.floor() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    let (w, h) = (img.width as i64, img.height as i64);
    loop {
        if x0 >= 0 && y0 >= 0 && x0 < w && y0 < h {
            img.set(x0 as usize, y0 as usize, color);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Draws the 12 edges of `bbox` without depth testing.
pub fn draw_wireframe(img: &mut Image, proj: &Projector, bbox: &Aabb, color: Rgb) {
    let corners = bbox.corners();
    for (i, j) in Aabb::EDGES {
        if let Some((p, q)) = clip_edge(proj, corners[i], corners[j], img.width, img.height) {
            draw_line(img, p, q, color);
        }
    }
}

/// Renders `cloud` from `camera`, then outlines every highlighted object.
/// Identical inputs give identical pixels for any worker count.
pub fn render(
    cloud: &PointCloud,
    camera: &CameraPose,
    highlights: &HighlightSet,
    olt: &SceneOlt,
    opts: &RenderOptions,
) -> Result<Image, RenderError> {
    let mut img = Image::filled(opts.width, opts.height, BACKGROUND)?;
    let proj = Projector::new(camera, opts.width, opts.height)?;
    let boxes: Vec<(Aabb, Rgb)> = highlights
        .ids
        .iter()
        .zip(&highlights.colors)
        .map(|(id, c)| olt.get(*id).map(|r| (r.bbox(), *c)).ok_or(RenderError::UnknownObjectId(*id)))
        .collect::<Result<_, _>>()?;
    if cloud.points.len() >= u32::MAX as usize {
        return Err(RenderError::InvalidCamera("point cloud too large to index".into()));
    }

    let workers = opts.workers.clamp(1, cloud.points.len().max(1));
    let zb = if workers == 1 {
        rasterize(&cloud.points, 0, &proj, opts)
    } else {
        let chunk = cloud.points.len().div_ceil(workers);
        let parts: Vec<ZBuffer> = std::thread::scope(|s| {
            let handles: Vec<_> = cloud
                .points
                .chunks(chunk)
                .enumerate()
                .map(|(k, pts)| {
                    let proj = &proj;
                    s.spawn(move || rasterize(pts, k * chunk, proj, opts))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("raster worker panicked")).collect()
        });
        let mut it = parts.into_iter();
        let mut acc = it.next().expect("at least one chunk");
        for p in it {
            acc.merge(&p);
        }
        acc
    };
    for (px, &idx) in zb.index.iter().enumerate() {
        if idx != u32::MAX {
            let c = cloud.colors[idx as usize];
            img.pixels[3 * px..3 * px + 3].copy_from_slice(&c);
        }
    }
    for (bbox, color) in &boxes {
        draw_wireframe(&mut img, &proj, bbox, *color);
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{auto_camera, ViewSpec};
    use crate::olt::ObjectRecord;

    fn persp(eye: Vec3, target: Vec3) -> CameraPose {
        CameraPose { eye, target, worldup: [0.0, 0.0, 1.0], projection: Projection::Perspective { fov_y_deg: 60.0 } }
    }

    fn empty_olt() -> SceneOlt {
        SceneOlt::new("s", vec![]).unwrap()
    }

    #[test]
    fn single_point_lands_at_center() {
        let cloud = PointCloud::new("s", vec![[0.0, 0.0, 1.0]], vec![[255, 0, 0]]).unwrap();
        let opts = RenderOptions { splat_radius: 0, ..Default::default() };
        let img = render(&cloud, &persp([0.0, -5.0, 1.0], [0.0, 0.0, 1.0]), &HighlightSet::default(), &empty_olt(), &opts)
            .unwrap();
        assert_eq!(img.get(320, 240), [255, 0, 0]);
        let lit = img.pixels.chunks(3).filter(|p| *p != BACKGROUND).count();
        assert_eq!(lit, 1);
    }

    #[test]
    fn nearer_point_wins() {
        let cloud =
            PointCloud::new("s", vec![[0.0, 0.0, 1.0], [0.0, -1.0, 1.0]], vec![[255, 0, 0], [0, 255, 0]]).unwrap();
        let cam = persp([0.0, -5.0, 1.0], [0.0, 0.0, 1.0]);
        let img = render(&cloud, &cam, &HighlightSet::default(), &empty_olt(), &RenderOptions::default()).unwrap();
        assert_eq!(img.get(320, 240), [0, 255, 0]);
    }

    #[test]
    fn equal_depth_goes_to_lower_index() {
        let cloud = PointCloud::new("s", vec![[0.0, 0.0, 1.0]; 2], vec![[1, 1, 1], [2, 2, 2]]).unwrap();
        let cam = persp([0.0, -5.0, 1.0], [0.0, 0.0, 1.0]);
        for workers in [1, 2] {
            let opts = RenderOptions { workers, ..Default::default() };
            let img = render(&cloud, &cam, &HighlightSet::default(), &empty_olt(), &opts).unwrap();
            assert_eq!(img.get(320, 240), [1, 1, 1]);
        }
    }

    #[test]
    fn behind_camera_is_clipped() {
        let cloud = PointCloud::new("s", vec![[0.0, -10.0, 1.0]], vec![[255, 255, 255]]).unwrap();
        let img = render(
            &cloud,
            &persp([0.0, -5.0, 1.0], [0.0, 0.0, 1.0]),
            &HighlightSet::default(),
            &empty_olt(),
            &RenderOptions::default(),
        )
        .unwrap();
        assert!(img.pixels.chunks(3).all(|p| p == BACKGROUND));
    }

    #[test]
    fn top_view_ignores_height() {
        let bounds = Aabb::new([0.0; 3], [4.0, 4.0, 2.0]);
        let cam = auto_camera(&bounds, ViewSpec::Top).unwrap();
        let proj = Projector::new(&cam, 640, 480).unwrap();
        let a = proj.project([0.7, -0.3, -1.0]).unwrap();
        let b = proj.project([0.7, -0.3, 0.9]).unwrap();
        assert_eq!((a.0, a.1), (b.0, b.1));
    }

    #[test]
    fn wireframe_uses_legend_color() {
        let rec = ObjectRecord { id: 4, label: "box".into(), center: [0.0, 0.0, 1.0], size: [1.0; 3] };
        let olt = SceneOlt::new("s", vec![rec]).unwrap();
        let cloud = PointCloud::new("s", vec![[0.0, 0.0, 1.0]], vec![[255, 255, 255]]).unwrap();
        let hl = HighlightSet::new(&[4], &olt).unwrap();
        let img = render(&cloud, &persp([0.0, -5.0, 1.0], [0.0, 0.0, 1.0]), &hl, &olt, &RenderOptions::default()).unwrap();
        assert!(img.pixels.chunks(3).any(|p| p == hl.colors[0]));
        assert!(matches!(HighlightSet::new(&[5], &olt), Err(RenderError::UnknownObjectId(5))));
    }

    #[test]
    fn liang_barsky_clips() {
        let (p, q) = clip_to_rect((-10.0, 5.0), (20.0, 5.0), 15.0, 15.0).unwrap();
        assert_eq!((p, q), ((0.0, 5.0), (15.0, 5.0)));
        assert!(clip_to_rect((-10.0, -5.0), (-1.0, -5.0), 15.0, 15.0).is_none());
    }
}
