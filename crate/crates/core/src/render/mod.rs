//! Deterministic software renderer.

mod highlight;
mod image;
mod raster;

pub use highlight::{legend_json, HighlightSet, PALETTE};
pub use image::{parse_ppm, write_png, write_ppm, Image, MIN_IMAGE_SIDE};
pub use raster::{
    clip_edge, draw_wireframe, render, Projector, RenderOptions, BACKGROUND, DEFAULT_HEIGHT, DEFAULT_WIDTH, NEAR_PLANE,
};
