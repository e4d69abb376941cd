//! Geometric reasoning over lookup-table records.

mod frame;
mod iou;
mod predicates;
mod scoring;

pub use frame::{camera_frame, scene_frame_from_cloud, scene_frame_from_olt, ReferenceFrame};
pub use iou::{aabb_iou, MIN_EXTENT};
pub use predicates::{directional_axis, eval_between, eval_directional, pairwise_distance, size_proxy, SizeProxy};
pub use scoring::{
    score_candidates, score_candidates_with, Composition, FrameSet, PredicateValue, ScoredCandidate, ScoringOptions,
    TIE_TOLERANCE,
};
