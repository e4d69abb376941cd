//! Scene ingestion, object lookup tables, predicate plans, geometric
//! scoring and point-splat rendering for 3D visual grounding.

pub mod aabb;
pub mod camera;
pub mod error;
pub mod geo;
pub mod math;
pub mod olt;
pub mod plan;
pub mod ply;
pub mod render;
pub mod scene;
pub mod segmentation;
pub mod vocab;

pub use aabb::{compute_bbox, Aabb};
pub use camera::{auto_camera, CameraPose, Projection, ViewSpec};
pub use error::{GeoError, IngestError, OltError, PlanError, RenderError};
pub use olt::{build_olt, load_olt, persist_olt, retrieve_by_label, ObjectRecord, SceneOlt};
pub use plan::{parse_plan, print_plan, CheckedPlan, PredicatePlan};
pub use ply::{parse_ply, serialize_ply, PlyFormat};
pub use scene::PointCloud;
pub use segmentation::{parse_segmentation, InstanceSegmentation};
pub use vocab::{resolve_label, LabelVocabulary};
