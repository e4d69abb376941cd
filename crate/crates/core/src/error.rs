use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),
    #[error("truncated PLY body: expected {expected} vertices, read {found}")]
    TruncatedBody { expected: usize, found: usize },
    #[error("unsupported PLY format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed PLY body: {0}")]
    MalformedBody(String),
    #[error("point cloud has no points")]
    EmptyCloud,
    #[error("non-finite coordinate")]
    NonFiniteCoordinate,
    #[error("malformed segmentation JSON: {0}")]
    MalformedJson(String),
    #[error("duplicate instance id {0}")]
    DuplicateInstanceId(u64),
    #[error("instance {instance_id} references point {index} but the cloud has {len} points")]
    IndexOutOfRange { instance_id: u64, index: u64, len: usize },
    #[error("instance {0} has no points")]
    EmptyInstance(u64),
    #[error("instance {0} has an empty label")]
    EmptyLabel(u64),
    #[error("instance {instance_id} confidence {value} outside [0, 1]")]
    InvalidConfidence { instance_id: u64, value: f64 },
    #[error("cannot bound an empty mask")]
    EmptyMask,
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MalformedHeader(_) => "E_PLY_HEADER",
            Self::TruncatedBody { .. } => "E_PLY_TRUNCATED",
            Self::UnsupportedFormat(_) => "E_PLY_FORMAT",
            Self::MalformedBody(_) => "E_PLY_BODY",
            Self::EmptyCloud => "E_EMPTY_CLOUD",
            Self::NonFiniteCoordinate => "E_NON_FINITE",
            Self::MalformedJson(_) => "E_SEG_JSON",
            Self::DuplicateInstanceId(_) => "E_DUPLICATE_ID",
            Self::IndexOutOfRange { .. } => "E_INDEX_RANGE",
            Self::EmptyInstance(_) => "E_EMPTY_INSTANCE",
            Self::EmptyLabel(_) => "E_EMPTY_LABEL",
            Self::InvalidConfidence { .. } => "E_CONFIDENCE",
            Self::EmptyMask => "E_EMPTY_MASK",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OltError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("segmentation has no instances")]
    EmptyScene,
    #[error("malformed OLT JSON: {0}")]
    MalformedJson(String),
    #[error("unsupported schema {found:?}, expected {expected:?}")]
    SchemaVersionMismatch { expected: &'static str, found: String },
    #[error("duplicate object id {0}")]
    DuplicateInstanceId(u64),
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: u64, reason: String },
    #[error("unknown label {term:?}; best match {best:?} scored {similarity:.3}")]
    UnknownLabel { term: String, best: Option<String>, similarity: f64 },
    #[error("malformed alias config: {0}")]
    MalformedAliases(String),
}

impl OltError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Ingest(e) => e.code(),
            Self::EmptyScene => "E_EMPTY_SCENE",
            Self::MalformedJson(_) => "E_OLT_JSON",
            Self::SchemaVersionMismatch { .. } => "E_SCHEMA",
            Self::DuplicateInstanceId(_) => "E_DUPLICATE_ID",
            Self::InvalidRecord { .. } => "E_OLT_RECORD",
            Self::UnknownLabel { .. } => "E_UNKNOWN_LABEL",
            Self::MalformedAliases(_) => "E_ALIAS_JSON",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("constraint references undeclared anchor {0:?}")]
    UndeclaredAnchor(String),
    #[error("{kind} takes {expected} anchor(s), got {found}")]
    Arity { kind: String, expected: &'static str, found: usize },
    #[error("anchor {0:?} declared twice")]
    DuplicateAnchor(String),
    #[error("plan has no target labels")]
    MissingTarget,
    #[error("camera frame requires a viewpoint clause")]
    MissingViewpoint,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("unknown predicate kind {0:?}")]
    UnknownKind(String),
    #[error("malformed plan JSON: {0}")]
    MalformedJson(String),
    #[error("unsupported schema {found:?}, expected {expected:?}")]
    SchemaVersionMismatch { expected: &'static str, found: String },
    #[error("view_dependent={declared} disagrees with the constraints' frames")]
    InconsistentViewDependence { declared: bool },
    #[error(transparent)]
    Label(#[from] OltError),
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Syntax { .. } => "E_PLAN_SYNTAX",
            Self::UndeclaredAnchor(_) => "E_PLAN_ANCHOR",
            Self::Arity { .. } => "E_PLAN_ARITY",
            Self::DuplicateAnchor(_) => "E_PLAN_DUP_ANCHOR",
            Self::MissingTarget => "E_PLAN_TARGET",
            Self::MissingViewpoint => "E_PLAN_VIEWPOINT",
            Self::InvalidParam(_) => "E_PLAN_PARAM",
            Self::UnknownKind(_) => "E_PLAN_KIND",
            Self::MalformedJson(_) => "E_PLAN_JSON",
            Self::SchemaVersionMismatch { .. } => "E_SCHEMA",
            Self::InconsistentViewDependence { .. } => "E_PLAN_VIEWDEP",
            Self::Label(e) => e.code(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("predicate {0} needs an anchor object")]
    MissingAnchor(String),
    #[error("no candidates survive the plan")]
    NoCandidates,
    #[error("degenerate camera pose: {0}")]
    DegeneratePose(&'static str),
    #[error("reference frame is not orthonormal and right-handed")]
    InvalidFrame,
    #[error("{0} is not a directional predicate")]
    NotDirectional(String),
}

impl GeoError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MissingAnchor(_) => "E_MISSING_ANCHOR",
            Self::NoCandidates => "E_NO_CANDIDATES",
            Self::DegeneratePose(_) => "E_DEGENERATE_POSE",
            Self::InvalidFrame => "E_FRAME",
            Self::NotDirectional(_) => "E_NOT_DIRECTIONAL",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("scene bounds are degenerate")]
    DegenerateBounds,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("image must be at least 16x16, got {0}x{1}")]
    ImageTooSmall(usize, usize),
    #[error("object id {0} is not in the lookup table")]
    UnknownObjectId(u64),
    #[error("malformed PPM: {0}")]
    MalformedPpm(String),
    #[error("PNG encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

impl RenderError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DegenerateBounds => "E_DEGENERATE_BOUNDS",
            Self::InvalidCamera(_) => "E_CAMERA",
            Self::ImageTooSmall(..) => "E_IMAGE_SIZE",
            Self::UnknownObjectId(_) => "E_UNKNOWN_ID",
            Self::MalformedPpm(_) => "E_PPM",
            Self::Png(_) => "E_PNG",
            Self::Geo(e) => e.code(),
        }
    }
}
