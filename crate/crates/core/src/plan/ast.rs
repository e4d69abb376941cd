use std::fmt;

use crate::camera::ViewSpec;
use crate::error::PlanError;

pub const DEFAULT_NEXT_TO_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredicateKind {
    Nearest,
    Farthest,
    LeftOf,
    RightOf,
    Above,
    Below,
    InFrontOf,
    Behind,
    NextTo,
    Between,
    Smallest,
    Largest,
}

impl PredicateKind {
    pub const ALL: [PredicateKind; 12] = [
        Self::Nearest,
        Self::Farthest,
        Self::LeftOf,
        Self::RightOf,
        Self::Above,
        Self::Below,
        Self::InFrontOf,
        Self::Behind,
        Self::NextTo,
        Self::Between,
        Self::Smallest,
        Self::Largest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nearest => "nearest",
            Self::Farthest => "farthest",
            Self::LeftOf => "left_of",
            Self::RightOf => "right_of",
            Self::Above => "above",
            Self::Below => "below",
            Self::InFrontOf => "in_front_of",
            Self::Behind => "behind",
            Self::NextTo => "next_to",
            Self::Between => "between",
            Self::Smallest => "smallest",
            Self::Largest => "largest",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Zero-anchor spellings: `leftmost` is `left_of` with no anchor, etc.
    pub fn from_superlative(word: &str) -> Option<Self> {
        Some(match word {
            "smallest" => Self::Smallest,
            "largest" => Self::Largest,
            "leftmost" => Self::LeftOf,
            "rightmost" => Self::RightOf,
            "lowest" => Self::Below,
            "highest" => Self::Above,
            _ => return None,
        })
    }

    pub fn superlative_name(self) -> Option<&'static str> {
        Some(match self {
            Self::Smallest => "smallest",
            Self::Largest => "largest",
            Self::LeftOf => "leftmost",
            Self::RightOf => "rightmost",
            Self::Below => "lowest",
            Self::Above => "highest",
            _ => return None,
        })
    }

    pub fn is_directional(self) -> bool {
        matches!(
            self,
            Self::LeftOf | Self::RightOf | Self::Above | Self::Below | Self::InFrontOf | Self::Behind
        )
    }

    /// Kinds whose meaning depends on the observer when a viewpoint is given.
    pub fn is_view_sensitive(self) -> bool {
        matches!(self, Self::LeftOf | Self::RightOf | Self::InFrontOf | Self::Behind)
    }

    pub fn allowed_anchors(self) -> (usize, usize, &'static str) {
        match self {
            Self::Nearest | Self::Farthest | Self::NextTo => (1, 1, "exactly 1"),
            Self::Between => (2, 2, "exactly 2"),
            Self::Smallest | Self::Largest => (0, 0, "no"),
            _ => (0, 1, "0 or 1"),
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    #[default]
    Scene,
    Camera,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub kind: PredicateKind,
    pub anchor_refs: Vec<String>,
    pub frame: Frame,
    /// Only `next_to` takes a parameter (radius, meters).
    pub param: Option<f64>,
}

impl Predicate {
    pub fn new(kind: PredicateKind, anchor_refs: Vec<String>) -> Self {
        let param = (kind == PredicateKind::NextTo).then_some(DEFAULT_NEXT_TO_RADIUS);
        Self { kind, anchor_refs, frame: Frame::Scene, param }
    }

    /// Rank-producing predicates; a boolean predicate only filters.
    pub fn is_gradable(&self) -> bool {
        match self.kind {
            PredicateKind::Nearest | PredicateKind::Farthest | PredicateKind::Smallest | PredicateKind::Largest => true,
            k if k.is_directional() => self.anchor_refs.is_empty(),
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        if self.anchor_refs.is_empty() {
            if let Some(s) = self.kind.superlative_name() {
                return s.to_string();
            }
        }
        let mut args = self.anchor_refs.join(", ");
        if let Some(p) = self.param {
            args.push_str(&format!(", {p}"));
        }
        format!("{}({args})", self.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicatePlan {
    pub target_labels: Vec<String>,
    pub anchors: Vec<Anchor>,
    pub constraints: Vec<Predicate>,
    pub viewpoint: Option<ViewSpec>,
}

impl PredicatePlan {
    pub fn label_only(labels: Vec<String>) -> Self {
        Self { target_labels: labels, anchors: vec![], constraints: vec![], viewpoint: None }
    }

    pub fn view_dependent(&self) -> bool {
        self.constraints.iter().any(|c| c.frame == Frame::Camera)
    }

    pub fn anchor(&self, name: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.name == name)
    }

    /// Frame a predicate of `kind` gets when none is written explicitly.
    pub fn default_frame(&self, kind: PredicateKind) -> Frame {
        if self.viewpoint.is_some() && kind.is_view_sensitive() {
            Frame::Camera
        } else {
            Frame::Scene
        }
    }

    /// Structural checks shared by the DSL parser and the JSON reader.
    pub fn check(&self) -> Result<(), PlanError> {
        if self.target_labels.is_empty() || self.target_labels.iter().any(|l| l.trim().is_empty()) {
            return Err(PlanError::MissingTarget);
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if !crate::plan::parser::is_word(&a.name) {
                return Err(PlanError::InvalidParam(format!("anchor name {:?} is not an identifier", a.name)));
            }
            if self.anchors[..i].iter().any(|b| b.name == a.name) {
                return Err(PlanError::DuplicateAnchor(a.name.clone()));
            }
            if a.labels.is_empty() || a.labels.iter().any(|l| l.trim().is_empty()) {
                return Err(PlanError::InvalidParam(format!("anchor {} has no labels", a.name)));
            }
        }
        for c in &self.constraints {
            let (lo, hi, expected) = c.kind.allowed_anchors();
            let n = c.anchor_refs.len();
            if n < lo || n > hi {
                return Err(PlanError::Arity { kind: c.kind.name().to_string(), expected, found: n });
            }
            for r in &c.anchor_refs {
                if self.anchor(r).is_none() {
                    return Err(PlanError::UndeclaredAnchor(r.clone()));
                }
            }
            match (c.kind, c.param) {
                (PredicateKind::NextTo, Some(r)) if r.is_finite() && r > 0.0 => {}
                (PredicateKind::NextTo, Some(r)) => {
                    return Err(PlanError::InvalidParam(format!("next_to radius must be > 0, got {r}")))
                }
                (PredicateKind::NextTo, None) => {
                    return Err(PlanError::InvalidParam("next_to needs a radius".into()))
                }
                (k, Some(_)) => return Err(PlanError::InvalidParam(format!("{k} takes no numeric parameter"))),
                (_, None) => {}
            }
            if c.frame == Frame::Camera && self.viewpoint.is_none() {
                return Err(PlanError::MissingViewpoint);
            }
        }
        if let Some(ViewSpec::Pose { eye, target }) = self.viewpoint {
            if !(crate::math::is_finite(eye) && crate::math::is_finite(target)) || eye == target {
                return Err(PlanError::InvalidParam("viewpoint pose needs distinct finite eye and target".into()));
            }
        }
        Ok(())
    }
}
