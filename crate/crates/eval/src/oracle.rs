//! Brute-force reference solver for the plan shapes the generator emits:
//! any number of boolean constraints plus at most one gradable constraint,
//! anchors with exactly one instance of a label other than the target's.
//!
//! Predicates are evaluated straight from their definitions over every
//! candidate, independently of the scoring engine.

use oltground_core::camera::auto_camera;
use oltground_core::olt::{ObjectRecord, SceneOlt};
use oltground_core::plan::{Frame, PredicateKind, PredicatePlan, DEFAULT_NEXT_TO_RADIUS};

/// Smallest accepted gap between any value and the decision boundary, in
/// meters; sizes use the same figure as a relative volume gap.
pub const MIN_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAnswer {
    pub id: u64,
    /// Distance of the closest decision to flipping.
    pub margin: f64,
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn unit(a: V3) -> V3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}
fn dist(a: V3, b: V3) -> f64 {
    let d = sub(a, b);
    dot(d, d).sqrt()
}
fn half_diag(s: V3) -> f64 {
    0.5 * dot(s, s).sqrt()
}

struct Axes {
    right: V3,
    forward: V3,
    up: V3,
    origin: V3,
}

fn scene_axes(olt: &SceneOlt) -> Axes {
    let n = olt.len() as f64;
    let mut o = [0.0; 3];
    for r in olt.records() {
        for k in 0..3 {
            o[k] += r.center[k] / n;
        }
    }
    Axes { right: [1.0, 0.0, 0.0], forward: [0.0, 1.0, 0.0], up: [0.0, 0.0, 1.0], origin: o }
}

fn camera_axes(olt: &SceneOlt, plan: &PredicatePlan) -> Option<Axes> {
    let pose = auto_camera(&olt.bounds()?, plan.viewpoint?).ok()?;
    let forward = unit(sub(pose.target, pose.eye));
    let right = unit(cross(forward, pose.worldup));
    Some(Axes { up: cross(right, forward), right, forward, origin: pose.eye })
}

/// Signed offset along the kind's direction; "in front" points at the viewer.
fn along(kind: PredicateKind, axes: &Axes, d: V3) -> f64 {
    match kind {
        PredicateKind::RightOf => dot(d, axes.right),
        PredicateKind::LeftOf => -dot(d, axes.right),
        PredicateKind::Above => dot(d, axes.up),
        PredicateKind::Below => -dot(d, axes.up),
        PredicateKind::InFrontOf => -dot(d, axes.forward),
        PredicateKind::Behind => dot(d, axes.forward),
        _ => unreachable!("not directional"),
    }
}

fn sole_instance<'a>(olt: &'a SceneOlt, plan: &PredicatePlan, name: &str) -> Option<&'a ObjectRecord> {
    let anchor = plan.anchor(name)?;
    let found: Vec<&ObjectRecord> = olt.records().iter().filter(|r| anchor.labels.contains(&r.label)).collect();
    let only = (found.len() == 1).then(|| found[0])?;
    (!plan.target_labels.contains(&only.label)).then_some(only)
}

/// Unique answer with its margin, or `None` if the draw is ambiguous, empty
/// or outside the supported shapes.
pub fn solve(plan: &PredicatePlan, olt: &SceneOlt) -> Option<OracleAnswer> {
    let mut alive: Vec<&ObjectRecord> = olt.records().iter().filter(|r| plan.target_labels.contains(&r.label)).collect();
    if alive.is_empty() {
        return None;
    }
    let scene = scene_axes(olt);
    let camera = camera_axes(olt, plan);
    let mut margin = f64::INFINITY;
    let mut ranker: Option<(PredicateKind, Option<&ObjectRecord>, &Axes)> = None;

    for c in &plan.constraints {
        let axes = match c.frame {
            Frame::Scene => &scene,
            Frame::Camera => camera.as_ref()?,
        };
        let a = match c.anchor_refs.first() {
            Some(n) => Some(sole_instance(olt, plan, n)?),
            None => None,
        };
        let gradable = matches!(
            c.kind,
            PredicateKind::Nearest | PredicateKind::Farthest | PredicateKind::Smallest | PredicateKind::Largest
        ) || (c.kind.is_directional() && a.is_none());
        if gradable {
            if ranker.is_some() {
                return None;
            }
            ranker = Some((c.kind, a, axes));
            continue;
        }
        // Boolean: signed slack, positive when the candidate passes.
        let slack = |r: &ObjectRecord| -> Option<f64> {
            let a = a?;
            Some(match c.kind {
                k if k.is_directional() => along(k, axes, sub(r.center, a.center)),
                PredicateKind::NextTo => c.param.unwrap_or(DEFAULT_NEXT_TO_RADIUS) - dist(r.center, a.center),
                PredicateKind::Between => {
                    let b = sole_instance(olt, plan, c.anchor_refs.get(1)?)?;
                    let ab = sub(b.center, a.center);
                    let len = dot(ab, ab).sqrt();
                    let t = dot(sub(r.center, a.center), ab) / (len * len);
                    let foot = [a.center[0] + t * ab[0], a.center[1] + t * ab[1], a.center[2] + t * ab[2]];
                    let perp = dist(r.center, foot);
                    let limit = half_diag(a.size).max(half_diag(b.size));
                    // Metric slack on each condition; pass needs all three.
                    (t * len).min((1.0 - t) * len).min(limit - perp)
                }
                _ => return None,
            })
        };
        let mut next = Vec::new();
        for r in alive {
            let s = slack(r)?;
            margin = margin.min(s.abs());
            if s > 0.0 {
                next.push(r);
            }
        }
        alive = next;
        if alive.is_empty() {
            return None;
        }
    }

    let best = match ranker {
        None => {
            if alive.len() != 1 {
                return None;
            }
            alive[0]
        }
        Some((kind, a, axes)) => {
            let goodness = |r: &ObjectRecord| -> f64 {
                match kind {
                    PredicateKind::Nearest => -dist(r.center, a.expect("anchored").center),
                    PredicateKind::Farthest => dist(r.center, a.expect("anchored").center),
                    PredicateKind::Smallest => -(r.size[0] * r.size[1] * r.size[2]),
                    PredicateKind::Largest => r.size[0] * r.size[1] * r.size[2],
                    k => along(k, axes, sub(r.center, axes.origin)),
                }
            };
            let mut scored: Vec<(f64, &ObjectRecord)> = alive.iter().map(|r| (goodness(r), *r)).collect();
            scored.sort_by(|x, y| y.0.total_cmp(&x.0));
            if let Some(second) = scored.get(1) {
                let gap = scored[0].0 - second.0;
                let gap = if matches!(kind, PredicateKind::Smallest | PredicateKind::Largest) {
                    gap / scored[0].0.abs().max(second.0.abs())
                } else {
                    gap
                };
                margin = margin.min(gap);
            }
            scored[0].1
        }
    };
    (margin >= MIN_MARGIN).then_some(OracleAnswer { id: best.id, margin })
}
