//! Candidate scoring: boolean predicates filter, the last gradable predicate
//! ranks, earlier gradable predicates keep everything tied with their best.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::camera::auto_camera;
use crate::error::GeoError;
use crate::geo::frame::{camera_frame, scene_frame_from_olt, ReferenceFrame};
use crate::geo::predicates::{eval_between, eval_directional, pairwise_distance, size_proxy, SizeProxy};
use crate::olt::{retrieve_by_label, ObjectRecord, SceneOlt};
use crate::plan::{CheckedPlan, Frame, Predicate, PredicateKind, PredicatePlan, DEFAULT_NEXT_TO_RADIUS};

/// Gradable predicates used as filters keep candidates within this of the best.
pub const TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateValue {
    pub predicate: String,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub record: ObjectRecord,
    pub score: f64,
    pub per_predicate: Vec<PredicateValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// Left-to-right filter pipeline, last gradable predicate ranks.
    #[default]
    Ordered,
    /// Every predicate filters the full candidate set; results intersect.
    Conjunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoringOptions {
    pub composition: Composition,
    /// Replaces every `next_to` radius when set.
    pub next_to_radius: Option<f64>,
    pub size_proxy: SizeProxy,
}

/// Frames available to a plan's constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSet {
    pub scene: ReferenceFrame,
    pub camera: Option<ReferenceFrame>,
}

impl FrameSet {
    /// Uses `frame` for every constraint regardless of its declared frame.
    pub fn single(frame: ReferenceFrame) -> Self {
        Self { scene: frame, camera: Some(frame) }
    }

    /// Scene frame from the table; camera frame from the plan's viewpoint.
    pub fn for_plan(olt: &SceneOlt, plan: &PredicatePlan) -> Result<Self, GeoError> {
        let scene = scene_frame_from_olt(olt);
        let camera = match (plan.viewpoint, olt.bounds()) {
            (Some(view), Some(bounds)) => {
                let pose = auto_camera(&bounds, view).map_err(|_| GeoError::DegeneratePose("cannot place viewpoint camera"))?;
                Some(camera_frame(&pose)?)
            }
            _ => None,
        };
        Ok(Self { scene, camera })
    }

    fn get(&self, frame: Frame) -> Result<&ReferenceFrame, GeoError> {
        match frame {
            Frame::Scene => Ok(&self.scene),
            Frame::Camera => self.camera.as_ref().ok_or(GeoError::DegeneratePose("camera frame without a viewpoint")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    value: f64,
    passed: bool,
    /// Higher is better; `Some` only for gradable predicates.
    goodness: Option<f64>,
}

/// Closest instance to `c`, never `c` itself; ties go to the lower id.
fn nearest_instance<'a>(c: &ObjectRecord, pool: &'a [ObjectRecord], skip: Option<u64>) -> Option<&'a ObjectRecord> {
    let mut best: Option<(&ObjectRecord, f64)> = None;
    for r in pool {
        if r.id == c.id || Some(r.id) == skip {
            continue;
        }
        let d = pairwise_distance(c, r);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((r, d));
        }
    }
    best.map(|(r, _)| r)
}

struct Ctx<'a> {
    anchors: BTreeMap<&'a str, Vec<ObjectRecord>>,
    frames: &'a FrameSet,
    opts: &'a ScoringOptions,
}

impl Ctx<'_> {
    fn pool(&self, name: &str) -> &[ObjectRecord] {
        self.anchors.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    fn eval(&self, c: &ObjectRecord, p: &Predicate) -> Result<Option<Eval>, GeoError> {
        let first = p.anchor_refs.first().map(|n| nearest_instance(c, self.pool(n), None));
        let anchor = match first {
            Some(None) => return Ok(None),
            Some(Some(a)) => Some(a),
            None => None,
        };
        let e = match p.kind {
            PredicateKind::Nearest | PredicateKind::Farthest => {
                let d = pairwise_distance(c, anchor.expect("arity checked"));
                let goodness = if p.kind == PredicateKind::Nearest { -d } else { d };
                Eval { value: d, passed: true, goodness: Some(goodness) }
            }
            PredicateKind::Smallest | PredicateKind::Largest => {
                let s = size_proxy(c, self.opts.size_proxy);
                let goodness = if p.kind == PredicateKind::Smallest { -s } else { s };
                Eval { value: s, passed: true, goodness: Some(goodness) }
            }
            PredicateKind::NextTo => {
                let d = pairwise_distance(c, anchor.expect("arity checked"));
                let r = self.opts.next_to_radius.or(p.param).unwrap_or(DEFAULT_NEXT_TO_RADIUS);
                Eval { value: d, passed: d <= r, goodness: None }
            }
            PredicateKind::Between => {
                let a = anchor.expect("arity checked");
                let Some(b) = nearest_instance(c, self.pool(&p.anchor_refs[1]), Some(a.id)) else {
                    return Ok(None);
                };
                let (value, passed) = eval_between(c, a, b);
                Eval { value, passed, goodness: None }
            }
            kind => {
                let frame = self.frames.get(p.frame)?;
                let (value, passed) = eval_directional(c, anchor, frame, kind)?;
                Eval { value, passed, goodness: anchor.is_none().then_some(value) }
            }
        };
        Ok(Some(e))
    }
}

fn best_goodness(rows: &[usize], evals: &[Vec<Option<Eval>>], i: usize) -> f64 {
    rows.iter().filter_map(|&r| evals[r][i].and_then(|e| e.goodness)).fold(f64::NEG_INFINITY, f64::max)
}

/// Scores `candidates` with a single frame for every directional constraint.
pub fn score_candidates(
    candidates: &[ObjectRecord],
    plan: &CheckedPlan,
    olt: &SceneOlt,
    frame: &ReferenceFrame,
) -> Result<Vec<ScoredCandidate>, GeoError> {
    score_candidates_with(candidates, &plan.plan, olt, &FrameSet::single(*frame), &ScoringOptions::default())
}

/// Ranked survivors, best first; ties on score go to the lower id.
pub fn score_candidates_with(
    candidates: &[ObjectRecord],
    plan: &PredicatePlan,
    olt: &SceneOlt,
    frames: &FrameSet,
    opts: &ScoringOptions,
) -> Result<Vec<ScoredCandidate>, GeoError> {
    let mut anchors = BTreeMap::new();
    for a in &plan.anchors {
        anchors.insert(a.name.as_str(), retrieve_by_label(olt, &a.labels));
    }
    for c in &plan.constraints {
        for r in &c.anchor_refs {
            if anchors.get(r.as_str()).is_none_or(|v| v.is_empty()) {
                return Err(GeoError::MissingAnchor(r.clone()));
            }
        }
    }
    let ctx = Ctx { anchors, frames, opts };
    let n = plan.constraints.len();
    let mut evals = Vec::with_capacity(candidates.len());
    for c in candidates {
        let row = plan.constraints.iter().map(|p| ctx.eval(c, p)).collect::<Result<Vec<_>, _>>()?;
        evals.push(row);
    }
    let ranker = plan.constraints.iter().rposition(Predicate::is_gradable);
    let complete: Vec<usize> = (0..candidates.len()).filter(|&r| evals[r].iter().all(Option::is_some)).collect();

    // passed[r][i] as reported in the trace.
    let mut passed: Vec<Vec<bool>> = evals.iter().map(|row| row.iter().map(|e| e.is_some_and(|e| e.passed)).collect()).collect();
    let survivors: Vec<usize> = match opts.composition {
        Composition::Ordered => {
            let mut alive = complete.clone();
            for (i, p) in plan.constraints.iter().enumerate() {
                if Some(i) == ranker {
                    continue;
                }
                if p.is_gradable() {
                    let best = best_goodness(&alive, &evals, i);
                    alive.retain(|&r| evals[r][i].and_then(|e| e.goodness).is_some_and(|g| g >= best - TIE_TOLERANCE));
                } else {
                    alive.retain(|&r| passed[r][i]);
                }
            }
            alive
        }
        Composition::Conjunction => {
            for (i, p) in plan.constraints.iter().enumerate() {
                if p.is_gradable() {
                    let best = best_goodness(&complete, &evals, i);
                    for &r in &complete {
                        passed[r][i] = evals[r][i].and_then(|e| e.goodness).is_some_and(|g| g >= best - TIE_TOLERANCE);
                    }
                }
            }
            let all: Vec<usize> = complete.iter().copied().filter(|&r| passed[r].iter().all(|&b| b)).collect();
            if !all.is_empty() {
                all
            } else {
                let booleans: Vec<usize> = complete
                    .iter()
                    .copied()
                    .filter(|&r| plan.constraints.iter().enumerate().all(|(i, p)| p.is_gradable() || passed[r][i]))
                    .collect();
                if booleans.is_empty() {
                    complete.clone()
                } else {
                    booleans
                }
            }
        }
    };
    if survivors.is_empty() {
        return Err(GeoError::NoCandidates);
    }

    let mut out: Vec<ScoredCandidate> = survivors
        .into_iter()
        .map(|r| {
            let score = ranker.and_then(|i| evals[r][i].and_then(|e| e.goodness)).unwrap_or(0.0);
            let per_predicate = plan
                .constraints
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let e = evals[r][i].expect("complete row");
                    let ok = if opts.composition == Composition::Ordered && p.is_gradable() { true } else { passed[r][i] };
                    PredicateValue { predicate: p.label(), value: e.value, passed: ok }
                })
                .collect();
            ScoredCandidate { record: candidates[r].clone(), score, per_predicate }
        })
        .collect();
    debug_assert!(out.iter().all(|s| s.per_predicate.len() == n && s.score.is_finite()));
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.record.id.cmp(&b.record.id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;

    fn rec(id: u64, label: &str, center: crate::math::Vec3, size: crate::math::Vec3) -> ObjectRecord {
        ObjectRecord { id, label: label.into(), center, size }
    }

    fn run(olt: &SceneOlt, src: &str) -> Result<Vec<ScoredCandidate>, GeoError> {
        let plan = parse_plan(src).unwrap();
        let cands = retrieve_by_label(olt, &plan.target_labels);
        let frames = FrameSet::for_plan(olt, &plan)?;
        score_candidates_with(&cands, &plan, olt, &frames, &ScoringOptions::default())
    }

    #[test]
    fn nearest_to_table() {
        let olt = SceneOlt::new(
            "s",
            vec![
                rec(1, "chair", [0.0, 0.0, 0.0], [1.0; 3]),
                rec(2, "chair", [2.0, 0.0, 0.0], [1.0; 3]),
                rec(3, "chair", [5.0, 0.0, 0.0], [1.0; 3]),
                rec(4, "table", [4.5, 0.0, 0.0], [1.0; 3]),
            ],
        )
        .unwrap();
        let ranked = run(&olt, "target chair; anchor t: table; nearest(t)").unwrap();
        assert_eq!(ranked.iter().map(|s| s.record.id).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!(ranked[0].score, -0.5);
    }

    #[test]
    fn vacuous_plan() {
        let olt = SceneOlt::new("s", vec![rec(1, "chair", [0.0; 3], [1.0; 3])]).unwrap();
        let ranked = run(&olt, "target chair").unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].score, 0.0);
        assert!(ranked[0].per_predicate.is_empty());
    }

    #[test]
    fn small_chair_on_the_left() {
        let s = |v: f64| [v, 1.0, 1.0];
        let olt = SceneOlt::new(
            "s",
            vec![
                rec(1, "chair", [-3.0, 0.0, 0.0], s(0.5)),
                rec(2, "chair", [1.0, 0.0, 0.0], s(0.5)),
                rec(3, "chair", [-5.0, 0.0, 0.0], s(2.0)),
            ],
        )
        .unwrap();
        let ranked = run(&olt, "target chair; smallest; leftmost").unwrap();
        assert_eq!(ranked.iter().map(|s| s.record.id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(ranked[0].per_predicate.len(), 2);
    }

    #[test]
    fn directional_filter_then_empty() {
        let olt = SceneOlt::new(
            "s",
            vec![rec(1, "chair", [-1.0, 0.0, 0.0], [1.0; 3]), rec(2, "table", [0.0; 3], [1.0; 3])],
        )
        .unwrap();
        assert_eq!(run(&olt, "target chair; anchor t: table; left_of(t)").unwrap()[0].record.id, 1);
        assert_eq!(run(&olt, "target chair; anchor t: table; right_of(t)"), Err(GeoError::NoCandidates));
        assert_eq!(
            run(&olt, "target chair; anchor s: sofa; nearest(s)"),
            Err(GeoError::MissingAnchor("s".into()))
        );
    }

    #[test]
    fn multi_instance_anchor_pairs_with_own_nearest() {
        let olt = SceneOlt::new(
            "s",
            vec![
                rec(1, "chair", [0.0, 0.0, 0.0], [0.5; 3]),
                rec(2, "chair", [10.0, 0.0, 0.0], [0.5; 3]),
                rec(3, "table", [0.8, 0.0, 0.0], [1.0; 3]),
                rec(4, "table", [10.3, 0.0, 0.0], [1.0; 3]),
            ],
        )
        .unwrap();
        let ranked = run(&olt, "target chair; anchor t: table; nearest(t)").unwrap();
        assert_eq!(ranked[0].record.id, 2);
        assert!((ranked[0].per_predicate[0].value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn same_label_anchor_excludes_self() {
        let olt = SceneOlt::new(
            "s",
            vec![
                rec(1, "chair", [0.0; 3], [0.5; 3]),
                rec(2, "chair", [0.7, 0.0, 0.0], [0.5; 3]),
                rec(3, "chair", [5.0, 0.0, 0.0], [0.5; 3]),
            ],
        )
        .unwrap();
        let ranked = run(&olt, "target chair; anchor c: chair; farthest(c)").unwrap();
        assert_eq!(ranked[0].record.id, 3);
    }

    #[test]
    fn conjunction_differs_from_pipeline() {
        // Pipeline: smallest keeps {1, 2}, then nearest picks 2. Conjunction:
        // smallest = {1, 2}, nearest over all = {3}; empty intersection.
        let olt = SceneOlt::new(
            "s",
            vec![
                rec(1, "chair", [0.0; 3], [0.5; 3]),
                rec(2, "chair", [3.0, 0.0, 0.0], [0.5; 3]),
                rec(3, "chair", [4.0, 0.0, 0.0], [1.0; 3]),
                rec(9, "table", [4.2, 0.0, 0.0], [1.0; 3]),
            ],
        )
        .unwrap();
        let plan = parse_plan("target chair; anchor t: table; smallest; nearest(t)").unwrap();
        let cands = retrieve_by_label(&olt, &plan.target_labels);
        let frames = FrameSet::for_plan(&olt, &plan).unwrap();
        let ordered = score_candidates_with(&cands, &plan, &olt, &frames, &ScoringOptions::default()).unwrap();
        assert_eq!(ordered[0].record.id, 2);
        let opts = ScoringOptions { composition: Composition::Conjunction, ..Default::default() };
        let conj = score_candidates_with(&cands, &plan, &olt, &frames, &opts).unwrap();
        assert_eq!(conj[0].record.id, 3);
    }
}
