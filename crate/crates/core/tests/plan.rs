use oltground_core::plan::{plan_from_json, plan_to_json, Anchor, Frame, Predicate, PredicateKind};
use oltground_core::{parse_plan, print_plan, PredicatePlan, ViewSpec};
use proptest::prelude::*;

const WORDS: [&str; 7] = ["chair", "table", "coffee table", "office chair", "lamp", "tv", "kitchen cabinet"];

fn labels() -> impl Strategy<Value = Vec<String>> {
    prop::collection::btree_set(prop::sample::select(&WORDS[..]), 1..3).prop_map(|s| s.into_iter().map(String::from).collect())
}

fn view() -> impl Strategy<Value = Option<ViewSpec>> {
    let coord = (-40i32..40).prop_map(|v| v as f64 / 4.0);
    prop_oneof![
        Just(None),
        Just(Some(ViewSpec::Top)),
        Just(Some(ViewSpec::Front)),
        Just(Some(ViewSpec::Side)),
        (prop::array::uniform3(coord.clone()), prop::array::uniform3(coord))
            .prop_filter("distinct", |(e, t)| e != t)
            .prop_map(|(eye, target)| Some(ViewSpec::Pose { eye, target })),
    ]
}

/// Structurally valid plans: declared anchors, legal arities, camera frames
/// only when a viewpoint exists.
fn plan() -> impl Strategy<Value = PredicatePlan> {
    (labels(), prop::collection::vec(labels(), 0..3), view())
        .prop_flat_map(|(target, anchor_labels, viewpoint)| {
            let n = anchor_labels.len();
            let constraint = (
                prop::sample::select(&PredicateKind::ALL[..]),
                prop::collection::vec(0..n.max(1), 2),
                any::<bool>(),
                any::<bool>(),
                1u32..40,
            );
            (Just(target), Just(anchor_labels), Just(viewpoint), prop::collection::vec(constraint, 0..5))
        })
        .prop_map(|(target, anchor_labels, viewpoint, raw)| {
            let anchors: Vec<Anchor> =
                anchor_labels.into_iter().enumerate().map(|(i, labels)| Anchor { name: format!("a{i}"), labels }).collect();
            let mut plan = PredicatePlan { target_labels: target, anchors, constraints: vec![], viewpoint };
            for (kind, refs, use_anchor, camera, radius) in raw {
                let (lo, hi, _) = kind.allowed_anchors();
                let want = if use_anchor { hi } else { lo };
                if want > plan.anchors.len() {
                    continue;
                }
                let refs: Vec<String> = refs.iter().take(want).map(|&i| plan.anchors[i].name.clone()).collect();
                let mut p = Predicate::new(kind, refs);
                if p.param.is_some() {
                    p.param = Some(radius as f64 / 8.0);
                }
                p.frame = plan.default_frame(kind);
                if kind.is_directional() && plan.viewpoint.is_some() && camera {
                    p.frame = Frame::Camera;
                } else if kind.is_directional() && camera {
                    p.frame = Frame::Scene;
                }
                plan.constraints.push(p);
            }
            plan
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dsl_round_trip(p in plan()) {
        p.check().unwrap();
        let text = print_plan(&p);
        let back = parse_plan(&text).unwrap();
        prop_assert_eq!(&back, &p, "{}", text);
        prop_assert_eq!(print_plan(&back), text);
    }

    #[test]
    fn json_round_trip(p in plan()) {
        prop_assert_eq!(plan_from_json(&plan_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn view_dependence_read_from_ast(p in plan()) {
        let any_camera = p.constraints.iter().any(|c| c.frame == Frame::Camera);
        prop_assert_eq!(p.view_dependent(), any_camera);
        if p.viewpoint.is_none() {
            prop_assert!(!p.view_dependent());
        }
        // With every frame left implicit, lateral and depth kinds follow the viewpoint.
        let mut implicit = p.clone();
        for c in &mut implicit.constraints {
            c.frame = implicit.viewpoint.map_or(Frame::Scene, |_| {
                if c.kind.is_view_sensitive() { Frame::Camera } else { Frame::Scene }
            });
        }
        let lateral = [PredicateKind::LeftOf, PredicateKind::RightOf, PredicateKind::InFrontOf, PredicateKind::Behind];
        let expected = p.viewpoint.is_some() && p.constraints.iter().any(|c| lateral.contains(&c.kind));
        prop_assert_eq!(implicit.view_dependent(), expected);
    }

    #[test]
    fn parser_never_panics(text in "[a-z_ ;:|(),@0-9.-]{0,60}") {
        if let Ok(p) = parse_plan(&text) {
            prop_assert_eq!(parse_plan(&print_plan(&p)).unwrap(), p);
        }
    }
}

#[test]
fn small_chair_on_the_left_parses_to_two_rankers() {
    let p = parse_plan("target chair; smallest; leftmost").unwrap();
    assert_eq!(p.constraints.iter().map(|c| c.kind).collect::<Vec<_>>(), [PredicateKind::Smallest, PredicateKind::LeftOf]);
    assert!(p.constraints.iter().all(|c| c.anchor_refs.is_empty() && c.is_gradable()));
}
