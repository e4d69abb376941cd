use std::collections::BTreeSet;

use oltground_agent::AnswerRecord;
use oltground_core::plan::parse_plan;
use oltground_core::Aabb;
use oltground_eval::{evaluate, load_queries, save_queries, QueryRecord, Stratum};
use proptest::prelude::*;
use serde_json::Value;

fn bbox() -> impl Strategy<Value = Aabb> {
    (prop::array::uniform3(-5f64..5.0), prop::array::uniform3(0.1f64..2.0)).prop_map(|(c, s)| Aabb::new(c, s))
}

/// Every record carries exactly one of each stratum pair.
fn strata() -> impl Strategy<Value = BTreeSet<Stratum>> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(u, e, d)| {
        BTreeSet::from([
            if u { Stratum::Unique } else { Stratum::Multiple },
            if e { Stratum::Easy } else { Stratum::Hard },
            if d { Stratum::ViewDep } else { Stratum::ViewIndep },
        ])
    })
}

fn query(i: usize) -> impl Strategy<Value = QueryRecord> {
    const PLANS: [&str; 3] = ["target chair", "target chair; anchor t: table; nearest(t)", "target lamp; viewpoint top; leftmost"];
    (bbox(), strata(), prop::option::of(0u64..50), prop::option::of(prop::sample::select(&PLANS[..])), "[a-z ]{0,20}")
        .prop_map(move |(b, strata, id, plan, text)| QueryRecord {
            query_id: format!("q{i}"),
            scene_id: format!("scene{:04}_00", i % 3),
            text,
            plan: plan.map(|p| parse_plan(p).unwrap()),
            gt_object_id: id,
            gt_bbox: Some(b),
            strata,
        })
}

fn queries() -> impl Strategy<Value = Vec<QueryRecord>> {
    (1usize..30).prop_flat_map(|n| (0..n).map(query).collect::<Vec<_>>())
}

fn answer(q: &QueryRecord, bbox: Option<Aabb>) -> AnswerRecord {
    AnswerRecord {
        query_id: q.query_id.clone(),
        scene_id: q.scene_id.clone(),
        object_id: bbox.map(|_| 1),
        bbox,
        rationale: String::new(),
        fallbacks_used: vec![],
        tool_trace: vec![],
        failure: None,
        meta: Value::Null,
    }
}

/// Predictions shifted off ground truth by a per-query fraction of its size,
/// some missing.
fn perturbed(qs: &[QueryRecord], shifts: &[(bool, f64)]) -> Vec<AnswerRecord> {
    qs.iter()
        .zip(shifts)
        .map(|(q, &(present, t))| {
            let g = q.gt_bbox.unwrap();
            answer(q, present.then(|| Aabb::new([g.center[0] + t * g.size[0], g.center[1], g.center[2]], g.size)))
        })
        .collect()
}

proptest! {
    #[test]
    fn query_lines_round_trip(qs in queries()) {
        let (back, errors) = load_queries(&save_queries(&qs)).unwrap();
        prop_assert!(errors.is_empty());
        prop_assert_eq!(back, qs);
    }

    #[test]
    fn accuracy_is_antitone_in_threshold(qs in queries(), shifts in prop::collection::vec((any::<bool>(), 0f64..1.2), 30)) {
        let thresholds = [0.1, 0.25, 0.5, 0.75, 1.0];
        let r = evaluate(&perturbed(&qs, &shifts), &qs, &thresholds).unwrap();
        for s in std::iter::once(None).chain(Stratum::ALL.into_iter().map(Some)) {
            let accs: Vec<Option<f64>> = thresholds.iter().map(|&t| r.acc(s, t)).collect();
            for w in accs.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    prop_assert!(b <= a, "{:?}: {:?}", s, accs);
                }
            }
        }
    }

    #[test]
    fn ground_truth_scores_one_everywhere(qs in queries()) {
        let gt: Vec<AnswerRecord> = qs.iter().map(|q| answer(q, q.gt_bbox)).collect();
        let r = evaluate(&gt, &qs, &[0.1, 0.25, 0.5, 0.75, 1.0]).unwrap();
        for t in [0.1, 0.25, 0.5, 0.75, 1.0] {
            prop_assert_eq!(r.acc(None, t), Some(1.0));
        }
    }

    #[test]
    fn strata_partition_the_queries(qs in queries(), shifts in prop::collection::vec((any::<bool>(), 0f64..1.2), 30)) {
        let r = evaluate(&perturbed(&qs, &shifts), &qs, &[0.25, 0.5]).unwrap();
        prop_assert_eq!(r.overall.n, qs.len());
        for (a, b) in [(Stratum::Unique, Stratum::Multiple), (Stratum::Easy, Stratum::Hard), (Stratum::ViewDep, Stratum::ViewIndep)] {
            prop_assert_eq!(r.strata[&a].n + r.strata[&b].n, r.overall.n);
            // Correct counts split the same way.
            let hits = |s: Option<Stratum>| r.rows.iter().filter(|row| s.is_none_or(|s| row.strata.contains(&s)) && row.correct_at["0.5"]).count();
            prop_assert_eq!(hits(Some(a)) + hits(Some(b)), hits(None));
        }
    }

    #[test]
    fn missing_answers_count_as_wrong(qs in queries()) {
        let r = evaluate(&[], &qs, &[0.25]).unwrap();
        prop_assert_eq!(r.overall.n, qs.len());
        prop_assert_eq!(r.acc(None, 0.25), Some(0.0));
    }
}
