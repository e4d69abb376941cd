//! Synthetic benchmark: labeled boxes in a 6 x 6 x 3 m room, surface-sampled
//! point clouds, and queries whose answers the brute-force oracle confirms.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use oltground_core::olt::{build_olt, persist_olt, SceneOlt};
use oltground_core::plan::{parse_plan, PredicatePlan};
use oltground_core::ply::{serialize_ply, PlyFormat};
use oltground_core::scene::PointCloud;
use oltground_core::segmentation::{Instance, InstanceSegmentation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::EvalError;
use crate::oracle::solve;
use crate::query::{save_queries, QueryRecord, Stratum};

pub const ROOM: [f64; 3] = [6.0, 6.0, 3.0];
pub const MIN_GAP: f64 = 0.3;
pub const POINTS_PER_OBJECT: usize = 500;
const PLACEMENT_ATTEMPTS: usize = 2000;
const SCENE_ATTEMPTS: usize = 20;
const DRAWS_PER_TEMPLATE: usize = 30;

/// Query templates; each maps to one plan shape.
pub const TEMPLATES: [&str; 22] = [
    "unique", "nearest", "farthest", "smallest", "largest", "left_of", "right_of", "in_front_of", "behind", "above",
    "below", "next_to", "between", "leftmost", "rightmost", "highest", "lowest", "view_left_of", "view_right_of",
    "view_in_front_of", "view_leftmost", "next_to_smallest",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_scenes: usize,
    pub objects_per_scene: usize,
    pub queries_per_scene: usize,
    /// Template names to draw from; empty means all.
    pub predicate_mix: Vec<String>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { n_scenes: 50, objects_per_scene: 8, queries_per_scene: 8, predicate_mix: vec![] }
    }
}

struct LabelKind {
    name: &'static str,
    sizes: &'static [[f64; 3]],
    color: [u8; 3],
    /// May be placed off the floor.
    floats: bool,
}

const LABELS: [LabelKind; 9] = [
    LabelKind { name: "chair", sizes: &[[0.5, 0.5, 0.9], [0.6, 0.6, 1.0], [0.45, 0.5, 0.8], [0.7, 0.65, 1.05]], color: [180, 120, 60], floats: false },
    LabelKind { name: "table", sizes: &[[1.2, 0.8, 0.75], [1.6, 0.9, 0.75], [0.8, 0.8, 0.7]], color: [140, 90, 50], floats: false },
    LabelKind { name: "lamp", sizes: &[[0.3, 0.3, 1.5], [0.25, 0.25, 0.5], [0.4, 0.4, 1.7]], color: [230, 220, 120], floats: true },
    LabelKind { name: "cabinet", sizes: &[[0.8, 0.5, 1.8], [1.0, 0.45, 0.9], [0.6, 0.6, 1.2]], color: [120, 120, 140], floats: false },
    LabelKind { name: "plant", sizes: &[[0.4, 0.4, 0.8], [0.3, 0.3, 0.5], [0.6, 0.6, 1.3]], color: [60, 160, 70], floats: false },
    LabelKind { name: "box", sizes: &[[0.4, 0.3, 0.3], [0.5, 0.5, 0.4], [0.3, 0.3, 0.25]], color: [200, 170, 120], floats: true },
    LabelKind { name: "monitor", sizes: &[[0.6, 0.2, 0.4], [0.5, 0.2, 0.35], [0.8, 0.25, 0.5]], color: [30, 30, 30], floats: true },
    LabelKind { name: "sofa", sizes: &[[2.0, 0.9, 0.85], [1.6, 0.85, 0.8]], color: [90, 60, 140], floats: false },
    LabelKind { name: "trash can", sizes: &[[0.35, 0.35, 0.6], [0.4, 0.4, 0.7], [0.3, 0.3, 0.45]], color: [100, 100, 100], floats: false },
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub cloud: PointCloud,
    pub segmentation: InstanceSegmentation,
    pub olt: SceneOlt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBenchmark {
    pub seed: u64,
    pub spec: SynthSpec,
    pub scenes: Vec<SynthScene>,
    pub queries: Vec<QueryRecord>,
    /// Template name of each query, parallel to `queries`.
    pub templates: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Placed {
    label: usize,
    center: [f64; 3],
    size: [f64; 3],
}

fn gap(a: &Placed, b: &Placed) -> f64 {
    (0..3).map(|k| (a.center[k] - b.center[k]).abs() - 0.5 * (a.size[k] + b.size[k])).fold(f64::NEG_INFINITY, f64::max)
}

fn label_counts(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..LABELS.len()).collect();
    order.shuffle(rng);
    let mut counts = vec![rng.random_range(2..=4usize).min(n), rng.random_range(1..=2usize)];
    while counts.iter().sum::<usize>() < n && counts.len() < order.len() {
        counts.push(1);
    }
    let mut i = 0;
    while counts.iter().sum::<usize>() < n {
        counts[i % 2] += 1;
        i += 1;
    }
    while counts.iter().sum::<usize>() > n {
        let last = counts.len() - 1;
        counts[last] -= 1;
        if counts[last] == 0 {
            counts.pop();
        }
    }
    order.into_iter().zip(counts).collect()
}

fn place(n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Placed>> {
    let mut labels: Vec<usize> = label_counts(n, rng).into_iter().flat_map(|(l, c)| std::iter::repeat_n(l, c)).collect();
    labels.shuffle(rng);
    let mut placed: Vec<Placed> = Vec::with_capacity(n);
    for label in labels {
        let kind = &LABELS[label];
        let mut ok = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let size = kind.sizes[rng.random_range(0..kind.sizes.len())];
            let mut center = [0.0; 3];
            for k in 0..2 {
                center[k] = rng.random_range(0.5 * size[k]..=ROOM[k] - 0.5 * size[k]);
            }
            center[2] = if kind.floats && rng.random_bool(0.5) {
                rng.random_range(0.5 * size[2]..=ROOM[2] - 0.5 * size[2])
            } else {
                0.5 * size[2]
            };
            let p = Placed { label, center, size };
            if placed.iter().all(|q| gap(&p, q) >= MIN_GAP) {
                placed.push(p);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

/// Uniform surface samples; the first eight points are the box corners so
/// the fitted box reproduces the placed one.
fn sample_surface(p: &Placed, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let [sx, sy, sz] = p.size;
    let lo = [p.center[0] - 0.5 * sx, p.center[1] - 0.5 * sy, p.center[2] - 0.5 * sz];
    let hi = [p.center[0] + 0.5 * sx, p.center[1] + 0.5 * sy, p.center[2] + 0.5 * sz];
    let mut pts = Vec::with_capacity(n);
    for i in 0..8 {
        pts.push([
            if i & 1 == 0 { lo[0] } else { hi[0] },
            if i & 2 == 0 { lo[1] } else { hi[1] },
            if i & 4 == 0 { lo[2] } else { hi[2] },
        ]);
    }
    let areas = [sy * sz, sx * sz, sx * sy];
    let total: f64 = areas.iter().sum::<f64>() * 2.0;
    while pts.len() < n {
        let mut pick = rng.random_range(0.0..total);
        let mut axis = 0;
        while axis < 2 && pick >= 2.0 * areas[axis] {
            pick -= 2.0 * areas[axis];
            axis += 1;
        }
        let mut q = [0.0; 3];
        for k in 0..3 {
            q[k] = if k == axis {
                if rng.random_bool(0.5) { lo[k] } else { hi[k] }
            } else {
                rng.random_range(lo[k]..=hi[k])
            };
        }
        pts.push(q);
    }
    pts
}

fn make_scene(scene_id: String, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<SynthScene, EvalError> {
    let placed = (0..SCENE_ATTEMPTS)
        .find_map(|_| place(spec.objects_per_scene, rng))
        .ok_or_else(|| EvalError::SpecInfeasible(format!("could not place {} boxes with {MIN_GAP} m gaps", spec.objects_per_scene)))?;
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut instances = Vec::new();
    for (i, p) in placed.iter().enumerate() {
        let start = points.len() as u64;
        points.extend(sample_surface(p, POINTS_PER_OBJECT, rng));
        colors.extend(std::iter::repeat_n(LABELS[p.label].color, POINTS_PER_OBJECT));
        instances.push(Instance {
            instance_id: i as u64 + 1,
            label: LABELS[p.label].name.to_string(),
            point_indices: (start..start + POINTS_PER_OBJECT as u64).collect(),
            confidence: 1.0,
        });
    }
    let cloud = PointCloud::new(scene_id.clone(), points, colors).map_err(|e| EvalError::SpecInfeasible(e.to_string()))?;
    let segmentation = InstanceSegmentation { scene_id, instances };
    let olt = build_olt(&cloud, &segmentation).map_err(|e| EvalError::SpecInfeasible(e.to_string()))?;
    Ok(SynthScene { cloud, segmentation, olt })
}

struct Draw {
    dsl: String,
    text: String,
}

fn pick<'a>(v: &'a [String], rng: &mut ChaCha8Rng) -> Option<&'a String> {
    (!v.is_empty()).then(|| &v[rng.random_range(0..v.len())])
}

/// A DSL label: bare when every word is an identifier, else quoted.
fn lbl(l: &str) -> String {
    if l.split(' ').all(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')) {
        l.to_string()
    } else {
        format!("\"{l}\"")
    }
}

fn draw(template: &str, olt: &SceneOlt, rng: &mut ChaCha8Rng) -> Option<Draw> {
    let index = olt.label_index();
    let multi: Vec<String> = index.iter().filter(|(_, v)| v.len() >= 2).map(|(k, _)| k.clone()).collect();
    let single: Vec<String> = index.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| k.clone()).collect();
    let t = pick(&multi, rng)?.clone();
    let a = pick(&single, rng).cloned();
    let anchored = |kind: &str, phrase: &str, view: Option<&str>| -> Option<Draw> {
        let a = a.clone()?;
        let vp = view.map(|v| format!("; viewpoint {v}")).unwrap_or_default();
        let lead = view.map(|v| format!("seen from the {v}, ")).unwrap_or_default();
        Some(Draw {
            dsl: format!("target {}; anchor a: {}{vp}; {kind}(a)", lbl(&t), lbl(&a)),
            text: format!("{lead}the {t} {phrase} the {a}"),
        })
    };
    let superlative = |word: &str, view: Option<&str>| -> Draw {
        let vp = view.map(|v| format!("; viewpoint {v}")).unwrap_or_default();
        let lead = view.map(|v| format!("seen from the {v}, ")).unwrap_or_default();
        Draw { dsl: format!("target {}{vp}; {word}", lbl(&t)), text: format!("{lead}the {word} {t}") }
    };
    Some(match template {
        "unique" => {
            let u = pick(&single, rng)?.clone();
            Draw { dsl: format!("target {}", lbl(&u)), text: format!("the {u}") }
        }
        "nearest" => anchored("nearest", "closest to", None)?,
        "farthest" => anchored("farthest", "farthest from", None)?,
        "smallest" | "largest" | "leftmost" | "rightmost" | "highest" | "lowest" => superlative(template, None),
        "left_of" => anchored("left_of", "to the left of", None)?,
        "right_of" => anchored("right_of", "to the right of", None)?,
        "in_front_of" => anchored("in_front_of", "in front of", None)?,
        "behind" => anchored("behind", "behind", None)?,
        "above" => anchored("above", "above", None)?,
        "below" => anchored("below", "below", None)?,
        "view_left_of" => anchored("left_of", "to the left of", Some(["front", "side"][rng.random_range(0..2)]))?,
        "view_right_of" => anchored("right_of", "to the right of", Some(["front", "side"][rng.random_range(0..2)]))?,
        "view_in_front_of" => anchored("in_front_of", "in front of", Some(["front", "side"][rng.random_range(0..2)]))?,
        "view_leftmost" => superlative("leftmost", Some(["front", "side"][rng.random_range(0..2)])),
        "next_to" | "next_to_smallest" => {
            let a = a?;
            let ar = &olt.records()[olt.records().iter().position(|r| r.label == a)?];
            let mut d: Vec<f64> = olt
                .records()
                .iter()
                .filter(|r| r.label == t)
                .map(|r| oltground_core::math::distance(r.center, ar.center))
                .collect();
            d.sort_by(f64::total_cmp);
            // Radius between the k-th and (k+1)-th closest, rounded to cm.
            let k = if template == "next_to" { 1 } else { rng.random_range(2..=d.len()) };
            let r = match d.get(k) {
                Some(far) => ((d[k - 1] + far) * 50.0).round() / 100.0,
                None => ((d[k - 1] + 0.5) * 100.0).round() / 100.0,
            };
            if template == "next_to" {
                Draw {
                    dsl: format!("target {}; anchor a: {}; next_to(a, {r})", lbl(&t), lbl(&a)),
                    text: format!("the {t} within {r} m of the {a}"),
                }
            } else {
                Draw {
                    dsl: format!("target {}; anchor a: {}; next_to(a, {r}); smallest", lbl(&t), lbl(&a)),
                    text: format!("the smallest {t} within {r} m of the {a}"),
                }
            }
        }
        "between" => {
            if single.len() < 2 {
                return None;
            }
            let mut s = single.clone();
            s.shuffle(rng);
            Draw {
                dsl: format!("target {}; anchor a: {}; anchor b: {}; between(a, b)", lbl(&t), lbl(&s[0]), lbl(&s[1])),
                text: format!("the {t} between the {} and the {}", s[0], s[1]),
            }
        }
        _ => return None,
    })
}

fn strata_for(olt: &SceneOlt, plan: &PredicatePlan) -> BTreeSet<Stratum> {
    let same = olt.records().iter().filter(|r| plan.target_labels.contains(&r.label)).count();
    BTreeSet::from([
        if same >= 2 { Stratum::Multiple } else { Stratum::Unique },
        if same >= 3 { Stratum::Hard } else { Stratum::Easy },
        if plan.view_dependent() { Stratum::ViewDep } else { Stratum::ViewIndep },
    ])
}

/// Deterministic in `seed`.
pub fn gen_synthetic(seed: u64, spec: &SynthSpec) -> Result<SynthBenchmark, EvalError> {
    if spec.objects_per_scene < 2 {
        return Err(EvalError::SpecInfeasible("objects_per_scene must be at least 2".into()));
    }
    let mix: Vec<&str> = if spec.predicate_mix.is_empty() {
        TEMPLATES.to_vec()
    } else {
        spec.predicate_mix
            .iter()
            .map(|m| {
                TEMPLATES.iter().copied().find(|t| t == m).ok_or_else(|| EvalError::SpecInfeasible(format!("unknown template {m:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    // Inflating every box by half the gap makes them pairwise disjoint
    // inside the inflated room, so their volumes must fit.
    let smallest = LABELS
        .iter()
        .flat_map(|l| l.sizes.iter())
        .map(|s| (s[0] + MIN_GAP) * (s[1] + MIN_GAP) * (s[2] + MIN_GAP))
        .fold(f64::INFINITY, f64::min);
    let room = (ROOM[0] + MIN_GAP) * (ROOM[1] + MIN_GAP) * (ROOM[2] + MIN_GAP);
    if spec.objects_per_scene as f64 * smallest > room {
        return Err(EvalError::SpecInfeasible(format!("{} boxes cannot fit in the room", spec.objects_per_scene)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(spec.n_scenes);
    let mut queries = Vec::new();
    let mut templates = Vec::new();
    let mut cursor = 0usize;
    for si in 0..spec.n_scenes {
        let scene = make_scene(format!("synth{seed}_{si:03}"), spec, &mut rng)?;
        let mut used = BTreeSet::new();
        let mut made = 0;
        for _ in 0..mix.len() {
            if made == spec.queries_per_scene {
                break;
            }
            let template = mix[cursor % mix.len()];
            cursor += 1;
            for _ in 0..DRAWS_PER_TEMPLATE {
                let Some(d) = draw(template, &scene.olt, &mut rng) else { continue };
                if used.contains(&d.dsl) {
                    continue;
                }
                let plan = parse_plan(&d.dsl).expect("generator emits valid plans");
                let Some(ans) = solve(&plan, &scene.olt) else { continue };
                let rec = scene.olt.get(ans.id).expect("oracle answers come from the table");
                queries.push(QueryRecord {
                    query_id: format!("{}_q{made:02}", scene.olt.scene_id()),
                    scene_id: scene.olt.scene_id().to_string(),
                    text: d.text,
                    strata: strata_for(&scene.olt, &plan),
                    plan: Some(plan),
                    gt_object_id: Some(ans.id),
                    gt_bbox: Some(rec.bbox()),
                });
                templates.push(template.to_string());
                used.insert(d.dsl);
                made += 1;
                break;
            }
        }
        scenes.push(scene);
    }
    Ok(SynthBenchmark { seed, spec: spec.clone(), scenes, queries, templates })
}

impl SynthBenchmark {
    pub fn template_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for t in &self.templates {
            *m.entry(t.clone()).or_insert(0) += 1;
        }
        m
    }

    /// Writes `scenes/<id>.{ply,seg.json,olt.json}`, `queries.jsonl` and
    /// `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        let scenes = dir.join("scenes");
        std::fs::create_dir_all(&scenes)?;
        for s in &self.scenes {
            let id = s.olt.scene_id();
            std::fs::write(scenes.join(format!("{id}.ply")), serialize_ply(&s.cloud, PlyFormat::BinaryLittleEndian))?;
            std::fs::write(scenes.join(format!("{id}.seg.json")), s.segmentation.to_json())?;
            std::fs::write(scenes.join(format!("{id}.olt.json")), persist_olt(&s.olt))?;
        }
        std::fs::write(dir.join("queries.jsonl"), save_queries(&self.queries))?;
        let manifest = json!({
            "seed": self.seed,
            "spec": self.spec,
            "scenes": self.scenes.iter().map(|s| s.olt.scene_id()).collect::<Vec<_>>(),
            "n_queries": self.queries.len(),
            "templates": self.template_counts(),
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
        Ok(())
    }
}
