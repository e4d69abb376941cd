use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oltground_agent::mock::{conformance_policy, MockServer};
use oltground_agent::{load_answers, SCRIPTED_FALLBACK};
use oltground_core::plan::plan_to_value;
use oltground_eval::{gen_synthetic, load_queries, SynthSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oltground"))
        .args(args)
        .env_remove("AGENT_BACKEND_URL")
        .env_remove("AGENT_API_KEY")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One generated scene on disk plus its first query.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        gen_synthetic(9, &SynthSpec { n_scenes: 1, ..SynthSpec::default() }).unwrap().write(&root).unwrap();
        Self { _dir: dir, root }
    }
    fn p(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
    fn first_query(&self) -> oltground_eval::QueryRecord {
        load_queries(&std::fs::read(self.p("queries.jsonl")).unwrap()).unwrap().0.remove(0)
    }
}

fn answers(path: &Path) -> Vec<oltground_agent::AnswerRecord> {
    load_answers(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_exits_zero() {
    for args in [&["--help"][..], &["ground", "--help"], &["eval", "--help"]] {
        assert!(run(args).status.success());
    }
}

#[test]
fn build_then_ground_scripted() {
    let f = Fixture::new();
    let q = f.first_query();
    let scene = &q.scene_id;
    let ply = f.p(&format!("scenes/{scene}.ply"));
    let olt = f.p("built.olt.json");
    let out = run(&["build-olt", "--ply", s(&ply), "--seg", s(&f.p(&format!("scenes/{scene}.seg.json"))), "--out", s(&olt)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&olt).unwrap(), std::fs::read(f.p(&format!("scenes/{scene}.olt.json"))).unwrap());

    let plan = oltground_core::plan::print_plan(q.plan.as_ref().unwrap());
    let ans = f.p("a.jsonl");
    let renders = f.p("renders");
    let out = run(&["ground", "--olt", s(&olt), "--ply", s(&ply), "--plan", &plan, "--out", s(&ans), "--render-dir", s(&renders)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = answers(&ans);
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].object_id, q.gt_object_id);
    assert!(renders.join("q0.png").exists() && renders.join("q0.png.legend.json").exists());
}

#[test]
fn validation_errors_exit_one() {
    let f = Fixture::new();
    let olt = f.p(&format!("scenes/{}.olt.json", f.first_query().scene_id));
    let out = run(&["ground", "--olt", s(&olt), "--plan", "target ;", "--out", s(&f.p("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[E_PLAN_SYNTAX]"));
    let out = run(&["ground", "--olt", s(&olt), "--query", "the chair", "--mode", "llm", "--out", s(&f.p("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_CONFIG"));
    let out = run(&["ground", "--olt", s(&olt), "--plan", "target chair", "--no-distance", "--max-tool-calls", "0", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn io_errors_exit_two() {
    let f = Fixture::new();
    let out = run(&["eval", "--answers", s(&f.p("missing.jsonl")), "--queries", s(&f.p("queries.jsonl")), "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[E_IO]"));
}

#[test]
fn unreachable_backend_falls_back_and_exits_two() {
    let f = Fixture::new();
    let q = f.first_query();
    let olt = f.p(&format!("scenes/{}.olt.json", q.scene_id));
    let label = q.text.clone();
    let ans = f.p("l.jsonl");
    let args = ["ground", "--olt", s(&olt), "--query", &label, "--mode", "llm", "--backend-url", "http://127.0.0.1:9"];
    let out = run(&[&args[..], &["--timeout", "2", "--fallback", "scripted", "--out", s(&ans)]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_BACKEND_UNREACHABLE"));
    let a = answers(&ans);
    assert_eq!(a[0].fallbacks_used, vec![SCRIPTED_FALLBACK.to_string()]);
    assert!(a[0].object_id.is_some());

    let out = run(&[&args[..], &["--timeout", "2", "--out", s(&ans)]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(answers(&ans)[0].failure.as_ref().map(|f| f.code.as_str()), Some("E_BACKEND_UNREACHABLE"));
}

#[test]
fn llm_mode_over_mock_backend() {
    let f = Fixture::new();
    let q = f.first_query();
    let server = MockServer::start(conformance_policy(plan_to_value(q.plan.as_ref().unwrap()))).unwrap();
    let scene = &q.scene_id;
    let ans = f.p("m.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_oltground"))
        .args(["ground", "--olt", s(&f.p(&format!("scenes/{scene}.olt.json")))])
        .args(["--ply", s(&f.p(&format!("scenes/{scene}.ply"))), "--query", &q.text, "--mode", "llm", "--out", s(&ans)])
        .env("AGENT_BACKEND_URL", server.base_url())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = answers(&ans);
    assert_eq!(a[0].object_id, q.gt_object_id);
    assert!(a[0].fallbacks_used.is_empty());
    assert_eq!(a[0].tool_trace.first().map(|t| t.tool.as_str()), Some("emit_plan"));
}

#[test]
fn render_writes_image_and_legend() {
    let f = Fixture::new();
    let scene = f.first_query().scene_id;
    let olt = f.p(&format!("scenes/{scene}.olt.json"));
    let ply = f.p(&format!("scenes/{scene}.ply"));
    let out_ppm = f.p("v.ppm");
    let base = ["render", "--olt", s(&olt), "--ply", s(&ply), "--ids", "1,2", "--width", "80", "--height", "60"];
    let out = run(&[&base[..], &["--view", "pose:3,-4,2:3,3,0.5", "--out", s(&out_ppm)]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&out_ppm).unwrap();
    assert!(bytes.starts_with(b"P6\n80 60\n255\n"));
    assert_eq!(bytes.len(), 13 + 80 * 60 * 3);
    let legend: serde_json::Value = serde_json::from_slice(&std::fs::read(f.p("v.ppm.legend.json")).unwrap()).unwrap();
    assert!(legend.to_string().contains("camera"));
    let out = run(&[&base[..], &["--view", "sideways", "--out", s(&out_ppm)]].concat());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[&base[..], &["--out", s(&f.p("v.bmp"))]].concat());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_prints_tables_and_samples() {
    let f = Fixture::new();
    let ans = f.p("all.jsonl");
    let (scenes, queries) = (f.p("scenes"), f.p("queries.jsonl"));
    let sampled = ["ground", "--scenes-dir", s(&scenes), "--query-file", s(&queries)];
    let out = run(&[&sampled[..], &["--sample", "4", "--stratify-on", "unique,view_dep", "--out", s(&ans)]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(answers(&ans).len(), 4);
    let out = run(&[&sampled[..], &["--out", s(&ans)]].concat());
    assert!(out.status.success());
    let report = f.p("r.json");
    let out = run(&["eval", "--answers", s(&ans), "--queries", s(&f.p("queries.jsonl")), "--out", s(&report), "--table", s(&f.p("t.txt"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Unique/Multiple") && stdout.contains("Easy/Hard/Dep/Indep"));
    assert_eq!(std::fs::read_to_string(f.p("t.txt")).unwrap(), stdout);
    let out = run(&["eval", "--answers", s(&ans), "--queries", s(&f.p("queries.jsonl")), "--out", s(&report), "--thresholds", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

fn without_meta(bytes: &[u8]) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("meta");
            v
        })
        .collect()
}

#[test]
fn repeated_runs_give_identical_outputs() {
    let f = Fixture::new();
    let (scenes, queries) = (f.p("scenes"), f.p("queries.jsonl"));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let ans = f.p(&format!("a{k}.jsonl"));
        let olt = f.p(&format!("t{k}.olt.json"));
        let img = f.p(&format!("v{k}.png"));
        let report = f.p(&format!("r{k}.json"));
        let scene = f.first_query().scene_id;
        let seg = f.p(&format!("scenes/{scene}.seg.json"));
        let ply = f.p(&format!("scenes/{scene}.ply"));
        let workers = if k == 0 { "1" } else { "3" };
        for args in [
            vec!["ground", "--scenes-dir", s(&scenes), "--query-file", s(&queries), "--workers", workers, "--out", s(&ans)],
            vec!["eval", "--answers", s(&ans), "--queries", s(&queries), "--out", s(&report)],
            vec!["build-olt", "--ply", s(&ply), "--seg", s(&seg), "--out", s(&olt)],
            vec!["render", "--olt", s(&olt), "--ply", s(&ply), "--ids", "1", "--out", s(&img), "--workers", workers],
        ] {
            let out = run(&args);
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        outputs.push((
            without_meta(&std::fs::read(&ans).unwrap()),
            std::fs::read(&report).unwrap(),
            std::fs::read(&olt).unwrap(),
            std::fs::read(&img).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}
