use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use oltground_agent::{
    run_llm, run_scripted_fallback, AgentError, BackendEndpoint, Failure, GroundingAnswer, HttpBackend, Limiter,
    ToolConfig,
};
use oltground_core::camera::{auto_camera, ViewSpec};
use oltground_core::olt::{build_olt, load_olt, persist_olt, SceneOlt};
use oltground_core::plan::{parse_plan, plan_from_json, validate_plan, PredicatePlan};
use oltground_core::ply::parse_ply;
use oltground_core::render::{legend_json, render as rasterize, write_png, write_ppm, HighlightSet, RenderOptions};
use oltground_core::scene::PointCloud;
use oltground_core::segmentation::parse_segmentation;
use oltground_core::vocab::{default_aliases, parse_aliases, LabelVocabulary};
use oltground_eval::{
    derive_strata, evaluate, gen_synthetic, ground_scripted, load_queries, load_scene_dir, resolve_gt, run_queries, stratified_sample,
    QueryRecord, SceneData, Stratum, SynthSpec,
};

use crate::config::FileConfig;
use crate::error::{read, write, CliError};
use crate::{BuildOltArgs, EvalArgs, Fallback, GenSynthArgs, GroundArgs, Mode, RenderArgs};

fn load_cloud(path: &Path) -> Result<PointCloud, CliError> {
    Ok(parse_ply(&read(path)?)?)
}

fn fit_olt(cloud: &PointCloud, seg: &Path, min_points: Option<usize>) -> Result<SceneOlt, CliError> {
    let mut seg = parse_segmentation(&read(seg)?)?;
    if let Some(n) = min_points {
        seg.retain_min_points(n);
    }
    Ok(build_olt(cloud, &seg)?)
}

pub fn build_olt_command(a: &BuildOltArgs) -> Result<(), CliError> {
    let cloud = load_cloud(&a.ply)?;
    let olt = fit_olt(&cloud, &a.seg, a.min_points)?;
    write(&a.out, &persist_olt(&olt))?;
    eprintln!("{}: {} objects, {} labels", olt.scene_id(), olt.len(), olt.labels().len());
    Ok(())
}

/// Parses `top`, `front`, `side` or `pose:ex,ey,ez:tx,ty,tz`.
pub fn parse_view(s: &str) -> Result<ViewSpec, CliError> {
    let bad = || CliError::validation("E_ARGS", format!("bad view {s:?}; use top, front, side or pose:ex,ey,ez:tx,ty,tz"));
    match s {
        "top" => return Ok(ViewSpec::Top),
        "front" => return Ok(ViewSpec::Front),
        "side" => return Ok(ViewSpec::Side),
        _ => {}
    }
    let rest = s.strip_prefix("pose:").ok_or_else(bad)?;
    let (eye, target) = rest.split_once(':').ok_or_else(bad)?;
    let vec3 = |t: &str| -> Result<[f64; 3], CliError> {
        let v: Vec<f64> = t.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        <[f64; 3]>::try_from(v).map_err(|_| bad())
    };
    Ok(ViewSpec::Pose { eye: vec3(eye)?, target: vec3(target)? })
}

fn tool_config(a: &GroundArgs, file: &FileConfig) -> Result<ToolConfig, CliError> {
    let mut c = file.tools.clone().unwrap_or_default();
    if a.no_distance {
        c.distance = false;
    }
    if a.no_planning {
        c.planning = false;
    }
    if a.no_rendering {
        c.rendering = false;
    }
    if let Some(n) = a.max_tool_calls {
        c.max_tool_calls = n;
    }
    if a.next_to_radius.is_some() {
        c.next_to_radius = a.next_to_radius;
    }
    c.validate()?;
    Ok(c)
}

fn load_scenes(a: &GroundArgs) -> Result<BTreeMap<String, SceneData>, CliError> {
    if let Some(dir) = &a.scenes_dir {
        return Ok(load_scene_dir(dir)?);
    }
    let cloud = a.ply.as_deref().map(load_cloud).transpose()?;
    let olt = match (&a.olt, &a.seg, &cloud) {
        (Some(p), _, _) => load_olt(&read(p)?)?,
        (None, Some(seg), Some(cloud)) => fit_olt(cloud, seg, None)?,
        _ => return Err(CliError::validation("E_ARGS", "give --olt, --ply with --seg, or --scenes-dir")),
    };
    Ok(BTreeMap::from([(olt.scene_id().to_string(), SceneData { olt, cloud })]))
}

fn load_query_set(a: &GroundArgs, scenes: &BTreeMap<String, SceneData>) -> Result<Vec<QueryRecord>, CliError> {
    if let Some(path) = &a.query_file {
        let (queries, errors) = load_queries(&read(path)?)?;
        for e in &errors {
            eprintln!("warning: {}: skipped {e}", path.display());
        }
        let Some(n) = a.sample else { return Ok(queries) };
        let tags: Vec<Stratum> = a
            .stratify_on
            .iter()
            .map(|t| Stratum::parse(t).ok_or_else(|| CliError::validation("E_ARGS", format!("unknown stratum {t:?}"))))
            .collect::<Result<_, _>>()?;
        return Ok(stratified_sample(&queries, n, &tags, a.seed));
    }
    let plan: Option<PredicatePlan> = match (&a.plan, &a.plan_json) {
        (Some(_), Some(_)) => return Err(CliError::validation("E_ARGS", "--plan and --plan-json are exclusive")),
        (Some(src), None) => Some(parse_plan(src)?),
        (None, Some(p)) => Some(plan_from_json(&read(p)?)?),
        (None, None) => None,
    };
    if plan.is_none() && a.query.is_none() {
        return Err(CliError::validation("E_ARGS", "give --plan, --plan-json, --query or --query-file"));
    }
    let scene_id = match scenes.keys().collect::<Vec<_>>()[..] {
        [only] => only.clone(),
        _ => return Err(CliError::validation("E_ARGS", "a single query needs exactly one scene; use --query-file")),
    };
    Ok(vec![QueryRecord {
        query_id: a.query_id.clone(),
        scene_id,
        text: a.query.clone().unwrap_or_default(),
        plan,
        gt_object_id: None,
        gt_bbox: None,
        strata: BTreeSet::new(),
    }])
}

fn failure(scene: &SceneOlt, e: &AgentError) -> GroundingAnswer {
    GroundingAnswer {
        scene_id: scene.scene_id().to_string(),
        object_id: None,
        bbox: None,
        rationale: format!("no answer: {e}"),
        tool_trace: vec![],
        fallbacks_used: vec![],
        failure: Some(Failure { code: e.code().to_string(), message: e.to_string() }),
    }
}

pub fn ground(a: &GroundArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let config = tool_config(a, &file)?;
    let aliases = match a.aliases.as_ref().or(file.aliases.as_ref()) {
        Some(p) => parse_aliases(&read(p)?)?,
        None => default_aliases(),
    };
    let workers = a.workers.or(file.workers).unwrap_or(1).max(1);
    let scenes = load_scenes(a)?;
    let queries = load_query_set(a, &scenes)?;

    let backend_errors = AtomicUsize::new(0);
    let first_error: Mutex<Option<AgentError>> = Mutex::new(None);
    let answers = match a.mode {
        Mode::Scripted => run_queries(&queries, &scenes, workers, |q, s| ground_scripted(q, s, &config, &aliases)),
        Mode::Llm => {
            let url = a
                .backend_url
                .clone()
                .or(file.backend_url.clone())
                .ok_or_else(|| CliError::validation("E_CONFIG", "llm mode needs --backend-url or AGENT_BACKEND_URL"))?;
            let fallback = match (a.fallback, file.fallback.as_deref()) {
                (Some(f), _) => f,
                (None, None | Some("none")) => Fallback::None,
                (None, Some("scripted")) => Fallback::Scripted,
                (None, Some(other)) => {
                    return Err(CliError::validation("E_CONFIG", format!("unknown fallback {other:?}")));
                }
            };
            let mut endpoint = BackendEndpoint::new(url, a.model.clone().or(file.model.clone()).unwrap_or("default".into()));
            endpoint.timeout_s = a.timeout.or(file.timeout_s).unwrap_or(endpoint.timeout_s);
            let backend = HttpBackend::with_limiter(endpoint, Arc::new(Limiter::new(workers)))?;
            run_queries(&queries, &scenes, workers, |q, s| {
                let vocab = LabelVocabulary::from_olt(&s.olt, aliases.clone());
                match run_llm(&s.olt, s.cloud.as_ref(), &q.text, &backend, &config, &vocab) {
                    Ok(answer) => answer,
                    Err(e) => {
                        let transport = matches!(e, AgentError::BackendUnreachable(_) | AgentError::Protocol(_));
                        if transport {
                            backend_errors.fetch_add(1, Ordering::Relaxed);
                            first_error.lock().expect("error slot").get_or_insert(e.clone());
                        }
                        if fallback == Fallback::Scripted && transport {
                            let prior = q.plan.as_ref().and_then(|p| validate_plan(p, &s.olt, &vocab).ok());
                            let mut ans = run_scripted_fallback(&s.olt, s.cloud.as_ref(), &q.text, &vocab, &config, prior, vec![]);
                            ans.rationale = format!("{}; backend error {}: {e}", ans.rationale, e.code());
                            ans
                        } else {
                            failure(&s.olt, &e)
                        }
                    }
                }
            })
        }
    };

    let mut out = String::new();
    for r in &answers {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    write(&a.out, out.as_bytes())?;

    if let Some(dir) = &a.render_dir {
        for (q, r) in queries.iter().zip(&answers) {
            let (Some(id), Some(scene)) = (r.object_id, scenes.get(&q.scene_id)) else { continue };
            let Some(cloud) = &scene.cloud else { continue };
            let view = q.plan.as_ref().and_then(|p| p.viewpoint).unwrap_or(ViewSpec::Top);
            let file = dir.join(format!("{}.png", q.query_id.replace(['/', ':', '\\'], "_")));
            render_to(cloud, &scene.olt, &[id], view, &RenderOptions::default(), &file)?;
        }
    }

    let solved = answers.iter().filter(|r| r.object_id.is_some()).count();
    eprintln!("{solved}/{} queries answered -> {}", answers.len(), a.out.display());
    let n = backend_errors.load(Ordering::Relaxed);
    if let Some(e) = first_error.into_inner().expect("error slot") {
        return Err(CliError::io(e.code(), format!("{n} of {} queries hit a backend error; first: {e}", answers.len())));
    }
    Ok(())
}

fn legend_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".legend.json");
    PathBuf::from(s)
}

fn render_to(
    cloud: &PointCloud,
    olt: &SceneOlt,
    ids: &[u64],
    view: ViewSpec,
    opts: &RenderOptions,
    out: &Path,
) -> Result<(), CliError> {
    let bounds = olt.bounds().ok_or_else(|| CliError::validation("E_EMPTY_SCENE", "scene has no objects"))?;
    let camera = auto_camera(&bounds, view)?;
    let highlights = HighlightSet::new(ids, olt)?;
    let image = rasterize(cloud, &camera, &highlights, olt, opts)?;
    let bytes = match out.extension().and_then(|e| e.to_str()) {
        Some("png") => write_png(&image)?,
        Some("ppm") => write_ppm(&image),
        _ => return Err(CliError::validation("E_ARGS", format!("{}: output must end in .png or .ppm", out.display()))),
    };
    write(out, &bytes)?;
    write(&legend_path(out), &legend_json(&highlights, &camera))
}

pub fn render(a: &RenderArgs) -> Result<(), CliError> {
    let cloud = load_cloud(&a.ply)?;
    let olt = match (&a.olt, &a.seg) {
        (Some(p), _) => load_olt(&read(p)?)?,
        (None, Some(seg)) => fit_olt(&cloud, seg, None)?,
        (None, None) => return Err(CliError::validation("E_ARGS", "give --olt or --seg")),
    };
    let opts = RenderOptions { width: a.width, height: a.height, splat_radius: a.splat, workers: a.workers.max(1) };
    render_to(&cloud, &olt, &a.ids, parse_view(&a.view)?, &opts, &a.out)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let text = String::from_utf8(read(&a.answers)?)
        .map_err(|_| CliError::validation("E_MALFORMED_JSON_LINE", format!("{}: not UTF-8", a.answers.display())))?;
    let answers = oltground_agent::load_answers(&text).map_err(|(line, msg)| {
        CliError::validation("E_MALFORMED_JSON_LINE", format!("{} line {line}: {msg}", a.answers.display()))
    })?;
    let (mut queries, errors) = load_queries(&read(&a.queries)?)?;
    for e in &errors {
        eprintln!("warning: {}: skipped {e}", a.queries.display());
    }
    if let Some(dir) = &a.scenes_dir {
        let olts = load_scene_dir(dir)?.into_iter().map(|(k, s)| (k, s.olt)).collect();
        resolve_gt(&mut queries, &olts)?;
    } else {
        queries.iter_mut().for_each(|q| derive_strata(q, None));
    }
    let report = evaluate(&answers, &queries, &a.thresholds)?;
    write(&a.out, &report.to_json())?;
    let tables = report.tables();
    print!("{tables}");
    if let Some(t) = &a.table {
        write(t, tables.as_bytes())?;
    }
    Ok(())
}

pub fn gen_synth(a: &GenSynthArgs) -> Result<(), CliError> {
    let mut spec: SynthSpec = match &a.spec {
        Some(p) => serde_json::from_slice(&read(p)?)
            .map_err(|e| CliError::validation("E_CONFIG", format!("{}: {e}", p.display())))?,
        None => SynthSpec::default(),
    };
    if let Some(n) = a.n_scenes {
        spec.n_scenes = n;
    }
    let bench = gen_synthetic(a.seed, &spec)?;
    bench.write(&a.out)?;
    eprintln!("{} scenes, {} queries -> {}", bench.scenes.len(), bench.queries.len(), a.out.display());
    Ok(())
}
