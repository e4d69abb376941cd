use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;

#[derive(Parser)]
#[command(name = "oltground", version, about = "3D visual grounding over object lookup tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an object lookup table from a point cloud and its segmentation.
    BuildOlt(BuildOltArgs),
    /// Answer grounding queries with the scripted or model-driven agent.
    Ground(GroundArgs),
    /// Score an answers file against ground truth.
    Eval(EvalArgs),
    /// Render a scene with highlighted objects.
    Render(RenderArgs),
    /// Write a synthetic benchmark with known answers.
    GenSynth(GenSynthArgs),
}

#[derive(Args)]
pub struct BuildOltArgs {
    /// Point cloud, ASCII or binary little-endian PLY.
    #[arg(long)]
    pub ply: PathBuf,
    /// Instance segmentation JSON.
    #[arg(long)]
    pub seg: PathBuf,
    /// Where to write the table JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Drop instances with fewer points than this before fitting.
    #[arg(long)]
    pub min_points: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Scripted,
    Llm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fallback {
    None,
    Scripted,
}

#[derive(Args)]
pub struct GroundArgs {
    /// Lookup table of the scene (single-scene runs).
    #[arg(long)]
    pub olt: Option<PathBuf>,
    /// Point cloud of the scene; needed for rendering.
    #[arg(long)]
    pub ply: Option<PathBuf>,
    /// Segmentation; with --ply, builds the table when --olt is absent.
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// Directory of `<scene>.ply` + `<scene>.seg.json` pairs.
    #[arg(long)]
    pub scenes_dir: Option<PathBuf>,
    /// Plan in the text syntax.
    #[arg(long)]
    pub plan: Option<String>,
    /// Plan as a JSON file.
    #[arg(long)]
    pub plan_json: Option<PathBuf>,
    /// Free-text query.
    #[arg(long)]
    pub query: Option<String>,
    /// Id recorded for a single --plan/--query run.
    #[arg(long, default_value = "q0")]
    pub query_id: String,
    /// Queries JSONL.
    #[arg(long)]
    pub query_file: Option<PathBuf>,
    /// Scripted runs the geometric pipeline; llm drives the tools from a chat backend.
    #[arg(long, value_enum, default_value = "scripted")]
    pub mode: Mode,
    /// Base URL of an OpenAI-style chat completions server.
    #[arg(long, env = "AGENT_BACKEND_URL")]
    pub backend_url: Option<String>,
    /// Model name sent to the backend.
    #[arg(long)]
    pub model: Option<String>,
    /// What to do when the backend cannot be reached.
    #[arg(long, value_enum)]
    pub fallback: Option<Fallback>,
    /// Backend request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// JSON run config; flags and env override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Disable the distance and rank tools.
    #[arg(long)]
    pub no_distance: bool,
    /// Disable plan emission; constraints then filter independently.
    #[arg(long)]
    pub no_planning: bool,
    /// Disable the render tool.
    #[arg(long)]
    pub no_rendering: bool,
    /// Tool-call budget per query in llm mode.
    #[arg(long)]
    pub max_tool_calls: Option<usize>,
    /// Radius in meters used for every next_to.
    #[arg(long)]
    pub next_to_radius: Option<f64>,
    /// Queries processed in parallel.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Ground a stratified sample of this many queries.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Strata that define the sampling groups, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub stratify_on: Vec<String>,
    /// Seed for --sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Alias map JSON replacing the built-in one.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Write a top-view render of each answer here.
    #[arg(long)]
    pub render_dir: Option<PathBuf>,
    /// Answers JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Answers JSONL from `ground`.
    #[arg(long)]
    pub answers: PathBuf,
    /// Queries JSONL with ground truth.
    #[arg(long)]
    pub queries: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Scenes used to look up ground-truth boxes by object id.
    #[arg(long)]
    pub scenes_dir: Option<PathBuf>,
    /// IoU thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = oltground_eval::DEFAULT_THRESHOLDS)]
    pub thresholds: Vec<f64>,
    /// Also write the text tables to this file.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Lookup table; built from --ply and --seg when absent.
    #[arg(long)]
    pub olt: Option<PathBuf>,
    /// Point cloud to draw.
    #[arg(long)]
    pub ply: PathBuf,
    /// Segmentation used to build the table.
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// Object ids to outline, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<u64>,
    /// `top`, `front`, `side` or `pose:ex,ey,ez:tx,ty,tz`.
    #[arg(long, default_value = "top")]
    pub view: String,
    /// Output image; `.ppm` or `.png`.
    #[arg(long)]
    pub out: PathBuf,
    /// Image width in pixels.
    #[arg(long, default_value_t = oltground_core::render::DEFAULT_WIDTH)]
    pub width: usize,
    /// Image height in pixels.
    #[arg(long, default_value_t = oltground_core::render::DEFAULT_HEIGHT)]
    pub height: usize,
    /// Splat half-width in pixels; 0 draws single pixels.
    #[arg(long, default_value_t = 1)]
    pub splat: usize,
    /// Rasterizer threads; output does not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args)]
pub struct GenSynthArgs {
    /// Generator seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Generator settings as JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the number of scenes.
    #[arg(long)]
    pub n_scenes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildOlt(a) => commands::build_olt_command(&a),
        Command::Ground(a) => commands::ground(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Render(a) => commands::render(&a),
        Command::GenSynth(a) => commands::gen_synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit)
        }
    }
}
