//! Benchmark plumbing: query files, stratified Acc@IoU, a synthetic scene
//! and query generator, and a parallel runner for the scripted agent.

pub mod bench;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod query;
pub mod synth;

pub use bench::{ground_scripted, load_benchmark_dir, load_scene_dir, run_benchmark, run_queries, stratified_sample, SceneData};
pub use error::{EvalError, LineError};
pub use metrics::{evaluate, resolve_gt, MetricsReport, StratumScore, DEFAULT_THRESHOLDS};
pub use query::{derive_strata, load_queries, save_queries, QueryRecord, Stratum};
pub use synth::{gen_synthetic, SynthBenchmark, SynthSpec};
