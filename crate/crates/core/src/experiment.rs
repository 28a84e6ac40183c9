//! Experiment runner: configuration file, per-seed pipeline and result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{build_schedule, DetectionSchedule};
use crate::error::{Error, Result};
use crate::eval::{
    avg_metric, bwt_metric, run_cl_eval, run_prequential, save_checkpoint, Bwt, CheckpointMeta,
    ModelCheckpoint, PrequentialConfig, PrequentialOutcome, RMatrix,
};
use crate::learners::{CGru, Cpnn, Hyperparams, LearnerKind, MagicNet, MagicStats};
use crate::streams::{build_configuration, derive_seed, SourceSpec, Stream};

pub const MANIFEST_VERSION: u32 = 1;

const DETECTOR_SEED: u64 = 10;
const LEARNER_SEED: u64 = 11;

/// Overrides of the learner hyperparameters; unset fields take the source's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub window: Option<usize>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub hidden: Option<usize>,
    pub exp_size: Option<usize>,
    pub num_batches: Option<usize>,
    /// Temporal augmentation order `o` (0 disables it).
    pub augment_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub precision: f64,
    pub recall: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            precision: 1.0,
            recall: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub test_size: usize,
    pub start_batches: usize,
    pub selection_points: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            test_size: 2000,
            start_batches: 50,
            selection_points: crate::eval::SELECTION_POINTS,
        }
    }
}

fn default_concepts() -> usize {
    8
}

fn default_length() -> usize {
    30_000
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn yes() -> bool {
    true
}

/// One experiment, read from TOML.
///
/// ```toml
/// learner = "magic"
/// seeds = [1, 2]
/// n_concepts = 4
/// concept_length = 10000
///
/// [source]
/// kind = "srw"
///
/// [detector]
/// precision = 1.0
/// recall = 1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    pub source: SourceSpec,
    #[serde(default = "default_concepts")]
    pub n_concepts: usize,
    /// Points per concept (0 with real sources: whole segments).
    #[serde(default = "default_length")]
    pub concept_length: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Seeds processed concurrently.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub trace: bool,
    /// Write one checkpoint file per concept.
    #[serde(default = "yes")]
    pub checkpoints: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn hyperparams(&self) -> Hyperparams {
        let h = &self.hyper;
        let mut out = match self.source {
            SourceSpec::Srw { .. } => Hyperparams::srw(),
            SourceSpec::Csv(_) => Hyperparams::real(h.window.unwrap_or(10)),
        };
        if let Some(v) = h.window {
            out.window = v;
        }
        if let Some(v) = h.hidden {
            out.hidden = v;
            out.exp_size = v / 2;
        }
        out.batch_size = h.batch_size.unwrap_or(out.batch_size);
        out.epochs = h.epochs.unwrap_or(out.epochs);
        out.lr = h.lr.unwrap_or(out.lr);
        out.exp_size = h.exp_size.unwrap_or(out.exp_size);
        out.num_batches = h.num_batches.unwrap_or(out.num_batches);
        out
    }

    pub fn augment_order(&self) -> usize {
        self.hyper.augment_order.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hyperparams();
        let positive = [
            ("hyper.window", h.window),
            ("hyper.batch_size", h.batch_size),
            ("hyper.epochs", h.epochs),
            ("hyper.hidden", h.hidden),
            ("hyper.exp_size", h.exp_size),
            ("hyper.num_batches", h.num_batches),
            ("n_concepts", self.n_concepts),
            ("eval.test_size", self.eval.test_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name}: must be at least 1")));
            }
        }
        if !(h.lr > 0.0 && h.lr.is_finite()) {
            return Err(Error::Config(format!("hyper.lr: must be positive, got {}", h.lr)));
        }
        for (name, v) in [
            ("detector.precision", self.detector.precision),
            ("detector.recall", self.detector.recall),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name}: must lie in (0, 1], got {v}")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: list at least one seed".into()));
        }
        if matches!(self.source, SourceSpec::Srw { .. })
            && self.concept_length <= self.eval.test_size
        {
            return Err(Error::Config(format!(
                "concept_length: {} leaves no training points after a test set of {}",
                self.concept_length, self.eval.test_size
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers: must be at least 1".into()));
        }
        Ok(())
    }

    fn prequential(&self, trace: bool) -> PrequentialConfig {
        PrequentialConfig {
            batch_size: self.hyperparams().batch_size,
            start_batches: self.eval.start_batches,
            test_size: self.eval.test_size,
            trace,
        }
    }

    /// Stream for one seed, with temporal augmentation applied.
    pub fn build_stream(&self, seed: u64) -> Result<Stream> {
        let raw = build_configuration(&self.source, self.n_concepts, self.concept_length, seed)?;
        Ok(raw.augmented(self.augment_order()))
    }
}

/// The learner-independent detection schedule of one seed.
pub fn schedule_for(
    stream: &Stream,
    detector: &DetectorConfig,
    window: usize,
    seed: u64,
) -> Result<DetectionSchedule> {
    build_schedule(
        &stream.meta.true_drifts,
        detector.precision,
        detector.recall,
        stream.len(),
        window,
        derive_seed(seed, DETECTOR_SEED),
    )
}

/// Seed the learner of a run is built from.
pub fn learner_seed(seed: u64) -> u64 {
    derive_seed(seed, LEARNER_SEED)
}

/// Prequential and continual-learning results of one learner on one stream.
#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub kind: LearnerKind,
    pub outcome: PrequentialOutcome,
    pub r: RMatrix,
    pub avg: f64,
    pub bwt: Bwt,
    /// History of a MAGIC Net learner.
    pub magic: Option<MagicStats>,
}

/// Runs one learner through the prequential loop and scores its checkpoints.
pub fn evaluate_learner(
    kind: LearnerKind,
    hyper: Hyperparams,
    stream: &Stream,
    schedule: &DetectionSchedule,
    prequential: &PrequentialConfig,
    selection_points: usize,
    seed: u64,
) -> Result<LearnerRun> {
    let dim = stream.input_dim();
    let (outcome, magic) = match kind {
        LearnerKind::CGru => {
            let mut l = CGru::new(dim, hyper, seed);
            (run_prequential(&mut l, stream, schedule, prequential)?, None)
        }
        LearnerKind::Magic => {
            let mut l = MagicNet::new(dim, hyper, seed);
            let out = run_prequential(&mut l, stream, schedule, prequential)?;
            (out, Some(l.stats().clone()))
        }
        LearnerKind::Cpnn => {
            let mut l = Cpnn::new(dim, hyper, seed);
            (run_prequential(&mut l, stream, schedule, prequential)?, None)
        }
    };
    let r = run_cl_eval(
        &outcome.checkpoints,
        &outcome.test_sets,
        hyper.window,
        selection_points,
    );
    Ok(LearnerRun {
        kind,
        avg: avg_metric(&r),
        bwt: bwt_metric(&r),
        r,
        outcome,
        magic,
    })
}

/// Result files are named after the seed.
pub fn prequential_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("prequential_seed{seed}.csv"))
}

pub fn cl_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("cl_seed{seed}.csv"))
}

pub fn summary_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("summary_seed{seed}.csv"))
}

pub fn metadata_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("run_seed{seed}.json"))
}

pub fn trace_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("trace_seed{seed}.csv"))
}

pub fn manifest_file(out: &Path) -> PathBuf {
    out.join("manifest.json")
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    format_version: u32,
    configuration_id: &'a str,
    seed: u64,
    learner: LearnerKind,
    hyper: Hyperparams,
    augment_order: usize,
    stream: &'a crate::streams::StreamMeta,
    /// Rows `[timestamp, tag]`.
    schedule: Vec<(usize, &'static str)>,
    param_counts: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    magic_commits: Option<Vec<&'static str>>,
}

/// What one completed seed produced.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub configuration_id: String,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub avg: f64,
    pub bwt: f64,
    pub bwt_defined: bool,
    /// Whether the seed was skipped because its results already existed.
    #[serde(skip)]
    pub resumed: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Runs one seed on a prepared stream and writes its result files.
pub fn run_stream(
    cfg: &ExperimentConfig,
    stream: &Stream,
    seed: u64,
    out: &Path,
    trace: bool,
) -> Result<SeedSummary> {
    let hyper = cfg.hyperparams();
    let schedule = schedule_for(stream, &cfg.detector, hyper.window, seed)?;
    let pcfg = cfg.prequential(trace);
    let run = evaluate_learner(
        cfg.learner,
        hyper,
        stream,
        &schedule,
        &pcfg,
        cfg.eval.selection_points,
        learner_seed(seed),
    )?;
    let config_id = format!("{}-{seed}", stream.meta.source);
    let learner = cfg.learner.as_str();

    if cfg.checkpoints {
        let dir = out.join("checkpoints").join(format!("seed{seed}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, snap) in run.outcome.checkpoints.iter().enumerate() {
            let ck = ModelCheckpoint {
                meta: CheckpointMeta {
                    concept_index: i,
                    kind: cfg.learner,
                    seed,
                    window: hyper.window,
                },
                model: snap.clone(),
            };
            save_checkpoint(&dir.join(format!("concept{i}.ckpt")), &ck)?;
        }
    }

    let mut pre = String::from("configuration_id,learner,drift_index,start_kappa,end_kappa\n");
    for d in &run.outcome.report.drifts {
        pre.push_str(&format!(
            "{config_id},{learner},{},{},{}\n",
            d.concept, d.start_kappa, d.end_kappa
        ));
    }
    write_atomic(&prequential_file(out, seed), pre.as_bytes())?;

    let mut cl = String::from("configuration_id,learner,i,j,R\n");
    for (i, row) in run.r.rows().iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cl.push_str(&format!("{config_id},{learner},{i},{j},{v}\n"));
        }
    }
    write_atomic(&cl_file(out, seed), cl.as_bytes())?;

    if trace {
        let mut tr = String::from("t,prediction,label,running_kappa\n");
        for p in &run.outcome.report.trace {
            tr.push_str(&format!(
                "{},{},{},{}\n",
                p.t, p.prediction, p.label, p.running_kappa
            ));
        }
        write_atomic(&trace_file(out, seed), tr.as_bytes())?;
    }

    let meta = RunMetadata {
        format_version: MANIFEST_VERSION,
        configuration_id: &config_id,
        seed,
        learner: cfg.learner,
        hyper,
        augment_order: stream.meta.augment_order,
        stream: &stream.meta,
        schedule: schedule
            .detections
            .iter()
            .map(|d| (d.t, d.tag.as_str()))
            .collect(),
        param_counts: &run.outcome.param_counts,
        magic_commits: run
            .magic
            .as_ref()
            .map(|m| m.commits.iter().map(|k| k.as_str()).collect()),
    };
    write_atomic(
        &metadata_file(out, seed),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;

    let summary = SeedSummary {
        seed,
        configuration_id: config_id.clone(),
        start: run.outcome.report.start(),
        end: run.outcome.report.end(),
        avg: run.avg,
        bwt: run.bwt.value,
        bwt_defined: run.bwt.defined,
        resumed: false,
    };
    // written last: its presence marks the seed as complete
    let text = format!(
        "configuration_id,learner,start_kappa,end_kappa,avg,bwt,bwt_defined\n{config_id},{learner},{},{},{},{},{}\n",
        fmt_opt(summary.start),
        fmt_opt(summary.end),
        summary.avg,
        summary.bwt,
        summary.bwt_defined
    );
    write_atomic(&summary_file(out, seed), text.as_bytes())?;
    Ok(summary)
}

fn read_summary(path: &Path, seed: u64) -> Option<SeedSummary> {
    let text = fs::read_to_string(path).ok()?;
    let row = text.lines().nth(1)?;
    let f: Vec<&str> = row.split(',').collect();
    if f.len() != 7 {
        return None;
    }
    let opt = |s: &str| if s.is_empty() { Some(None) } else { s.parse().ok().map(Some) };
    Some(SeedSummary {
        seed,
        configuration_id: f[0].to_string(),
        start: opt(f[2])?,
        end: opt(f[3])?,
        avg: f[4].parse().ok()?,
        bwt: f[5].parse().ok()?,
        bwt_defined: f[6].parse().ok()?,
        resumed: true,
    })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format_version: u32,
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    seeds: Vec<u64>,
    resumed_seeds: Vec<u64>,
    wall_time_seconds: f64,
}

/// Runs every seed, skipping those whose summary file already exists, and
/// writes the manifest. `stream_for` supplies the stream of each seed.
pub fn run_experiment_with<F>(
    cfg: &ExperimentConfig,
    out: &Path,
    trace: bool,
    stream_for: F,
) -> Result<Vec<SeedSummary>>
where
    F: Fn(u64) -> Result<Stream> + Sync,
{
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let started = Instant::now();
    let work = |seed: u64| -> Result<SeedSummary> {
        if let Some(done) = read_summary(&summary_file(out, seed), seed) {
            return Ok(done);
        }
        let stream = stream_for(seed)?;
        run_stream(cfg, &stream, seed, out, trace)
    };
    let threads = cfg.workers.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    let results: Vec<Result<SeedSummary>> =
        pool.install(|| cfg.seeds.par_iter().map(|&s| work(s)).collect());
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seeds: cfg.seeds.clone(),
        resumed_seeds: summaries.iter().filter(|s| s.resumed).map(|s| s.seed).collect(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_atomic(
        &manifest_file(out),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(summaries)
}

/// Generates each seed's stream in-process and runs it.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, trace: bool) -> Result<Vec<SeedSummary>> {
    run_experiment_with(cfg, out, trace, |seed| cfg.build_stream(seed))
}

/// Runs the configuration on a dumped stream. The dump's seed drives the
/// detector and the learner, so the results match an in-process run.
pub fn replay(cfg: &ExperimentConfig, dump: &Path, out: &Path, trace: bool) -> Result<SeedSummary> {
    let raw = crate::streams::read_dump(dump)?;
    let seed = raw.meta.seed;
    let stream = raw.augmented(cfg.augment_order());
    let one = ExperimentConfig {
        seeds: vec![seed],
        ..cfg.clone()
    };
    let mut summaries = run_experiment_with(&one, out, trace, |_| Ok(stream.clone()))?;
    Ok(summaries.remove(0))
}
