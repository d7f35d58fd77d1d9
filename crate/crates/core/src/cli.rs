//! Command-line interface: `build-atlas`, `segment`, `eval` and `phantom`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atlas::{build_atlas, load_atlas, save_atlas, AtlasSubject};
use crate::error::{Error, Result};
use crate::pipeline::{detect_roi_xy, run_pipeline, PipelineConfig, RoiXY, SliceLog};
use crate::registration::RegistrationOptions;
use crate::validation::{evaluate, generate_phantom, write_phantom, PhantomSpec};
use crate::volume::{load_cine, load_mask, save_mask, save_volume, Volume};

#[derive(Debug, Parser)]
#[command(name = "atlascut", version, about = "Atlas-guided graph-cut segmentation of the left ventricle")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an appearance atlas and myocardium prior from labelled subjects.
    BuildAtlas(BuildAtlasArgs),
    /// Segment blood pool and myocardium of one case.
    Segment(SegmentArgs),
    /// Compare predicted masks with ground truth.
    Eval(EvalArgs),
    /// Write a synthetic cine phantom with ground truth.
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct BuildAtlasArgs {
    /// Case directory of the reference subject.
    #[arg(long)]
    pub reference: PathBuf,
    /// Case directories (`cine/` plus `gt_myo`), one per subject.
    #[arg(long, num_args = 1.., required = true)]
    pub subjects: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON registration options.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub atlas: PathBuf,
    /// Case directory holding `cine/`, or a cine directory itself.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON pipeline configuration; must give `slice_range`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cine frame to segment (end-diastole).
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Directory receiving intermediate fields as CVOL volumes.
    #[arg(long)]
    pub debug_dump: Option<PathBuf>,
    #[arg(long, env = "ATLASCUT_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory holding `bp` and `myo` masks.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory holding `gt_bp` and `gt_myo` masks.
    #[arg(long)]
    pub gt: PathBuf,
    /// Inclusive LV slice range as `start:end`.
    #[arg(long, value_parser = parse_slice_range)]
    pub slice_range: (usize, usize),
    /// JSON report path; the text table goes next to it with extension `.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// JSON phantom spec (defaults apply to missing fields).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "ATLASCUT_SEED")]
    pub seed: Option<u64>,
}

pub fn parse_slice_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:end, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    if a > b {
        return Err(format!("start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Record written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub stage_timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: Vec::new(),
            seed: None,
            wall_time_s: 0.0,
            stage_timings: BTreeMap::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

/// SHA-256 of every file under `path` (recursively, sorted by path).
pub fn hash_inputs(path: &Path) -> Result<Vec<InputHash>> {
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
            Ok(InputHash {
                path: f.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect()
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        collect_files(&p, out)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cine_dir(case: &Path) -> PathBuf {
    let nested = case.join("cine");
    if nested.is_dir() {
        nested
    } else {
        case.to_path_buf()
    }
}

fn mask_stem(dir: &Path, name: &str) -> Result<PathBuf> {
    let stem = dir.join(name);
    if stem.with_extension("json").exists() {
        Ok(stem)
    } else {
        Err(Error::format(dir, format!("missing `{name}.json`")))
    }
}

fn subject_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn load_subject(dir: &Path) -> Result<AtlasSubject> {
    let id = subject_id(dir);
    let load = || -> Result<AtlasSubject> {
        let frames = load_cine(cine_dir(dir))?;
        let labels = load_mask(mask_stem(dir, "gt_myo")?)?;
        Ok(AtlasSubject {
            id: id.clone(),
            volume: frames.into_iter().next().expect("nonempty cine"),
            labels,
        })
    };
    load().map_err(|e| Error::Atlas {
        subject: id.clone(),
        source: Box::new(e),
    })
}

pub fn cmd_build_atlas(args: &BuildAtlasArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let opts = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<RegistrationOptions>(&text).map_err(|e| Error::format(p, e.to_string()))?
        }
        None => RegistrationOptions::default(),
    };
    opts.validate()?;
    let mut manifest = RunManifest::new("build-atlas", to_json(&opts));

    let t = Instant::now();
    let reference = load_cine(cine_dir(&args.reference))?
        .into_iter()
        .next()
        .expect("nonempty cine");
    let subjects = args
        .subjects
        .iter()
        .map(|d| load_subject(d))
        .collect::<Result<Vec<_>>>()?;
    manifest.stage_timings.insert("load".into(), t.elapsed().as_secs_f64());
    for d in std::iter::once(&args.reference).chain(&args.subjects) {
        manifest.inputs.extend(hash_inputs(d)?);
    }

    let t = Instant::now();
    let atlas = build_atlas(&reference, &subject_id(&args.reference), &subjects, &opts)?;
    manifest.stage_timings.insert("build".into(), t.elapsed().as_secs_f64());
    save_atlas(&atlas, &args.out)?;
    manifest.outputs = ["appearance", "prior", "meta.json"].map(String::from).to_vec();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentDetails {
    roi: Option<RoiXY>,
    slices: Vec<SliceLog>,
    registration_metric: f64,
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new("segment", to_json(&cfg));
    manifest.seed = Some(cfg.seed);

    let t = Instant::now();
    let atlas = load_atlas(&args.atlas)?;
    let frames = load_cine(cine_dir(&args.input))?;
    let frame = frames.get(args.frame).ok_or(Error::IndexOutOfRange {
        index: args.frame,
        len: frames.len(),
    })?;
    manifest.stage_timings.insert("load".into(), t.elapsed().as_secs_f64());
    manifest.inputs.extend(hash_inputs(&args.atlas)?);
    manifest.inputs.extend(hash_inputs(&cine_dir(&args.input))?);
    manifest.inputs.extend(hash_inputs(&args.config)?);

    let roi = if cfg.detect_roi {
        Some(detect_roi_xy(&frames)?)
    } else {
        None
    };
    let input: Volume = match roi {
        Some(r) => r.crop(frame)?,
        None => frame.clone(),
    };
    let debug = args.debug_dump.is_some();
    let result = run_pipeline(&atlas, &input, &cfg, debug)?;
    let t = result.timings;
    for (k, v) in [
        ("normalize", t.normalize),
        ("propagate_prior", t.propagate_prior),
        ("blood_pool", t.blood_pool),
        ("myocardium", t.myocardium),
        ("pipeline_total", t.total),
    ] {
        manifest.stage_timings.insert(k.into(), v);
    }

    create_dir(&args.out)?;
    let (bp, myo) = match roi {
        Some(r) => (
            result.bp.embed(frame.dims(), r.x0, r.y0)?,
            result.myo.embed(frame.dims(), r.x0, r.y0)?,
        ),
        None => (result.bp.clone(), result.myo.clone()),
    };
    save_mask(&bp, frame.spacing(), args.out.join("bp"))?;
    save_mask(&myo, frame.spacing(), args.out.join("myo"))?;
    manifest.outputs = vec!["bp".into(), "myo".into()];

    if let Some(dir) = &args.debug_dump {
        create_dir(dir)?;
        for (name, v) in &result.debug {
            save_volume(v, dir.join(name))?;
        }
    }
    manifest.details = to_json(&SegmentDetails {
        roi,
        slices: result.slices.clone(),
        registration_metric: result.registration.final_metric,
    });
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(manifest)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("eval", serde_json::json!({ "slice_range": args.slice_range }));
    let pred_bp = load_mask(mask_stem(&args.pred, "bp")?)?;
    let pred_myo = load_mask(mask_stem(&args.pred, "myo")?)?;
    let gt_bp = load_mask(mask_stem(&args.gt, "gt_bp")?)?;
    let gt_myo = load_mask(mask_stem(&args.gt, "gt_myo")?)?;
    for stem in ["bp", "myo"] {
        manifest.inputs.extend(hash_inputs(&args.pred.join(stem).with_extension("raw"))?);
    }
    for stem in ["gt_bp", "gt_myo"] {
        manifest.inputs.extend(hash_inputs(&args.gt.join(stem).with_extension("raw"))?);
    }
    let report = evaluate(&pred_bp, &pred_myo, &gt_bp, &gt_myo, args.slice_range)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&args.out, json).map_err(|e| Error::io(&args.out, e))?;
    let txt = args.out.with_extension("txt");
    let table = report.render_text();
    fs::write(&txt, &table).map_err(|e| Error::io(&txt, e))?;
    println!("{table}");
    manifest.outputs = vec![args.out.display().to_string(), txt.display().to_string()];
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&args.out.with_extension("manifest.json"))?;
    Ok(manifest)
}

pub fn cmd_phantom(args: &PhantomArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<PhantomSpec>(&text).map_err(|e| Error::format(p, e.to_string()))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let mut manifest = RunManifest::new("phantom", to_json(&spec));
    manifest.seed = Some(spec.seed);
    if let Some(p) = &args.spec {
        manifest.inputs = hash_inputs(p)?;
    }
    let phantom = generate_phantom(&spec)?;
    write_phantom(&phantom, &spec, &args.out)?;
    manifest.outputs = ["cine", "gt_bp", "gt_myo", "spec.json"].map(String::from).to_vec();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(manifest)
}

pub fn run(cli: &Cli) -> Result<RunManifest> {
    let go = || match &cli.command {
        Command::BuildAtlas(a) => cmd_build_atlas(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Phantom(a) => cmd_phantom(a),
    };
    match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// Exit code for an error: 2 for usage and configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Stage { source, .. } => exit_code(source),
        _ => 1,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(m) => {
            info!("{} finished in {:.2} s", m.command, m.wall_time_s);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            exit_code(&e)
        }
    }
}
