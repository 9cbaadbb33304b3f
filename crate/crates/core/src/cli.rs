//! The `physdepth` command-line tool.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::camera::CameraModel;
use crate::error::{Error, Location, Result};
use crate::eval::{depth_metrics, median_scale, apply_scale, within_pct, DepthRange};
use crate::ingest::{parse_cityscapes_camera, parse_kitti_calib, synth_scene, SynthSpec, KITTI_CAMERA_HEIGHT};
use crate::io::{
    read_image_png, read_label_png, read_pfd1, read_text, write_depth_preview, write_image_png, write_label_png,
    write_pfd1,
};
use crate::losses::{
    block_matching_flow, confidence_map, matches_from_flows, min_reprojection, photometric_loss,
    physics_supervision_loss, smoothness_loss, spatial_2d_loss, warp_image, LossConfig, ProvenanceWeights,
    RigidTransform, ScalarLoss,
};
use crate::physics::{densify, edge_extend, ground_physics_depth, GroundSelection, PhysicsDepthConfig};
use crate::raster::FlowField;
use crate::schema::{categorize, LabelSchema};

/// Version tag carried by every JSON document the tool writes.
pub const SPEC_VERSION: &str = "1.0";

#[derive(Parser, Debug)]
#[command(name = "physdepth", version, about = "Physics depth priors, loss kernels and depth evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ground-plane depth, edge extension and dense prior from a camera and a mask.
    PhysicsDepth(PhysicsDepthArgs),
    /// Depth metrics of a prediction against ground truth.
    Evaluate(EvaluateArgs),
    /// Median scale aligning a prediction to a reference.
    Scale(ScaleArgs),
    /// Loss scalars for a frame pair.
    Losses(LossesArgs),
    /// Render a synthetic scene bundle.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Road,
    Flat,
}

#[derive(Args, Debug)]
pub struct PhysicsDepthArgs {
    /// Camera: model JSON, Cityscapes camera JSON, or KITTI calibration text.
    #[arg(long)]
    pub camera: PathBuf,
    /// Label PNG of class IDs.
    #[arg(long)]
    pub mask: PathBuf,
    /// Label schema JSON; Cityscapes trainIds when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Ground classes seeding edge extension and the dense prior.
    #[arg(long, value_enum, default_value = "flat")]
    pub which: Which,
    #[arg(long)]
    pub max_depth: Option<f64>,
    #[arg(long)]
    pub sky_factor: Option<f64>,
    #[arg(long)]
    pub horizon_epsilon: Option<f64>,
    #[arg(long)]
    pub inpaint_radius: Option<usize>,
    /// KITTI camera index read from the calibration.
    #[arg(long, default_value_t = 2)]
    pub kitti_camera: u8,
    /// Camera height for KITTI calibrations, meters.
    #[arg(long, default_value_t = KITTI_CAMERA_HEIGHT)]
    pub camera_height: f64,
    /// Also write PNG previews of every stage.
    #[arg(long)]
    pub preview: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Ground-truth depth window `min,max` in meters.
    #[arg(long, value_parser = parse_range, default_value = "0.001,80")]
    pub range: DepthRange,
    /// Percentage error thresholds, e.g. `5,10`.
    #[arg(long, value_delimiter = ',')]
    pub pct: Vec<f64>,
    /// Append a CSV row (header written when the file is new).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference depth: LiDAR ground truth or a physics prior.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Write the scaled prediction here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LossesArgs {
    /// Target frame PNG.
    #[arg(long)]
    pub target: PathBuf,
    /// Next frame PNG.
    #[arg(long)]
    pub source: PathBuf,
    /// Previous frame PNG; enables the backward and 2D motion terms.
    #[arg(long)]
    pub source_back: Option<PathBuf>,
    /// Predicted target depth (PFD1).
    #[arg(long)]
    pub depth: PathBuf,
    /// Camera model JSON (intrinsics used for warping).
    #[arg(long)]
    pub camera: PathBuf,
    /// Target-to-source pose JSON: 3x4 `[R|t]` rows.
    #[arg(long)]
    pub pose: PathBuf,
    /// Target-to-previous-frame pose JSON.
    #[arg(long)]
    pub pose_back: Option<PathBuf>,
    /// Physics prior (PFD1) for the supervision term.
    #[arg(long)]
    pub phys: Option<PathBuf>,
    /// Provenance confidence weights JSON.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub alpha_ssim: Option<f64>,
    #[arg(long)]
    pub smooth_lambda: Option<f64>,
    #[arg(long)]
    pub l2d_alpha: Option<f64>,
    #[arg(long)]
    pub l2d_beta: Option<f64>,
    /// Block-matching patch size (odd).
    #[arg(long, default_value_t = 5)]
    pub patch: usize,
    /// Block-matching search radius.
    #[arg(long, default_value_t = 4)]
    pub search: usize,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene spec JSON; the built-in street scene when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<DepthRange, String> {
    let (a, b) = s.split_once(',').ok_or("expected min,max")?;
    let min: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let max: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    DepthRange::new(min, max).map_err(|e| e.to_string())
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::parse(
        Location::File(format!("{} (line {})", path.display(), e.line())),
        e.to_string(),
    )
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| json_error(path, e))
}

fn from_json<T: serde::de::DeserializeOwned>(path: &Path, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::parse(Location::File(path.display().to_string()), e.to_string()))
}

/// Loads a camera from any supported format. Formats without an image size
/// take it from `size`.
pub fn load_camera(path: &Path, size: (u32, u32), kitti_camera: u8, kitti_height: f64) -> Result<CameraModel> {
    let text = read_text(path)?;
    let at_file = |e: Error| match e {
        Error::Parse { location, message } => Error::Parse {
            location: Location::File(format!("{} ({location})", path.display())),
            message,
        },
        other => other,
    };
    if !text.trim_start().starts_with('{') {
        let calib = parse_kitti_calib(&text).map_err(at_file)?;
        let intr = calib.intrinsics(kitti_camera, Some(size)).map_err(at_file)?;
        return CameraModel::new(intr, crate::camera::Extrinsics::level(kitti_height)?);
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| json_error(path, e))?;
    if value.get("intrinsic").is_some() {
        return parse_cityscapes_camera(&text).map_err(at_file)?.to_camera_model(size.0, size.1);
    }
    let cam: CameraModel = from_json(path, value)?;
    cam.validate()?;
    Ok(cam)
}

fn read_pose(path: &Path) -> Result<RigidTransform> {
    let rows: Vec<Vec<f64>> = from_json(path, read_json(path)?)?;
    let bad = || Error::parse(Location::File(path.display().to_string()), "pose must be 3 or 4 rows of 4 numbers");
    if !(rows.len() == 3 || rows.len() == 4) || rows.iter().any(|r| r.len() != 4) {
        return Err(bad());
    }
    let m = [
        [rows[0][0], rows[0][1], rows[0][2], rows[0][3]],
        [rows[1][0], rows[1][1], rows[1][2], rows[1][3]],
        [rows[2][0], rows[2][1], rows[2][2], rows[2][3]],
    ];
    RigidTransform::from_rows(&m)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    crate::io::write_bytes(path, format!("{text}\n").as_bytes())
}

fn physics_depth(args: &PhysicsDepthArgs) -> Result<Value> {
    let mask = read_label_png(&args.mask)?;
    let schema = match &args.schema {
        Some(p) => LabelSchema::from_json(&read_text(p)?).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: Location::File(format!("{} ({location})", p.display())),
                message,
            },
            other => other,
        })?,
        None => LabelSchema::default(),
    };
    let size = (mask.width() as u32, mask.height() as u32);
    let cam = load_camera(&args.camera, size, args.kitti_camera, args.camera_height)?;
    let mut cfg = PhysicsDepthConfig::default();
    if let Some(v) = args.max_depth {
        cfg.max_depth = v;
    }
    if let Some(v) = args.sky_factor {
        cfg.sky_factor = v;
    }
    if let Some(v) = args.horizon_epsilon {
        cfg.horizon_epsilon = v;
    }
    if let Some(v) = args.inpaint_radius {
        cfg.inpaint_radius = v;
    }
    cfg.validate()?;
    crate::raster::ensure_same_dims(
        (cam.intrinsics.width as usize, cam.intrinsics.height as usize),
        mask.dims(),
        "camera image size vs mask",
    )?;

    let cats = categorize(&mask, &schema);
    let road = ground_physics_depth(&cam, &cats.categories, GroundSelection::RoadOnly, &cfg)?;
    let flat = ground_physics_depth(&cam, &cats.categories, GroundSelection::AllFlat, &cfg)?;
    let seed = if args.which == Which::Road { &road } else { &flat };
    let extended = edge_extend(seed, &cats.categories)?;
    let dense = densify(&extended, &cats.categories, &cfg)?;

    ensure_dir(&args.out)?;
    let stages = [("road", &road), ("flat", &flat), ("extended", &extended), ("dense", &dense)];
    let mut counts = serde_json::Map::new();
    for (name, map) in stages {
        write_pfd1(&args.out.join(format!("{name}.pfd1")), map)?;
        if args.preview {
            write_depth_preview(&args.out.join(format!("{name}.png")), map)?;
        }
        counts.insert(name.to_string(), json!(map.valid_count()));
    }
    let summary = json!({
        "spec_version": SPEC_VERSION,
        "width": mask.width(),
        "height": mask.height(),
        "which": if args.which == Which::Road { "road" } else { "flat" },
        "valid_pixels": counts,
        "unknown_labels": cats.unknown_pixels,
        "config": cfg,
        "camera": cam,
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn evaluate(args: &EvaluateArgs) -> Result<Value> {
    let pred = read_pfd1(&args.pred)?;
    let gt = read_pfd1(&args.gt)?;
    let metrics = depth_metrics(&pred, &gt, args.range)?;
    let mut pct = serde_json::Map::new();
    for &p in &args.pct {
        pct.insert(format!("{p}"), json!(within_pct(&pred, &gt, p)?));
    }
    if let Some(csv) = &args.csv {
        let fresh = !csv.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(csv)
            .map_err(|source| Error::Io {
                path: csv.display().to_string(),
                source,
            })?;
        let mut text = String::new();
        if fresh {
            text.push_str(crate::eval::MetricsReport::CSV_HEADER);
            text.push('\n');
        }
        text.push_str(&metrics.csv_row());
        text.push('\n');
        f.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: csv.display().to_string(),
            source,
        })?;
    }
    Ok(json!({
        "spec_version": SPEC_VERSION,
        "range": args.range,
        "metrics": metrics,
        "within_pct": pct,
    }))
}

fn scale(args: &ScaleArgs) -> Result<Value> {
    let pred = read_pfd1(&args.pred)?;
    let reference = read_pfd1(&args.reference)?;
    let s = median_scale(&pred, &reference)?;
    if let Some(out) = &args.out {
        write_pfd1(out, &apply_scale(&pred, s)?)?;
    }
    Ok(json!({ "spec_version": SPEC_VERSION, "scale": s }))
}

fn scalar_json(l: &ScalarLoss) -> Value {
    if l.is_empty() {
        Value::Null
    } else {
        json!(l)
    }
}

/// Motion field `t-1 -> t` on the target grid from the flow target -> prev.
fn reverse_motion(to_prev: &FlowField) -> FlowField {
    to_prev.map(|v| v.map(|[dx, dy]| [-dx, -dy]))
}

fn losses(args: &LossesArgs) -> Result<Value> {
    let target = read_image_png(&args.target)?;
    let source = read_image_png(&args.source)?;
    let depth = read_pfd1(&args.depth)?;
    let size = (depth.width() as u32, depth.height() as u32);
    let cam = load_camera(&args.camera, size, 2, KITTI_CAMERA_HEIGHT)?;
    let intr = cam.intrinsics;
    let mut cfg = LossConfig::default();
    if let Some(v) = args.alpha_ssim {
        cfg.alpha_ssim = v;
    }
    if let Some(v) = args.smooth_lambda {
        cfg.smooth_lambda = v;
    }
    if let Some(v) = args.l2d_alpha {
        cfg.l2d_alpha = v;
    }
    if let Some(v) = args.l2d_beta {
        cfg.l2d_beta = v;
    }
    cfg.validate()?;

    let pose = read_pose(&args.pose)?;
    let fwd_warp = warp_image(&source, &depth, &pose, &intr)?;
    let fwd = photometric_loss(&target, &fwd_warp.image, &fwd_warp.valid, &cfg)?;

    let mut photometric = json!({ "forward": scalar_json(&fwd.mean), "backward": null, "min": null });
    let mut l2d = Value::Null;
    if let Some(back_path) = &args.source_back {
        let back_img = read_image_png(back_path)?;
        let pose_back = match &args.pose_back {
            Some(p) => read_pose(p)?,
            None => pose.inverse(),
        };
        let bwd_warp = warp_image(&back_img, &depth, &pose_back, &intr)?;
        let bwd = photometric_loss(&target, &bwd_warp.image, &bwd_warp.valid, &cfg)?;
        let min_map = min_reprojection(&fwd.map, &bwd.map)?;
        let values: Vec<f64> = min_map.as_slice().iter().flatten().copied().collect();
        photometric["backward"] = scalar_json(&bwd.mean);
        photometric["min"] = scalar_json(&crate::losses::pairwise_mean(&values));

        let to_prev = block_matching_flow(&target, &back_img, args.patch, args.search)?;
        let to_next = block_matching_flow(&target, &source, args.patch, args.search)?;
        let matches = matches_from_flows(&reverse_motion(&to_prev), &to_next)?;
        if !matches.is_empty() {
            l2d = json!(spatial_2d_loss(&matches, &cfg)?);
        }
    }

    let physics = match &args.phys {
        Some(p) => {
            let prior = read_pfd1(p)?;
            let table: ProvenanceWeights = match &args.weights {
                Some(w) => from_json(w, read_json(w)?)?,
                None => ProvenanceWeights::default(),
            };
            scalar_json(&physics_supervision_loss(&depth, &prior, &confidence_map(&prior, &table)?)?)
        }
        None => Value::Null,
    };
    let smooth = smoothness_loss(&depth, &target, cfg.smooth_lambda)?;
    Ok(json!({
        "spec_version": SPEC_VERSION,
        "config": cfg,
        "physics": physics,
        "photometric": photometric,
        "smoothness": scalar_json(&smooth),
        "spatial_2d": l2d,
    }))
}

fn synth(args: &SynthArgs) -> Result<Value> {
    let spec: SynthSpec = match &args.spec {
        Some(p) => {
            let spec: SynthSpec = from_json(p, read_json(p)?)?;
            spec.validate().map_err(|e| Error::parse(Location::File(p.display().to_string()), e.to_string()))?;
            spec
        }
        None => SynthSpec::default(),
    };
    let scene = synth_scene(&spec, args.seed)?;
    ensure_dir(&args.out)?;
    write_image_png(&args.out.join("image.png"), &scene.image)?;
    write_label_png(&args.out.join("labels.png"), &scene.labels)?;
    write_pfd1(&args.out.join("depth_gt.pfd1"), &scene.depth)?;
    write_json(&args.out.join("camera.json"), &json!(spec.camera))?;
    write_json(&args.out.join("spec.json"), &json!(spec))?;
    let summary = json!({
        "spec_version": SPEC_VERSION,
        "seed": args.seed,
        "width": scene.depth.width(),
        "height": scene.depth.height(),
        "gt_valid_pixels": scene.depth.valid_count(),
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn run(cli: &Cli) -> Result<Value> {
    match &cli.command {
        Command::PhysicsDepth(a) => physics_depth(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Scale(a) => scale(a),
        Command::Losses(a) => losses(a),
        Command::Synth(a) => synth(a),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
            // A closed stdout (e.g. piped into `head`) is not a failure.
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
