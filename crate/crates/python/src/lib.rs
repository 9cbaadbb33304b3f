//! Python bindings for the physdepth toolkit.
//!
//! Rasters cross the boundary as flat row-major lists plus `width` and
//! `height`; invalid depths are `None`. Cameras travel as camera-model JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use physdepth::camera::CameraModel;
use physdepth::error::Error;
use physdepth::eval::{self, DepthRange};
use physdepth::ingest::{self, SynthSpec};
use physdepth::losses::{self, LossConfig};
use physdepth::physics::{self, PhysicsDepthConfig};
use physdepth::raster::{DepthMap, Grid, ImageBuffer, Provenance};
use physdepth::schema::LabelSchema;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn depth_from_list(values: &[Option<f64>], width: usize, height: usize) -> PyResult<DepthMap> {
    if values.len() != width * height {
        return Err(PyValueError::new_err(format!(
            "expected {} values for {width}x{height}, got {}",
            width * height,
            values.len()
        )));
    }
    let mut d = DepthMap::new(width, height).map_err(to_py)?;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            d.set_at(i, *v as f32, Provenance::External).map_err(to_py)?;
        }
    }
    Ok(d)
}

fn depth_to_list(d: &DepthMap) -> Vec<Option<f64>> {
    (0..d.len()).map(|i| d.depth_at(i).map(f64::from)).collect()
}

fn parse_camera(camera_json: &str) -> PyResult<CameraModel> {
    let cam: CameraModel =
        serde_json::from_str(camera_json).map_err(|e| PyValueError::new_err(format!("camera JSON: {e}")))?;
    cam.validate().map_err(to_py)?;
    Ok(cam)
}

/// Runs the ground-plane depth pipeline on a label map of class IDs.
/// Returns the `road`, `flat`, `extended` and `dense` stages.
#[pyfunction]
#[pyo3(signature = (camera_json, labels, width, height, schema_json=None))]
fn physics_depth(
    camera_json: &str,
    labels: Vec<u16>,
    width: usize,
    height: usize,
    schema_json: Option<&str>,
) -> PyResult<BTreeMap<String, Vec<Option<f64>>>> {
    let cam = parse_camera(camera_json)?;
    let schema = match schema_json {
        Some(s) => LabelSchema::from_json(s).map_err(to_py)?,
        None => LabelSchema::default(),
    };
    let mask = Grid::from_vec(width, height, labels).map_err(to_py)?;
    let res = physics::compute_pipeline(&cam, &mask, &schema, &PhysicsDepthConfig::default()).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("road".to_string(), depth_to_list(&res.road)),
        ("flat".to_string(), depth_to_list(&res.flat)),
        ("extended".to_string(), depth_to_list(&res.edge_extended)),
        ("dense".to_string(), depth_to_list(&res.dense)),
    ]))
}

/// Standard depth error metrics over pixels valid in both maps with
/// ground truth inside `[min_depth, max_depth]`.
#[pyfunction]
#[pyo3(signature = (pred, gt, width, height, min_depth=1e-3, max_depth=80.0))]
fn depth_metrics<'py>(
    py: Python<'py>,
    pred: Vec<Option<f64>>,
    gt: Vec<Option<f64>>,
    width: usize,
    height: usize,
    min_depth: f64,
    max_depth: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pred = depth_from_list(&pred, width, height)?;
    let gt = depth_from_list(&gt, width, height)?;
    let range = DepthRange::new(min_depth, max_depth).map_err(to_py)?;
    let m = eval::depth_metrics(&pred, &gt, range).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("abs_rel", m.abs_rel)?;
    out.set_item("sq_rel", m.sq_rel)?;
    out.set_item("rmse", m.rmse)?;
    out.set_item("rmse_log", m.rmse_log)?;
    out.set_item("delta1", m.delta1)?;
    out.set_item("delta2", m.delta2)?;
    out.set_item("delta3", m.delta3)?;
    out.set_item("n_pixels", m.n_pixels)?;
    Ok(out)
}

/// Median of `reference / pred` over pixels valid in both.
#[pyfunction]
fn median_scale(pred: Vec<Option<f64>>, reference: Vec<Option<f64>>, width: usize, height: usize) -> PyResult<f64> {
    let pred = depth_from_list(&pred, width, height)?;
    let reference = depth_from_list(&reference, width, height)?;
    eval::median_scale(&pred, &reference).map_err(to_py)
}

/// Per-pixel photometric error mean over `valid` pixels of two
/// interleaved-channel images.
#[pyfunction]
#[pyo3(signature = (target, recon, valid, width, height, channels, alpha_ssim=0.85))]
fn photometric_loss(
    target: Vec<f32>,
    recon: Vec<f32>,
    valid: Vec<bool>,
    width: usize,
    height: usize,
    channels: usize,
    alpha_ssim: f64,
) -> PyResult<f64> {
    let target = ImageBuffer::new(width, height, channels, target).map_err(to_py)?;
    let recon = ImageBuffer::new(width, height, channels, recon).map_err(to_py)?;
    let valid = Grid::from_vec(width, height, valid).map_err(to_py)?;
    let cfg = LossConfig {
        alpha_ssim,
        ..LossConfig::default()
    };
    Ok(losses::photometric_loss(&target, &recon, &valid, &cfg).map_err(to_py)?.mean.value)
}

/// Renders the built-in synthetic street scene.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn synth<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let scene = ingest::synth_scene(&SynthSpec::default(), seed).map_err(to_py)?;
    let camera_json =
        serde_json::to_string(&scene.spec.camera).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = PyDict::new(py);
    out.set_item("width", scene.labels.width())?;
    out.set_item("height", scene.labels.height())?;
    out.set_item("camera_json", camera_json)?;
    out.set_item("labels", scene.labels.as_slice().to_vec())?;
    out.set_item("depth", depth_to_list(&scene.depth))?;
    out.set_item("image", scene.image.data().to_vec())?;
    out.set_item("channels", scene.image.channels())?;
    Ok(out)
}

/// Numeric entries of a KITTI calibration file.
#[pyfunction]
fn parse_kitti_calib(text: &str) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let calib = ingest::parse_kitti_calib(text).map_err(to_py)?;
    Ok(calib
        .keys()
        .filter_map(|k| calib.get(k).map(|v| (k.to_string(), v.to_vec())))
        .collect())
}

/// Reads a PFD1 depth file as `(width, height, values)`.
#[pyfunction]
fn read_pfd1(path: PathBuf) -> PyResult<(usize, usize, Vec<Option<f64>>)> {
    let d = physdepth::io::read_pfd1(&path).map_err(to_py)?;
    Ok((d.width(), d.height(), depth_to_list(&d)))
}

/// Writes a PFD1 depth file.
#[pyfunction]
fn write_pfd1(path: PathBuf, width: usize, height: usize, values: Vec<Option<f64>>) -> PyResult<()> {
    let d = depth_from_list(&values, width, height)?;
    physdepth::io::write_pfd1(&path, &d).map_err(to_py)
}

#[pymodule]
fn physdepth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(physics_depth, m)?)?;
    m.add_function(wrap_pyfunction!(depth_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(median_scale, m)?)?;
    m.add_function(wrap_pyfunction!(photometric_loss, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(parse_kitti_calib, m)?)?;
    m.add_function(wrap_pyfunction!(read_pfd1, m)?)?;
    m.add_function(wrap_pyfunction!(write_pfd1, m)?)?;
    Ok(())
}
