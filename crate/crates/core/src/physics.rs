//! Metric depth prior from camera geometry and semantic categories.
//!
//! Ground pixels are intersected with the plane lying `camera_height` below
//! the camera in the ground-aligned frame. Vertical objects inherit the
//! depth of the ground pixel they stand on, the remaining holes are filled
//! by fast-marching inpainting, and sky gets a fixed multiple of the
//! farthest filled depth.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_center, pixel_ray_with, rotation_from_euler, CameraModel, RayModel};
use crate::error::{Error, Result};
use crate::inpaint::{telea, InpaintProblem, DEFAULT_RADIUS};
use crate::raster::{ensure_same_dims, Category, CategoryMap, DepthMap, Grid, LabelMap, Provenance};
use crate::schema::{categorize, LabelSchema};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsDepthConfig {
    /// Rays whose ground-frame downward component is at or below this are
    /// treated as hitting the horizon.
    pub horizon_epsilon: f64,
    /// Ground depths beyond this many meters are discarded.
    pub max_depth: f64,
    /// Sky depth as a multiple of the farthest non-sky depth.
    pub sky_factor: f64,
    pub inpaint_radius: usize,
    pub ray_model: RayModel,
}

impl Default for PhysicsDepthConfig {
    fn default() -> Self {
        PhysicsDepthConfig {
            horizon_epsilon: 1e-6,
            max_depth: 120.0,
            sky_factor: 1.5,
            inpaint_radius: DEFAULT_RADIUS,
            ray_model: RayModel::MeanFocal,
        }
    }
}

impl PhysicsDepthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_epsilon > 0.0 && self.horizon_epsilon.is_finite()) {
            return Err(Error::invalid("horizon_epsilon must be positive"));
        }
        if !(self.max_depth > 0.0) {
            return Err(Error::invalid("max_depth must be positive"));
        }
        if !(self.sky_factor > 1.0 && self.sky_factor.is_finite()) {
            return Err(Error::invalid("sky_factor must be greater than 1"));
        }
        if self.inpaint_radius < 1 {
            return Err(Error::invalid("inpaint_radius must be at least 1"));
        }
        Ok(())
    }
}

/// Which ground categories receive a depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundSelection {
    RoadOnly,
    AllFlat,
}

impl GroundSelection {
    fn provenance(self, c: Category) -> Option<Provenance> {
        match (self, c) {
            (_, Category::Road) => Some(Provenance::Road),
            (GroundSelection::AllFlat, Category::Flat) => Some(Provenance::Flat),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsDepthResult {
    pub road: DepthMap,
    pub flat: DepthMap,
    pub edge_extended: DepthMap,
    pub dense: DepthMap,
    /// Label pixels whose class ID the schema did not declare.
    pub unknown_labels: usize,
}

/// Precomputed per-camera state for ground intersection.
#[derive(Debug, Clone, Copy)]
pub struct GroundProjector {
    cam: CameraModel,
    rotation: Matrix3<f64>,
    horizon_epsilon: f64,
    ray_model: RayModel,
}

impl GroundProjector {
    pub fn new(cam: &CameraModel, cfg: &PhysicsDepthConfig) -> Result<Self> {
        cam.validate()?;
        cfg.validate()?;
        Ok(GroundProjector {
            cam: *cam,
            rotation: rotation_from_euler(&cam.extrinsics),
            horizon_epsilon: cfg.horizon_epsilon,
            ray_model: cfg.ray_model,
        })
    }

    /// Camera-frame ground point seen through continuous image coordinate
    /// `(u_img, v_img)`, or `None` at and above the horizon.
    pub fn ground_point(&self, u_img: f64, v_img: f64) -> Option<Vector3<f64>> {
        let ray = pixel_ray_with(&self.cam.intrinsics, u_img, v_img, self.ray_model).ok()?;
        let rc = self.rotation * ray.as_vector();
        if rc.y <= self.horizon_epsilon {
            return None;
        }
        let distance = self.cam.extrinsics.camera_height / rc.y;
        let in_ground_frame = rc * distance;
        Some(self.rotation.transpose() * in_ground_frame)
    }

    /// Ground point through the center of integer pixel `(x, y)`.
    pub fn ground_point_px(&self, x: usize, y: usize) -> Option<Vector3<f64>> {
        self.ground_point(pixel_center(x), pixel_center(y))
    }
}

fn check_raster(cam: &CameraModel, dims: (usize, usize)) -> Result<()> {
    let intr = &cam.intrinsics;
    ensure_same_dims(
        (intr.width as usize, intr.height as usize),
        dims,
        "camera image size vs category raster",
    )
}

pub fn ground_physics_depth(
    cam: &CameraModel,
    categories: &CategoryMap,
    which: GroundSelection,
    cfg: &PhysicsDepthConfig,
) -> Result<DepthMap> {
    check_raster(cam, categories.dims())?;
    let projector = GroundProjector::new(cam, cfg)?;
    let (w, h) = categories.dims();
    let mut out = DepthMap::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let Some(prov) = which.provenance(*categories.get(x, y)) else {
                continue;
            };
            let Some(p) = projector.ground_point_px(x, y) else {
                continue;
            };
            let depth = p.z;
            if depth > 0.0 && depth <= cfg.max_depth && depth.is_finite() {
                let d = depth as f32;
                if d > 0.0 && d.is_finite() {
                    out.set(x, y, d, prov)?;
                }
            }
        }
    }
    Ok(out)
}

/// Propagates ground depth up each column through runs of vertical pixels
/// that stand directly on a valid ground pixel.
pub fn edge_extend(ground: &DepthMap, categories: &CategoryMap) -> Result<DepthMap> {
    ensure_same_dims(ground.dims(), categories.dims(), "edge_extend")?;
    let (w, h) = ground.dims();
    let mut out = ground.clone();
    for x in 0..w {
        let mut contact: Option<f32> = None;
        for y in (0..h).rev() {
            if *categories.get(x, y) != Category::Vertical {
                contact = None;
                continue;
            }
            let run_start = y + 1 == h || *categories.get(x, y + 1) != Category::Vertical;
            if run_start {
                contact = if y + 1 < h { ground.get(x, y + 1) } else { None };
            }
            if let Some(d) = contact {
                if !out.is_valid(x, y) {
                    out.set(x, y, d, Provenance::EdgeExtended)?;
                }
            }
        }
    }
    Ok(out)
}

/// Fills every invalid pixel: non-sky holes by inpainting, sky with
/// `sky_factor` times the farthest non-sky depth.
pub fn densify(extended: &DepthMap, categories: &CategoryMap, cfg: &PhysicsDepthConfig) -> Result<DepthMap> {
    ensure_same_dims(extended.dims(), categories.dims(), "densify")?;
    cfg.validate()?;
    let (w, h) = extended.dims();
    let cats = categories.as_slice();
    let has_seed = (0..extended.len()).any(|i| extended.is_valid_at(i) && cats[i] != Category::Sky);
    if !has_seed {
        return Err(Error::EmptyPrior);
    }

    let values = Grid::from_vec(
        w,
        h,
        extended.values().iter().map(|&v| v as f64).collect(),
    )?;
    let known = extended.valid_mask();
    let filled = telea(&InpaintProblem::new(values, known, cfg.inpaint_radius)?)?;

    let mut out = extended.clone();
    let mut farthest = 0.0f32;
    for i in 0..out.len() {
        if cats[i] == Category::Sky {
            continue;
        }
        if !out.is_valid_at(i) {
            out.set_at(i, filled.as_slice()[i] as f32, Provenance::Inpainted)?;
        }
        farthest = farthest.max(out.values()[i]);
    }
    let sky_depth = (cfg.sky_factor * farthest as f64) as f32;
    for i in 0..out.len() {
        if cats[i] == Category::Sky && !out.is_valid_at(i) {
            out.set_at(i, sky_depth, Provenance::Sky)?;
        }
    }
    Ok(out)
}

/// Runs every stage on an already categorized raster.
pub fn compute_from_categories(
    cam: &CameraModel,
    categories: &CategoryMap,
    cfg: &PhysicsDepthConfig,
) -> Result<PhysicsDepthResult> {
    let road = ground_physics_depth(cam, categories, GroundSelection::RoadOnly, cfg)?;
    let flat = ground_physics_depth(cam, categories, GroundSelection::AllFlat, cfg)?;
    let edge_extended = edge_extend(&flat, categories)?;
    let dense = densify(&edge_extended, categories, cfg)?;
    Ok(PhysicsDepthResult {
        road,
        flat,
        edge_extended,
        dense,
        unknown_labels: 0,
    })
}

pub fn compute_pipeline(
    cam: &CameraModel,
    mask: &LabelMap,
    schema: &LabelSchema,
    cfg: &PhysicsDepthConfig,
) -> Result<PhysicsDepthResult> {
    check_raster(cam, mask.dims())?;
    let cats = categorize(mask, schema);
    let mut result = compute_from_categories(cam, &cats.categories, cfg)?;
    result.unknown_labels = cats.unknown_pixels;
    Ok(result)
}
