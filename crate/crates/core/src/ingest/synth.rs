//! Ray-cast synthetic street scene with exact depth, used as ground truth.
//!
//! World frame: origin at the camera center, y pointing down, the ground
//! plane at `y = camera_height`. A camera-frame direction `d` maps to the
//! world as `R d`, with `R` the camera rotation.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_center, rotation_from_euler, CameraModel, Extrinsics, Intrinsics};
use crate::error::{Error, Result};
use crate::raster::{DepthMap, Grid, ImageBuffer, LabelMap, Provenance};

pub const LABEL_ROAD: u16 = 0;
pub const LABEL_SIDEWALK: u16 = 1;
pub const LABEL_SKY: u16 = 10;
pub const LABEL_CAR: u16 = 13;

/// Axis-aligned box standing `elevation` meters above the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthBox {
    pub center_x: f64,
    pub center_z: f64,
    pub width: f64,
    pub height: f64,
    pub length: f64,
    pub elevation: f64,
    pub label: u16,
}

impl Default for SynthBox {
    fn default() -> Self {
        SynthBox {
            center_x: 0.0,
            center_z: 10.0,
            width: 1.8,
            height: 1.6,
            length: 4.0,
            elevation: 0.0,
            label: LABEL_CAR,
        }
    }
}

impl SynthBox {
    /// World-frame (min, max) corners.
    fn bounds(&self, ground_y: f64) -> (Vector3<f64>, Vector3<f64>) {
        let bottom = ground_y - self.elevation;
        (
            Vector3::new(self.center_x - self.width / 2.0, bottom - self.height, self.center_z - self.length / 2.0),
            Vector3::new(self.center_x + self.width / 2.0, bottom, self.center_z + self.length / 2.0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub camera: CameraModel,
    /// Ground with `|x| <= road_half_width` is road, the rest sidewalk.
    pub road_half_width: f64,
    pub boxes: Vec<SynthBox>,
    /// Texture lattice spacing, meters.
    pub texture_cell: f64,
    /// Peak-to-peak texture contrast.
    pub texture_amplitude: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            camera: CameraModel {
                intrinsics: Intrinsics {
                    fx: 120.0,
                    fy: 120.0,
                    ox: 80.0,
                    oy: 48.0,
                    width: 160,
                    height: 96,
                },
                extrinsics: Extrinsics {
                    camera_height: 1.5,
                    roll: 0.0,
                    pitch: 0.0,
                    yaw: 0.0,
                },
            },
            road_half_width: 3.5,
            boxes: vec![
                SynthBox {
                    center_x: 1.5,
                    center_z: 12.0,
                    ..SynthBox::default()
                },
                SynthBox {
                    center_x: -5.0,
                    center_z: 18.0,
                    width: 1.0,
                    height: 3.0,
                    length: 1.0,
                    ..SynthBox::default()
                },
            ],
            texture_cell: 0.25,
            texture_amplitude: 0.4,
        }
    }
}

impl SynthSpec {
    /// Ground plane only.
    pub fn plane_only(camera: CameraModel) -> Self {
        SynthSpec {
            camera,
            boxes: Vec::new(),
            ..SynthSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos("road_half_width", self.road_half_width)?;
        pos("texture_cell", self.texture_cell)?;
        if !(self.texture_amplitude >= 0.0 && self.texture_amplitude <= 1.0) {
            return Err(Error::invalid("texture_amplitude must lie in [0, 1]"));
        }
        let h = self.camera.extrinsics.camera_height;
        for (i, b) in self.boxes.iter().enumerate() {
            for (name, v) in [("width", b.width), ("height", b.height), ("length", b.length)] {
                pos(&format!("boxes[{i}].{name}"), v)?;
            }
            if !(b.elevation >= 0.0 && b.center_x.is_finite() && b.center_z.is_finite() && b.elevation.is_finite()) {
                return Err(Error::invalid(format!("boxes[{i}] must be finite and not below ground")));
            }
            let (lo, hi) = b.bounds(h);
            if (0..3).all(|k| lo[k] <= 0.0 && hi[k] >= 0.0) {
                return Err(Error::invalid(format!("boxes[{i}] contains the camera")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub spec: SynthSpec,
    pub seed: u64,
    pub labels: LabelMap,
    /// Exact camera-frame depth of the first surface hit; sky is invalid.
    pub depth: DepthMap,
    pub image: ImageBuffer,
}

/// Seeded 2D value noise on a 256-periodic lattice.
struct ValueNoise {
    perm: [u8; 256],
    values: [f64; 256],
}

impl ValueNoise {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = [0u8; 256];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i as u8;
        }
        for i in (1..256).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut values = [0.0; 256];
        for v in values.iter_mut() {
            *v = rng.random::<f64>();
        }
        ValueNoise { perm, values }
    }

    fn lattice(&self, ix: i64, iy: i64, layer: u8) -> f64 {
        let p = |i: i64| self.perm[i.rem_euclid(256) as usize] as i64;
        self.values[p(p(p(ix) + iy) + layer as i64) as usize]
    }

    /// Smoothly interpolated noise in [0, 1].
    fn sample(&self, a: f64, b: f64, layer: u8) -> f64 {
        let (fa, fb) = (a.floor(), b.floor());
        let (ia, ib) = (fa as i64, fb as i64);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (ta, tb) = (smooth(a - fa), smooth(b - fb));
        let v00 = self.lattice(ia, ib, layer);
        let v10 = self.lattice(ia + 1, ib, layer);
        let v01 = self.lattice(ia, ib + 1, layer);
        let v11 = self.lattice(ia + 1, ib + 1, layer);
        let top = v00 + (v10 - v00) * ta;
        let bottom = v01 + (v11 - v01) * ta;
        top + (bottom - top) * tb
    }
}

struct Hit {
    depth: f64,
    label: u16,
    point: Vector3<f64>,
    /// Axis of the surface normal and its sign.
    axis: usize,
    sign: f64,
    albedo: f64,
    layer: u8,
}

/// Entry distance and face axis of a ray from the origin into a box.
fn slab(dir: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Option<(f64, usize)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut axis = 0;
    for k in 0..3 {
        if dir[k] == 0.0 {
            if lo[k] > 0.0 || hi[k] < 0.0 {
                return None;
            }
            continue;
        }
        let (a, b) = (lo[k] / dir[k], hi[k] / dir[k]);
        let (t0, t1) = if a < b { (a, b) } else { (b, a) };
        if t0 > t_near {
            t_near = t0;
            axis = k;
        }
        t_far = t_far.min(t1);
    }
    (t_near <= t_far && t_near > 0.0).then_some((t_near, axis))
}

/// Renders labels, exact depth and a shaded texture. The output depends
/// only on `(spec, seed)`.
pub fn synth_scene(spec: &SynthSpec, seed: u64) -> Result<SynthScene> {
    spec.validate()?;
    let intr = spec.camera.intrinsics;
    let h_cam = spec.camera.extrinsics.camera_height;
    let rot = rotation_from_euler(&spec.camera.extrinsics);
    let noise = ValueNoise::new(seed);
    let light = Vector3::new(0.3, -1.0, -0.5).normalize();
    let boxes: Vec<(Vector3<f64>, Vector3<f64>, u16)> =
        spec.boxes.iter().map(|b| {
            let (lo, hi) = b.bounds(h_cam);
            (lo, hi, b.label)
        }).collect();

    let (w, h) = (intr.width as usize, intr.height as usize);
    let mut labels = Vec::with_capacity(w * h);
    let mut depth = DepthMap::new(w, h)?;
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            // Camera-frame direction with unit z, so the hit distance along
            // it is the camera depth.
            let d_cam = Vector3::new(
                (pixel_center(x) - intr.ox) / intr.fx,
                (pixel_center(y) - intr.oy) / intr.fy,
                1.0,
            );
            let dir = rot * d_cam;
            let mut hit: Option<Hit> = None;
            if dir.y > 0.0 {
                let t = h_cam / dir.y;
                let p = dir * t;
                let road = p.x.abs() <= spec.road_half_width;
                hit = Some(Hit {
                    depth: t,
                    label: if road { LABEL_ROAD } else { LABEL_SIDEWALK },
                    point: p,
                    axis: 1,
                    sign: -1.0,
                    albedo: if road { 0.45 } else { 0.7 },
                    layer: 0,
                });
            }
            for (i, (lo, hi, label)) in boxes.iter().enumerate() {
                if let Some((t, axis)) = slab(&dir, lo, hi) {
                    if hit.as_ref().is_none_or(|h| t < h.depth) {
                        hit = Some(Hit {
                            depth: t,
                            label: *label,
                            point: dir * t,
                            axis,
                            sign: -dir[axis].signum(),
                            albedo: 0.5 + 0.1 * (i % 3) as f64,
                            layer: (1 + i % 255) as u8,
                        });
                    }
                }
            }
            let shade = match &hit {
                None => {
                    labels.push(LABEL_SKY);
                    0.9 - 0.3 * y as f64 / h as f64
                }
                Some(hit) => {
                    labels.push(hit.label);
                    let d = hit.depth as f32;
                    if d > 0.0 && d.is_finite() {
                        depth.set(x, y, d, Provenance::External)?;
                    }
                    let normal_dot = hit.sign * light[hit.axis];
                    let lambert = 0.25 + 0.75 * hit.albedo * normal_dot.max(0.0);
                    let (a, b) = match hit.axis {
                        0 => (hit.point.z, hit.point.y),
                        1 => (hit.point.x, hit.point.z),
                        _ => (hit.point.x, hit.point.y),
                    };
                    let n = noise.sample(a / spec.texture_cell, b / spec.texture_cell, hit.layer);
                    lambert + spec.texture_amplitude * (n - 0.5)
                }
            };
            let v = shade as f32;
            pixels.extend_from_slice(&[v, v, v]);
        }
    }
    Ok(SynthScene {
        spec: spec.clone(),
        seed,
        labels: Grid::from_vec(w, h, labels)?,
        depth,
        image: ImageBuffer::new(w, h, 3, pixels)?,
    })
}
