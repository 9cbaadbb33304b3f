//! Velodyne point clouds and their projection into sparse depth maps.

use nalgebra::Vector3;

use crate::camera::{project, Intrinsics};
use crate::error::{Error, Location, Result};
use crate::losses::RigidTransform;
use crate::raster::{DepthMap, Provenance};

/// One return in the sensor frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub reflectance: f32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LidarScan {
    pub points: Vec<LidarPoint>,
}

/// Decodes consecutive little-endian `f32` quadruples `(x, y, z, r)`.
pub fn read_velodyne_bin(bytes: &[u8]) -> Result<LidarScan> {
    if bytes.len() % 16 != 0 {
        return Err(Error::parse(
            Location::Byte(bytes.len() - bytes.len() % 16),
            format!("length {} is not a multiple of 16", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    for (i, chunk) in bytes.chunks_exact(16).enumerate() {
        let f = |k: usize| f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().expect("4 bytes"));
        let p = LidarPoint {
            x: f(0),
            y: f(1),
            z: f(2),
            reflectance: f(3),
        };
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::parse(Location::Byte(16 * i), "non-finite coordinate"));
        }
        points.push(p);
    }
    Ok(LidarScan { points })
}

pub fn encode_velodyne_bin(scan: &LidarScan) -> Vec<u8> {
    let mut out = Vec::with_capacity(scan.points.len() * 16);
    for p in &scan.points {
        for v in [p.x, p.y, p.z, p.reflectance] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Sparse depth from a scan: points are moved into the camera, dropped when
/// not in front of it, and binned to the pixel containing their projection.
/// The nearest point wins a pixel.
pub fn lidar_to_depth(scan: &LidarScan, sensor_to_cam: &RigidTransform, intr: &Intrinsics) -> Result<DepthMap> {
    intr.validate()?;
    let (w, h) = (intr.width as usize, intr.height as usize);
    let mut out = DepthMap::new(w, h)?;
    for p in &scan.points {
        let cam = sensor_to_cam.apply(&Vector3::new(p.x as f64, p.y as f64, p.z as f64));
        let Ok((u, v)) = project(intr, &cam) else { continue };
        if !(u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64) {
            continue;
        }
        let (x, y) = (u as usize, v as usize);
        let d = cam.z as f32;
        if !(d > 0.0 && d.is_finite()) {
            continue;
        }
        if out.get(x, y).is_none_or(|old| d < old) {
            out.set(x, y, d, Provenance::External)?;
        }
    }
    Ok(out)
}
