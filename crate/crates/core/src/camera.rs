//! Pinhole camera geometry.
//!
//! Image coordinates are continuous pixels with the origin at the top-left
//! corner of the image; integer pixel `(col, row)` is sampled at
//! `(col + 0.5, row + 0.5)`. The camera frame is x right, y down, z forward.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous image coordinate of the center of integer pixel `index`.
#[inline]
pub fn pixel_center(index: usize) -> f64 {
    index as f64 + 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub ox: f64,
    pub oy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, ox: f64, oy: f64, width: u32, height: u32) -> Result<Self> {
        let intr = Intrinsics {
            fx,
            fy,
            ox,
            oy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::invalid(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        let inside = |o: f64, n: u32| o.is_finite() && o >= 0.0 && o < n as f64;
        if !inside(self.ox, self.width) || !inside(self.oy, self.height) {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.ox, self.oy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Mean focal length used for pixel rays.
    pub fn mean_focal(&self) -> f64 {
        (self.fx + self.fy) / 2.0
    }

    /// The upper-triangular intrinsic matrix.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.ox, //
            0.0, self.fy, self.oy, //
            0.0, 0.0, 1.0,
        )
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    /// Meters above the ground plane.
    pub camera_height: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Extrinsics {
    pub fn new(camera_height: f64, roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        let ext = Extrinsics {
            camera_height,
            roll,
            pitch,
            yaw,
        };
        ext.validate()?;
        Ok(ext)
    }

    pub fn level(camera_height: f64) -> Result<Self> {
        Self::new(camera_height, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.camera_height.is_finite() && self.camera_height > 0.0) {
            return Err(Error::invalid(format!(
                "camera height must be positive, got {}",
                self.camera_height
            )));
        }
        if !(self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()) {
            return Err(Error::invalid("camera angles must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    pub extrinsics: Extrinsics,
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, extrinsics: Extrinsics) -> Result<Self> {
        intrinsics.validate()?;
        extrinsics.validate()?;
        Ok(CameraModel {
            intrinsics,
            extrinsics,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.extrinsics.validate()
    }
}

/// Unit-length viewing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray(Vector3<f64>);

impl Ray {
    /// Normalizes `v`; fails on zero or non-finite vectors.
    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid("ray direction must be finite and non-zero"));
        }
        Ok(Ray(v / n))
    }

    pub fn dx(&self) -> f64 {
        self.0.x
    }

    pub fn dy(&self) -> f64 {
        self.0.y
    }

    pub fn dz(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// How the focal term of a pixel ray is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayModel {
    /// `(u, v, (fx + fy) / 2)`, normalized.
    #[default]
    MeanFocal,
    /// `(u / fx, v / fy, 1)`, normalized. Exact for anisotropic pixels.
    PerAxis,
}

/// Viewing ray through continuous image coordinate `(u_img, v_img)`.
pub fn pixel_ray(intr: &Intrinsics, u_img: f64, v_img: f64) -> Result<Ray> {
    pixel_ray_with(intr, u_img, v_img, RayModel::MeanFocal)
}

pub fn pixel_ray_with(intr: &Intrinsics, u_img: f64, v_img: f64, model: RayModel) -> Result<Ray> {
    if !(u_img.is_finite() && v_img.is_finite()) {
        return Err(Error::invalid(format!(
            "pixel coordinate ({u_img}, {v_img}) is not finite"
        )));
    }
    let u = u_img - intr.ox;
    let v = v_img - intr.oy;
    let dir = match model {
        RayModel::MeanFocal => Vector3::new(u, v, intr.mean_focal()),
        RayModel::PerAxis => Vector3::new(u / intr.fx, v / intr.fy, 1.0),
    };
    Ray::from_vector(dir)
}

/// Scales intrinsics to a new image size.
pub fn rescale_intrinsics(intr: &Intrinsics, new_width: u32, new_height: u32) -> Result<Intrinsics> {
    if intr.width == 0 || intr.height == 0 {
        return Err(Error::invalid("cannot rescale intrinsics of a zero-sized image"));
    }
    if new_width == 0 || new_height == 0 {
        return Err(Error::invalid("target image size must be at least 1x1"));
    }
    let sw = new_width as f64 / intr.width as f64;
    let sh = new_height as f64 / intr.height as f64;
    Ok(Intrinsics {
        fx: sw * intr.fx,
        fy: sh * intr.fy,
        ox: sw * intr.ox,
        oy: sh * intr.oy,
        width: new_width,
        height: new_height,
    })
}

/// Rotation taking camera-frame rays into the ground-aligned frame,
/// composed as yaw * pitch * roll.
pub fn rotation_from_euler(ext: &Extrinsics) -> Matrix3<f64> {
    let (sr, cr) = ext.roll.sin_cos();
    let (sp, cp) = ext.pitch.sin_cos();
    let (sy, cy) = ext.yaw.sin_cos();
    #[rustfmt::skip]
    let roll = Matrix3::new(
        1.0, 0.0, 0.0,
        0.0, cr,  sr,
        0.0, -sr, cr,
    );
    #[rustfmt::skip]
    let pitch = Matrix3::new(
        cp,  0.0, -sp,
        0.0, 1.0, 0.0,
        sp,  0.0, cp,
    );
    #[rustfmt::skip]
    let yaw = Matrix3::new(
        cy,  sy,  0.0,
        -sy, cy,  0.0,
        0.0, 0.0, 1.0,
    );
    yaw * pitch * roll
}

/// `rotation` must be orthonormal; the result is not re-normalized.
pub fn rotate_ray(rotation: &Matrix3<f64>, ray: &Ray) -> Ray {
    Ray(rotation * ray.0)
}

/// Projects a camera-frame point to continuous image coordinates.
pub fn project(intr: &Intrinsics, point: &Vector3<f64>) -> Result<(f64, f64)> {
    if !(point.z > 0.0) {
        return Err(Error::BehindCamera(point.z));
    }
    Ok((
        intr.fx * point.x / point.z + intr.ox,
        intr.fy * point.y / point.z + intr.oy,
    ))
}

/// Back-projects an image coordinate at a given z-depth into the camera frame.
pub fn unproject(intr: &Intrinsics, u_img: f64, v_img: f64, depth: f64) -> Result<Vector3<f64>> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(Vector3::new(
        depth * (u_img - intr.ox) / intr.fx,
        depth * (v_img - intr.oy) / intr.fy,
        depth,
    ))
}
