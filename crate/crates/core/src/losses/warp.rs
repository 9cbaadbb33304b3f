//! Inverse warping: every target pixel with a depth is lifted to 3D,
//! moved into the source camera, projected, and the source image is
//! sampled bilinearly at the landing point.

use super::RigidTransform;
use crate::camera::{pixel_center, project, unproject, Intrinsics};
use crate::error::Result;
use crate::raster::{ensure_same_dims, DepthMap, Grid, ImageBuffer};

#[derive(Debug, Clone, PartialEq)]
pub struct WarpOutput {
    pub image: ImageBuffer,
    pub valid: Grid<bool>,
}

/// Continuous source-image coordinate each target pixel lands on, or
/// `None` for invalid depth and points behind the source camera.
/// `pose` maps target-camera points into the source camera.
pub fn reproject_coords(
    target_depth: &DepthMap,
    pose: &RigidTransform,
    intr: &Intrinsics,
) -> Result<Grid<Option<(f64, f64)>>> {
    ensure_same_dims(
        target_depth.dims(),
        (intr.width as usize, intr.height as usize),
        "warp: depth vs intrinsics",
    )?;
    let (w, h) = target_depth.dims();
    Grid::from_fn(w, h, |x, y| {
        let d = target_depth.get(x, y)? as f64;
        let p = unproject(intr, pixel_center(x), pixel_center(y), d).ok()?;
        project(intr, &pose.apply(&p)).ok()
    })
}

/// Bilinear sample at continuous image coordinate `(u, v)`. Returns `None`
/// when the point falls outside the span of pixel centers.
pub fn bilinear_sample(img: &ImageBuffer, u: f64, v: f64, channel: usize) -> Option<f64> {
    let x = u - 0.5;
    let y = v - 0.5;
    let (w, h) = img.dims();
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize| img.get(xx, yy, channel) as f64;
    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Reconstructs the target view from `src`. Invalid pixels are 0 in the
/// output image and false in `valid`.
pub fn warp_image(
    src: &ImageBuffer,
    target_depth: &DepthMap,
    pose: &RigidTransform,
    intr: &Intrinsics,
) -> Result<WarpOutput> {
    ensure_same_dims(src.dims(), target_depth.dims(), "warp: source vs depth")?;
    let coords = reproject_coords(target_depth, pose, intr)?;
    let (w, h) = src.dims();
    let c = src.channels();
    let mut data = vec![0.0f32; w * h * c];
    let mut valid = vec![false; w * h];
    for (i, landing) in coords.as_slice().iter().enumerate() {
        let Some((u, v)) = *landing else { continue };
        if bilinear_sample(src, u, v, 0).is_none() {
            continue;
        }
        for ch in 0..c {
            data[i * c + ch] = bilinear_sample(src, u, v, ch).unwrap_or(0.0) as f32;
        }
        valid[i] = true;
    }
    Ok(WarpOutput {
        image: ImageBuffer::new(w, h, c, data)?,
        valid: Grid::from_vec(w, h, valid)?,
    })
}
