//! Training-signal kernels: physics supervision, view-synthesis warping,
//! SSIM photometric error, min-reprojection, edge-aware smoothness, 2D
//! motion consistency and the block-matching flow that feeds it.
//!
//! All reductions go through [`pairwise_sum`] over values collected in
//! row-major order, so scalars are reproducible bit for bit.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Grid;

mod flow;
mod photometric;
mod smooth;
mod spatial;
mod supervision;
mod warp;

pub use flow::block_matching_flow;
pub use photometric::{min_reprojection, photometric_loss, ssim, PhotometricLoss, SSIM_C1, SSIM_C2};
pub use smooth::smoothness_loss;
pub use spatial::{matches_from_flows, spatial_2d_loss, MotionMatch};
pub use supervision::{
    confidence_map, physics_supervision_loss, physics_supervision_loss_with, ProvenanceWeights, Reduction,
};
pub use warp::{bilinear_sample, reproject_coords, warp_image, WarpOutput};

/// Per-pixel loss values; `None` where the loss is undefined.
pub type LossMap = Grid<Option<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// SSIM weight in the photometric error.
    pub alpha_ssim: f64,
    /// Weight of the edge-aware smoothness term.
    pub smooth_lambda: f64,
    /// Positional weight of the 2D motion-consistency loss.
    pub l2d_alpha: f64,
    /// Directional weight of the 2D motion-consistency loss.
    pub l2d_beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha_ssim: 0.85,
            smooth_lambda: 1e-3,
            l2d_alpha: 1.0,
            l2d_beta: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_ssim) {
            return Err(Error::invalid(format!(
                "alpha_ssim must lie in [0, 1], got {}",
                self.alpha_ssim
            )));
        }
        for (name, w) in [
            ("smooth_lambda", self.smooth_lambda),
            ("l2d_alpha", self.l2d_alpha),
            ("l2d_beta", self.l2d_beta),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a non-negative weight, got {w}")));
            }
        }
        Ok(())
    }
}

/// A reduced loss value and how many terms it was reduced over. A zero
/// `count` means nothing contributed and `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarLoss {
    pub value: f64,
    pub count: usize,
}

impl ScalarLoss {
    pub const EMPTY: ScalarLoss = ScalarLoss { value: 0.0, count: 0 };

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Rigid motion `p -> R p + t`, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(err < 1e-9) {
            return Err(Error::invalid(format!("rotation is not orthonormal (|RtR - I| = {err:e})")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("rotation determinant is {det}, expected +1")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Result<Self> {
        Self::new(Matrix3::identity(), t)
    }

    /// Row-major 3x4 `[R | t]`.
    pub fn from_rows(m: &[[f64; 4]; 3]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| m[i][j]);
        let t = Vector3::new(m[0][3], m[1][3], m[2][3]);
        Self::new(r, t)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Pairwise (tree) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for &v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean of `values` via [`pairwise_sum`]; empty input gives [`ScalarLoss::EMPTY`].
pub fn pairwise_mean(values: &[f64]) -> ScalarLoss {
    if values.is_empty() {
        return ScalarLoss::EMPTY;
    }
    ScalarLoss {
        value: pairwise_sum(values) / values.len() as f64,
        count: values.len(),
    }
}
