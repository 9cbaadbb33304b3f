use super::{pairwise_sum, LossConfig, ScalarLoss};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, FlowField};

/// Motion vectors of one tracked point in consecutive frames, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionMatch {
    pub v_t: [f64; 2],
    pub v_t1: [f64; 2],
}

const NORM_EPS: f64 = 1e-9;

/// `sum_i alpha |v_t1 - v_t|^2 + beta (1 - cos theta)`. The angular term is
/// dropped for a match where either vector is shorter than 1e-9.
pub fn spatial_2d_loss(matches: &[MotionMatch], cfg: &LossConfig) -> Result<ScalarLoss> {
    cfg.validate()?;
    if matches.is_empty() {
        return Err(Error::invalid("spatial 2D loss needs at least one match"));
    }
    let terms: Vec<f64> = matches
        .iter()
        .map(|m| {
            let (a, b) = (m.v_t, m.v_t1);
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            let mut t = cfg.l2d_alpha * (dx * dx + dy * dy);
            let aa = a[0] * a[0] + a[1] * a[1];
            let bb = b[0] * b[0] + b[1] * b[1];
            if aa.sqrt() >= NORM_EPS && bb.sqrt() >= NORM_EPS {
                // sqrt(aa * bb) keeps cos exactly 1 for identical vectors.
                let cos = ((a[0] * b[0] + a[1] * b[1]) / (aa * bb).sqrt()).clamp(-1.0, 1.0);
                t += cfg.l2d_beta * (1.0 - cos);
            }
            t
        })
        .collect();
    Ok(ScalarLoss {
        value: pairwise_sum(&terms),
        count: terms.len(),
    })
}

/// Pairs the flows `t-1 -> t` and `t -> t+1` at every pixel where both are
/// defined, in row-major order.
pub fn matches_from_flows(prev: &FlowField, next: &FlowField) -> Result<Vec<MotionMatch>> {
    ensure_same_dims(prev.dims(), next.dims(), "flow fields")?;
    Ok(prev
        .as_slice()
        .iter()
        .zip(next.as_slice())
        .filter_map(|(a, b)| Some(MotionMatch { v_t: (*a)?, v_t1: (*b)? }))
        .collect())
}
