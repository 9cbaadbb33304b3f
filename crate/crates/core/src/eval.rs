//! Depth evaluation: standard error metrics, percentage-error fractions
//! and median scale alignment.
//!
//! Sums run sequentially in row-major pixel order, so any loop that visits
//! pixels in the same order reproduces the reports bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, DepthMap};

/// Ground-truth depth window used for evaluation, meters, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl Default for DepthRange {
    fn default() -> Self {
        DepthRange { min: 1e-3, max: 80.0 }
    }
}

impl DepthRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("depth range must satisfy 0 < min < max, got [{min}, {max}]")));
        }
        Ok(DepthRange { min, max })
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.min && d <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_pixels: usize,
    pub scale_applied: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,n_pixels,scale_applied";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.abs_rel,
            self.sq_rel,
            self.rmse,
            self.rmse_log,
            self.delta1,
            self.delta2,
            self.delta3,
            self.n_pixels,
            self.scale_applied
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PctErrorReport {
    pub frac_within_5pct: f64,
    pub frac_within_10pct: f64,
    pub n_pixels: usize,
}

impl PctErrorReport {
    pub const CSV_HEADER: &'static str = "frac_within_5pct,frac_within_10pct,n_pixels";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.frac_within_5pct, self.frac_within_10pct, self.n_pixels)
    }
}

/// `(pred, gt)` for every pixel valid in both maps, row-major.
fn overlap(pred: &DepthMap, gt: &DepthMap) -> Result<Vec<(f64, f64)>> {
    ensure_same_dims(pred.dims(), gt.dims(), "prediction vs reference")?;
    let pairs: Vec<(f64, f64)> = (0..pred.len())
        .filter_map(|i| Some((pred.depth_at(i)? as f64, gt.depth_at(i)? as f64)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(pairs)
}

/// AbsRel, SqRel, RMSE, RMSElog and the three delta accuracies over pixels
/// valid in both maps whose ground truth lies in `range`.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap, range: DepthRange) -> Result<MetricsReport> {
    let pairs: Vec<(f64, f64)> = overlap(pred, gt)?
        .into_iter()
        .filter(|&(_, g)| range.contains(g))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let (mut abs_rel, mut sq_rel, mut sq, mut sq_log) = (0.0, 0.0, 0.0, 0.0);
    let mut hits = [0usize; 3];
    let thresholds = [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];
    for &(p, g) in &pairs {
        let e = p - g;
        abs_rel += e.abs() / g;
        sq_rel += e * e / g;
        sq += e * e;
        let el = p.ln() - g.ln();
        sq_log += el * el;
        let ratio = (p / g).max(g / p);
        for (k, t) in thresholds.iter().enumerate() {
            if ratio < *t {
                hits[k] += 1;
            }
        }
    }
    let n = pairs.len() as f64;
    Ok(MetricsReport {
        abs_rel: abs_rel / n,
        sq_rel: sq_rel / n,
        rmse: (sq / n).sqrt(),
        rmse_log: (sq_log / n).sqrt(),
        delta1: hits[0] as f64 / n,
        delta2: hits[1] as f64 / n,
        delta3: hits[2] as f64 / n,
        n_pixels: pairs.len(),
        scale_applied: 1.0,
    })
}

/// Fraction of overlapping pixels with `|p - g| / g <= pct / 100`.
pub fn within_pct(pred: &DepthMap, gt: &DepthMap, pct: f64) -> Result<f64> {
    if !(pct >= 0.0 && pct.is_finite()) {
        return Err(Error::invalid(format!("percentage must be non-negative, got {pct}")));
    }
    let pairs = overlap(pred, gt)?;
    let tol = pct / 100.0;
    let hits = pairs.iter().filter(|&&(p, g)| (p - g).abs() / g <= tol).count();
    Ok(hits as f64 / pairs.len() as f64)
}

pub fn pct_error_report(pred: &DepthMap, gt: &DepthMap) -> Result<PctErrorReport> {
    Ok(PctErrorReport {
        frac_within_5pct: within_pct(pred, gt, 5.0)?,
        frac_within_10pct: within_pct(pred, gt, 10.0)?,
        n_pixels: overlap(pred, gt)?.len(),
    })
}

/// Median over overlapping pixels of `reference / pred`. With an even count
/// the two middle ratios are averaged.
pub fn median_scale(pred: &DepthMap, reference: &DepthMap) -> Result<f64> {
    let mut ratios: Vec<f64> = overlap(pred, reference)?.into_iter().map(|(p, r)| r / p).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    Ok(if n % 2 == 1 {
        ratios[n / 2]
    } else {
        0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
    })
}

/// Multiplies every valid depth by `s`, keeping provenance.
pub fn apply_scale(pred: &DepthMap, s: f64) -> Result<DepthMap> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive and finite, got {s}")));
    }
    let mut out = pred.clone();
    for i in 0..pred.len() {
        if let Some(d) = pred.depth_at(i) {
            out.set_at(i, (d as f64 * s) as f32, pred.provenance_at(i))?;
        }
    }
    Ok(out)
}

/// Metrics of `pred` aligned by the median scale against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleComparison {
    /// Scale taken from the LiDAR ground truth.
    pub lidar: MetricsReport,
    /// Scale taken from the physics depth.
    pub physics: MetricsReport,
}

/// Aligns `pred` once with the LiDAR scale and once with the physics scale,
/// and evaluates both against the LiDAR ground truth.
pub fn compare_scales(
    pred: &DepthMap,
    lidar_gt: &DepthMap,
    phys: &DepthMap,
    range: DepthRange,
) -> Result<ScaleComparison> {
    let eval = |scale: f64| -> Result<MetricsReport> {
        let mut r = depth_metrics(&apply_scale(pred, scale)?, lidar_gt, range)?;
        r.scale_applied = scale;
        Ok(r)
    };
    overlap(lidar_gt, phys)?;
    Ok(ScaleComparison {
        lidar: eval(median_scale(pred, lidar_gt)?)?,
        physics: eval(median_scale(pred, phys)?)?,
    })
}
