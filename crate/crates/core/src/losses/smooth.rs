use super::{pairwise_sum, ScalarLoss};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, DepthMap, ImageBuffer};

/// Channel-mean absolute difference between two pixels.
fn image_grad(img: &ImageBuffer, a: (usize, usize), b: (usize, usize)) -> f64 {
    let c = img.channels();
    let mut s = 0.0;
    for ch in 0..c {
        s += (img.get(a.0, a.1, ch) as f64 - img.get(b.0, b.1, ch) as f64).abs();
    }
    s / c as f64
}

/// Edge-aware smoothness of mean-normalized disparity `d* = (1/d) / mean(1/d)`:
/// `lambda * (mean_x(|dx d*| e^{-|dx I|}) + mean_y(|dy d*| e^{-|dy I|}))`,
/// with forward differences taken only between pixels that both have depth.
pub fn smoothness_loss(depth: &DepthMap, image: &ImageBuffer, lambda: f64) -> Result<ScalarLoss> {
    ensure_same_dims(depth.dims(), image.dims(), "smoothness: depth vs image")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("smoothness weight must be non-negative, got {lambda}")));
    }
    let (w, h) = depth.dims();
    let disp: Vec<Option<f64>> = (0..depth.len()).map(|i| depth.depth_at(i).map(|d| 1.0 / d as f64)).collect();
    let valid: Vec<f64> = disp.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Ok(ScalarLoss::EMPTY);
    }
    let mean = pairwise_sum(&valid) / valid.len() as f64;
    let norm = |x: usize, y: usize| disp[y * w + x].map(|v| v / mean);

    let mut gx = Vec::new();
    let mut gy = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let Some(d) = norm(x, y) else { continue };
            if x + 1 < w {
                if let Some(r) = norm(x + 1, y) {
                    gx.push((r - d).abs() * (-image_grad(image, (x + 1, y), (x, y))).exp());
                }
            }
            if y + 1 < h {
                if let Some(b) = norm(x, y + 1) {
                    gy.push((b - d).abs() * (-image_grad(image, (x, y + 1), (x, y))).exp());
                }
            }
        }
    }
    let mean_of = |v: &[f64]| if v.is_empty() { 0.0 } else { pairwise_sum(v) / v.len() as f64 };
    Ok(ScalarLoss {
        value: lambda * (mean_of(&gx) + mean_of(&gy)),
        count: gx.len() + gy.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Provenance;

    #[test]
    fn constant_depth_is_zero() {
        let d = DepthMap::from_values(6, 5, &[4.0; 30], Provenance::External).unwrap();
        let img = ImageBuffer::from_fn(6, 5, 3, |x, y, _| ((x + y) % 3) as f32 / 2.0).unwrap();
        let l = smoothness_loss(&d, &img, 1e-3).unwrap();
        assert_eq!(l.value, 0.0);
        assert_eq!(l.count, 5 * 5 + 6 * 4);
    }

    #[test]
    fn zero_lambda_is_zero() {
        let vals: Vec<f32> = (0..16).map(|i| 1.0 + i as f32).collect();
        let d = DepthMap::from_values(4, 4, &vals, Provenance::External).unwrap();
        let img = ImageBuffer::filled(4, 4, 1, 0.5).unwrap();
        assert_eq!(smoothness_loss(&d, &img, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn hand_computed_row() {
        // Depths 1, 2 on a flat image: disparities 1, 0.5, mean 0.75.
        let d = DepthMap::from_values(2, 1, &[1.0, 2.0], Provenance::External).unwrap();
        let img = ImageBuffer::filled(2, 1, 1, 0.0).unwrap();
        let l = smoothness_loss(&d, &img, 1.0).unwrap();
        assert!((l.value - 0.5 / 0.75).abs() < 1e-15);
        assert_eq!(l.count, 1);
    }

    #[test]
    fn empty_depth_is_flagged() {
        let d = DepthMap::new(3, 3).unwrap();
        let img = ImageBuffer::filled(3, 3, 1, 0.0).unwrap();
        assert!(smoothness_loss(&d, &img, 1.0).unwrap().is_empty());
        assert!(smoothness_loss(&d, &ImageBuffer::filled(3, 2, 1, 0.0).unwrap(), 1.0).is_err());
    }
}
