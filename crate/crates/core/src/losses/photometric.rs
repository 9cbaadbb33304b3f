use super::{pairwise_mean, LossConfig, LossMap, ScalarLoss};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, Grid, ImageBuffer};

pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Mirror an out-of-range index back inside `0..n` (reflection without
/// repeating the edge sample).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

/// Per-pixel SSIM index over a 3x3 box window with reflected borders,
/// averaged over channels.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<Grid<f64>> {
    ensure_same_dims(a.dims(), b.dims(), "ssim")?;
    if a.channels() != b.channels() {
        return Err(Error::invalid(format!(
            "ssim: channel mismatch {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    let (w, h) = a.dims();
    let channels = a.channels();
    Grid::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for c in 0..channels {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in -1..=1isize {
                let yy = reflect(y as isize + dy, h);
                for dx in -1..=1isize {
                    let xx = reflect(x as isize + dx, w);
                    let va = a.get(xx, yy, c) as f64;
                    let vb = b.get(xx, yy, c) as f64;
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            let (mu_a, mu_b) = (sa / 9.0, sb / 9.0);
            let var_a = saa / 9.0 - mu_a * mu_a;
            let var_b = sbb / 9.0 - mu_b * mu_b;
            let cov = sab / 9.0 - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
            acc += num / den;
        }
        acc / channels as f64
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotometricLoss {
    pub map: LossMap,
    pub mean: ScalarLoss,
}

/// `alpha/2 * (1 - SSIM) + (1 - alpha) * L1` per pixel, where L1 is the
/// channel-mean absolute difference. Pixels outside `valid` are `None`, and
/// take the target's value inside the SSIM windows of their neighbours.
pub fn photometric_loss(
    target: &ImageBuffer,
    recon: &ImageBuffer,
    valid: &Grid<bool>,
    cfg: &LossConfig,
) -> Result<PhotometricLoss> {
    cfg.validate()?;
    ensure_same_dims(target.dims(), valid.dims(), "photometric loss: image vs mask")?;
    ensure_same_dims(target.dims(), recon.dims(), "photometric loss: target vs reconstruction")?;
    let channels = target.channels();
    let masked = ImageBuffer::from_fn(target.width(), target.height(), recon.channels(), |x, y, c| {
        if *valid.get(x, y) || c >= channels {
            recon.get(x, y, c)
        } else {
            target.get(x, y, c)
        }
    })?;
    let s = ssim(target, &masked)?;
    let alpha = cfg.alpha_ssim;
    let (w, h) = target.dims();
    let map = Grid::from_fn(w, h, |x, y| {
        if !*valid.get(x, y) {
            return None;
        }
        let mut l1 = 0.0;
        for c in 0..channels {
            l1 += (target.get(x, y, c) as f64 - recon.get(x, y, c) as f64).abs();
        }
        l1 /= channels as f64;
        Some(alpha / 2.0 * (1.0 - *s.get(x, y)) + (1.0 - alpha) * l1)
    })?;
    let values: Vec<f64> = map.as_slice().iter().flatten().copied().collect();
    Ok(PhotometricLoss {
        mean: pairwise_mean(&values),
        map,
    })
}

/// Pixel-wise minimum of forward and backward errors. A pixel defined in
/// only one input takes that value; defined in neither stays `None`.
pub fn min_reprojection(forward: &LossMap, backward: &LossMap) -> Result<LossMap> {
    ensure_same_dims(forward.dims(), backward.dims(), "min_reprojection")?;
    let (w, h) = forward.dims();
    let data = forward
        .as_slice()
        .iter()
        .zip(backward.as_slice())
        .map(|(f, b)| match (f, b) {
            (Some(f), Some(b)) => Some(f.min(*b)),
            (Some(v), None) | (None, Some(v)) => Some(*v),
            (None, None) => None,
        })
        .collect();
    Grid::from_vec(w, h, data)
}
