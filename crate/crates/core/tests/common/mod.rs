//! Reference implementations written as plain loops, independent of the
//! library kernels, plus seeded generators for random test instances.

#![allow(dead_code)]

use physdepth::raster::{ConfidenceMap, DepthMap, Grid, ImageBuffer, Provenance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(r: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> ImageBuffer {
    let data: Vec<f32> = (0..w * h * c).map(|_| r.random::<f32>()).collect();
    ImageBuffer::new(w, h, c, data).unwrap()
}

/// Random depth map in `[lo, hi]` with roughly `hole_frac` invalid pixels.
pub fn random_depth(r: &mut ChaCha8Rng, w: usize, h: usize, lo: f32, hi: f32, hole_frac: f64) -> DepthMap {
    let mut d = DepthMap::new(w, h).unwrap();
    for y in 0..h {
        for x in 0..w {
            if r.random::<f64>() >= hole_frac {
                d.set(x, y, r.random_range(lo..=hi), Provenance::External).unwrap();
            }
        }
    }
    d
}

pub fn random_mask(r: &mut ChaCha8Rng, w: usize, h: usize, p_true: f64) -> Grid<bool> {
    Grid::from_fn(w, h, |_, _| r.random::<f64>() < p_true).unwrap()
}

/// Image sample with mirrored borders (edge sample not repeated).
fn mirrored(img: &ImageBuffer, x: i64, y: i64, c: usize) -> f64 {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let fold = |i: i64, n: i64| -> usize {
        let mut i = i;
        if i < 0 {
            i = -i;
        }
        if i > n - 1 {
            i = 2 * (n - 1) - i;
        }
        i as usize
    };
    img.get(fold(x, w), fold(y, h), c) as f64
}

pub fn ssim_oracle(a: &ImageBuffer, b: &ImageBuffer) -> Vec<f64> {
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    let c1 = 0.0001;
    let c2 = 0.0009;
    let mut out = Vec::new();
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut total = 0.0;
            for c in 0..ch {
                let mut wa = Vec::new();
                let mut wb = Vec::new();
                for j in -1..=1 {
                    for i in -1..=1 {
                        wa.push(mirrored(a, x + i, y + j, c));
                        wb.push(mirrored(b, x + i, y + j, c));
                    }
                }
                let ma = wa.iter().sum::<f64>() / 9.0;
                let mb = wb.iter().sum::<f64>() / 9.0;
                let va = wa.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / 9.0;
                let vb = wb.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / 9.0;
                let cov = wa.iter().zip(&wb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / 9.0;
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
            out.push(total / ch as f64);
        }
    }
    out
}

/// Per-pixel photometric error; invalid reconstruction pixels are replaced
/// by the target inside SSIM windows and excluded from the mean.
pub fn photometric_oracle(target: &ImageBuffer, recon: &ImageBuffer, valid: &Grid<bool>, alpha: f64) -> (Vec<Option<f64>>, f64, usize) {
    let (w, h, ch) = (target.width(), target.height(), target.channels());
    let mut patched = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                patched.push(if *valid.get(x, y) { recon.get(x, y, c) } else { target.get(x, y, c) });
            }
        }
    }
    let patched = ImageBuffer::new(w, h, ch, patched).unwrap();
    let s = ssim_oracle(target, &patched);
    let mut map = Vec::new();
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if !*valid.get(x, y) {
                map.push(None);
                continue;
            }
            let mut l1 = 0.0;
            for c in 0..ch {
                l1 += (target.get(x, y, c) as f64 - recon.get(x, y, c) as f64).abs();
            }
            let e = alpha / 2.0 * (1.0 - s[y * w + x]) + (1.0 - alpha) * l1 / ch as f64;
            map.push(Some(e));
            sum += e;
            n += 1;
        }
    }
    (map, if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

pub fn physics_loss_oracle(pred: &DepthMap, phys: &DepthMap, weights: &ConfidenceMap) -> (f64, usize) {
    let (w, h) = pred.dims();
    let (mut num, mut den, mut n) = (0.0, 0.0, 0);
    for y in 0..h {
        for x in 0..w {
            let (Some(p), Some(g)) = (pred.get(x, y), phys.get(x, y)) else { continue };
            let wt = *weights.grid().get(x, y) as f64;
            if wt > 0.0 {
                num += wt * (g as f64 - p as f64).powi(2);
                den += wt;
                n += 1;
            }
        }
    }
    (if n == 0 { 0.0 } else { num / den }, n)
}

pub fn smoothness_oracle(depth: &DepthMap, img: &ImageBuffer, lambda: f64) -> f64 {
    let (w, h) = depth.dims();
    let ch = img.channels();
    let mut inv_sum = 0.0;
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            if let Some(d) = depth.get(x, y) {
                inv_sum += 1.0 / d as f64;
                count += 1;
            }
        }
    }
    if count == 0 {
        return 0.0;
    }
    let mean = inv_sum / count as f64;
    let disp = |x: usize, y: usize| depth.get(x, y).map(|d| 1.0 / d as f64 / mean);
    let grad = |x0: usize, y0: usize, x1: usize, y1: usize| {
        (0..ch).map(|c| (img.get(x1, y1, c) as f64 - img.get(x0, y0, c) as f64).abs()).sum::<f64>() / ch as f64
    };
    let (mut sx, mut nx, mut sy, mut ny) = (0.0, 0, 0.0, 0);
    for y in 0..h {
        for x in 0..w - 1 {
            if let (Some(a), Some(b)) = (disp(x, y), disp(x + 1, y)) {
                sx += (b - a).abs() * (-grad(x, y, x + 1, y)).exp();
                nx += 1;
            }
        }
    }
    for y in 0..h - 1 {
        for x in 0..w {
            if let (Some(a), Some(b)) = (disp(x, y), disp(x, y + 1)) {
                sy += (b - a).abs() * (-grad(x, y, x, y + 1)).exp();
                ny += 1;
            }
        }
    }
    let mx = if nx == 0 { 0.0 } else { sx / nx as f64 };
    let my = if ny == 0 { 0.0 } else { sy / ny as f64 };
    lambda * (mx + my)
}

pub fn l2d_oracle(pairs: &[([f64; 2], [f64; 2])], alpha: f64, beta: f64) -> f64 {
    let mut total = 0.0;
    for (a, b) in pairs {
        let pos = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
        let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
        let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let dir = if na < 1e-9 || nb < 1e-9 {
            0.0
        } else {
            1.0 - (a[0] * b[0] + a[1] * b[1]) / (na * nb)
        };
        total += alpha * pos + beta * dir;
    }
    total
}

/// Metrics with sequential row-major sums, the same order the library uses.
pub struct MetricsOracle {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub deltas: [f64; 3],
    pub n: usize,
}

pub fn metrics_oracle(pred: &DepthMap, gt: &DepthMap, min: f64, max: f64) -> MetricsOracle {
    let (w, h) = pred.dims();
    let (mut a, mut s, mut r, mut l) = (0.0, 0.0, 0.0, 0.0);
    let mut d = [0usize; 3];
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            let (Some(p), Some(g)) = (pred.get(x, y), gt.get(x, y)) else { continue };
            let (p, g) = (p as f64, g as f64);
            if g < min || g > max {
                continue;
            }
            a += (p - g).abs() / g;
            s += (p - g) * (p - g) / g;
            r += (p - g) * (p - g);
            l += (p.ln() - g.ln()) * (p.ln() - g.ln());
            let ratio = if p / g > g / p { p / g } else { g / p };
            if ratio < 1.25 {
                d[0] += 1;
            }
            if ratio < 1.25 * 1.25 {
                d[1] += 1;
            }
            if ratio < 1.25 * 1.25 * 1.25 {
                d[2] += 1;
            }
            n += 1;
        }
    }
    let nf = n as f64;
    MetricsOracle {
        abs_rel: a / nf,
        sq_rel: s / nf,
        rmse: (r / nf).sqrt(),
        rmse_log: (l / nf).sqrt(),
        deltas: [d[0] as f64 / nf, d[1] as f64 / nf, d[2] as f64 / nf],
        n,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
