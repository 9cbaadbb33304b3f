//! Exhaustive integer block matching, used to produce dense motion fields
//! from image pairs.

use crate::error::{Error, Result};
use crate::raster::{Grid, FlowField, ImageBuffer};

/// For each pixel `p` of `a`, the displacement `d` within `[-search, search]^2`
/// minimizing the SSD between the patch of `a` at `p` and the patch of `b` at
/// `p + d`. Ties go to the smallest `|d|`, then to row-major order of `d`.
/// Pixels whose patch does not fit inside `a`, or with no in-bounds candidate,
/// are `None`.
pub fn block_matching_flow(a: &ImageBuffer, b: &ImageBuffer, patch: usize, search: usize) -> Result<FlowField> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::invalid("block matching: images differ in shape"));
    }
    if patch % 2 == 0 {
        return Err(Error::invalid(format!("block matching: patch must be odd, got {patch}")));
    }
    if search == 0 {
        return Err(Error::invalid("block matching: search radius must be at least 1"));
    }
    let (w, h) = a.dims();
    if w < patch || h < patch {
        return Err(Error::invalid(format!(
            "block matching: {w}x{h} image is smaller than the {patch}x{patch} patch"
        )));
    }
    let r = (patch / 2) as isize;
    let s = search as isize;
    let mut cands: Vec<(isize, isize)> = Vec::with_capacity(((2 * s + 1) * (2 * s + 1)) as usize);
    for dy in -s..=s {
        for dx in -s..=s {
            cands.push((dx, dy));
        }
    }
    cands.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));

    let (wi, hi) = (w as isize, h as isize);
    let c = a.channels();
    Grid::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        if x - r < 0 || y - r < 0 || x + r >= wi || y + r >= hi {
            return None;
        }
        let mut best: Option<(f64, (isize, isize))> = None;
        for &(dx, dy) in &cands {
            let (bx, by) = (x + dx, y + dy);
            if bx - r < 0 || by - r < 0 || bx + r >= wi || by + r >= hi {
                continue;
            }
            let mut ssd = 0.0;
            for oy in -r..=r {
                for ox in -r..=r {
                    for ch in 0..c {
                        let va = a.get((x + ox) as usize, (y + oy) as usize, ch) as f64;
                        let vb = b.get((bx + ox) as usize, (by + oy) as usize, ch) as f64;
                        ssd += (va - vb) * (va - vb);
                    }
                }
            }
            if best.is_none_or(|(b, _)| ssd < b) {
                best = Some((ssd, (dx, dy)));
            }
        }
        best.map(|(_, (dx, dy))| [dx as f64, dy as f64])
    })
}
