//! Fast-marching inpainting of scalar rasters (Telea's method).
//!
//! Unknown pixels are visited in order of increasing distance `T` from the
//! known region, with `T` propagated by a first-order upwind solve of
//! `|grad T| = 1`. Each pixel is filled once, when the front first reaches
//! it, from already-settled pixels within `radius`:
//!
//! ```text
//! I(p) = sum_q w(p,q) * (I(q) + grad I(q) . (p - q)) / sum_q w(p,q)
//! w(p,q) = dir(p,q) * dst(p,q) * lev(p,q)
//! ```
//!
//! The estimate is clamped to the range of the contributing values, so the
//! output obeys a discrete maximum principle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, Grid};

/// Default neighborhood radius in pixels.
pub const DEFAULT_RADIUS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintProblem {
    pub values: Grid<f64>,
    pub known: Grid<bool>,
    pub radius: usize,
}

impl InpaintProblem {
    pub fn new(values: Grid<f64>, known: Grid<bool>, radius: usize) -> Result<Self> {
        ensure_same_dims(values.dims(), known.dims(), "inpaint problem")?;
        if radius < 1 {
            return Err(Error::invalid("inpaint radius must be at least 1 px"));
        }
        Ok(InpaintProblem {
            values,
            known,
            radius,
        })
    }
}

/// One fill step of the march, for instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillEvent {
    pub index: usize,
    /// Arrival time of the filled pixel when it was filled.
    pub t: f64,
    /// Largest arrival time among the pixels that contributed to it.
    pub max_contributor_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flag {
    Known,
    Band,
    Inside,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    t: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so BinaryHeap pops the smallest T, then the smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.index.cmp(&self.index))
    }
}

pub fn telea(problem: &InpaintProblem) -> Result<Grid<f64>> {
    March::new(problem)?.run(None)
}

/// Like [`telea`], also returning every fill in march order.
pub fn telea_traced(problem: &InpaintProblem) -> Result<(Grid<f64>, Vec<FillEvent>)> {
    let mut trace = Vec::new();
    let out = March::new(problem)?.run(Some(&mut trace))?;
    Ok((out, trace))
}

struct March<'a> {
    width: usize,
    height: usize,
    radius: usize,
    values: Vec<f64>,
    flags: Vec<Flag>,
    t: Vec<f64>,
    /// Pixel holds a value that may be used by later fills.
    settled: Vec<bool>,
    known_in: &'a [bool],
}

impl<'a> March<'a> {
    fn new(problem: &'a InpaintProblem) -> Result<Self> {
        let known = problem.known.as_slice();
        if !known.iter().any(|&k| k) {
            return Err(Error::EmptyPrior);
        }
        let n = known.len();
        let mut values = problem.values.as_slice().to_vec();
        let mut flags = vec![Flag::Inside; n];
        let mut t = vec![f64::INFINITY; n];
        for i in 0..n {
            if known[i] {
                flags[i] = Flag::Known;
                t[i] = 0.0;
            } else {
                values[i] = 0.0;
            }
        }
        Ok(March {
            width: problem.known.width(),
            height: problem.known.height(),
            radius: problem.radius,
            values,
            flags,
            t,
            settled: known.to_vec(),
            known_in: known,
        })
    }

    fn neighbors4(&self, i: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (i % w, i / w);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = i - 1;
        }
        if x + 1 < w {
            out[1] = i + 1;
        }
        if y > 0 {
            out[2] = i - w;
        }
        if y + 1 < h {
            out[3] = i + w;
        }
        out.into_iter().filter(|&j| j != usize::MAX)
    }

    fn run(mut self, mut trace: Option<&mut Vec<FillEvent>>) -> Result<Grid<f64>> {
        let n = self.values.len();
        let mut heap = BinaryHeap::new();
        for i in 0..n {
            if self.known_in[i] && self.neighbors4(i).any(|j| !self.known_in[j]) {
                self.flags[i] = Flag::Band;
                heap.push(Entry { t: 0.0, index: i });
            }
        }

        while let Some(Entry { t, index }) = heap.pop() {
            if self.flags[index] == Flag::Known || t > self.t[index] {
                continue;
            }
            self.flags[index] = Flag::Known;
            self.settled[index] = true;

            let neighbors: Vec<usize> = self.neighbors4(index).collect();
            for j in neighbors {
                if self.flags[j] == Flag::Known {
                    continue;
                }
                let tj = self.arrival_time(j);
                if self.flags[j] == Flag::Inside {
                    self.t[j] = tj;
                    self.flags[j] = Flag::Band;
                    let (value, max_t) = self.estimate(j);
                    self.values[j] = value;
                    if let Some(trace) = trace.as_deref_mut() {
                        trace.push(FillEvent {
                            index: j,
                            t: tj,
                            max_contributor_t: max_t,
                        });
                    }
                    heap.push(Entry { t: tj, index: j });
                } else if tj < self.t[j] {
                    self.t[j] = tj;
                    heap.push(Entry { t: tj, index: j });
                }
            }
        }

        debug_assert!(self.flags.iter().all(|&f| f == Flag::Known));
        Grid::from_vec(self.width, self.height, self.values)
    }

    fn t_if_known(&self, x: isize, y: isize) -> Option<f64> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        let i = y as usize * self.width + x as usize;
        (self.flags[i] == Flag::Known).then(|| self.t[i])
    }

    /// Smallest upwind solution over the four quadrants around pixel `i`.
    fn arrival_time(&self, i: usize) -> f64 {
        let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
        let mut best = f64::INFINITY;
        for (dx, dy) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
            let a = self.t_if_known(x + dx, y);
            let b = self.t_if_known(x, y + dy);
            let sol = match (a, b) {
                (Some(t1), Some(t2)) => {
                    let diff = t1 - t2;
                    if diff.abs() >= 1.0 {
                        1.0 + t1.min(t2)
                    } else {
                        (t1 + t2 + (2.0 - diff * diff).sqrt()) / 2.0
                    }
                }
                (Some(t1), None) => 1.0 + t1,
                (None, Some(t2)) => 1.0 + t2,
                (None, None) => f64::INFINITY,
            };
            best = best.min(sol);
        }
        best
    }

    fn usable(&self, i: usize) -> bool {
        self.settled[i]
    }

    /// Finite-difference gradient at `(x, y)` over usable neighbors.
    fn gradient<F>(&self, x: usize, y: usize, usable: F, field: &[f64]) -> (f64, f64)
    where
        F: Fn(usize) -> bool,
    {
        let w = self.width;
        let i = y * w + x;
        let axis = |prev: Option<usize>, next: Option<usize>| -> f64 {
            match (prev.filter(|&j| usable(j)), next.filter(|&j| usable(j))) {
                (Some(p), Some(n)) => (field[n] - field[p]) / 2.0,
                (Some(p), None) => field[i] - field[p],
                (None, Some(n)) => field[n] - field[i],
                (None, None) => 0.0,
            }
        };
        let gx = axis(
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
        );
        let gy = axis(
            (y > 0).then(|| i - w),
            (y + 1 < self.height).then(|| i + w),
        );
        (gx, gy)
    }

    fn estimate(&self, p: usize) -> (f64, f64) {
        let w = self.width;
        let (px, py) = (p % w, p / w);
        let r = self.radius as isize;
        let tp = self.t[p];
        let (tgx, tgy) = self.gradient(px, py, |j| self.flags[j] != Flag::Inside, &self.t);
        let tgrad_norm = (tgx * tgx + tgy * tgy).sqrt();

        let mut num = 0.0;
        let mut den = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut max_t = f64::NEG_INFINITY;
        for dy in -r..=r {
            let qy = py as isize + dy;
            if qy < 0 || qy as usize >= self.height {
                continue;
            }
            for dx in -r..=r {
                let qx = px as isize + dx;
                if qx < 0 || qx as usize >= w || (dx == 0 && dy == 0) {
                    continue;
                }
                let d2 = (dx * dx + dy * dy) as f64;
                if d2 > (r * r) as f64 {
                    continue;
                }
                let q = qy as usize * w + qx as usize;
                if !self.usable(q) {
                    continue;
                }
                // r = p - q
                let (rx, ry) = (-dx as f64, -dy as f64);
                let dir = if tgrad_norm > 0.0 {
                    let c = ((rx * tgx + ry * tgy) / (d2.sqrt() * tgrad_norm)).abs();
                    if c <= 0.01 {
                        1e-6
                    } else {
                        c
                    }
                } else {
                    1.0
                };
                let dst = 1.0 / d2;
                let lev = 1.0 / (1.0 + (self.t[q] - tp).abs());
                let weight = dir * dst * lev;

                let (gx, gy) = self.gradient(qx as usize, qy as usize, |j| self.usable(j), &self.values);
                let vq = self.values[q];
                num += weight * (vq + gx * rx + gy * ry);
                den += weight;
                lo = lo.min(vq);
                hi = hi.max(vq);
                max_t = max_t.max(self.t[q]);
            }
        }
        debug_assert!(den > 0.0, "front pixel always has a settled neighbor");
        ((num / den).clamp(lo, hi), max_t)
    }
}
