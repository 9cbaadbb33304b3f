//! Raster containers shared by the pipeline: depth maps, label maps,
//! images, flow fields and per-pixel weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            data: vec![value; width * height],
        })
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid data has {} elements, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "raster dimensions must be non-zero, got {width}x{height}"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!(
            "{what}: dimension mismatch {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Which pipeline stage produced a depth value. The numeric codes are the
/// on-disk encoding of the PFD1 provenance plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Provenance {
    #[default]
    None = 0,
    Road = 1,
    Flat = 2,
    EdgeExtended = 3,
    Inpainted = 4,
    Sky = 5,
    External = 6,
}

impl Provenance {
    pub const ALL: [Provenance; 7] = [
        Provenance::None,
        Provenance::Road,
        Provenance::Flat,
        Provenance::EdgeExtended,
        Provenance::Inpainted,
        Provenance::Sky,
        Provenance::External,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Provenance::None => "none",
            Provenance::Road => "road",
            Provenance::Flat => "flat",
            Provenance::EdgeExtended => "edge_extended",
            Provenance::Inpainted => "inpainted",
            Provenance::Sky => "sky",
            Provenance::External => "external",
        }
    }
}

/// Metric depth (meters, z-depth in the camera frame) with a per-pixel
/// provenance tag. A pixel is valid exactly when its provenance is not
/// [`Provenance::None`]; invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    provenance: Vec<Provenance>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(DepthMap {
            width,
            height,
            values: vec![0.0; width * height],
            provenance: vec![Provenance::None; width * height],
        })
    }

    /// Builds a map from raw planes, checking the validity invariants.
    pub fn from_parts(
        width: usize,
        height: usize,
        values: Vec<f32>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        if values.len() != n || provenance.len() != n {
            return Err(Error::invalid(format!(
                "depth planes have {} / {} elements, expected {n}",
                values.len(),
                provenance.len()
            )));
        }
        for (i, (&v, &p)) in values.iter().zip(&provenance).enumerate() {
            let ok = if p == Provenance::None {
                v == 0.0
            } else {
                v.is_finite() && v > 0.0
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "pixel {i}: value {v} inconsistent with provenance {}",
                    p.name()
                )));
            }
        }
        Ok(DepthMap {
            width,
            height,
            values,
            provenance,
        })
    }

    /// Every pixel valid with the given provenance. Non-positive or
    /// non-finite values are stored as invalid.
    pub fn from_values(width: usize, height: usize, values: &[f32], prov: Provenance) -> Result<Self> {
        let mut map = DepthMap::new(width, height)?;
        if values.len() != width * height {
            return Err(Error::invalid("value count does not match dimensions"));
        }
        for (i, &v) in values.iter().enumerate() {
            if v.is_finite() && v > 0.0 {
                map.values[i] = v;
                map.provenance[i] = prov;
            }
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.provenance[y * self.width + x] != Provenance::None
    }

    #[inline]
    pub fn is_valid_at(&self, i: usize) -> bool {
        self.provenance[i] != Provenance::None
    }

    /// Depth at `(x, y)` if valid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        self.depth_at(y * self.width + x)
    }

    #[inline]
    pub fn depth_at(&self, i: usize) -> Option<f32> {
        (self.provenance[i] != Provenance::None).then(|| self.values[i])
    }

    pub fn provenance(&self, x: usize, y: usize) -> Provenance {
        self.provenance[y * self.width + x]
    }

    pub fn provenance_at(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    /// Writes a valid depth. Rejects non-positive or non-finite values and
    /// the `None` provenance; use [`DepthMap::clear`] to invalidate.
    pub fn set(&mut self, x: usize, y: usize, depth: f32, prov: Provenance) -> Result<()> {
        let i = y * self.width + x;
        self.set_at(i, depth, prov)
    }

    pub fn set_at(&mut self, i: usize, depth: f32, prov: Provenance) -> Result<()> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidDepth(depth as f64));
        }
        if prov == Provenance::None {
            return Err(Error::invalid("valid pixels need a provenance other than none"));
        }
        self.values[i] = depth;
        self.provenance[i] = prov;
        Ok(())
    }

    pub fn clear(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        self.values[i] = 0.0;
        self.provenance[i] = Provenance::None;
    }

    pub fn valid_count(&self) -> usize {
        self.provenance.iter().filter(|&&p| p != Provenance::None).count()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn provenance_plane(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn valid_mask(&self) -> Grid<bool> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.provenance.iter().map(|&p| p != Provenance::None).collect(),
        }
    }

    /// Maximum valid depth, if any pixel is valid.
    pub fn max_valid(&self) -> Option<f32> {
        self.values
            .iter()
            .zip(&self.provenance)
            .filter(|(_, &p)| p != Provenance::None)
            .map(|(&v, _)| v)
            .reduce(f32::max)
    }
}

/// Semantic category of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Road,
    Flat,
    Vertical,
    Sky,
    Ignore,
}

impl Category {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "road" => Category::Road,
            "flat" => Category::Flat,
            "vertical" => Category::Vertical,
            "sky" => Category::Sky,
            "ignore" => Category::Ignore,
            _ => return None,
        })
    }

    pub fn is_ground(self) -> bool {
        matches!(self, Category::Road | Category::Flat)
    }
}

/// Per-pixel semantic class IDs.
pub type LabelMap = Grid<u16>;

/// Per-pixel categories after applying a label schema.
pub type CategoryMap = Grid<Category>;

/// Intensity image in `[0, 1]`, interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Values are clamped into `[0, 1]`; non-finite values are rejected.
    pub fn new(width: usize, height: usize, channels: usize, mut data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "image data has {} samples, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::invalid("image intensities must be finite"));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Dense 2D motion field in pixels; `None` marks pixels without a vector.
pub type FlowField = Grid<Option<[f64; 2]>>;

/// Per-pixel weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap(Grid<f32>);

impl ConfidenceMap {
    pub fn new(grid: Grid<f32>) -> Result<Self> {
        if let Some(w) = grid.as_slice().iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::invalid(format!("confidence weight {w} outside [0, 1]")));
        }
        Ok(ConfidenceMap(grid))
    }

    pub fn uniform(width: usize, height: usize, weight: f32) -> Result<Self> {
        Self::new(Grid::filled(width, height, weight)?)
    }

    pub fn grid(&self) -> &Grid<f32> {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn at(&self, i: usize) -> f32 {
        self.0.as_slice()[i]
    }
}
