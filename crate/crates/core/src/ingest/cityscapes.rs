//! Per-image Cityscapes camera JSON.

use serde_json::{Map, Value};

use crate::camera::{CameraModel, Extrinsics, Intrinsics};
use crate::error::{Error, Location, Result};

/// Fields of a Cityscapes camera file, kept exactly as parsed. Angles in
/// radians in the vehicle frame (x forward, y left, z up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CityscapesCamera {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    /// Camera height above ground, meters.
    pub z: f64,
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
    pub baseline: Option<f64>,
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    match v.get(path) {
        Some(Value::Object(m)) => Ok(m),
        Some(_) => Err(Error::parse(Location::Path(path.to_string()), "expected an object")),
        None => Err(Error::parse(Location::Path(path.to_string()), "missing field")),
    }
}

fn number(m: &Map<String, Value>, parent: &str, key: &str) -> Result<f64> {
    let path = format!("{parent}.{key}");
    match m.get(key) {
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::parse(Location::Path(path), "expected a finite number")),
        None => Err(Error::parse(Location::Path(path), "missing field")),
    }
}

pub fn parse_cityscapes_camera(json: &str) -> Result<CityscapesCamera> {
    let root: Value = serde_json::from_str(json).map_err(|e| {
        Error::parse(Location::Line(e.line()), format!("invalid JSON: {e}"))
    })?;
    let intr = object(&root, "intrinsic")?;
    let ext = object(&root, "extrinsic")?;
    let baseline = match root.get("baseline").or_else(|| ext.get("baseline")) {
        None => None,
        Some(v) => Some(
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(Location::Path("baseline".into()), "expected a finite number"))?,
        ),
    };
    Ok(CityscapesCamera {
        fx: number(intr, "intrinsic", "fx")?,
        fy: number(intr, "intrinsic", "fy")?,
        u0: number(intr, "intrinsic", "u0")?,
        v0: number(intr, "intrinsic", "v0")?,
        z: number(ext, "extrinsic", "z")?,
        pitch: number(ext, "extrinsic", "pitch")?,
        roll: number(ext, "extrinsic", "roll")?,
        yaw: number(ext, "extrinsic", "yaw")?,
        baseline,
    })
}

impl CityscapesCamera {
    /// Camera model for an image of the given size. Vehicle pitch tilts the
    /// optical axis about the camera x axis, vehicle yaw turns it about the
    /// camera y axis and vehicle roll spins the image about the optical axis
    /// (sign flipped, since the vehicle x axis points forward and y left).
    pub fn to_camera_model(&self, width: u32, height: u32) -> Result<CameraModel> {
        let intr = Intrinsics::new(self.fx, self.fy, self.u0, self.v0, width, height)?;
        let ext = Extrinsics::new(self.z, self.pitch, self.yaw, -self.roll)?;
        CameraModel::new(intr, ext)
    }

    pub fn to_json(&self) -> String {
        let mut ext = serde_json::json!({
            "z": self.z, "pitch": self.pitch, "roll": self.roll, "yaw": self.yaw,
        });
        let mut root = serde_json::json!({
            "intrinsic": {"fx": self.fx, "fy": self.fy, "u0": self.u0, "v0": self.v0},
        });
        if let Some(b) = self.baseline {
            ext["baseline"] = b.into();
            root["baseline"] = b.into();
        }
        root["extrinsic"] = ext;
        serde_json::to_string_pretty(&root).expect("plain numbers serialize")
    }
}
