//! KITTI calibration text: one `key: values` entry per line.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Matrix3x4, Vector3};

use crate::camera::Intrinsics;
use crate::error::{Error, Location, Result};
use crate::losses::RigidTransform;

/// Camera mount height of the KITTI recording platform, meters.
pub const KITTI_CAMERA_HEIGHT: f64 = 1.65;

/// Expected value count for keys with a fixed layout.
fn expected_len(key: &str) -> Option<usize> {
    let prefixed = |p: &str| key.starts_with(p);
    if prefixed("P_rect_") || prefixed("Tr") || (key.len() == 2 && key.starts_with('P')) {
        Some(12)
    } else if prefixed("R_rect_") || prefixed("K_") || (key.starts_with("R_") && key.len() == 4) || key == "R" {
        Some(9)
    } else if prefixed("S_") {
        Some(2)
    } else if prefixed("D_") {
        Some(5)
    } else if key == "T" || (key.starts_with("T_") && key.len() == 4) {
        Some(3)
    } else {
        None
    }
}

/// Parsed calibration entries. Numeric entries keep the exact parsed
/// values; free-text entries such as `calib_time` are kept verbatim.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KittiCalibration {
    entries: BTreeMap<String, Vec<f64>>,
    text: BTreeMap<String, String>,
}

/// Parses calibration text. Blank lines are skipped; a line whose values
/// are not all numeric is accepted only if none of them are.
pub fn parse_kitti_calib(text: &str) -> Result<KittiCalibration> {
    let mut calib = KittiCalibration::default();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, rest)) = line.split_once(':') else {
            return Err(Error::parse(Location::Line(line_no), format!("expected `key: values`, got {line:?}")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(Location::Line(line_no), "empty key"));
        }
        if calib.entries.contains_key(key) || calib.text.contains_key(key) {
            return Err(Error::parse(Location::Line(line_no), format!("duplicate key {key}")));
        }
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        let parsed: Vec<Option<f64>> = tokens.iter().map(|t| t.parse::<f64>().ok()).collect();
        let numeric = parsed.iter().filter(|v| v.is_some()).count();
        if numeric == 0 && expected_len(key).is_none() && !tokens.is_empty() {
            calib.text.insert(key.to_string(), rest.trim().to_string());
            continue;
        }
        if numeric != tokens.len() {
            return Err(Error::parse(Location::Line(line_no), format!("{key}: non-numeric value")));
        }
        let values: Vec<f64> = parsed.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(Location::Line(line_no), format!("{key}: non-finite value")));
        }
        if let Some(want) = expected_len(key) {
            if values.len() != want {
                return Err(Error::parse(
                    Location::Line(line_no),
                    format!("{key}: expected {want} values, found {}", values.len()),
                ));
            }
        }
        calib.entries.insert(key.to_string(), values);
    }
    Ok(calib)
}

/// Closest rotation matrix in the Frobenius sense. Rejects inputs further
/// than 1e-3 from orthonormal.
fn nearest_rotation(m: Matrix3<f64>, key: &str) -> Result<Matrix3<f64>> {
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if !(err < 1e-3) || m.determinant() <= 0.0 {
        return Err(Error::parse(Location::Path(key.to_string()), "not a rotation matrix"));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(u * v_t)
}

impl KittiCalibration {
    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.text.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().chain(self.text.keys()).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&[f64]> {
        self.get(key)
            .ok_or_else(|| Error::parse(Location::Path(key.to_string()), format!("missing key {key}")))
    }

    /// First key present among `keys`.
    fn first_of<'a>(&'a self, keys: &[&str]) -> Result<&'a [f64]> {
        keys.iter()
            .find_map(|k| self.get(k))
            .ok_or_else(|| Error::parse(Location::Path(keys[0].to_string()), format!("missing key {}", keys[0])))
    }

    /// Merges entries of another file (e.g. velo-to-cam into cam-to-cam).
    pub fn merge(&mut self, other: KittiCalibration) -> Result<()> {
        for (k, v) in other.entries {
            if self.entries.contains_key(&k) {
                return Err(Error::parse(Location::Path(k.clone()), format!("duplicate key {k}")));
            }
            self.entries.insert(k, v);
        }
        for (k, v) in other.text {
            self.text.entry(k).or_insert(v);
        }
        Ok(())
    }

    /// Rectified 3x4 projection of camera `cam` (`P_rect_0N`, or `PN` in
    /// odometry-style files).
    pub fn projection(&self, cam: u8) -> Result<Matrix3x4<f64>> {
        let v = self.first_of(&[&format!("P_rect_0{cam}"), &format!("P{cam}")])?;
        Ok(Matrix3x4::from_row_slice(v))
    }

    /// Rectified image size `S_rect_0N` as (width, height).
    pub fn image_size(&self, cam: u8) -> Result<(u32, u32)> {
        let key = format!("S_rect_0{cam}");
        let v = self.require(&key)?;
        let dim = |x: f64| {
            if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                Ok(x as u32)
            } else {
                Err(Error::parse(Location::Path(key.clone()), format!("invalid image size {x}")))
            }
        };
        Ok((dim(v[0])?, dim(v[1])?))
    }

    /// Intrinsics from the rectified projection of camera `cam`. The image
    /// size is taken from `size` when given, else from `S_rect_0N`.
    pub fn intrinsics(&self, cam: u8, size: Option<(u32, u32)>) -> Result<Intrinsics> {
        let p = self.projection(cam)?;
        let (w, h) = match size {
            Some(s) => s,
            None => self.image_size(cam)?,
        };
        Intrinsics::new(p[(0, 0)], p[(1, 1)], p[(0, 2)], p[(1, 2)], w, h)
    }

    /// LiDAR-to-rectified-camera transform for camera `cam`: velodyne to
    /// reference camera (`R`,`T` or `Tr`), then `R_rect_00` when present,
    /// then the baseline offset `K^-1 P[:,3]` of the chosen camera.
    pub fn velo_to_cam(&self, cam: u8) -> Result<RigidTransform> {
        let (r, t) = match (self.get("R"), self.get("T")) {
            (Some(r), Some(t)) => (Matrix3::from_row_slice(r), Vector3::from_row_slice(t)),
            _ => {
                let tr = self.require("Tr")?;
                let m = Matrix3x4::from_row_slice(tr);
                (m.fixed_view::<3, 3>(0, 0).into_owned(), m.column(3).into_owned())
            }
        };
        let r = nearest_rotation(r, "R")?;
        let velo = RigidTransform::new(r, t)?;
        let rect = match self.get("R_rect_00") {
            Some(v) => RigidTransform::new(nearest_rotation(Matrix3::from_row_slice(v), "R_rect_00")?, Vector3::zeros())?,
            None => RigidTransform::identity(),
        };
        let p = self.projection(cam)?;
        let k = p.fixed_view::<3, 3>(0, 0).into_owned();
        let k_inv = k
            .try_inverse()
            .ok_or_else(|| Error::parse(Location::Path(format!("P_rect_0{cam}")), "singular intrinsic block"))?;
        let offset = RigidTransform::from_translation(k_inv * p.column(3))?;
        Ok(offset.compose(&rect.compose(&velo)))
    }

    /// Serializes back to calibration text. Parsing the output yields an
    /// identical calibration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.text {
            out.push_str(&format!("{k}: {v}\n"));
        }
        for (k, v) in &self.entries {
            let vals: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&format!("{k}: {}\n", vals.join(" ")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAM: &str = "calib_time: 09-Jan-2012 13:57:47
S_rect_02: 1.242000e+03 3.750000e+02
R_rect_00: 1.000000e+00 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00
P_rect_02: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
";

    #[test]
    fn parses_projection_bit_exact() {
        let c = parse_kitti_calib(CAM).unwrap();
        let p = c.get("P_rect_02").unwrap();
        assert_eq!(p[0], 7.215377e+02);
        assert_eq!(p[3], 4.485728e+01);
        assert_eq!(p[11], 2.745884e-03);
        assert_eq!(c.text("calib_time"), Some("09-Jan-2012 13:57:47"));
        let i = c.intrinsics(2, None).unwrap();
        assert_eq!((i.fx, i.fy, i.ox, i.oy, i.width, i.height), (7.215377e+02, 7.215377e+02, 6.095593e+02, 1.728540e+02, 1242, 375));
    }

    #[test]
    fn round_trips_through_text() {
        let c = parse_kitti_calib(CAM).unwrap();
        assert_eq!(parse_kitti_calib(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn identity_like_intrinsics() {
        let c = parse_kitti_calib("P_rect_02: 1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        let i = c.intrinsics(2, Some((4, 3))).unwrap();
        assert_eq!((i.fx, i.fy, i.ox, i.oy), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn truncated_line_names_key_and_line() {
        let err = parse_kitti_calib("S_rect_02: 10 10\nP_rect_02: 7.2e+02 0.0 6.0e+02\n").unwrap_err();
        match err {
            Error::Parse { location, message } => {
                assert_eq!(location, Location::Line(2));
                assert!(message.contains("P_rect_02"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_kitti_calib("no colon here\n").is_err());
        assert!(parse_kitti_calib("T: 1 2 x\n").is_err());
        assert!(parse_kitti_calib("P_rect_02: a b c\n").is_err());
        assert!(parse_kitti_calib("T: 1 2 3\nT: 1 2 3\n").is_err());
        let missing = parse_kitti_calib("S_rect_02: 10 10\n").unwrap();
        assert!(matches!(missing.projection(2), Err(Error::Parse { .. })));
    }

    #[test]
    fn velo_to_cam_adds_baseline_offset() {
        let mut c = parse_kitti_calib(CAM).unwrap();
        c.merge(parse_kitti_calib("R: 0 -1 0 0 0 -1 1 0 0\nT: 0 0 0\n").unwrap()).unwrap();
        let t = c.velo_to_cam(2).unwrap();
        // A point 10 m ahead of the LiDAR lands on the optical axis.
        let p = t.apply(&Vector3::new(10.0, 0.0, 0.0));
        let p_mat = c.projection(2).unwrap();
        let k_inv = p_mat.fixed_view::<3, 3>(0, 0).into_owned().try_inverse().unwrap();
        let off = k_inv * p_mat.column(3);
        assert!((p - (Vector3::new(0.0, 0.0, 10.0) + off)).norm() < 1e-12);
    }
}
