//! Dataset readers and the synthetic oracle scene.

mod cityscapes;
mod kitti;
mod lidar;
mod synth;

pub use cityscapes::{parse_cityscapes_camera, CityscapesCamera};
pub use kitti::{parse_kitti_calib, KittiCalibration, KITTI_CAMERA_HEIGHT};
pub use lidar::{encode_velodyne_bin, lidar_to_depth, read_velodyne_bin, LidarPoint, LidarScan};
pub use synth::{synth_scene, SynthBox, SynthScene, SynthSpec, LABEL_CAR, LABEL_ROAD, LABEL_SIDEWALK, LABEL_SKY};
