pub mod camera;
pub mod cli;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod inpaint;
pub mod io;
pub mod losses;
pub mod raster;
pub mod schema;
pub mod physics;
