//! Geolocation of urban objects from street-view images: camera pose plus a
//! pinhole angular chain plus metric depth rasters, followed by duplicate
//! removal, matching against references and depth-quality evaluation.

pub mod config;
pub mod dedup;
pub mod detections;
pub mod error;
pub mod eval;
pub mod geo;
pub mod geojson;
pub mod locate;
pub mod matching;
pub mod raster;
pub mod sim;

pub use error::{Error, Result};
