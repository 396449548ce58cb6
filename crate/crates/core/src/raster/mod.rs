//! File formats: depth rasters (PFM, raw f32 + JSON sidecar), Cityscapes
//! label PNGs, binary mask PNGs, point clouds (XYZ text, PLY) and the
//! recording metadata CSV.

mod cloud;
mod depth;
mod labels;
mod meta;

pub use cloud::{load_cloud, load_ply, load_xyz, save_ply, save_xyz, CameraBasis, PointCloud};
pub use depth::{
    load_depth, load_pfm, load_raw, load_raw_sidecar, save_depth, save_pfm, save_raw, sidecar_path, DepthFormat,
    DepthMap, RawSidecar, ValidRange,
};
pub use labels::{load_labels, load_mask, save_labels, save_mask, Mask, SemanticMap, NUM_TRAIN_IDS, VOID_LABEL};
pub use meta::{load_meta, save_meta, RecordingMeta};
