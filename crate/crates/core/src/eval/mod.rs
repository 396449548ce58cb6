//! Depth-quality and localization-quality metrics.

mod coord;
mod depth_errors;
mod iou;
mod project;
mod semantic;
mod svg;

pub use coord::{coord_error_stats, coord_error_stats_from_matches, BoxStats, CoordErrorTable, IntervalStats};
pub use depth_errors::{aggregate, depth_errors, ErrorAccumulator, ErrorReport, ErrorRow, Pooling};
pub use iou::mask_iou;
pub use project::project_cloud;
pub use semantic::{
    group_of, group_of_label_id, label_id_to_train_id, train_id_name, SemanticGroup, CITYSCAPES_LABELS, TRAIN_ID_NAMES,
};
pub use svg::boxplot_svg;
