use serde::{Deserialize, Serialize};

use crate::raster::VOID_LABEL;

/// Coarse Cityscapes categories used to break down depth errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticGroup {
    Flat,
    Construction,
    Object,
    Nature,
    /// People, vehicles, sky and void; never evaluated.
    Excluded,
}

impl SemanticGroup {
    /// The four evaluated groups, in report order.
    pub const EVALUATED: [SemanticGroup; 4] = [
        SemanticGroup::Flat,
        SemanticGroup::Construction,
        SemanticGroup::Object,
        SemanticGroup::Nature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticGroup::Flat => "flat",
            SemanticGroup::Construction => "construction",
            SemanticGroup::Object => "object",
            SemanticGroup::Nature => "nature",
            SemanticGroup::Excluded => "excluded",
        }
    }

    /// Position in [`SemanticGroup::EVALUATED`].
    pub fn index(self) -> Option<usize> {
        Self::EVALUATED.iter().position(|g| *g == self)
    }
}

/// Cityscapes train-ID class names, indexed by train ID.
pub const TRAIN_ID_NAMES: [&str; 19] = [
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic light",
    "traffic sign",
    "vegetation",
    "terrain",
    "sky",
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

pub fn train_id_name(train_id: u8) -> Option<&'static str> {
    TRAIN_ID_NAMES.get(train_id as usize).copied()
}

/// Full Cityscapes label table: (label id, name, train id, group).
pub const CITYSCAPES_LABELS: [(u8, &str, u8, SemanticGroup); 34] = {
    use SemanticGroup::*;
    [
        (0, "unlabeled", 255, Excluded),
        (1, "ego vehicle", 255, Excluded),
        (2, "rectification border", 255, Excluded),
        (3, "out of roi", 255, Excluded),
        (4, "static", 255, Excluded),
        (5, "dynamic", 255, Excluded),
        (6, "ground", 255, Excluded),
        (7, "road", 0, Flat),
        (8, "sidewalk", 1, Flat),
        (9, "parking", 255, Flat),
        (10, "rail track", 255, Flat),
        (11, "building", 2, Construction),
        (12, "wall", 3, Construction),
        (13, "fence", 4, Construction),
        (14, "guard rail", 255, Construction),
        (15, "bridge", 255, Construction),
        (16, "tunnel", 255, Construction),
        (17, "pole", 5, Object),
        (18, "polegroup", 255, Object),
        (19, "traffic light", 6, Object),
        (20, "traffic sign", 7, Object),
        (21, "vegetation", 8, Nature),
        (22, "terrain", 9, Nature),
        (23, "sky", 10, Excluded),
        (24, "person", 11, Excluded),
        (25, "rider", 12, Excluded),
        (26, "car", 13, Excluded),
        (27, "truck", 14, Excluded),
        (28, "bus", 15, Excluded),
        (29, "caravan", 255, Excluded),
        (30, "trailer", 255, Excluded),
        (31, "train", 16, Excluded),
        (32, "motorcycle", 17, Excluded),
        (33, "bicycle", 18, Excluded),
    ]
};

/// Group of a train ID. Void and unknown IDs are excluded.
pub fn group_of(train_id: u8) -> SemanticGroup {
    match train_id {
        0 | 1 => SemanticGroup::Flat,
        2..=4 => SemanticGroup::Construction,
        5..=7 => SemanticGroup::Object,
        8 | 9 => SemanticGroup::Nature,
        _ => SemanticGroup::Excluded,
    }
}

/// Group of a full Cityscapes label ID (covers classes without a train ID,
/// such as parking or guard rail).
pub fn group_of_label_id(label_id: u8) -> SemanticGroup {
    CITYSCAPES_LABELS
        .get(label_id as usize)
        .map(|l| l.3)
        .unwrap_or(SemanticGroup::Excluded)
}

/// Converts a label-ID raster value to a train ID (void for unmapped labels).
pub fn label_id_to_train_id(label_id: u8) -> u8 {
    CITYSCAPES_LABELS
        .get(label_id as usize)
        .map(|l| l.2)
        .unwrap_or(VOID_LABEL)
}
