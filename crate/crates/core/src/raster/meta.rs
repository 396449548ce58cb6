use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{CameraPose, Intrinsics};

/// Per-image recording metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub image_id: String,
    pub pose: CameraPose,
    pub intrinsics: Intrinsics,
    /// ISO-8601 timestamp as recorded.
    pub timestamp: Option<String>,
    /// Where the image came from (e.g. `survey`, `crowd`).
    pub source: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaRow {
    image_id: String,
    lat: f64,
    lon: f64,
    bearing_deg: f64,
    pitch_deg: f64,
    fx_px: f64,
    fy_px: f64,
    width: u32,
    height: u32,
    timestamp: Option<String>,
    source: Option<String>,
}

fn valid_timestamp(ts: &str) -> bool {
    chrono::DateTime::parse_from_rfc3339(ts).is_ok()
        || chrono::NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
        || chrono::NaiveDate::parse_from_str(ts, "%Y-%m-%d").is_ok()
}

impl TryFrom<MetaRow> for RecordingMeta {
    type Error = String;

    fn try_from(row: MetaRow) -> std::result::Result<Self, String> {
        if row.image_id.trim().is_empty() {
            return Err("empty image_id".into());
        }
        let pose = CameraPose::new(row.lat, row.lon, row.bearing_deg, row.pitch_deg).map_err(|e| e.to_string())?;
        let intrinsics = Intrinsics::new(row.fx_px, row.fy_px, row.width, row.height).map_err(|e| e.to_string())?;
        let timestamp = row.timestamp.filter(|t| !t.trim().is_empty());
        if let Some(ts) = &timestamp {
            if !valid_timestamp(ts) {
                return Err(format!("timestamp {ts:?} is not ISO-8601"));
            }
        }
        Ok(RecordingMeta {
            image_id: row.image_id,
            pose,
            intrinsics,
            timestamp,
            source: row.source.unwrap_or_default(),
        })
    }
}

impl From<&RecordingMeta> for MetaRow {
    fn from(m: &RecordingMeta) -> Self {
        MetaRow {
            image_id: m.image_id.clone(),
            lat: m.pose.lat(),
            lon: m.pose.lon(),
            bearing_deg: m.pose.bearing(),
            pitch_deg: m.pose.pitch(),
            fx_px: m.intrinsics.fx(),
            fy_px: m.intrinsics.fy(),
            width: m.intrinsics.width(),
            height: m.intrinsics.height(),
            timestamp: m.timestamp.clone(),
            source: Some(m.source.clone()),
        }
    }
}

/// Reads the metadata CSV. Image ids must be unique.
pub fn load_meta(path: &Path) -> Result<Vec<RecordingMeta>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<MetaRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_error(path, e))?;
        let meta = RecordingMeta::try_from(row).map_err(|m| Error::format(path, format!("line {line}: {m}")))?;
        if !seen.insert(meta.image_id.clone()) {
            return Err(Error::format(
                path,
                format!("line {line}: duplicate image_id {:?}", meta.image_id),
            ));
        }
        out.push(meta);
    }
    Ok(out)
}

pub fn save_meta(path: &Path, metas: &[RecordingMeta]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for m in metas {
        writer.serialize(MetaRow::from(m)).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::format(path, e.to_string())
    }
}
