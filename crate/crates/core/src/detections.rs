//! Detection input as JSON lines, one line per image:
//! `{"image_id": "...", "detections": [{"class": "...", "bbox": [x0, y0, x1, y1], "score": 0.9}]}`.
//! Masks are referenced by `mask_path`, relative to the JSONL file.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locate::{BBox, Detection, Shape};
use crate::raster::{load_mask, save_mask};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<[u32; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    image_id: String,
    detections: Vec<Entry>,
}

fn entry_to_detection(entry: Entry, base: &Path) -> std::result::Result<Detection, String> {
    if let Some(s) = entry.score {
        if !(0.0..=1.0).contains(&s) {
            return Err(format!("score {s} outside [0, 1]"));
        }
    }
    let shape = match (entry.bbox, entry.mask_path) {
        (Some([x0, y0, x1, y1]), None) => Shape::BBox(BBox::new(x0, y0, x1, y1).map_err(|e| e.to_string())?),
        (None, Some(p)) => Shape::Mask(load_mask(&base.join(p)).map_err(|e| e.to_string())?),
        _ => return Err("exactly one of bbox and mask_path is required".into()),
    };
    Ok(Detection {
        id: entry.id,
        class: entry.class,
        shape,
        score: entry.score,
    })
}

/// Detections keyed by image id. Masks are loaded eagerly.
pub fn load_detections(path: &Path) -> Result<BTreeMap<String, Vec<Detection>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Error::format(path, format!("line {}: {msg}", n + 1));
        let parsed: Line = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        let dets = parsed
            .detections
            .into_iter()
            .map(|e| entry_to_detection(e, base))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(at)?;
        if out.insert(parsed.image_id.clone(), dets).is_some() {
            return Err(at(format!("image {:?} listed twice", parsed.image_id)));
        }
    }
    Ok(out)
}

fn file_stem_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes the JSONL file; masks go to `masks/` next to it.
pub fn save_detections(path: &Path, per_image: &BTreeMap<String, Vec<Detection>>) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = Vec::new();
    for (image_id, dets) in per_image {
        let mut entries = Vec::with_capacity(dets.len());
        for (i, d) in dets.iter().enumerate() {
            let (bbox, mask_path) = match &d.shape {
                Shape::BBox(b) => (Some([b.x0, b.y0, b.x1, b.y1]), None),
                Shape::Mask(m) => {
                    let rel = PathBuf::from("masks").join(format!("{}_{i}.png", file_stem_safe(image_id)));
                    let full = base.join(&rel);
                    if let Some(dir) = full.parent() {
                        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    }
                    save_mask(&full, m)?;
                    (None, Some(rel.to_string_lossy().replace('\\', "/")))
                }
            };
            entries.push(Entry {
                id: d.id.clone(),
                class: d.class.clone(),
                bbox,
                mask_path,
                score: d.score,
            });
        }
        lines.push(Line {
            image_id: image_id.clone(),
            detections: entries,
        });
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for l in &lines {
        let text = serde_json::to_string(l).expect("detection lines serialize");
        writeln!(f, "{text}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
