//! GeoJSON output for object records and GeoJSON/CSV input for references.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::locate::ObjectRecord;
use crate::matching::Reference;

fn position(p: GeoPoint) -> Value {
    json!([p.lon, p.lat])
}

fn parse_position(v: &Value) -> std::result::Result<GeoPoint, String> {
    let arr = v.as_array().ok_or("position is not an array")?;
    match arr.as_slice() {
        [lon, lat, ..] => {
            let (lon, lat) = (
                lon.as_f64().ok_or("longitude is not a number")?,
                lat.as_f64().ok_or("latitude is not a number")?,
            );
            GeoPoint::new(lat, lon).map_err(|e| e.to_string())
        }
        _ => Err("position needs two coordinates".into()),
    }
}

fn point_geometry(v: &Value) -> std::result::Result<GeoPoint, String> {
    if v.get("type").and_then(Value::as_str) != Some("Point") {
        return Err("geometry must be a Point".into());
    }
    parse_position(v.get("coordinates").ok_or("geometry without coordinates")?)
}

/// One Point feature per record. The extent, when present, is stored as a
/// LineString under the `extent` property.
pub fn records_to_geojson(records: &[ObjectRecord]) -> Value {
    let features: Vec<Value> = records
        .iter()
        .map(|r| {
            let mut props = Map::new();
            props.insert("id".into(), json!(r.id));
            props.insert("class".into(), json!(r.class));
            props.insert("image_id".into(), json!(r.image_id()));
            props.insert("image_ids".into(), json!(r.image_ids));
            props.insert("distance_m".into(), json!(r.distance_m));
            props.insert("bearing_eff_deg".into(), json!(r.bearing_eff_deg));
            props.insert("reliable".into(), json!(r.reliable));
            if let Some(s) = r.score {
                props.insert("score".into(), json!(s));
            }
            if let Some(c) = r.camera {
                props.insert("camera".into(), position(c));
            }
            if let Some([a, b]) = r.extent {
                props.insert(
                    "extent".into(),
                    json!({"type": "LineString", "coordinates": [position(a), position(b)]}),
                );
            }
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": position(r.point)},
                "properties": props,
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

fn features(doc: &Value) -> std::result::Result<&Vec<Value>, String> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err("expected a FeatureCollection".into());
    }
    doc.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| "FeatureCollection without features".into())
}

fn record_from_feature(f: &Value, index: usize) -> std::result::Result<ObjectRecord, String> {
    let point = point_geometry(f.get("geometry").ok_or("feature without geometry")?)?;
    let props = f
        .get("properties")
        .and_then(Value::as_object)
        .ok_or("feature without properties")?;
    let text = |k: &str| props.get(k).and_then(Value::as_str).map(str::to_owned);
    let number = |k: &str| props.get(k).and_then(Value::as_f64);
    let class = text("class").ok_or("missing class")?;
    let id = text("id").unwrap_or_else(|| format!("feature/{index}"));
    let mut image_ids: Vec<String> = props
        .get("image_ids")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect())
        .unwrap_or_default();
    if image_ids.is_empty() {
        image_ids.extend(text("image_id"));
    }
    let distance_m = number("distance_m").ok_or("missing distance_m")?;
    let camera = props.get("camera").map(parse_position).transpose()?;
    let extent = match props.get("extent") {
        Some(e) => {
            let coords = e
                .get("coordinates")
                .and_then(Value::as_array)
                .ok_or("extent without coordinates")?;
            match coords.as_slice() {
                [a, b] => Some([parse_position(a)?, parse_position(b)?]),
                _ => return Err("extent needs exactly two positions".into()),
            }
        }
        None => None,
    };
    Ok(ObjectRecord {
        id,
        class,
        point,
        extent,
        image_ids,
        camera,
        bearing_eff_deg: number("bearing_eff_deg").ok_or("missing bearing_eff_deg")?,
        distance_m,
        reliable: props
            .get("reliable")
            .and_then(Value::as_bool)
            .unwrap_or(distance_m < crate::config::RELIABLE_DISTANCE_M),
        score: number("score"),
    })
}

pub fn records_from_geojson(doc: &Value) -> Result<Vec<ObjectRecord>> {
    let fs = features(doc).map_err(Error::InvalidParameter)?;
    fs.iter()
        .enumerate()
        .map(|(i, f)| record_from_feature(f, i).map_err(|e| Error::InvalidParameter(format!("feature {i}: {e}"))))
        .collect()
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_records(path: &Path) -> Result<Vec<ObjectRecord>> {
    let doc = read_json(path)?;
    records_from_geojson(&doc).map_err(|e| Error::format(path, e.to_string()))
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn save_records(path: &Path, records: &[ObjectRecord]) -> Result<()> {
    std::fs::write(path, to_pretty(&records_to_geojson(records))).map_err(|e| Error::io(path, e))
}

pub fn references_to_geojson(refs: &[Reference]) -> Value {
    let features: Vec<Value> = refs
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": position(r.point)},
                "properties": {"id": r.id, "class": r.class},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

pub fn references_from_geojson(doc: &Value) -> Result<Vec<Reference>> {
    let fs = features(doc).map_err(Error::InvalidParameter)?;
    fs.iter()
        .enumerate()
        .map(|(i, f)| {
            let inner = || -> std::result::Result<Reference, String> {
                let point = point_geometry(f.get("geometry").ok_or("feature without geometry")?)?;
                let props = f
                    .get("properties")
                    .and_then(Value::as_object)
                    .ok_or("feature without properties")?;
                let field = |k: &str| match props.get(k) {
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(Value::Number(n)) => Some(n.to_string()),
                    _ => None,
                };
                Ok(Reference {
                    id: field("id").unwrap_or_else(|| format!("ref/{i}")),
                    class: field("class").ok_or("missing class")?,
                    point,
                })
            };
            inner().map_err(|e| Error::InvalidParameter(format!("feature {i}: {e}")))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct RefRow {
    id: String,
    class: String,
    lat: f64,
    lon: f64,
}

/// Loads references from `.csv` (columns id, class, lat, lon) or GeoJSON.
pub fn load_references(path: &Path) -> Result<Vec<Reference>> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let refs = if is_csv {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let mut out = Vec::new();
        for row in rdr.deserialize::<RefRow>() {
            let row = row.map_err(|e| Error::format(path, e.to_string()))?;
            out.push(Reference {
                id: row.id,
                class: row.class,
                point: GeoPoint::new(row.lat, row.lon).map_err(|e| Error::format(path, e.to_string()))?,
            });
        }
        out
    } else {
        references_from_geojson(&read_json(path)?).map_err(|e| Error::format(path, e.to_string()))?
    };
    let mut seen = std::collections::HashSet::new();
    for r in &refs {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::format(path, format!("duplicate reference id {:?}", r.id)));
        }
    }
    Ok(refs)
}

pub fn save_references_csv(path: &Path, refs: &[Reference]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for r in refs {
        w.serialize(RefRow {
            id: r.id.clone(),
            class: r.class.clone(),
            lat: r.point.lat,
            lon: r.point.lon,
        })
        .map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_references_geojson(path: &Path, refs: &[Reference]) -> Result<()> {
    std::fs::write(path, to_pretty(&references_to_geojson(refs))).map_err(|e| Error::io(path, e))
}
