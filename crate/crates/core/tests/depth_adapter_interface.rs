//! Contract with the external depth exporter: raw little-endian f32 plus a
//! JSON sidecar whose field names match the metadata CSV columns.

use std::io::Write;

use mapcore::geo::{CameraPose, Intrinsics};
use mapcore::raster::{load_depth, load_meta, load_raw_sidecar, ValidRange};

fn write_export(dir: &std::path::Path, stem: &str, w: u32, h: u32, value: f32, sidecar: &str) -> std::path::PathBuf {
    let raw = dir.join(format!("{stem}.raw"));
    let mut f = std::fs::File::create(&raw).unwrap();
    for _ in 0..w * h {
        f.write_all(&value.to_le_bytes()).unwrap();
    }
    std::fs::write(dir.join(format!("{stem}.json")), sidecar).unwrap();
    raw
}

#[test]
fn constant_stub_loads_value_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write_export(
        dir.path(),
        "img_000",
        6,
        4,
        7.0,
        r#"{"width": 6, "height": 4, "unit": "m"}"#,
    );
    let dm = load_depth(&raw, ValidRange::default()).unwrap();
    assert_eq!(dm.dimensions(), (6, 4));
    assert!(dm.values().iter().all(|v| *v == 7.0));
    assert_eq!(load_raw_sidecar(&raw).unwrap().intrinsics().unwrap(), None);
}

#[test]
fn recorded_focal_passes_through_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let true_fx = 1234.5678;
    let recorded = 1.5 * true_fx;
    let sidecar = format!(r#"{{"width": 8, "height": 6, "unit": "m", "fx_px": {recorded}, "fy_px": {recorded}}}"#);
    let raw = write_export(dir.path(), "a", 8, 6, 3.25, &sidecar);
    let sc = load_raw_sidecar(&raw).unwrap();
    assert_eq!(sc.fx_px, Some(recorded));
    let k = sc.intrinsics().unwrap().unwrap();
    assert_eq!((k.fx(), k.fy(), k.width(), k.height()), (recorded, recorded, 8, 6));

    // The same numbers dropped into a metadata row parse to identical intrinsics.
    let csv = dir.path().join("meta.csv");
    std::fs::write(
        &csv,
        format!(
            "image_id,lat,lon,bearing_deg,pitch_deg,fx_px,fy_px,width,height,timestamp,source\n\
             a,48.1,11.5,90,0,{},{},{},{},,adapter\n",
            sc.fx_px.unwrap(),
            sc.fy_px.unwrap(),
            sc.width,
            sc.height
        ),
    )
    .unwrap();
    let meta = &load_meta(&csv).unwrap()[0];
    assert_eq!(meta.intrinsics, k);
    assert_eq!(meta.pose, CameraPose::new(48.1, 11.5, 90.0, 0.0).unwrap());
}

#[test]
fn lone_fx_is_used_for_both_axes() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write_export(
        dir.path(),
        "b",
        2,
        2,
        1.0,
        r#"{"width": 2, "height": 2, "unit": "m", "fx_px": 500.0}"#,
    );
    let k = load_raw_sidecar(&raw).unwrap().intrinsics().unwrap().unwrap();
    assert_eq!(k, Intrinsics::new(500.0, 500.0, 2, 2).unwrap());
}

#[test]
fn malformed_sidecars_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fy_only = write_export(
        dir.path(),
        "c",
        2,
        2,
        1.0,
        r#"{"width": 2, "height": 2, "unit": "m", "fy_px": 500.0}"#,
    );
    assert!(load_raw_sidecar(&fy_only).unwrap().intrinsics().is_err());
    let mm = write_export(dir.path(), "d", 2, 2, 1.0, r#"{"width": 2, "height": 2, "unit": "mm"}"#);
    assert!(load_depth(&mm, ValidRange::default()).is_err());
    let short = write_export(dir.path(), "e", 2, 2, 1.0, r#"{"width": 3, "height": 2, "unit": "m"}"#);
    assert!(load_depth(&short, ValidRange::default()).is_err());
    let missing = dir.path().join("nothing.raw");
    std::fs::write(&missing, [0u8; 4]).unwrap();
    assert!(load_depth(&missing, ValidRange::default()).unwrap_err().is_io());
}
