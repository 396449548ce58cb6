//! Per-object localisation: sample the depth under a detection and run the
//! pixel through the geolocation chain.

use serde::{Deserialize, Serialize};

use crate::config::RELIABLE_DISTANCE_M;
use crate::error::{Error, Result};
use crate::geo::{self, EarthModel, GeoPoint, PixelCoord};
use crate::raster::{DepthMap, Mask, RecordingMeta};

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::InvalidParameter(format!(
                "bbox ({x0}, {y0}, {x1}, {y1}) is not well ordered"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// Centre pixel, rounding half-way cases up.
    pub fn center(&self) -> (u32, u32) {
        ((self.x0 + self.x1).div_ceil(2), (self.y0 + self.y1).div_ceil(2))
    }

    fn check_bounds(&self, width: u32, height: u32) -> Result<()> {
        if self.x0 > self.x1 || self.y0 > self.y1 {
            return Err(Error::InvalidParameter("bbox is not well ordered".into()));
        }
        if self.x1 >= width || self.y1 >= height {
            return Err(Error::PixelOutOfBounds {
                x: self.x1 as f64,
                y: self.y1 as f64,
                width,
                height,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    BBox(BBox),
    Mask(Mask),
}

/// Upstream detector/segmenter output for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub id: Option<String>,
    pub class: String,
    pub shape: Shape,
    pub score: Option<f64>,
}

/// How masked depths are combined into one object distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthAggregate {
    #[default]
    Mean,
    Median,
}

/// Depth assigned to a detection and the pixel it is attributed to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub depth_m: f64,
    pub pixel: PixelCoord,
}

/// A localised object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: String,
    pub class: String,
    pub point: GeoPoint,
    /// Outermost left/right points for objects with a horizontal extent.
    pub extent: Option<[GeoPoint; 2]>,
    /// Source image first; merged records list every contributing image.
    pub image_ids: Vec<String>,
    /// Camera position of the source recording.
    pub camera: Option<GeoPoint>,
    pub bearing_eff_deg: f64,
    /// Estimated camera-object distance, metres.
    pub distance_m: f64,
    pub reliable: bool,
    pub score: Option<f64>,
}

impl ObjectRecord {
    pub fn image_id(&self) -> &str {
        self.image_ids.first().map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub earth: EarthModel,
    pub aggregate: DepthAggregate,
    pub reliable_below_m: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            earth: EarthModel::default(),
            aggregate: DepthAggregate::Mean,
            reliable_below_m: RELIABLE_DISTANCE_M,
        }
    }
}

/// Picks the object distance from the depth map.
///
/// Boxes use the centre pixel, falling back to the mean of the valid pixels
/// in the surrounding 3x3 window. Masks use the mean (or median) over valid
/// masked pixels, attributed to the centroid of those pixels.
pub fn object_depth(dm: &DepthMap, det: &Detection, aggregate: DepthAggregate) -> Result<DepthSample> {
    let (w, h) = dm.dimensions();
    match &det.shape {
        Shape::BBox(b) => {
            b.check_bounds(w, h)?;
            let (cx, cy) = b.center();
            let pixel = PixelCoord::new(cx as f64, cy as f64);
            if let Some(d) = dm.get(cx, cy) {
                return Ok(DepthSample { depth_m: d, pixel });
            }
            let mut sum = 0.0;
            let mut n = 0usize;
            for y in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for x in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    if let Some(d) = dm.get(x, y) {
                        sum += d;
                        n += 1;
                    }
                }
            }
            if n == 0 {
                return Err(Error::NoDepth);
            }
            Ok(DepthSample {
                depth_m: sum / n as f64,
                pixel,
            })
        }
        Shape::Mask(mask) => {
            if mask.dimensions() != (w, h) {
                return Err(Error::DimensionMismatch {
                    expected: (w, h),
                    found: mask.dimensions(),
                });
            }
            let mut depths = Vec::new();
            let (mut sx, mut sy) = (0.0, 0.0);
            for (x, y) in mask.pixels() {
                if let Some(d) = dm.get(x, y) {
                    depths.push(d);
                    sx += x as f64;
                    sy += y as f64;
                }
            }
            if depths.is_empty() {
                return Err(Error::NoDepth);
            }
            let n = depths.len() as f64;
            let depth_m = match aggregate {
                DepthAggregate::Mean => depths.iter().sum::<f64>() / n,
                DepthAggregate::Median => median(&mut depths),
            };
            Ok(DepthSample {
                depth_m,
                pixel: PixelCoord::new(sx / n, sy / n),
            })
        }
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Leftmost and rightmost valid mask pixels; within a column the pixel
/// closest to `row` wins (upper one on ties).
fn outermost_pixels(dm: &DepthMap, mask: &Mask, row: f64) -> Option<[(u32, u32); 2]> {
    let mut left: Option<(u32, u32)> = None;
    let mut right: Option<(u32, u32)> = None;
    let closer = |cand: (u32, u32), best: (u32, u32)| (cand.1 as f64 - row).abs() < (best.1 as f64 - row).abs();
    for (x, y) in mask.pixels() {
        if dm.get(x, y).is_none() {
            continue;
        }
        match left {
            Some(l) if x > l.0 || (x == l.0 && !closer((x, y), l)) => {}
            _ => left = Some((x, y)),
        }
        match right {
            Some(r) if x < r.0 || (x == r.0 && !closer((x, y), r)) => {}
            _ => right = Some((x, y)),
        }
    }
    match (left, right) {
        (Some(l), Some(r)) if l.0 < r.0 => Some([l, r]),
        _ => None,
    }
}

pub fn detection_id(meta: &RecordingMeta, det: &Detection, index: usize) -> String {
    det.id.clone().unwrap_or_else(|| format!("{}/{}", meta.image_id, index))
}

fn locate_with_id(
    det: &Detection,
    dm: &DepthMap,
    meta: &RecordingMeta,
    opts: &LocateOptions,
    id: String,
) -> Result<ObjectRecord> {
    let sample = object_depth(dm, det, opts.aggregate)?;
    let k = &meta.intrinsics;
    let located = geo::locate_pixel(sample.pixel, sample.depth_m, &meta.pose, k, &opts.earth)?;

    let mut extent = None;
    if let Shape::Mask(mask) = &det.shape {
        if let Some(ends) = outermost_pixels(dm, mask, sample.pixel.y) {
            let mut pts = [located.point; 2];
            for (slot, (x, y)) in pts.iter_mut().zip(ends) {
                let d = dm.get(x, y).expect("outermost pixels are valid");
                let p = PixelCoord::new(x as f64, y as f64);
                *slot = geo::locate_pixel(p, d, &meta.pose, k, &opts.earth)?.point;
            }
            let limit = 2.0 * sample.depth_m;
            if pts
                .iter()
                .all(|p| geo::geo_distance(*p, located.point, &opts.earth) <= limit)
            {
                extent = Some(pts);
            } else {
                log::warn!("{id}: extent endpoints too far from the centre, dropped");
            }
        }
    }

    Ok(ObjectRecord {
        id,
        class: det.class.clone(),
        point: located.point,
        extent,
        image_ids: vec![meta.image_id.clone()],
        camera: Some(meta.pose.position()),
        bearing_eff_deg: located.angles.bearing_deg,
        distance_m: sample.depth_m,
        reliable: sample.depth_m < opts.reliable_below_m,
        score: det.score,
    })
}

/// Localises one detection. The record id is the detection id, or
/// `<image_id>/0` when the detection has none.
pub fn locate_object(
    det: &Detection,
    dm: &DepthMap,
    meta: &RecordingMeta,
    opts: &LocateOptions,
) -> Result<ObjectRecord> {
    locate_with_id(det, dm, meta, opts, detection_id(meta, det, 0))
}

/// A detection that could not be localised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub image_id: String,
    pub detection: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageResult {
    pub records: Vec<ObjectRecord>,
    pub skipped: Vec<Skipped>,
}

/// Localises every detection of one image; failures are reported, not fatal.
pub fn process_image(
    meta: &RecordingMeta,
    dm: &DepthMap,
    dets: &[Detection],
    opts: &LocateOptions,
) -> Result<ImageResult> {
    let expected = (meta.intrinsics.width(), meta.intrinsics.height());
    if dm.dimensions() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: dm.dimensions(),
        });
    }
    let mut out = ImageResult::default();
    for (i, det) in dets.iter().enumerate() {
        let id = detection_id(meta, det, i);
        match locate_with_id(det, dm, meta, opts, id.clone()) {
            Ok(r) => out.records.push(r),
            Err(e) => {
                log::info!("{}: skipping {id}: {e}", meta.image_id);
                out.skipped.push(Skipped {
                    image_id: meta.image_id.clone(),
                    detection: id,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::geo::{CameraPose, Intrinsics};
    use crate::raster::ValidRange;

    fn meta(w: u32, h: u32) -> RecordingMeta {
        RecordingMeta {
            image_id: "img".into(),
            pose: CameraPose::new(48.0, 11.0, 0.0, 0.0).unwrap(),
            intrinsics: Intrinsics::new(960.0, 960.0, w, h).unwrap(),
            timestamp: None,
            source: "test".into(),
        }
    }

    fn bbox_det(b: BBox) -> Detection {
        Detection {
            id: None,
            class: "sign".into(),
            shape: Shape::BBox(b),
            score: None,
        }
    }

    fn mask_det(w: u32, h: u32, px: &[(u32, u32)]) -> Detection {
        Detection {
            id: None,
            class: "sign".into(),
            shape: Shape::Mask(Mask::from_pixels(w, h, px).unwrap()),
            score: None,
        }
    }

    #[test]
    fn uniform_map_gives_uniform_depth() {
        let dm = DepthMap::filled(20, 10, 10.0, ValidRange::default()).unwrap();
        for b in [
            BBox::new(0, 0, 19, 9).unwrap(),
            BBox::new(3, 4, 3, 4).unwrap(),
            BBox::new(5, 1, 8, 2).unwrap(),
        ] {
            let s = object_depth(&dm, &bbox_det(b), DepthAggregate::Mean).unwrap();
            assert_eq!(s.depth_m, 10.0);
        }
    }

    #[test]
    fn mask_mean_ignores_invalid_pixels() {
        let dm = DepthMap::new(3, 1, vec![4.0, 6.0, f32::NAN], ValidRange::default()).unwrap();
        let two = mask_det(3, 1, &[(0, 0), (1, 0)]);
        assert_eq!(object_depth(&dm, &two, DepthAggregate::Mean).unwrap().depth_m, 5.0);
        let three = mask_det(3, 1, &[(0, 0), (1, 0), (2, 0)]);
        let s = object_depth(&dm, &three, DepthAggregate::Mean).unwrap();
        assert_eq!(s.depth_m, 5.0);
        assert_eq!(s.pixel, PixelCoord::new(0.5, 0.0));
    }

    #[test]
    fn median_option_resists_outliers() {
        let dm = DepthMap::new(3, 1, vec![4.0, 5.0, 150.0], ValidRange::default()).unwrap();
        let det = mask_det(3, 1, &[(0, 0), (1, 0), (2, 0)]);
        assert_eq!(object_depth(&dm, &det, DepthAggregate::Median).unwrap().depth_m, 5.0);
    }

    #[test]
    fn even_sized_bbox_centre_rounds_up() {
        assert_eq!(BBox::new(0, 0, 1, 3).unwrap().center(), (1, 2));
        assert_eq!(BBox::new(2, 2, 4, 4).unwrap().center(), (3, 3));
    }

    #[test]
    fn dead_centre_pixel_falls_back_to_neighbourhood() {
        let mut dm = DepthMap::filled(5, 5, 8.0, ValidRange::default()).unwrap();
        dm.set(2, 2, f32::NAN);
        dm.set(1, 1, 2.0);
        let s = object_depth(&dm, &bbox_det(BBox::new(0, 0, 4, 4).unwrap()), DepthAggregate::Mean).unwrap();
        assert_relative_eq!(s.depth_m, (7.0 * 8.0 + 2.0) / 8.0);
        assert_eq!(s.pixel, PixelCoord::new(2.0, 2.0));
    }

    #[test]
    fn all_invalid_is_no_depth() {
        let dm = DepthMap::filled(5, 5, f32::INFINITY, ValidRange::default()).unwrap();
        let err = object_depth(&dm, &bbox_det(BBox::new(1, 1, 3, 3).unwrap()), DepthAggregate::Mean).unwrap_err();
        assert!(matches!(err, Error::NoDepth));
        let err = object_depth(&dm, &mask_det(5, 5, &[(0, 0)]), DepthAggregate::Mean).unwrap_err();
        assert!(matches!(err, Error::NoDepth));
    }

    #[test]
    fn out_of_bounds_bbox_and_mismatched_mask() {
        let dm = DepthMap::filled(5, 5, 1.0, ValidRange::default()).unwrap();
        assert!(object_depth(
            &dm,
            &bbox_det(BBox {
                x0: 0,
                y0: 0,
                x1: 5,
                y1: 1
            }),
            DepthAggregate::Mean
        )
        .is_err());
        assert!(object_depth(
            &dm,
            &bbox_det(BBox {
                x0: 3,
                y0: 0,
                x1: 1,
                y1: 1
            }),
            DepthAggregate::Mean
        )
        .is_err());
        let err = object_depth(&dm, &mask_det(4, 5, &[(0, 0)]), DepthAggregate::Mean).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn centre_bbox_at_100m_is_due_north_and_unreliable() {
        let m = meta(1920, 1080);
        let dm = DepthMap::filled(1920, 1080, 100.0, ValidRange::default()).unwrap();
        let r = locate_object(
            &bbox_det(BBox::new(950, 530, 970, 550).unwrap()),
            &dm,
            &m,
            &LocateOptions::default(),
        )
        .unwrap();
        let em = EarthModel::default();
        assert_relative_eq!(
            geo::geo_distance(r.point, m.pose.position(), &em),
            100.0,
            epsilon = 1e-6
        );
        assert!((r.point.lon - 11.0).abs() < 1e-12);
        assert!(!r.reliable);
        assert_eq!(r.distance_m, 100.0);
        assert_eq!(r.image_ids, vec!["img".to_string()]);
        assert_eq!(r.camera, Some(m.pose.position()));
    }

    #[test]
    fn single_pixel_mask_equals_degenerate_bbox() {
        let m = meta(64, 48);
        let dm = DepthMap::new(
            64,
            48,
            (0..64 * 48).map(|i| 3.0 + (i % 97) as f32 * 0.25).collect(),
            ValidRange::default(),
        )
        .unwrap();
        let opts = LocateOptions::default();
        for (x, y) in [(0, 0), (17, 30), (63, 47)] {
            let a = locate_object(&mask_det(64, 48, &[(x, y)]), &dm, &m, &opts).unwrap();
            let b = locate_object(&bbox_det(BBox::new(x, y, x, y).unwrap()), &dm, &m, &opts).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reliability_threshold_is_strict() {
        let m = meta(100, 100);
        let det = bbox_det(BBox::new(50, 50, 50, 50).unwrap());
        let opts = LocateOptions::default();
        for (d, reliable) in [(19.999f32, true), (20.0, false), (20.001, false), (1.0, true)] {
            let dm = DepthMap::filled(100, 100, d, ValidRange::default()).unwrap();
            assert_eq!(locate_object(&det, &dm, &m, &opts).unwrap().reliable, reliable, "{d}");
        }
    }

    #[test]
    fn process_image_reports_skips() {
        let m = meta(10, 10);
        let mut values = vec![12.0f32; 100];
        for v in values.iter_mut().take(30) {
            *v = f32::NAN; // sky in the top three rows
        }
        let dm = DepthMap::new(10, 10, values, ValidRange::default()).unwrap();
        let dets = vec![
            bbox_det(BBox::new(0, 0, 9, 1).unwrap()),
            bbox_det(BBox::new(4, 6, 6, 8).unwrap()),
        ];
        let out = process_image(&m, &dm, &dets, &LocateOptions::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].id, "img/1");
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].detection, "img/0");

        assert!(process_image(&m, &dm, &[], &LocateOptions::default())
            .unwrap()
            .records
            .is_empty());
        let wrong = DepthMap::filled(9, 10, 1.0, ValidRange::default()).unwrap();
        assert!(matches!(
            process_image(&m, &wrong, &dets, &LocateOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
