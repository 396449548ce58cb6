use crate::geo::Intrinsics;
use crate::raster::{DepthMap, PointCloud, ValidRange};

/// Projects a camera-frame cloud through the pinhole model. Each point lands
/// on the nearest pixel centre; the nearest Z wins; uncovered pixels are NaN.
/// The stored value is Z, not the Euclidean range.
pub fn project_cloud(cloud: &PointCloud, k: &Intrinsics, valid_range: ValidRange) -> DepthMap {
    let (w, h) = (k.width(), k.height());
    let (cx, cy) = k.principal_point();
    let mut best = vec![f64::INFINITY; w as usize * h as usize];
    for &[x, y, z] in &cloud.points {
        if z <= 0.0 {
            continue;
        }
        let u = (cx + k.fx() * x / z).round();
        let v = (cy + k.fy() * y / z).round();
        if !(u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64) {
            continue;
        }
        let i = v as usize * w as usize + u as usize;
        if z < best[i] {
            best[i] = z;
        }
    }
    let values = best
        .into_iter()
        .map(|z| if z.is_finite() { z as f32 } else { f32::NAN })
        .collect();
    DepthMap::new(w, h, values, valid_range).expect("dimensions match by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> Intrinsics {
        Intrinsics::new(960.0, 960.0, 2400, 1000).unwrap()
    }

    #[test]
    fn single_axis_point() {
        let dm = project_cloud(
            &PointCloud::new(vec![[0.0, 0.0, 10.0]]).unwrap(),
            &k(),
            ValidRange::default(),
        );
        assert_eq!(dm.get(1200, 500), Some(10.0));
        assert_eq!(dm.invalid_count(), 2400 * 1000 - 1);
    }

    #[test]
    fn forty_five_degrees_right() {
        let dm = project_cloud(
            &PointCloud::new(vec![[10.0, 0.0, 10.0]]).unwrap(),
            &k(),
            ValidRange::default(),
        );
        assert_eq!(dm.get(1200 + 960, 500), Some(10.0));
    }

    #[test]
    fn z_buffer_keeps_nearest() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 10.0], [0.0, 0.0, 8.0], [0.0, 0.0, 9.0]]).unwrap();
        let dm = project_cloud(&cloud, &k(), ValidRange::default());
        assert_eq!(dm.get(1200, 500), Some(8.0));
    }

    #[test]
    fn behind_and_outside_points_are_dropped() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, -5.0], [0.0, 0.0, 0.0], [100.0, 0.0, 1.0]]).unwrap();
        let dm = project_cloud(&cloud, &k(), ValidRange::default());
        assert_eq!(dm.invalid_count(), 2400 * 1000);
        let empty = project_cloud(&PointCloud::new(vec![]).unwrap(), &k(), ValidRange::default());
        assert_eq!(empty.invalid_count(), 2400 * 1000);
    }
}
