//! Single-image geolocation geometry.
//!
//! A pixel is turned into a ground position in four steps:
//!
//! 1. pixel offsets from the principal point are normalised by the focal
//!    lengths and turned into angular offsets (`atan`),
//! 2. the offsets are added to the camera's compass bearing and pitch,
//! 3. the metric depth along that direction is split into a horizontal
//!    east/north displacement,
//! 4. the displacement is converted to latitude/longitude deltas on a
//!    spherical Earth and added to the camera position.
//!
//! Bearings are compass bearings (0 = north, clockwise). Written with an
//! east-referenced math angle `theta = 90 - bearing` the displacement is
//! `east = d_h * cos(theta)`, `north = d_h * sin(theta)`; this module uses
//! the equivalent `east = d_h * sin(bearing)`, `north = d_h * cos(bearing)`.
//!
//! Image rows grow downward, so the vertical offset is measured as
//! `(cy - y) / fy`: positive angles are above the optical axis and add to a
//! positive-up pitch. Pixel centres sit on integer coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), metres.
pub const MEAN_EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Origins closer to a pole than this are rejected by [`displacement_to_geo`].
pub const MAX_ORIGIN_LATITUDE_DEG: f64 = 89.9;

/// Spherical Earth used for displacement and distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    radius_m: f64,
}

impl EarthModel {
    pub fn new(radius_m: f64) -> Result<Self> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "earth radius must be positive, got {radius_m}"
            )));
        }
        Ok(Self { radius_m })
    }

    pub fn radius(&self) -> f64 {
        self.radius_m
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        Self {
            radius_m: MEAN_EARTH_RADIUS_M,
        }
    }
}

/// Pinhole intrinsics. The principal point defaults to the image centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    fx: f64,
    fy: f64,
    width: u32,
    height: u32,
    principal: Option<[f64; 2]>,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx.is_finite() && fx > 0.0 && fy.is_finite() && fy > 0.0) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidIntrinsics(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            width,
            height,
            principal: None,
        })
    }

    /// Overrides the principal point (pixels).
    pub fn with_principal_point(mut self, cx: f64, cy: f64) -> Result<Self> {
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidIntrinsics("principal point must be finite".into()));
        }
        self.principal = Some([cx, cy]);
        Ok(self)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn principal_point(&self) -> (f64, f64) {
        match self.principal {
            Some([cx, cy]) => (cx, cy),
            None => (self.width as f64 / 2.0, self.height as f64 / 2.0),
        }
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }
}

/// Image position: `x` is the column (left to right), `y` the row (top to bottom).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Angles of a pixel ray relative to the optical axis, radians.
/// `alpha_x` is positive to the right, `alpha_y` positive above the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularOffsets {
    pub alpha_x: f64,
    pub alpha_y: f64,
}

/// Camera position and orientation at the time of recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    lat: f64,
    lon: f64,
    bearing: f64,
    pitch: f64,
}

impl CameraPose {
    /// Degrees throughout. Longitude and bearing are normalised; latitude and
    /// pitch are validated.
    pub fn new(lat: f64, lon: f64, bearing: f64, pitch: f64) -> Result<Self> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::InvalidPose(format!("latitude {lat} out of range")));
        }
        if !lon.is_finite() || !bearing.is_finite() {
            return Err(Error::InvalidPose("longitude and bearing must be finite".into()));
        }
        if !(pitch.is_finite() && pitch.abs() < 90.0) {
            return Err(Error::InvalidPose(format!("pitch {pitch} must be within (-90, 90)")));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
            bearing: normalize_bearing(bearing),
            pitch,
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Compass bearing of the optical axis in `[0, 360)`.
    pub fn bearing(&self) -> f64 {
        self.bearing
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn position(&self) -> GeoPoint {
        GeoPoint {
            lat: self.lat,
            lon: self.lon,
        }
    }
}

/// Direction of a pixel ray in the world: compass bearing and pitch, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAngles {
    pub bearing_deg: f64,
    pub pitch_deg: f64,
}

/// Horizontal displacement from the camera to a target, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnuDisplacement {
    pub east: f64,
    pub north: f64,
    pub horizontal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validates latitude and normalises longitude into `(-180, 180]`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::InvalidParameter(format!("latitude {lat} out of range")));
        }
        if !lon.is_finite() {
            return Err(Error::InvalidParameter(format!("longitude {lon} not finite")));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }
}

/// Output of [`locate_pixel`] with the intermediate quantities kept for
/// database matching and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub point: GeoPoint,
    pub offsets: AngularOffsets,
    pub angles: EffectiveAngles,
    pub displacement: EnuDisplacement,
    /// Height of the target relative to the camera (`d * sin(pitch_eff)`).
    pub vertical_m: f64,
}

/// Maps any finite bearing into `[0, 360)`.
pub fn normalize_bearing(deg: f64) -> f64 {
    if (0.0..360.0).contains(&deg) {
        return deg;
    }
    let b = deg.rem_euclid(360.0);
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}

/// Maps any finite longitude into `(-180, 180]`.
pub fn normalize_lon(deg: f64) -> f64 {
    // In-range values pass through untouched so small negatives keep full precision.
    if deg > -180.0 && deg <= 180.0 {
        return deg;
    }
    let l = deg.rem_euclid(360.0);
    if l > 180.0 {
        l - 360.0
    } else {
        l
    }
}

/// Signed angular difference folded into `(-180, 180]`.
pub fn wrap_angle_deg(deg: f64) -> f64 {
    normalize_lon(deg)
}

pub fn pixel_to_angles(p: PixelCoord, k: &Intrinsics) -> Result<AngularOffsets> {
    if !k.contains(p) {
        return Err(Error::PixelOutOfBounds {
            x: p.x,
            y: p.y,
            width: k.width,
            height: k.height,
        });
    }
    let (cx, cy) = k.principal_point();
    let x_norm = (p.x - cx) / k.fx;
    let y_norm = (cy - p.y) / k.fy;
    Ok(AngularOffsets {
        alpha_x: x_norm.atan(),
        alpha_y: y_norm.atan(),
    })
}

pub fn effective_angles(pose: &CameraPose, a: AngularOffsets) -> Result<EffectiveAngles> {
    let bearing_deg = normalize_bearing(pose.bearing + a.alpha_x.to_degrees());
    let pitch_deg = pose.pitch + a.alpha_y.to_degrees();
    if pitch_deg.abs() >= 90.0 {
        return Err(Error::AboveHorizon { pitch_deg });
    }
    Ok(EffectiveAngles { bearing_deg, pitch_deg })
}

pub fn angles_to_displacement(depth_m: f64, e: EffectiveAngles) -> Result<EnuDisplacement> {
    if !(depth_m.is_finite() && depth_m > 0.0) {
        return Err(Error::InvalidDepth(depth_m));
    }
    let horizontal = depth_m * e.pitch_deg.to_radians().cos();
    let (sin_b, cos_b) = e.bearing_deg.to_radians().sin_cos();
    Ok(EnuDisplacement {
        east: horizontal * sin_b,
        north: horizontal * cos_b,
        horizontal,
    })
}

pub fn displacement_to_geo(disp: EnuDisplacement, origin: GeoPoint, em: &EarthModel) -> Result<GeoPoint> {
    if origin.lat.abs() >= MAX_ORIGIN_LATITUDE_DEG {
        return Err(Error::DegenerateLatitude(origin.lat));
    }
    let r = em.radius();
    let dlat = disp.north / r;
    let dlon = disp.east / (r * origin.lat.to_radians().cos());
    let lat = origin.lat + dlat.to_degrees();
    if lat.abs() > 90.0 {
        return Err(Error::DegenerateLatitude(lat));
    }
    Ok(GeoPoint {
        lat,
        lon: normalize_lon(origin.lon + dlon.to_degrees()),
    })
}

/// Inverse of [`displacement_to_geo`]: east/north metres from `origin` to `target`
/// in the same local linearisation.
pub fn local_offset(target: GeoPoint, origin: GeoPoint, em: &EarthModel) -> Result<(f64, f64)> {
    if origin.lat.abs() >= MAX_ORIGIN_LATITUDE_DEG {
        return Err(Error::DegenerateLatitude(origin.lat));
    }
    let r = em.radius();
    let north = (target.lat - origin.lat).to_radians() * r;
    let dlon = wrap_angle_deg(target.lon - origin.lon);
    let east = dlon.to_radians() * r * origin.lat.to_radians().cos();
    Ok((east, north))
}

/// Geolocates the surface seen at pixel `p` at metric distance `depth_m`.
pub fn locate_pixel(
    p: PixelCoord,
    depth_m: f64,
    pose: &CameraPose,
    k: &Intrinsics,
    em: &EarthModel,
) -> Result<Located> {
    let offsets = pixel_to_angles(p, k)?;
    let angles = effective_angles(pose, offsets)?;
    let displacement = angles_to_displacement(depth_m, angles)?;
    let point = displacement_to_geo(displacement, pose.position(), em)?;
    Ok(Located {
        point,
        offsets,
        angles,
        displacement,
        vertical_m: depth_m * angles.pitch_deg.to_radians().sin(),
    })
}

/// Finds the pixel and depth at which `target` appears.
///
/// The target is assumed to sit at camera height unless `height_offset_m`
/// (target height minus camera height) is given.
pub fn inverse_locate(
    target: GeoPoint,
    height_offset_m: Option<f64>,
    pose: &CameraPose,
    k: &Intrinsics,
    em: &EarthModel,
) -> Result<(PixelCoord, f64)> {
    let (east, north) = local_offset(target, pose.position(), em)?;
    let dz = height_offset_m.unwrap_or(0.0);
    let horizontal = east.hypot(north);
    if horizontal == 0.0 {
        return Err(Error::NotVisible(
            "target has no horizontal offset from the camera".into(),
        ));
    }
    let bearing_eff = east.atan2(north).to_degrees();
    let pitch_eff = dz.atan2(horizontal).to_degrees();
    let depth = horizontal.hypot(dz);

    let alpha_x = wrap_angle_deg(bearing_eff - pose.bearing);
    let alpha_y = pitch_eff - pose.pitch;
    if alpha_x.abs() >= 90.0 || alpha_y.abs() >= 90.0 {
        return Err(Error::NotVisible(format!(
            "target is {alpha_x:.3} deg / {alpha_y:.3} deg off the optical axis"
        )));
    }
    let (cx, cy) = k.principal_point();
    let pixel = PixelCoord {
        x: cx + k.fx * alpha_x.to_radians().tan(),
        y: cy - k.fy * alpha_y.to_radians().tan(),
    };
    // Round-off can push a target seen at the first row or column just outside.
    const EDGE_TOL_PX: f64 = 1e-6;
    let inside =
        pixel.x >= -EDGE_TOL_PX && pixel.y >= -EDGE_TOL_PX && pixel.x < k.width as f64 && pixel.y < k.height as f64;
    if !inside {
        return Err(Error::NotVisible(format!(
            "target projects to ({:.2}, {:.2}), outside the image",
            pixel.x, pixel.y
        )));
    }
    Ok((pixel, depth))
}

/// Great-circle (haversine) distance in metres.
pub fn geo_distance(a: GeoPoint, b: GeoPoint, em: &EarthModel) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * em.radius() * h.sqrt().min(1.0).asin()
}

/// Initial great-circle compass bearing from `from` to `to`, degrees in `[0, 360)`.
pub fn initial_bearing(from: GeoPoint, to: GeoPoint) -> f64 {
    let (phi1, phi2) = (from.lat.to_radians(), to.lat.to_radians());
    let dlambda = (to.lon - from.lon).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    normalize_bearing(y.atan2(x).to_degrees())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn k1920() -> Intrinsics {
        Intrinsics::new(960.0, 960.0, 1920, 1080).unwrap()
    }

    #[test]
    fn in_range_angles_are_not_rounded() {
        assert_eq!(normalize_lon(-8.7e-6), -8.7e-6);
        assert_eq!(wrap_angle_deg(-1e-12), -1e-12);
        assert_eq!(normalize_bearing(1e-15), 1e-15);
        assert_eq!(normalize_lon(-180.0), 180.0);
        assert_eq!(normalize_lon(190.0), -170.0);
        assert_eq!(normalize_bearing(-90.0), 270.0);
    }

    #[test]
    fn optical_axis_pixel_has_zero_offsets() {
        let a = pixel_to_angles(PixelCoord::new(960.0, 540.0), &k1920()).unwrap();
        assert_eq!(a.alpha_x, 0.0);
        assert_eq!(a.alpha_y, 0.0);
    }

    #[test]
    fn focal_length_offset_is_45_degrees() {
        let k = Intrinsics::new(960.0, 960.0, 2400, 1080).unwrap();
        let a = pixel_to_angles(PixelCoord::new(1200.0 + 960.0, 540.0), &k).unwrap();
        assert_relative_eq!(a.alpha_x.to_degrees(), 45.0, epsilon = 1e-12);
    }

    #[test]
    fn half_focal_offset_matches_arctan_oracle() {
        // atan(0.5) in degrees: 26.565051177077989351572193720453...
        let expected = 26.565_051_177_077_99;
        let a = pixel_to_angles(PixelCoord::new(960.0 + 480.0, 540.0), &k1920()).unwrap();
        assert_relative_eq!(a.alpha_x.to_degrees(), expected, epsilon = 1e-12);
    }

    #[test]
    fn rows_above_centre_have_positive_alpha_y() {
        let a = pixel_to_angles(PixelCoord::new(960.0, 100.0), &k1920()).unwrap();
        assert!(a.alpha_y > 0.0);
    }

    #[test]
    fn out_of_bounds_pixel_is_rejected() {
        let k = k1920();
        for p in [(-0.1, 5.0), (1920.0, 5.0), (5.0, 1080.0), (5.0, -1.0)] {
            let err = pixel_to_angles(PixelCoord::new(p.0, p.1), &k).unwrap_err();
            assert!(matches!(err, Error::PixelOutOfBounds { .. }));
        }
    }

    #[test]
    fn corner_pixel_inverts() {
        let em = EarthModel::default();
        let k = Intrinsics::new(500.0, 500.0, 640, 480).unwrap();
        let pose = CameraPose::new(-33.9, 151.2, 123.4, 3.0).unwrap();
        for d in [1.7, 13.3, 87.9] {
            let p = PixelCoord::new(0.0, 0.0);
            let loc = locate_pixel(p, d, &pose, &k, &em).unwrap();
            let (q, _) = inverse_locate(loc.point, Some(loc.vertical_m), &pose, &k, &em).unwrap();
            assert!(q.x.abs() < 1e-6 && q.y.abs() < 1e-6, "{q:?}");
        }
    }

    #[test]
    fn effective_angles_add_and_wrap() {
        let deg = |d: f64| d.to_radians();
        let pose = CameraPose::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let e = effective_angles(
            &pose,
            AngularOffsets {
                alpha_x: 0.0,
                alpha_y: 0.0,
            },
        )
        .unwrap();
        assert_eq!((e.bearing_deg, e.pitch_deg), (0.0, 0.0));

        let pose = CameraPose::new(0.0, 0.0, 350.0, 0.0).unwrap();
        let e = effective_angles(
            &pose,
            AngularOffsets {
                alpha_x: deg(20.0),
                alpha_y: 0.0,
            },
        )
        .unwrap();
        assert_relative_eq!(e.bearing_deg, 10.0, epsilon = 1e-12);

        let pose = CameraPose::new(0.0, 0.0, 90.0, -5.0).unwrap();
        let e = effective_angles(
            &pose,
            AngularOffsets {
                alpha_x: deg(45.0),
                alpha_y: deg(-10.0),
            },
        )
        .unwrap();
        assert_relative_eq!(e.bearing_deg, 135.0, epsilon = 1e-12);
        assert_relative_eq!(e.pitch_deg, -15.0, epsilon = 1e-12);
    }

    #[test]
    fn vertical_effective_pitch_is_flagged() {
        let pose = CameraPose::new(0.0, 0.0, 0.0, 60.0).unwrap();
        let err = effective_angles(
            &pose,
            AngularOffsets {
                alpha_x: 0.0,
                alpha_y: 30f64.to_radians(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::AboveHorizon { .. }));
    }

    #[test]
    fn displacement_examples() {
        let north = angles_to_displacement(
            10.0,
            EffectiveAngles {
                bearing_deg: 0.0,
                pitch_deg: 0.0,
            },
        )
        .unwrap();
        assert_eq!(north.north, 10.0);
        assert_eq!(north.east, 0.0);
        assert_eq!(north.horizontal, 10.0);

        let pitched = angles_to_displacement(
            2.0,
            EffectiveAngles {
                bearing_deg: 0.0,
                pitch_deg: 60.0,
            },
        )
        .unwrap();
        assert_relative_eq!(pitched.horizontal, 1.0, epsilon = 1e-15);

        let d = angles_to_displacement(
            10.0,
            EffectiveAngles {
                bearing_deg: 60.0,
                pitch_deg: 0.0,
            },
        )
        .unwrap();
        assert_relative_eq!(d.east, 8.660_254_037_844_386, epsilon = 1e-12);
        assert_relative_eq!(d.north, 5.0, epsilon = 1e-12);
        assert_eq!(d.horizontal, 10.0);

        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                angles_to_displacement(
                    bad,
                    EffectiveAngles {
                        bearing_deg: 0.0,
                        pitch_deg: 0.0
                    }
                ),
                Err(Error::InvalidDepth(_))
            ));
        }
    }

    #[test]
    fn displacement_to_geo_examples() {
        let em = EarthModel::new(6_371_000.0).unwrap();
        let origin = GeoPoint::new(0.0, 0.0).unwrap();
        let zero = EnuDisplacement {
            east: 0.0,
            north: 0.0,
            horizontal: 0.0,
        };
        assert_eq!(displacement_to_geo(zero, origin, &em).unwrap(), origin);

        // (180/pi) * 111195 / 6371000, 40-digit evaluation
        let p = displacement_to_geo(
            EnuDisplacement {
                east: 0.0,
                north: 111_195.0,
                horizontal: 111_195.0,
            },
            origin,
            &em,
        )
        .unwrap();
        assert_relative_eq!(p.lat, 1.000_000_659_701_332_4, epsilon = 1e-13);

        // (180/pi) * 1000 / (6371000 * cos 60deg)
        let origin = GeoPoint::new(60.0, 0.0).unwrap();
        let p = displacement_to_geo(
            EnuDisplacement {
                east: 1000.0,
                north: 0.0,
                horizontal: 1000.0,
            },
            origin,
            &em,
        )
        .unwrap();
        assert_relative_eq!(p.lon, 0.017_986_432_118_374_61, epsilon = 1e-14);
    }

    #[test]
    fn polar_origin_is_rejected() {
        let em = EarthModel::default();
        let d = EnuDisplacement {
            east: 1.0,
            north: 0.0,
            horizontal: 1.0,
        };
        let err = displacement_to_geo(d, GeoPoint::new(89.95, 0.0).unwrap(), &em).unwrap_err();
        assert!(matches!(err, Error::DegenerateLatitude(_)));
    }

    #[test]
    fn longitude_wraps_across_antimeridian() {
        let em = EarthModel::default();
        let origin = GeoPoint::new(0.0, 179.99999).unwrap();
        let p = displacement_to_geo(
            EnuDisplacement {
                east: 100.0,
                north: 0.0,
                horizontal: 100.0,
            },
            origin,
            &em,
        )
        .unwrap();
        assert!(p.lon < -179.9 && p.lon > -180.0);
        let (east, _) = local_offset(p, origin, &em).unwrap();
        assert_relative_eq!(east, 100.0, epsilon = 1e-6);
    }

    #[test]
    fn equator_east_metre_is_one_radian_over_r() {
        let em = EarthModel::default();
        let origin = GeoPoint::new(0.0, 10.0).unwrap();
        let p = displacement_to_geo(
            EnuDisplacement {
                east: 1.0,
                north: 0.0,
                horizontal: 1.0,
            },
            origin,
            &em,
        )
        .unwrap();
        assert_relative_eq!(p.lon - 10.0, (1.0 / em.radius()).to_degrees(), max_relative = 1e-6);
    }

    #[test]
    fn centre_pixel_lands_due_north() {
        let em = EarthModel::default();
        let k = k1920();
        let pose = CameraPose::new(48.0, 11.0, 0.0, 0.0).unwrap();
        let located = locate_pixel(PixelCoord::new(960.0, 540.0), 100.0, &pose, &k, &em).unwrap();
        assert_relative_eq!(geo_distance(located.point, pose.position(), &em), 100.0, epsilon = 1e-6);
        assert!((located.point.lon - 11.0).abs() < 1e-12);
        assert!(located.point.lat > 48.0);
    }

    #[test]
    fn inverse_of_due_north_point_is_centre_pixel() {
        let em = EarthModel::default();
        let k = k1920();
        let pose = CameraPose::new(48.0, 11.0, 0.0, 0.0).unwrap();
        let target = locate_pixel(PixelCoord::new(960.0, 540.0), 100.0, &pose, &k, &em)
            .unwrap()
            .point;
        let (p, d) = inverse_locate(target, None, &pose, &k, &em).unwrap();
        assert!((p.x - 960.0).abs() < 1e-6 && (p.y - 540.0).abs() < 1e-6);
        assert_relative_eq!(d, 100.0, max_relative = 1e-9);
    }

    #[test]
    fn target_to_the_side_is_not_visible() {
        let em = EarthModel::default();
        let pose = CameraPose::new(48.0, 11.0, 0.0, 0.0).unwrap();
        let east = displacement_to_geo(
            EnuDisplacement {
                east: 50.0,
                north: 0.0,
                horizontal: 50.0,
            },
            pose.position(),
            &em,
        )
        .unwrap();
        let err = inverse_locate(east, None, &pose, &k1920(), &em).unwrap_err();
        assert!(matches!(err, Error::NotVisible(_)));
    }

    #[test]
    fn haversine_one_degree_of_longitude_at_equator() {
        let em = EarthModel::new(6_371_000.0).unwrap();
        let a = GeoPoint::new(0.0, 0.0).unwrap();
        let b = GeoPoint::new(0.0, 1.0).unwrap();
        // pi * R / 180, 40-digit evaluation
        assert_relative_eq!(geo_distance(a, b, &em), 111_194.926_644_558_74, epsilon = 1e-6);
        assert_eq!(geo_distance(a, a, &em), 0.0);
    }

    #[test]
    fn pose_normalises_bearing_and_longitude() {
        let pose = CameraPose::new(10.0, 190.0, 361.0, 0.0).unwrap();
        assert_relative_eq!(pose.bearing(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(pose.lon(), -170.0, epsilon = 1e-12);
        assert_eq!(CameraPose::new(0.0, 0.0, -90.0, 0.0).unwrap().bearing(), 270.0);
        assert!(CameraPose::new(91.0, 0.0, 0.0, 0.0).is_err());
        assert!(CameraPose::new(0.0, 0.0, 0.0, 90.0).is_err());
        assert_eq!(normalize_lon(-180.0), 180.0);
    }

    #[test]
    fn initial_bearing_cardinal_directions() {
        let o = GeoPoint::new(10.0, 10.0).unwrap();
        assert_relative_eq!(
            initial_bearing(o, GeoPoint::new(10.001, 10.0).unwrap()),
            0.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            initial_bearing(o, GeoPoint::new(10.0, 10.001).unwrap()),
            90.0,
            epsilon = 1e-3
        );
        assert_relative_eq!(
            initial_bearing(o, GeoPoint::new(9.999, 10.0).unwrap()),
            180.0,
            epsilon = 1e-9
        );
    }
}
