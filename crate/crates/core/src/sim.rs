//! Synthetic street scenes with exact ground truth.
//!
//! A scene is a flat road, a camera at a fixed height and a set of vertical
//! camera-facing billboards. It is rendered twice:
//!
//! * along the rays of the additive-angle camera used by the locate chain,
//!   storing the range to the first hit (the depth the chain consumes);
//! * through an ideal pinhole camera, storing Z (the depth a projected LiDAR
//!   cloud yields). The point cloud is sampled from this pass.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, CameraPose, EarthModel, GeoPoint, Intrinsics, PixelCoord};
use crate::locate::{Detection, Shape};
use crate::raster::{CameraBasis, DepthMap, Mask, PointCloud, RecordingMeta, SemanticMap, ValidRange};

pub const ROAD_LABEL: u8 = 0;
pub const SIGN_LABEL: u8 = 7;
pub const SKY_LABEL: u8 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Billboard {
    pub id: String,
    pub class: String,
    /// Horizontal centre of the board.
    pub location: GeoPoint,
    pub width_m: f64,
    pub height_m: f64,
    /// Elevation of the lower edge above the road.
    pub base_elevation_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub meta: RecordingMeta,
    pub camera_height_m: f64,
    pub billboards: Vec<Billboard>,
    pub seed: u64,
    /// Multiplicative depth noise, as a fraction.
    pub depth_noise: f64,
    pub earth: EarthModel,
    pub valid_range: ValidRange,
    /// Every `cloud_stride`-th pixel of the pinhole pass, in both
    /// directions, contributes a cloud point.
    pub cloud_stride: u32,
}

impl SceneSpec {
    pub fn new(meta: RecordingMeta, camera_height_m: f64, billboards: Vec<Billboard>) -> Self {
        Self {
            meta,
            camera_height_m,
            billboards,
            seed: 0,
            depth_noise: 0.0,
            earth: EarthModel::default(),
            valid_range: ValidRange::default(),
            cloud_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.camera_height_m.is_finite() && self.camera_height_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "camera height must be positive, got {}",
                self.camera_height_m
            )));
        }
        if !(self.depth_noise.is_finite() && self.depth_noise >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "depth noise must be >= 0, got {}",
                self.depth_noise
            )));
        }
        if self.cloud_stride == 0 {
            return Err(Error::InvalidParameter("cloud stride must be at least 1".into()));
        }
        for b in &self.billboards {
            let ok =
                [b.width_m, b.height_m].iter().all(|v| v.is_finite() && *v > 0.0) && b.base_elevation_m.is_finite();
            if !ok {
                return Err(Error::InvalidParameter(format!("billboard {}: bad dimensions", b.id)));
            }
        }
        Ok(())
    }
}

/// Ground truth for one rendered billboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub id: String,
    pub class: String,
    pub point: GeoPoint,
    /// Horizontal camera-to-billboard distance.
    pub camera_distance_m: f64,
}

#[derive(Debug, Clone)]
pub struct RenderedScene {
    /// Range along the locate-chain rays; noise applied if requested.
    pub depth: DepthMap,
    pub labels: SemanticMap,
    /// Z depth through the pinhole camera, noiseless.
    pub pinhole_depth: DepthMap,
    pub pinhole_labels: SemanticMap,
    /// Camera-frame points (X right, Y down, Z forward).
    pub cloud: PointCloud,
    /// One exact mask per billboard with at least one visible pixel.
    pub detections: Vec<Detection>,
    pub truth: Vec<TruthObject>,
    pub diagnostics: Vec<String>,
}

/// A billboard placed in the camera's local frame (east, north, up), with
/// the camera at `(0, 0, camera_height)`.
struct Placed {
    index: usize,
    normal: [f64; 2],
    distance: f64,
    base: f64,
    top: f64,
    half_width: f64,
}

impl Placed {
    /// Ray parameter of the hit, for a ray from the camera along `dir`.
    fn hit(&self, dir: [f64; 3], cam_h: f64) -> Option<f64> {
        let along = self.normal[0] * dir[0] + self.normal[1] * dir[1];
        if along <= 0.0 {
            return None;
        }
        let t = self.distance / along;
        let lateral = self.normal[1] * t * dir[0] - self.normal[0] * t * dir[1];
        let z = cam_h + t * dir[2];
        (lateral.abs() <= self.half_width && z >= self.base && z <= self.top).then_some(t)
    }

    /// Corners and edge midpoints in local ENU.
    fn outline(&self, cam_h: f64) -> Vec<[f64; 3]> {
        let [nx, ny] = self.normal;
        let mut pts = Vec::with_capacity(9);
        for s in [-self.half_width, 0.0, self.half_width] {
            for z in [self.base, 0.5 * (self.base + self.top), self.top] {
                pts.push([nx * self.distance + ny * s, ny * self.distance - nx * s, z - cam_h]);
            }
        }
        pts
    }
}

struct Pass {
    depth: Vec<f32>,
    labels: Vec<u8>,
    owner: Vec<Option<usize>>,
}

impl Pass {
    fn new(n: usize) -> Self {
        Self {
            depth: vec![f32::NAN; n],
            labels: vec![SKY_LABEL; n],
            owner: vec![None; n],
        }
    }
}

fn bounds_from_pixels(pixels: &[Option<(f64, f64)>], w: u32, h: u32) -> (u32, u32, u32, u32) {
    let full = (0, 0, w - 1, h - 1);
    if pixels.iter().any(Option::is_none) {
        return full;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in pixels.iter().flatten() {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    let clamp = |v: f64, hi: u32| v.clamp(0.0, hi as f64) as u32;
    if x1 < -2.0 || y1 < -2.0 || x0 > w as f64 + 1.0 || y0 > h as f64 + 1.0 {
        return (1, 1, 0, 0);
    }
    (
        clamp((x0 - 2.0).floor(), w - 1),
        clamp((y0 - 2.0).floor(), h - 1),
        clamp((x1 + 2.0).ceil(), w - 1),
        clamp((y1 + 2.0).ceil(), h - 1),
    )
}

/// Ray direction of the additive-angle camera, unit length, in ENU.
fn angular_ray(pose: &CameraPose, k: &Intrinsics, x: f64, y: f64) -> [f64; 3] {
    let (cx, cy) = k.principal_point();
    let az = pose.bearing().to_radians() + ((x - cx) / k.fx()).atan();
    let el = pose.pitch().to_radians() + ((cy - y) / k.fy()).atan();
    [el.cos() * az.sin(), el.cos() * az.cos(), el.sin()]
}

/// Pinhole ray in ENU, scaled so its forward component is 1.
fn pinhole_ray(basis: &CameraBasis, k: &Intrinsics, x: f64, y: f64) -> ([f64; 3], [f64; 2]) {
    let (cx, cy) = k.principal_point();
    let (u, v) = ((x - cx) / k.fx(), (y - cy) / k.fy());
    let dir = [0, 1, 2].map(|i| u * basis.right[i] + v * basis.down[i] + basis.forward[i]);
    (dir, [u, v])
}

/// Ground hit along `dir` from a camera at height `h`.
fn ground_hit(dir: [f64; 3], h: f64) -> Option<f64> {
    (dir[2] < 0.0).then(|| h / -dir[2])
}

fn render_pass(
    spec: &SceneSpec,
    placed: &[Placed],
    bounds: &[(u32, u32, u32, u32)],
    ray: impl Fn(f64, f64) -> [f64; 3],
) -> Pass {
    let k = &spec.meta.intrinsics;
    let (w, h) = (k.width(), k.height());
    let cam_h = spec.camera_height_m;
    let mut pass = Pass::new(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            if let Some(t) = ground_hit(ray(x as f64, y as f64), cam_h) {
                let i = y as usize * w as usize + x as usize;
                pass.depth[i] = t as f32;
                pass.labels[i] = ROAD_LABEL;
            }
        }
    }
    for (p, &(x0, y0, x1, y1)) in placed.iter().zip(bounds) {
        for y in y0..=y1.min(h.saturating_sub(1)) {
            for x in x0..=x1.min(w.saturating_sub(1)) {
                let Some(t) = p.hit(ray(x as f64, y as f64), cam_h) else {
                    continue;
                };
                let i = y as usize * w as usize + x as usize;
                let current = pass.depth[i];
                if current.is_nan() || t < current as f64 {
                    pass.depth[i] = t as f32;
                    pass.labels[i] = SIGN_LABEL;
                    pass.owner[i] = Some(p.index);
                }
            }
        }
    }
    pass
}

/// Renders depth, labels, a point cloud, exact detections and ground truth.
/// Billboards whose centre is behind the camera or outside the image are
/// left out and reported in `diagnostics`.
pub fn render_depth(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let meta = &spec.meta;
    let (pose, k, em) = (&meta.pose, &meta.intrinsics, &spec.earth);
    let (w, h) = (k.width(), k.height());
    let cam_h = spec.camera_height_m;
    let (cx, cy) = k.principal_point();
    let mut diagnostics = Vec::new();
    let mut placed = Vec::new();
    let mut truth = Vec::new();
    for (index, b) in spec.billboards.iter().enumerate() {
        let centre_up = b.base_elevation_m + 0.5 * b.height_m - cam_h;
        if let Err(e) = geo::inverse_locate(b.location, Some(centre_up), pose, k, em) {
            let msg = format!("{}: omitted ({e})", b.id);
            log::warn!("{msg}");
            diagnostics.push(msg);
            continue;
        }
        let (east, north) = geo::local_offset(b.location, pose.position(), em)?;
        let distance = east.hypot(north);
        placed.push(Placed {
            index,
            normal: [east / distance, north / distance],
            distance,
            base: b.base_elevation_m,
            top: b.base_elevation_m + b.height_m,
            half_width: 0.5 * b.width_m,
        });
        truth.push(TruthObject {
            id: b.id.clone(),
            class: b.class.clone(),
            point: b.location,
            camera_distance_m: geo::geo_distance(pose.position(), b.location, em),
        });
    }

    // Angular pass: x depends on azimuth only and y on elevation only, so the
    // outline's pixel box bounds the board.
    let angular_bounds: Vec<_> = placed
        .iter()
        .map(|p| {
            let px: Vec<_> = p
                .outline(cam_h)
                .iter()
                .map(|q| {
                    let az = geo::wrap_angle_deg(q[0].atan2(q[1]).to_degrees() - pose.bearing());
                    let el = q[2].atan2(q[0].hypot(q[1])).to_degrees() - pose.pitch();
                    (az.abs() < 89.0 && el.abs() < 89.0)
                        .then(|| (cx + k.fx() * az.to_radians().tan(), cy - k.fy() * el.to_radians().tan()))
                })
                .collect();
            bounds_from_pixels(&px, w, h)
        })
        .collect();
    let angular = render_pass(spec, &placed, &angular_bounds, |x, y| angular_ray(pose, k, x, y));

    let basis = CameraBasis::new(pose);
    let pinhole_bounds: Vec<_> = placed
        .iter()
        .map(|p| {
            let px: Vec<_> = p
                .outline(cam_h)
                .iter()
                .map(|q| {
                    let c = basis.to_camera(*q);
                    (c[2] > 1e-6).then(|| (cx + k.fx() * c[0] / c[2], cy + k.fy() * c[1] / c[2]))
                })
                .collect();
            bounds_from_pixels(&px, w, h)
        })
        .collect();
    let pinhole = render_pass(spec, &placed, &pinhole_bounds, |x, y| pinhole_ray(&basis, k, x, y).0);

    let mut points = Vec::new();
    for y in (0..h).step_by(spec.cloud_stride as usize) {
        for x in (0..w).step_by(spec.cloud_stride as usize) {
            let z = pinhole.depth[y as usize * w as usize + x as usize] as f64;
            if z.is_finite() {
                let [u, v] = pinhole_ray(&basis, k, x as f64, y as f64).1;
                points.push([u * z, v * z, z]);
            }
        }
    }

    let mut masks: Vec<Vec<(u32, u32)>> = vec![Vec::new(); spec.billboards.len()];
    for (i, owner) in angular.owner.iter().enumerate() {
        if let Some(b) = owner {
            masks[*b].push(((i % w as usize) as u32, (i / w as usize) as u32));
        }
    }
    let mut detections = Vec::new();
    for p in &placed {
        let b = &spec.billboards[p.index];
        let pixels = &masks[p.index];
        if pixels.is_empty() {
            let msg = format!("{}: no visible pixels", b.id);
            log::warn!("{msg}");
            diagnostics.push(msg);
            continue;
        }
        detections.push(Detection {
            id: Some(b.id.clone()),
            class: b.class.clone(),
            shape: Shape::Mask(Mask::from_pixels(w, h, pixels)?),
            score: None,
        });
    }

    let mut depth = DepthMap::new(w, h, angular.depth, spec.valid_range)?;
    if spec.depth_noise > 0.0 {
        depth = perturb_depth(&depth, spec.depth_noise, spec.seed)?;
    }
    Ok(RenderedScene {
        depth,
        labels: SemanticMap::new(w, h, angular.labels)?,
        pinhole_depth: DepthMap::new(w, h, pinhole.depth, spec.valid_range)?,
        pinhole_labels: SemanticMap::new(w, h, pinhole.labels)?,
        cloud: PointCloud::new(points)?,
        detections,
        truth,
        diagnostics,
    })
}

/// Multiplies each valid pixel by `1 + sigma * g` with `g` standard normal.
/// One draw is taken per pixel in row-major order, so a pixel's factor does
/// not depend on which other pixels are valid.
pub fn perturb_depth(dm: &DepthMap, sigma: f64, seed: u64) -> Result<DepthMap> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(dm.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = dm
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let g: f64 = rng.sample(StandardNormal);
            if dm.is_valid_index(i) {
                (v as f64 * (1.0 + sigma * g)) as f32
            } else {
                v
            }
        })
        .collect();
    DepthMap::new(dm.width(), dm.height(), values, dm.valid_range())
}

/// Destination point on the sphere from `origin` along a compass bearing.
pub fn destination(origin: GeoPoint, bearing_deg: f64, distance_m: f64, em: &EarthModel) -> Result<GeoPoint> {
    let delta = distance_m / em.radius();
    let theta = bearing_deg.to_radians();
    let phi1 = origin.lat.to_radians();
    let lambda1 = origin.lon.to_radians();
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
    let lambda2 = lambda1 + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    GeoPoint::new(phi2.to_degrees(), geo::normalize_lon(lambda2.to_degrees()))
}

/// Parameters of [`random_survey`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyConfig {
    pub seed: u64,
    pub images: usize,
    pub billboards_per_image: usize,
    pub width: u32,
    pub height: u32,
    pub focal_px: f64,
    pub camera_height_m: f64,
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    /// Largest absolute camera pitch, degrees.
    pub max_pitch_deg: f64,
    pub origin: GeoPoint,
    /// Spacing between consecutive camera positions.
    pub camera_spacing_m: f64,
    pub classes: Vec<String>,
    pub cloud_stride: u32,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            images: 20,
            billboards_per_image: 5,
            width: 960,
            height: 540,
            focal_px: 600.0,
            camera_height_m: 2.5,
            min_distance_m: 5.0,
            max_distance_m: 30.0,
            max_pitch_deg: 3.0,
            origin: GeoPoint {
                lat: 48.137,
                lon: 11.575,
            },
            camera_spacing_m: 200.0,
            classes: ["205", "206", "274", "306"].map(String::from).to_vec(),
            cloud_stride: 4,
        }
    }
}

/// Random non-overlapping scenes: each image gets its own camera position
/// and the billboards sit in separate azimuth slots across the field of view.
pub fn random_survey(cfg: &SurveyConfig) -> Result<Vec<SceneSpec>> {
    if cfg.billboards_per_image == 0 || cfg.classes.is_empty() {
        return Err(Error::InvalidParameter("survey needs billboards and classes".into()));
    }
    if !(cfg.min_distance_m > 0.0 && cfg.max_distance_m >= cfg.min_distance_m) {
        return Err(Error::InvalidParameter("survey distance range is empty".into()));
    }
    let k = Intrinsics::new(cfg.focal_px, cfg.focal_px, cfg.width, cfg.height)?;
    let em = EarthModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half_fov = (0.5 * cfg.width as f64 / cfg.focal_px).atan().to_degrees();
    let half_vfov = (0.5 * cfg.height as f64 / cfg.focal_px).atan().to_degrees();
    let n = cfg.billboards_per_image;
    let slot = 2.0 * 0.8 * half_fov / n as f64;
    let mut scenes = Vec::with_capacity(cfg.images);
    for i in 0..cfg.images {
        let cam = destination(cfg.origin, 90.0, cfg.camera_spacing_m * i as f64, &em)?;
        let bearing = rng.random_range(0.0..360.0);
        let pitch = if cfg.max_pitch_deg > 0.0 {
            rng.random_range(-cfg.max_pitch_deg..=cfg.max_pitch_deg)
        } else {
            0.0
        };
        let pose = CameraPose::new(cam.lat, cam.lon, bearing, pitch)?;
        let image_id = format!("img_{i:03}");
        let mut billboards = Vec::with_capacity(n);
        for s in 0..n {
            let width_m = rng.random_range(0.4..0.8);
            let height_m = rng.random_range(0.4..0.8);
            // Keep each board inside 60% of its slot so jitter cannot make
            // neighbours overlap.
            let min_d = (0.5 * width_m / (0.3 * slot).to_radians().tan()).max(cfg.min_distance_m);
            let distance = rng.random_range(min_d..=cfg.max_distance_m.max(min_d));
            let jitter = rng.random_range(-0.15..0.15) * slot;
            let az = -0.8 * half_fov + slot * (s as f64 + 0.5) + jitter;
            // Centre elevation within the vertical field of view.
            let max_el = (0.6 * half_vfov - cfg.max_pitch_deg).max(1.0).to_radians();
            let centre_up = rng.random_range(-1.0..1.0) * (distance * max_el.tan()).min(1.0);
            let base = (cfg.camera_height_m + centre_up - 0.5 * height_m).max(0.1);
            let class = cfg.classes.choose(&mut rng).expect("non-empty").clone();
            billboards.push(Billboard {
                id: format!("{image_id}_b{s}"),
                class,
                location: destination(cam, bearing + az, distance, &em)?,
                width_m,
                height_m,
                base_elevation_m: base,
            });
        }
        let meta = RecordingMeta {
            image_id,
            pose,
            intrinsics: k,
            timestamp: None,
            source: "sim".into(),
        };
        let mut spec = SceneSpec::new(meta, cfg.camera_height_m, billboards);
        spec.seed = cfg.seed.wrapping_add(i as u64);
        spec.cloud_stride = cfg.cloud_stride;
        scenes.push(spec);
    }
    Ok(scenes)
}

/// A regular grid of points on the plane `Z = distance` in the camera frame.
pub fn frontal_plane_cloud(
    distance_m: f64,
    half_width_m: f64,
    half_height_m: f64,
    spacing_m: f64,
) -> Result<PointCloud> {
    if !(spacing_m > 0.0 && half_width_m >= 0.0 && half_height_m >= 0.0) {
        return Err(Error::InvalidParameter(
            "plane extent and spacing must be positive".into(),
        ));
    }
    let nx = (half_width_m / spacing_m).floor() as i64;
    let ny = (half_height_m / spacing_m).floor() as i64;
    let mut points = Vec::new();
    for j in -ny..=ny {
        for i in -nx..=nx {
            points.push([i as f64 * spacing_m, j as f64 * spacing_m, distance_m]);
        }
    }
    PointCloud::new(points)
}

/// Pixel of the billboard centre in the locate-chain camera.
pub fn billboard_centre_pixel(spec: &SceneSpec, b: &Billboard) -> Result<(PixelCoord, f64)> {
    let up = b.base_elevation_m + 0.5 * b.height_m - spec.camera_height_m;
    geo::inverse_locate(
        b.location,
        Some(up),
        &spec.meta.pose,
        &spec.meta.intrinsics,
        &spec.earth,
    )
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::eval::project_cloud;

    fn meta(w: u32, h: u32, f: f64, bearing: f64, pitch: f64) -> RecordingMeta {
        RecordingMeta {
            image_id: "s".into(),
            pose: CameraPose::new(48.0, 11.0, bearing, pitch).unwrap(),
            intrinsics: Intrinsics::new(f, f, w, h).unwrap(),
            timestamp: None,
            source: "sim".into(),
        }
    }

    fn board(spec_meta: &RecordingMeta, bearing: f64, dist: f64, w: f64, h: f64, base: f64) -> Billboard {
        Billboard {
            id: "b".into(),
            class: "205".into(),
            location: destination(spec_meta.pose.position(), bearing, dist, &EarthModel::default()).unwrap(),
            width_m: w,
            height_m: h,
            base_elevation_m: base,
        }
    }

    #[test]
    fn ground_ray_at_thirty_degrees_depression() {
        // Row with atan((y - cy)/fy) = 30 deg: y = cy + fy tan 30.
        let m = meta(64, 400, 100.0, 0.0, 0.0);
        let spec = SceneSpec::new(m, 2.0, vec![]);
        let r = render_depth(&spec).unwrap();
        let y = 200.0 + 100.0 * 30f64.to_radians().tan();
        let yr = y.round();
        let depression = ((yr - 200.0) / 100.0).atan();
        let d = r.depth.get(32, yr as u32).unwrap();
        assert_relative_eq!(d, 2.0 / depression.sin(), max_relative = 1e-6);
        // Exact 30 deg using the continuous ray.
        let dir = angular_ray(&spec.meta.pose, &spec.meta.intrinsics, 32.0, y);
        assert_relative_eq!(ground_hit(dir, 2.0).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_depth_grows_towards_horizon() {
        let m = meta(32, 240, 200.0, 0.0, 0.0);
        let r = render_depth(&SceneSpec::new(m, 2.0, vec![])).unwrap();
        let mut prev = 0.0;
        for y in (121..240).rev() {
            let d = r.depth.raw(16, y) as f64;
            assert!(d > prev, "row {y}");
            prev = d;
        }
        assert_eq!(r.labels.get(16, 60), SKY_LABEL);
        assert!(r.depth.get(16, 60).is_none());
    }

    #[test]
    fn frontal_board_has_constant_pinhole_depth() {
        // Due north keeps the board normal exactly on the optical axis.
        let m = meta(200, 200, 200.0, 0.0, 0.0);
        let b = board(&m, 0.0, 20.0, 4.0, 3.0, 0.5);
        let r = render_depth(&SceneSpec::new(m, 2.0, vec![b])).unwrap();
        let mut n = 0;
        for (i, l) in r.pinhole_labels.labels().iter().enumerate() {
            if *l == SIGN_LABEL {
                n += 1;
                assert_eq!(r.pinhole_depth.values()[i], 20.0, "pixel {i}");
            }
        }
        assert!(n > 100);
    }

    #[test]
    fn cloud_reprojects_onto_pinhole_depth() {
        let m = meta(160, 120, 150.0, 10.0, -2.0);
        let b = board(&m, 5.0, 12.0, 1.0, 1.0, 1.5);
        let mut spec = SceneSpec::new(m, 2.5, vec![b]);
        spec.cloud_stride = 1;
        let r = render_depth(&spec).unwrap();
        let proj = project_cloud(&r.cloud, &spec.meta.intrinsics, spec.valid_range);
        let mut n = 0;
        for i in 0..proj.values().len() {
            if let (true, true) = (proj.is_valid_index(i), r.pinhole_depth.is_valid_index(i)) {
                n += 1;
                assert!((proj.values()[i] - r.pinhole_depth.values()[i]).abs() < 1e-4);
            }
        }
        assert!(n > 1000);
    }

    #[test]
    fn billboard_behind_camera_is_omitted() {
        let m = meta(100, 100, 100.0, 0.0, 0.0);
        let b = board(&m, 180.0, 10.0, 1.0, 1.0, 1.5);
        let r = render_depth(&SceneSpec::new(m, 2.0, vec![b])).unwrap();
        assert!(r.truth.is_empty());
        assert!(r.detections.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn nearer_board_occludes() {
        let m = meta(200, 100, 100.0, 0.0, 0.0);
        let mut near = board(&m, 0.0, 8.0, 1.0, 1.0, 1.5);
        near.id = "near".into();
        let mut far = board(&m, 0.0, 16.0, 4.0, 2.0, 1.0);
        far.id = "far".into();
        let r = render_depth(&SceneSpec::new(m, 2.0, vec![far, near])).unwrap();
        assert_eq!(r.detections.len(), 2);
        let centre = r.depth.get(100, 50).unwrap();
        assert_relative_eq!(centre, 8.0, epsilon = 1e-5);
    }

    #[test]
    fn perturbation_is_deterministic() {
        let dm = DepthMap::filled(8, 8, 10.0, ValidRange::default()).unwrap();
        assert_eq!(perturb_depth(&dm, 0.0, 1).unwrap(), dm);
        let a = perturb_depth(&dm, 0.05, 7).unwrap();
        assert_eq!(a, perturb_depth(&dm, 0.05, 7).unwrap());
        assert_ne!(a, perturb_depth(&dm, 0.05, 8).unwrap());
        assert!(perturb_depth(&dm, -0.1, 1).is_err());
    }

    #[test]
    fn perturbation_keeps_invalid_pixels() {
        let dm = DepthMap::new(2, 1, vec![f32::NAN, 10.0], ValidRange::default()).unwrap();
        let p = perturb_depth(&dm, 0.1, 3).unwrap();
        assert!(p.values()[0].is_nan());
        assert_ne!(p.values()[1], 10.0);
    }

    #[test]
    fn survey_is_deterministic_and_fully_visible() {
        let cfg = SurveyConfig {
            images: 3,
            width: 320,
            height: 180,
            focal_px: 200.0,
            ..SurveyConfig::default()
        };
        let a = random_survey(&cfg).unwrap();
        assert_eq!(a, random_survey(&cfg).unwrap());
        for spec in &a {
            let r = render_depth(spec).unwrap();
            assert_eq!(r.detections.len(), cfg.billboards_per_image, "{:?}", r.diagnostics);
        }
    }

    #[test]
    fn frontal_plane_grid() {
        let c = frontal_plane_cloud(20.0, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(c.len(), 5 * 3);
        assert!(c.points.iter().all(|p| p[2] == 20.0));
    }
}
