//! Reference implementation of the geolocation chain built from 3-D rotation
//! matrices instead of the angle-by-angle trig chain. Shares no code with the
//! library.

#![allow(dead_code)]

type V3 = [f64; 3];
type M3 = [[f64; 3]; 3];

fn mul(m: &M3, v: V3) -> V3 {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn matmul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Clockwise rotation about the up axis (compass sense), ENU frame.
fn rot_up(angle: f64) -> M3 {
    let (s, c) = angle.sin_cos();
    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation about the east axis lifting north towards up.
fn rot_east(angle: f64) -> M3 {
    let (s, c) = angle.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub struct OracleCamera {
    pub lat: f64,
    pub lon: f64,
    pub bearing_deg: f64,
    pub pitch_deg: f64,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// ENU displacement (metres) of the point seen at pixel `(x, y)` at range `d`.
pub fn oracle_enu(cam: &OracleCamera, x: f64, y: f64, d: f64) -> V3 {
    let ax = (x - cam.cx).atan2(cam.fx);
    let ay = (cam.cy - y).atan2(cam.fy);
    let yaw = matmul(&rot_up(cam.bearing_deg.to_radians()), &rot_up(ax));
    let tilt = matmul(&rot_east(cam.pitch_deg.to_radians()), &rot_east(ay));
    let r = matmul(&yaw, &tilt);
    mul(&r, [0.0, d, 0.0])
}

/// Geographic position of the point, using metres-per-degree scale factors.
pub fn oracle_locate(cam: &OracleCamera, x: f64, y: f64, d: f64, radius: f64) -> (f64, f64) {
    let v = oracle_enu(cam, x, y, d);
    let m_per_deg_lat = radius * std::f64::consts::PI / 180.0;
    let m_per_deg_lon = m_per_deg_lat * cam.lat.to_radians().cos();
    let lat = cam.lat + v[1] / m_per_deg_lat;
    let mut lon = cam.lon + v[0] / m_per_deg_lon;
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon <= -180.0 {
        lon += 360.0;
    }
    (lat, lon)
}
