use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depths are trusted only inside the half-open interval `(min_m, max_m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidRange {
    pub min_m: f64,
    pub max_m: f64,
}

impl ValidRange {
    pub fn new(min_m: f64, max_m: f64) -> Result<Self> {
        if !(min_m.is_finite() && max_m.is_finite() && min_m >= 0.0 && max_m > min_m) {
            return Err(Error::InvalidParameter(format!(
                "valid range needs 0 <= min < max, got ({min_m}, {max_m}]"
            )));
        }
        Ok(Self { min_m, max_m })
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v > self.min_m && v <= self.max_m
    }
}

impl Default for ValidRange {
    fn default() -> Self {
        Self {
            min_m: 0.1,
            max_m: 200.0,
        }
    }
}

impl FromStr for ValidRange {
    type Err = Error;

    /// Parses `MIN,MAX`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| Error::InvalidParameter(format!("expected MIN,MAX, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("not a number: {v:?}")))
        };
        ValidRange::new(parse(lo)?, parse(hi)?)
    }
}

/// Row-major metric depth raster. Values are stored as written; validity is
/// decided by the attached [`ValidRange`].
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f32>,
    valid_range: ValidRange,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f32>, valid_range: ValidRange) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("depth map must be at least 1x1".into()));
        }
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} depth map needs {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            valid_range,
        })
    }

    pub fn filled(width: u32, height: u32, value: f32, valid_range: ValidRange) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![value; width as usize * height as usize],
            valid_range,
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn valid_range(&self) -> ValidRange {
        self.valid_range
    }

    pub fn with_valid_range(mut self, valid_range: ValidRange) -> Self {
        self.valid_range = valid_range;
        self
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Stored value, valid or not.
    pub fn raw(&self, x: u32, y: u32) -> f32 {
        self.values[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: f32) {
        let i = self.index(x, y);
        self.values[i] = value;
    }

    /// Depth in metres if the pixel is valid.
    pub fn get(&self, x: u32, y: u32) -> Option<f64> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let v = self.raw(x, y) as f64;
        self.valid_range.contains(v).then_some(v)
    }

    pub fn is_valid_index(&self, i: usize) -> bool {
        self.valid_range.contains(self.values[i] as f64)
    }

    pub fn invalid_count(&self) -> usize {
        (0..self.values.len()).filter(|&i| !self.is_valid_index(i)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    #[default]
    Pfm,
    Raw,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Pfm => "pfm",
            DepthFormat::Raw => "raw",
        }
    }

    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pfm") => DepthFormat::Pfm,
            _ => DepthFormat::Raw,
        }
    }
}

impl FromStr for DepthFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pfm" => Ok(DepthFormat::Pfm),
            "raw" => Ok(DepthFormat::Raw),
            other => Err(Error::InvalidParameter(format!(
                "unknown depth format {other:?} (expected pfm or raw)"
            ))),
        }
    }
}

/// JSON sidecar accompanying a raw little-endian f32 raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: u32,
    pub height: u32,
    pub unit: String,
    /// Focal length recorded by the exporter, if it estimated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy_px: Option<f64>,
}

impl RawSidecar {
    /// Intrinsics from the recorded focal lengths. A lone `fx_px` is used for
    /// both axes; `None` when no focal length was recorded.
    pub fn intrinsics(&self) -> Result<Option<crate::geo::Intrinsics>> {
        match (self.fx_px, self.fy_px) {
            (None, None) => Ok(None),
            (None, Some(_)) => Err(Error::InvalidParameter("sidecar has fy_px without fx_px".into())),
            (Some(fx), fy) => crate::geo::Intrinsics::new(fx, fy.unwrap_or(fx), self.width, self.height).map(Some),
        }
    }
}

/// Sidecar path for a raw raster: same stem, `.json` extension.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn load_raw_sidecar(raw: &Path) -> Result<RawSidecar> {
    let path = sidecar_path(raw);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: RawSidecar = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if sidecar.unit != "m" {
        return Err(Error::format(
            &path,
            format!("unsupported unit {:?}, expected \"m\"", sidecar.unit),
        ));
    }
    Ok(sidecar)
}

/// Loads a depth raster, choosing the decoder from the file extension
/// (`.pfm` for PFM, anything else is raw f32 with a JSON sidecar).
pub fn load_depth(path: &Path, valid_range: ValidRange) -> Result<DepthMap> {
    match DepthFormat::from_path(path) {
        DepthFormat::Pfm => load_pfm(path, valid_range),
        DepthFormat::Raw => load_raw(path, valid_range),
    }
}

pub fn save_depth(path: &Path, dm: &DepthMap, format: DepthFormat) -> Result<()> {
    match format {
        DepthFormat::Pfm => save_pfm(path, dm),
        DepthFormat::Raw => save_raw(path, dm),
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_raw(path: &Path, valid_range: ValidRange) -> Result<DepthMap> {
    let sidecar = load_raw_sidecar(path)?;
    let bytes = read_all(path)?;
    let expected = sidecar.width as usize * sidecar.height as usize * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "sidecar declares {}x{} ({} bytes) but file has {} bytes",
                sidecar.width,
                sidecar.height,
                expected,
                bytes.len()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DepthMap::new(sidecar.width, sidecar.height, values, valid_range).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_raw(path: &Path, dm: &DepthMap) -> Result<()> {
    let mut out = Vec::with_capacity(dm.values.len() * 4);
    for v in &dm.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let sidecar = RawSidecar {
        width: dm.width,
        height: dm.height,
        unit: "m".into(),
        fx_px: None,
        fy_px: None,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

fn pfm_header_token<R: BufRead>(reader: &mut R, path: &Path) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte) {
            Ok(0) => return Err(Error::format(path, "truncated PFM header")),
            Ok(_) => {}
            Err(e) => return Err(Error::io(path, e)),
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
        if token.len() > 64 {
            return Err(Error::format(path, "malformed PFM header"));
        }
    }
    String::from_utf8(token).map_err(|_| Error::format(path, "non-ASCII PFM header"))
}

/// Reads a greyscale PFM. Rows are stored bottom-to-top; a negative scale
/// marks little-endian data. The scale magnitude is ignored.
pub fn load_pfm(path: &Path, valid_range: ValidRange) -> Result<DepthMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let magic = pfm_header_token(&mut reader, path)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(Error::format(path, "colour PFM is not a depth raster")),
        _ => return Err(Error::format(path, "missing PFM magic")),
    }
    let parse_dim = |t: String| {
        t.parse::<u32>()
            .map_err(|_| Error::format(path, format!("bad PFM dimension {t:?}")))
    };
    let width = parse_dim(pfm_header_token(&mut reader, path)?)?;
    let height = parse_dim(pfm_header_token(&mut reader, path)?)?;
    let scale_tok = pfm_header_token(&mut reader, path)?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| Error::format(path, format!("bad PFM scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, "PFM scale must be non-zero"));
    }
    let little_endian = scale < 0.0;

    let mut data = Vec::new();
    reader.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    let n = width as usize * height as usize;
    if data.len() != n * 4 {
        return Err(Error::format(
            path,
            format!("{width}x{height} PFM needs {} data bytes, found {}", n * 4, data.len()),
        ));
    }
    let mut values = vec![0f32; n];
    let w = width as usize;
    for (i, c) in data.chunks_exact(4).enumerate() {
        let bytes = [c[0], c[1], c[2], c[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        let (file_row, col) = (i / w, i % w);
        let row = height as usize - 1 - file_row;
        values[row * w + col] = v;
    }
    DepthMap::new(width, height, values, valid_range).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_pfm(path: &Path, dm: &DepthMap) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "Pf\n{} {}\n-1.0\n", dm.width, dm.height).map_err(io)?;
    let width = dm.width as usize;
    for row in dm.values.chunks_exact(width).rev() {
        for v in row {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
