use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

/// Cityscapes "void" / ignore label.
pub const VOID_LABEL: u8 = 255;

/// Number of Cityscapes train IDs (0..=18).
pub const NUM_TRAIN_IDS: u8 = 19;

/// Per-pixel Cityscapes train-ID raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: u32,
    height: u32,
    labels: Vec<u8>,
}

impl SemanticMap {
    /// Labels outside `0..=18` (other than void) are replaced by void with a warning.
    pub fn new(width: u32, height: u32, mut labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} label map needs {} labels, got {}",
                width as usize * height as usize,
                labels.len()
            )));
        }
        let mut unknown = 0usize;
        for l in labels.iter_mut() {
            if *l >= NUM_TRAIN_IDS && *l != VOID_LABEL {
                *l = VOID_LABEL;
                unknown += 1;
            }
        }
        if unknown > 0 {
            log::warn!("{unknown} pixels carried unknown label ids; mapped to void");
        }
        Ok(Self { width, height, labels })
    }

    pub fn filled(width: u32, height: u32, label: u8) -> Result<Self> {
        Self::new(width, height, vec![label; width as usize * height as usize])
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

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, label: u8) {
        let i = y as usize * self.width as usize + x as usize;
        self.labels[i] = if label < NUM_TRAIN_IDS { label } else { VOID_LABEL };
    }
}

/// Binary mask covering a full image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} mask needs {} entries, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: &[(u32, u32)]) -> Result<Self> {
        let mut m = Self::empty(width, height);
        for &(x, y) in pixels {
            if x >= width || y >= height {
                return Err(Error::InvalidParameter(format!(
                    "mask pixel ({x}, {y}) outside {width}x{height}"
                )));
            }
            m.set(x, y, true);
        }
        Ok(m)
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        let i = y as usize * self.width as usize + x as usize;
        self.bits[i] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Set pixels as `(x, y)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }
}

struct Gray8 {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

fn decode_gray(path: &Path, expand_low_bits: bool) -> Result<Gray8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    if expand_low_bits {
        decoder.set_transformations(png::Transformations::EXPAND);
    }
    let mut reader = decoder.read_info().map_err(|e| Error::format(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "PNG too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format(
            path,
            format!(
                "expected 8-bit greyscale PNG, found {:?} at {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for row in buf[..info.buffer_size()].chunks(info.line_size) {
        data.extend_from_slice(&row[..w]);
    }
    Ok(Gray8 {
        width: info.width,
        height: info.height,
        data,
    })
}

fn encode_png(path: &Path, width: u32, height: u32, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(depth);
    let to_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(to_err)?;
    writer.write_image_data(data).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

/// Loads an 8-bit greyscale PNG of Cityscapes train IDs.
pub fn load_labels(path: &Path) -> Result<SemanticMap> {
    let g = decode_gray(path, false)?;
    SemanticMap::new(g.width, g.height, g.data)
}

pub fn save_labels(path: &Path, labels: &SemanticMap) -> Result<()> {
    encode_png(path, labels.width, labels.height, png::BitDepth::Eight, &labels.labels)
}

/// Loads a binary mask PNG; any non-zero pixel is set. 1-bit and 8-bit
/// greyscale inputs are accepted.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let g = decode_gray(path, true)?;
    Mask::new(g.width, g.height, g.data.iter().map(|v| *v != 0).collect())
}

/// Writes a 1-bit greyscale PNG.
pub fn save_mask(path: &Path, mask: &Mask) -> Result<()> {
    let w = mask.width as usize;
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * mask.height as usize];
    for (i, on) in mask.bits.iter().enumerate() {
        if *on {
            let (row, col) = (i / w, i % w);
            packed[row * stride + col / 8] |= 0x80 >> (col % 8);
        }
    }
    encode_png(path, mask.width, mask.height, png::BitDepth::One, &packed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_road_png_loads_as_all_road() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.png");
        save_labels(&path, &SemanticMap::filled(4, 3, 0).unwrap()).unwrap();
        let back = load_labels(&path).unwrap();
        assert_eq!(back.dimensions(), (4, 3));
        assert!(back.labels().iter().all(|l| *l == 0));
    }

    #[test]
    fn unknown_labels_become_void() {
        let m = SemanticMap::new(3, 1, vec![7, 42, 255]).unwrap();
        assert_eq!(m.labels(), &[7, VOID_LABEL, VOID_LABEL]);
    }

    #[test]
    fn label_round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.png");
        let labels: Vec<u8> = (0..19).chain([255]).collect();
        let m = SemanticMap::new(5, 4, labels).unwrap();
        save_labels(&path, &m).unwrap();
        assert_eq!(load_labels(&path).unwrap(), m);
    }

    #[test]
    fn one_bit_mask_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        // width 11 exercises row padding
        let m = Mask::from_pixels(11, 3, &[(0, 0), (10, 0), (5, 1), (9, 2)]).unwrap();
        save_mask(&path, &m).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.pixels().collect::<Vec<_>>(), vec![(0, 0), (10, 0), (5, 1), (9, 2)]);
    }

    #[test]
    fn eight_bit_png_is_accepted_as_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m8.png");
        encode_png(&path, 2, 1, png::BitDepth::Eight, &[0, 200]).unwrap();
        let m = load_mask(&path).unwrap();
        assert_eq!(m.bits(), &[false, true]);
    }

    #[test]
    fn one_bit_png_is_rejected_as_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        save_mask(&path, &Mask::empty(3, 3)).unwrap();
        assert!(matches!(load_labels(&path), Err(Error::Format { .. })));
    }
}
