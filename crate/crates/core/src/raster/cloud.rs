use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::CameraPose;

/// Points in the camera frame: X right, Y down, Z forward (metres).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParameter(format!("non-finite point {p:?}")));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Converts points given in a local East-North-Up frame centred on the
    /// camera into the camera frame of `pose`.
    pub fn from_enu(points_enu: &[[f64; 3]], pose: &CameraPose) -> Result<Self> {
        let basis = CameraBasis::new(pose);
        Self::new(points_enu.iter().map(|p| basis.to_camera(*p)).collect())
    }
}

/// Camera axes expressed in ENU.
#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub right: [f64; 3],
    pub down: [f64; 3],
    pub forward: [f64; 3],
}

impl CameraBasis {
    pub fn new(pose: &CameraPose) -> Self {
        let (sb, cb) = pose.bearing().to_radians().sin_cos();
        let (sp, cp) = pose.pitch().to_radians().sin_cos();
        let forward = [cp * sb, cp * cb, sp];
        let right = [cb, -sb, 0.0];
        // down = forward x right
        let down = [
            forward[1] * right[2] - forward[2] * right[1],
            forward[2] * right[0] - forward[0] * right[2],
            forward[0] * right[1] - forward[1] * right[0],
        ];
        Self { right, down, forward }
    }

    pub fn to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        [dot(self.right, p), dot(self.down, p), dot(self.forward, p)]
    }

    pub fn to_enu(&self, c: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| c[0] * self.right[i] + c[1] * self.down[i] + c[2] * self.forward[i])
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Loads `.ply` (ASCII or binary little-endian vertex data) or whitespace /
/// comma separated `X Y Z` text rows.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        load_ply(path)
    } else {
        load_xyz(path)
    }
}

pub fn load_xyz(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 3 {
            return Err(Error::format(path, format!("line {}: expected X Y Z", lineno + 1)));
        }
        let mut p = [0.0f64; 3];
        for (slot, f) in p.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| Error::format(path, format!("line {}: not a number: {f:?}", lineno + 1)))?;
            if !slot.is_finite() {
                return Err(Error::format(
                    path,
                    format!("line {}: non-finite coordinate", lineno + 1),
                ));
            }
        }
        points.push(p);
    }
    Ok(PointCloud { points })
}

pub fn save_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p[0], p[1], p[2]).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

/// PLY subset: the first element must be `vertex` with scalar properties
/// including `x`, `y`, `z`. Later elements are ignored.
pub fn load_ply(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let fmt = |m: String| Error::format(path, m);

    let mut line = String::new();
    let read_line = |reader: &mut BufReader<File>, line: &mut String| -> Result<()> {
        line.clear();
        let n = reader.read_line(line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::format(path, "unexpected end of PLY header"));
        }
        Ok(())
    };

    read_line(&mut reader, &mut line)?;
    if line.trim() != "ply" {
        return Err(fmt("missing ply magic".into()));
    }
    let mut encoding = None;
    let mut vertex_count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    let mut seen_element = false;
    loop {
        read_line(&mut reader, &mut line)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLe),
            ["format", other, _] => return Err(fmt(format!("unsupported PLY format {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                if !seen_element {
                    if *name != "vertex" {
                        return Err(fmt("first PLY element must be vertex".into()));
                    }
                    vertex_count = Some(
                        count
                            .parse::<usize>()
                            .map_err(|_| fmt(format!("bad vertex count {count:?}")))?,
                    );
                    in_vertex = true;
                } else {
                    in_vertex = false;
                }
                seen_element = true;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(fmt("list properties on vertices are not supported".into()))
            }
            ["property", ty, name] if in_vertex => {
                let scalar = Scalar::parse(ty).ok_or_else(|| fmt(format!("unknown type {ty}")))?;
                props.push((name.to_string(), scalar));
            }
            ["property", ..] => {}
            _ => return Err(fmt(format!("unrecognised header line {:?}", line.trim()))),
        }
    }
    let encoding = encoding.ok_or_else(|| fmt("missing format line".into()))?;
    let count = vertex_count.ok_or_else(|| fmt("missing vertex element".into()))?;
    let find = |axis: &str| {
        props
            .iter()
            .position(|(n, _)| n == axis)
            .ok_or_else(|| fmt(format!("vertex has no {axis} property")))
    };
    let axes = [find("x")?, find("y")?, find("z")?];

    let mut points = Vec::with_capacity(count);
    match encoding {
        PlyEncoding::BinaryLe => {
            let offsets: Vec<usize> = props
                .iter()
                .scan(0, |acc, (_, s)| {
                    let o = *acc;
                    *acc += s.size();
                    Some(o)
                })
                .collect();
            let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
            let mut buf = vec![0u8; stride];
            for i in 0..count {
                reader
                    .read_exact(&mut buf)
                    .map_err(|_| fmt(format!("truncated vertex data at vertex {i}")))?;
                let p = axes.map(|a| props[a].1.read_le(&buf[offsets[a]..]));
                points.push(p);
            }
        }
        PlyEncoding::Ascii => {
            for i in 0..count {
                read_line(&mut reader, &mut line).map_err(|_| fmt(format!("truncated vertex data at vertex {i}")))?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < props.len() {
                    return Err(fmt(format!("vertex {i}: expected {} values", props.len())));
                }
                let mut p = [0.0f64; 3];
                for (slot, a) in p.iter_mut().zip(axes) {
                    *slot = fields[a]
                        .parse()
                        .map_err(|_| fmt(format!("vertex {i}: not a number {:?}", fields[a])))?;
                }
                points.push(p);
            }
        }
    }
    PointCloud::new(points).map_err(|e| fmt(e.to_string()))
}

/// Writes binary little-endian PLY with double-precision coordinates.
pub fn save_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.points.len()
    )
    .map_err(io)?;
    for p in &cloud.points {
        for c in p {
            w.write_all(&c.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
