//! PLY reader and writer for colored point clouds.
//!
//! Reads `ascii 1.0` and `binary_little_endian 1.0` files. Elements other than
//! `vertex` are skipped, as are vertex properties other than `x`, `y`, `z` and
//! the color channels (`red`/`green`/`blue` or `r`/`g`/`b`). Missing colors
//! default to mid gray. The scene id round-trips through a `comment scene_id`
//! header line.

use crate::error::IngestError;
use crate::scene::{PointCloud, Rgb};

pub const DEFAULT_COLOR: Rgb = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    scene_id: String,
    body_offset: usize,
}

fn header_err(msg: impl Into<String>) -> IngestError {
    IngestError::MalformedHeader(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header, IngestError> {
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(header_err("missing end_header"));
        };
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| header_err("non-ASCII header"))?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        offset += nl + 1;
        if line.trim() == "end_header" {
            break;
        }
        lines.push(line.to_string());
    }

    let mut it = lines.iter();
    if it.next().map(|l| l.trim()) != Some("ply") {
        return Err(header_err("bad magic, expected 'ply'"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut scene_id = String::new();
    for line in it {
        let mut words = line.split_whitespace();
        match words.next() {
            None => continue,
            Some("format") => {
                let fmt = words.next().ok_or_else(|| header_err("format line without a format"))?;
                format = Some(match fmt {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => return Err(IngestError::UnsupportedFormat(fmt.into())),
                    other => return Err(header_err(format!("unknown format {other:?}"))),
                });
            }
            Some("comment") => {
                let rest = line.trim_start().strip_prefix("comment").unwrap_or("").trim();
                if let Some(id) = rest.strip_prefix("scene_id ") {
                    scene_id = id.trim().to_string();
                }
            }
            Some("obj_info") => {}
            Some("element") => {
                let name = words.next().ok_or_else(|| header_err("element without a name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_err(format!("element {name} has no valid count")))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_err("property declared before any element"))?;
                let ty = words.next().ok_or_else(|| header_err("property without a type"))?;
                let kind = if ty == "list" {
                    let count = words.next().and_then(Scalar::parse);
                    let item = words.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => PropKind::List { count, item },
                        _ => return Err(header_err("bad list property types")),
                    }
                } else {
                    PropKind::Scalar(
                        Scalar::parse(ty).ok_or_else(|| header_err(format!("unknown property type {ty:?}")))?,
                    )
                };
                let name = words.next().ok_or_else(|| header_err("property without a name"))?;
                el.props.push(Property { name: name.to_string(), kind });
            }
            Some(other) => return Err(header_err(format!("unexpected header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| header_err("missing format line"))?;
    Ok(Header { format, elements, scene_id, body_offset: offset })
}

/// Column indices of the properties we keep.
struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
}

impl VertexLayout {
    fn new(el: &Element) -> Result<Self, IngestError> {
        let find = |names: &[&str]| {
            el.props
                .iter()
                .position(|p| names.contains(&p.name.as_str()) && matches!(p.kind, PropKind::Scalar(_)))
        };
        let x = find(&["x"]).ok_or_else(|| header_err("vertex element lacks x"))?;
        let y = find(&["y"]).ok_or_else(|| header_err("vertex element lacks y"))?;
        let z = find(&["z"]).ok_or_else(|| header_err("vertex element lacks z"))?;
        let r = find(&["red", "r"]);
        let g = find(&["green", "g"]);
        let b = find(&["blue", "b"]);
        let rgb = match (r, g, b) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        Ok(Self { xyz: [x, y, z], rgb })
    }
}

fn to_channel(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Parses an ASCII or binary little-endian PLY into a point cloud.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud, IngestError> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err("no vertex element"))?;
    let layout = VertexLayout::new(&header.elements[vertex_pos])?;
    let body = &bytes[header.body_offset..];
    let rows = match header.format {
        PlyFormat::Ascii => read_ascii(body, &header.elements[..=vertex_pos])?,
        PlyFormat::BinaryLittleEndian => read_binary(body, &header.elements[..=vertex_pos])?,
    };

    let mut points = Vec::with_capacity(rows.len());
    let mut colors = Vec::with_capacity(rows.len());
    for row in &rows {
        points.push([row[layout.xyz[0]], row[layout.xyz[1]], row[layout.xyz[2]]]);
        colors.push(match layout.rgb {
            Some([r, g, b]) => [to_channel(row[r]), to_channel(row[g]), to_channel(row[b])],
            None => DEFAULT_COLOR,
        });
    }
    PointCloud::new(header.scene_id, points, colors)
}

/// Reads every element up to and including the last one in `elements`
/// (the vertex element) and returns the scalar values of the vertex rows.
/// List properties are consumed and reported as NaN placeholders.
fn read_ascii(body: &[u8], elements: &[Element]) -> Result<Vec<Vec<f64>>, IngestError> {
    let text = std::str::from_utf8(body).map_err(|_| IngestError::MalformedBody("non-UTF-8 ASCII body".into()))?;
    let mut tokens = text.split_ascii_whitespace();
    let (vertex, skipped) = elements.split_last().expect("vertex element present");
    let expected = vertex.count;
    let truncated = |found| IngestError::TruncatedBody { expected, found };
    let mut next_num = |found: usize| -> Result<f64, IngestError> {
        let tok = tokens.next().ok_or_else(|| truncated(found))?;
        tok.parse::<f64>()
            .map_err(|_| IngestError::MalformedBody(format!("bad number {tok:?}")))
    };

    for el in skipped {
        for _ in 0..el.count {
            for p in &el.props {
                match p.kind {
                    PropKind::Scalar(_) => {
                        next_num(0)?;
                    }
                    PropKind::List { .. } => {
                        let n = next_num(0)? as usize;
                        for _ in 0..n {
                            next_num(0)?;
                        }
                    }
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(expected);
    for i in 0..expected {
        let mut row = Vec::with_capacity(vertex.props.len());
        for p in &vertex.props {
            match p.kind {
                PropKind::Scalar(_) => row.push(next_num(i)?),
                PropKind::List { .. } => {
                    let n = next_num(i)? as usize;
                    for _ in 0..n {
                        next_num(i)?;
                    }
                    row.push(f64::NAN);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_binary(body: &[u8], elements: &[Element]) -> Result<Vec<Vec<f64>>, IngestError> {
    let (vertex, skipped) = elements.split_last().expect("vertex element present");
    let expected = vertex.count;
    let mut pos = 0usize;
    let mut take = |n: usize, found: usize| -> Result<&[u8], IngestError> {
        if pos + n > body.len() {
            return Err(IngestError::TruncatedBody { expected, found });
        }
        let s = &body[pos..pos + n];
        pos += n;
        Ok(s)
    };

    for el in skipped {
        for _ in 0..el.count {
            for p in &el.props {
                match p.kind {
                    PropKind::Scalar(s) => {
                        take(s.size(), 0)?;
                    }
                    PropKind::List { count, item } => {
                        let n = count.read_le(take(count.size(), 0)?) as usize;
                        take(n * item.size(), 0)?;
                    }
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(expected);
    for i in 0..expected {
        let mut row = Vec::with_capacity(vertex.props.len());
        for p in &vertex.props {
            match p.kind {
                PropKind::Scalar(s) => row.push(s.read_le(take(s.size(), i)?)),
                PropKind::List { count, item } => {
                    let n = count.read_le(take(count.size(), i)?) as usize;
                    take(n * item.size(), i)?;
                    row.push(f64::NAN);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `x y z` as doubles and colors as `uchar red green blue`.
///
/// ASCII output prints the shortest decimal that round-trips each double, so
/// both encodings reproduce the cloud exactly.
pub fn serialize_ply(pc: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + pc.len() * 27);
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(match format {
        PlyFormat::Ascii => b"format ascii 1.0\n".as_slice(),
        PlyFormat::BinaryLittleEndian => b"format binary_little_endian 1.0\n".as_slice(),
    });
    let id = pc.scene_id.replace(['\n', '\r'], " ");
    let id = id.trim();
    if !id.is_empty() {
        out.extend_from_slice(format!("comment scene_id {id}\n").as_bytes());
    }
    out.extend_from_slice(format!("element vertex {}\n", pc.len()).as_bytes());
    for axis in ["x", "y", "z"] {
        out.extend_from_slice(format!("property double {axis}\n").as_bytes());
    }
    for ch in ["red", "green", "blue"] {
        out.extend_from_slice(format!("property uchar {ch}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");
    match format {
        PlyFormat::Ascii => {
            use std::io::Write;
            for (p, c) in pc.points.iter().zip(&pc.colors) {
                writeln!(out, "{} {} {} {} {} {}", p[0], p[1], p[2], c[0], c[1], c[2]).expect("write to Vec");
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for (p, c) in pc.points.iter().zip(&pc.colors) {
                for v in p {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.extend_from_slice(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_VERTEX: &str = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 255 0 0\n";

    #[test]
    fn single_ascii_vertex() {
        let pc = parse_ply(ONE_VERTEX.as_bytes()).unwrap();
        assert_eq!(pc.points, vec![[0.0, 0.0, 0.0]]);
        assert_eq!(pc.colors, vec![[255, 0, 0]]);
    }

    #[test]
    fn short_color_aliases_and_extra_properties() {
        let src = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\nproperty float x\nproperty float nx\nproperty float y\nproperty float z\nproperty uchar r\nproperty uchar g\nproperty uchar b\nproperty uchar alpha\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n1 9 2 3 10 20 30 255\n4 9 5 6 40 50 60 255\n3 0 1 1\n";
        let pc = parse_ply(src.as_bytes()).unwrap();
        assert_eq!(pc.points, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(pc.colors, vec![[10, 20, 30], [40, 50, 60]]);
    }

    #[test]
    fn missing_colors_default_to_gray() {
        let src = "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nend_header\n1.5 2.5 -3\n";
        let pc = parse_ply(src.as_bytes()).unwrap();
        assert_eq!(pc.colors, vec![DEFAULT_COLOR]);
        assert_eq!(pc.points, vec![[1.5, 2.5, -3.0]]);
    }

    #[test]
    fn truncated_ascii_body() {
        let mut src = String::from("ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
        for i in 0..7 {
            src.push_str(&format!("{i} {i} {i}\n"));
        }
        assert_eq!(
            parse_ply(src.as_bytes()),
            Err(IngestError::TruncatedBody { expected: 10, found: 7 })
        );
    }

    #[test]
    fn truncated_binary_body() {
        let pc = PointCloud::new("s", vec![[1.0, 2.0, 3.0]; 10], vec![[1, 2, 3]; 10]).unwrap();
        let mut bytes = serialize_ply(&pc, PlyFormat::BinaryLittleEndian);
        let body_start = bytes.len() - 10 * 27;
        bytes.truncate(body_start + 7 * 27 + 5);
        assert_eq!(parse_ply(&bytes), Err(IngestError::TruncatedBody { expected: 10, found: 7 }));
    }

    #[test]
    fn big_endian_is_unsupported() {
        let src = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(src.as_bytes()), Err(IngestError::UnsupportedFormat(_))));
    }

    #[test]
    fn malformed_headers() {
        for src in [
            "plx\nformat ascii 1.0\nend_header\n",
            "ply\nformat ascii 1.0\nelement vertex many\nend_header\n",
            "ply\nformat ascii 1.0\nproperty float x\nend_header\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n",
            "ply\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n",
            "ply\nformat ascii 1.0\nelement vertex 1\n",
        ] {
            assert!(
                matches!(parse_ply(src.as_bytes()), Err(IngestError::MalformedHeader(_))),
                "{src:?}"
            );
        }
    }

    #[test]
    fn float32_binary_with_crlf_header() {
        let mut bytes = b"ply\r\nformat binary_little_endian 1.0\r\nelement vertex 1\r\nproperty float x\r\nproperty float y\r\nproperty float z\r\nproperty uchar red\r\nproperty uchar green\r\nproperty uchar blue\r\nend_header\r\n".to_vec();
        for v in [0.5f32, -1.25, 8.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&[7, 8, 9]);
        let pc = parse_ply(&bytes).unwrap();
        assert_eq!(pc.points, vec![[0.5, -1.25, 8.0]]);
        assert_eq!(pc.colors, vec![[7, 8, 9]]);
    }

    #[test]
    fn ascii_and_binary_encodings_agree() {
        let pc = PointCloud::new(
            "scene0000_00",
            vec![[0.1, -2.0, 1e-7], [3.25159, 2.619281828, -0.0], [1e5, -1e-3, 42.0]],
            vec![[0, 0, 0], [255, 128, 1], [9, 99, 199]],
        )
        .unwrap();
        let a = parse_ply(&serialize_ply(&pc, PlyFormat::Ascii)).unwrap();
        let b = parse_ply(&serialize_ply(&pc, PlyFormat::BinaryLittleEndian)).unwrap();
        assert_eq!(a, pc);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_vertices_rejected() {
        let src = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert_eq!(parse_ply(src.as_bytes()), Err(IngestError::EmptyCloud));
    }
}
