//! PLY meshes and point clouds, ASCII or binary little-endian.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn write_ply(path: &Path, mesh: &Mesh<f64>, format: PlyFormat) -> Result<()> {
    let tag = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut out = format!(
        "ply\nformat {tag} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        mesh.vertices.len()
    );
    if !mesh.triangles.is_empty() {
        out += &format!("element face {}\nproperty list uchar int vertex_indices\n", mesh.triangles.len());
    }
    out += "end_header\n";
    let mut bytes = out.into_bytes();
    match format {
        PlyFormat::Ascii => {
            let mut body = String::new();
            for v in &mesh.vertices {
                body += &format!("{} {} {}\n", v.x, v.y, v.z);
            }
            for t in &mesh.triangles {
                body += &format!("3 {} {} {}\n", t[0], t[1], t[2]);
            }
            bytes.extend_from_slice(body.as_bytes());
        }
        PlyFormat::BinaryLittleEndian => {
            for v in &mesh.vertices {
                for c in v.iter() {
                    bytes.extend_from_slice(&c.to_le_bytes());
                }
            }
            for t in &mesh.triangles {
                bytes.push(3);
                for i in t {
                    let i = i32::try_from(*i).map_err(|_| Error::invalid("vertex index exceeds PLY int range"))?;
                    bytes.extend_from_slice(&i.to_le_bytes());
                }
            }
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
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

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Source of property values, ASCII tokens or little-endian bytes.
trait Values {
    fn next(&mut self, kind: Scalar) -> Option<f64>;
}

struct Tokens<'a>(std::str::SplitAsciiWhitespace<'a>);

impl Values for Tokens<'_> {
    fn next(&mut self, _: Scalar) -> Option<f64> {
        self.0.next()?.parse().ok()
    }
}

struct Bytes<'a>(&'a [u8]);

impl Values for Bytes<'_> {
    fn next(&mut self, kind: Scalar) -> Option<f64> {
        let n = kind.size();
        let (head, rest) = (self.0.get(..n)?, self.0.get(n..)?);
        self.0 = rest;
        Some(kind.decode(head))
    }
}

/// Reads vertex positions and faces; polygons are fan-triangulated and
/// unknown elements are skipped.
pub fn read_ply(path: &Path) -> Result<Mesh<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::format(path, reason);
    let marker = b"end_header";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| bad("missing end_header".into()))?;
    let mut body = end + marker.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    body += 1;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("non-UTF-8 header".into()))?;
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(bad("missing ply magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, _] => return Err(bad(format!("unsupported PLY format {other}"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| bad(format!("bad element count {count}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let count = Scalar::parse(count).ok_or_else(|| bad(format!("unknown type {count}")))?;
                let item = Scalar::parse(item).ok_or_else(|| bad(format!("unknown type {item}")))?;
                let el = elements.last_mut().ok_or_else(|| bad("property before element".into()))?;
                el.properties.push(Property::List(name.to_string(), count, item));
            }
            ["property", kind, name] => {
                let kind = Scalar::parse(kind).ok_or_else(|| bad(format!("unknown type {kind}")))?;
                let el = elements.last_mut().ok_or_else(|| bad("property before element".into()))?;
                el.properties.push(Property::Scalar(name.to_string(), kind));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(bad(format!("unrecognized header line '{line}'"))),
        }
    }
    let format = format.ok_or_else(|| bad("missing format line".into()))?;
    let payload = bytes.get(body..).unwrap_or_default();
    let text;
    let mut values: Box<dyn Values> = match format {
        PlyFormat::Ascii => {
            text = std::str::from_utf8(payload).map_err(|_| bad("non-UTF-8 body".into()))?;
            Box::new(Tokens(text.split_ascii_whitespace()))
        }
        PlyFormat::BinaryLittleEndian => Box::new(Bytes(payload)),
    };
    let truncated = || bad("truncated body".into());

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [None; 3];
            for prop in &el.properties {
                match prop {
                    Property::Scalar(name, kind) => {
                        let v = values.next(*kind).ok_or_else(truncated)?;
                        if let Some(slot) = ["x", "y", "z"].iter().position(|n| n == name) {
                            xyz[slot] = Some(v);
                        }
                    }
                    Property::List(name, count, item) => {
                        let n = values.next(*count).ok_or_else(truncated)? as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(values.next(*item).ok_or_else(truncated)?);
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            let idx: Vec<usize> = idx.iter().map(|v| *v as usize).collect();
                            for k in 1..idx.len().saturating_sub(1) {
                                triangles.push([idx[0], idx[k], idx[k + 1]]);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                match xyz {
                    [Some(x), Some(y), Some(z)] => vertices.push(Vector3::new(x, y, z)),
                    _ => return Err(bad("vertex without x/y/z".into())),
                }
            }
        }
    }
    Mesh::new(vertices, triangles).map_err(|e| bad(e.to_string()))
}
