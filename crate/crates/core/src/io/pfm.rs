//! Portable float maps: `Pf` (one channel) and `PF` (three channels).
//!
//! Rows are stored bottom-up. A negative scale marks little-endian data,
//! which is what the writers emit.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Grid, NormalMap};
use crate::illumination::LightField;

/// Raw float map in top-down row order.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn write_pfm(path: &Path, map: &FloatMap) -> Result<()> {
    let tag = match map.channels {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::invalid(format!("PFM supports 1 or 3 channels, not {c}"))),
    };
    let row = map.width * map.channels;
    if map.data.len() != row * map.height {
        return Err(Error::invalid("float map size does not match its dimensions"));
    }
    let mut bytes = format!("{tag}\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    bytes.reserve(map.data.len() * 4);
    for y in (0..map.height).rev() {
        for v in &map.data[y * row..(y + 1) * row] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<FloatMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::format(path, reason);
    // three whitespace-terminated header tokens after the tag line
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    pos += 1; // the single whitespace byte ending the header
    let channels = match fields[0] {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(bad("missing Pf/PF tag")),
    };
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be non-zero"));
    }
    let little = scale < 0.0;
    let row = width * channels;
    let payload = bytes.get(pos..).unwrap_or_default();
    if payload.len() != row * height * 4 {
        return Err(bad("payload size does not match the header"));
    }
    let mut data = vec![0f32; row * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (file_row, col) = (i / row, i % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    Ok(FloatMap {
        width,
        height,
        channels,
        data,
    })
}

/// Writes depth with invalid pixels stored as 0.
pub fn write_depth(path: &Path, depth: &DepthMap<f64>) -> Result<()> {
    let (width, height) = depth.dims();
    let data = (0..width * height)
        .map(|i| depth.get(i % width, i / width).unwrap_or(0.0) as f32)
        .collect();
    write_pfm(
        path,
        &FloatMap {
            width,
            height,
            channels: 1,
            data,
        },
    )
}

/// Reads depth; non-positive or non-finite values become invalid.
pub fn read_depth(path: &Path) -> Result<DepthMap<f64>> {
    let map = read_pfm(path)?;
    if map.channels != 1 {
        return Err(Error::format(path, "depth maps need one channel"));
    }
    let values = Grid::new(map.width, map.height, map.data.iter().map(|v| *v as f64).collect())?;
    let valid = values.map(|v| *v > 0.0 && v.is_finite());
    let values = values.map(|v| if *v > 0.0 && v.is_finite() { *v } else { 0.0 });
    DepthMap::new(values, valid)
}

fn write_vectors(path: &Path, vectors: &Grid<Vector3<f64>>, valid: &Grid<bool>) -> Result<()> {
    let (width, height) = vectors.dims();
    let mut data = Vec::with_capacity(width * height * 3);
    for (v, ok) in vectors.as_slice().iter().zip(valid.as_slice()) {
        let v = if *ok { *v } else { Vector3::zeros() };
        data.extend(v.iter().map(|c| *c as f32));
    }
    write_pfm(
        path,
        &FloatMap {
            width,
            height,
            channels: 3,
            data,
        },
    )
}

/// Writes normals with invalid pixels stored as the zero vector.
pub fn write_normals(path: &Path, normals: &NormalMap<f64>) -> Result<()> {
    write_vectors(path, normals.vectors(), normals.validity())
}

/// Reads normals, renormalizing after the single-precision round trip.
pub fn read_normals(path: &Path) -> Result<NormalMap<f64>> {
    let map = read_pfm(path)?;
    if map.channels != 3 {
        return Err(Error::format(path, "normal maps need three channels"));
    }
    let vectors = map
        .data
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64))
        .collect();
    Ok(NormalMap::from_vectors(Grid::new(map.width, map.height, vectors)?))
}

/// Stores a light field as a direction map and an attenuation map.
pub fn write_light_field(directions: &Path, attenuation: &Path, field: &LightField<f64>) -> Result<()> {
    write_vectors(directions, field.directions(), field.validity())?;
    let (width, height) = field.dims();
    let data = field
        .attenuations()
        .as_slice()
        .iter()
        .zip(field.validity().as_slice())
        .map(|(a, ok)| if *ok { *a as f32 } else { 0.0 })
        .collect();
    write_pfm(
        attenuation,
        &FloatMap {
            width,
            height,
            channels: 1,
            data,
        },
    )
}
