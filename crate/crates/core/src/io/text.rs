//! Intrinsics, trajectories, energy traces and JSON documents.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose};

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads `{"fx","fy","cx","cy","width","height"}` and validates it.
pub fn read_intrinsics(path: &Path) -> Result<Intrinsics<f64>> {
    let k: Intrinsics<f64> = read_json(path)?;
    k.validate()?;
    Ok(k)
}

pub fn write_intrinsics(path: &Path, k: &Intrinsics<f64>) -> Result<()> {
    write_json(path, k)
}

/// One `frame_id tx ty tz qx qy qz qw` line per pose.
pub fn format_trajectory(frames: &[(usize, Pose<f64>)]) -> String {
    let mut out = String::new();
    for (id, pose) in frames {
        let t = pose.translation();
        let [qx, qy, qz, qw] = pose.quaternion();
        out += &format!("{id} {} {} {} {qx} {qy} {qz} {qw}\n", t.x, t.y, t.z);
    }
    out
}

pub fn write_trajectory(path: &Path, frames: &[(usize, Pose<f64>)]) -> Result<()> {
    fs::write(path, format_trajectory(frames)).map_err(|e| Error::io(path, e))
}

/// Parses trajectory lines; blank lines and `#` comments are ignored.
pub fn read_trajectory(path: &Path) -> Result<Vec<(usize, Pose<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut frames = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| Error::format(path, format!("line {}: {reason}", n + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let id: usize = fields[0].parse().map_err(|_| bad("bad frame id"))?;
        let mut v = [0.0; 7];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| bad("bad number"))?;
        }
        let pose = Pose::from_quaternion([v[3], v[4], v[5], v[6]], Vector3::new(v[0], v[1], v[2]))
            .map_err(|e| bad(&e.to_string()))?;
        frames.push((id, pose));
    }
    Ok(frames)
}

/// Writes `iteration,step,energy` rows, one per recorded energy.
pub fn write_energy_csv(path: &Path, traces: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["iteration", "step", "energy"]).map_err(|e| csv_error(path, e))?;
    for (i, trace) in traces.iter().enumerate() {
        for (step, e) in trace.iter().enumerate() {
            w.serialize((i + 1, step, e)).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.txt");
        let frames: Vec<_> = (0..3)
            .map(|i| (i, Pose::from_axis_angle(&Vector3::new(1.0, 2.0, 0.5), 0.3 * i as f64, Vector3::new(0.1, -0.2, i as f64))))
            .collect();
        write_trajectory(&path, &frames).unwrap();
        let back = read_trajectory(&path).unwrap();
        for ((ia, a), (ib, b)) in frames.iter().zip(&back) {
            assert_eq!(ia, ib);
            assert_eq!(a.translation(), b.translation());
            assert!((a.rotation() - b.rotation()).abs().max() < 1e-15);
        }
    }

    #[test]
    fn malformed_pose_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "# header\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 1\n").unwrap();
        let err = read_trajectory(&path).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn intrinsics_json_uses_plain_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.json");
        let k = Intrinsics::new(50.0, 51.0, 31.5, 30.5, 64, 62).unwrap();
        write_intrinsics(&path, &k).unwrap();
        let v: serde_json::Value = read_json(&path).unwrap();
        assert_eq!(v["fy"], 51.0);
        assert_eq!(v["height"], 62);
        assert_eq!(read_intrinsics(&path).unwrap(), k);
    }

    #[test]
    fn energy_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_energy_csv(&path, &[vec![3.0, 2.5], vec![1.0]]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iteration,step,energy\n1,0,3.0\n1,1,2.5\n2,0,1.0\n");
    }
}
