use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::procrustes::AlignmentResult;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::scalar::Real;

pub const DEFAULT_SURFACE_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChamferDirection {
    /// Mean distance from each point of the first cloud to the second.
    OneWay,
    /// Mean of both one-way distances.
    Symmetric,
}

fn one_way<T: Real>(from: &[Vector3<T>], to: &KdTree<T>) -> T {
    let d: Vec<T> = from.par_iter().map(|p| to.nearest(p).expect("non-empty tree").1.sqrt()).collect();
    d.into_iter().fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(from.len())
}

pub fn chamfer_distance<T: Real>(from: &[Vector3<T>], to: &[Vector3<T>], direction: ChamferDirection) -> Result<T> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::invalid("Chamfer distance needs two non-empty point sets"));
    }
    let forward = one_way(from, &KdTree::new(to));
    Ok(match direction {
        ChamferDirection::OneWay => forward,
        ChamferDirection::Symmetric => (forward + one_way(to, &KdTree::new(from))) / T::lit(2.0),
    })
}

const GOLDEN_TOLERANCE: f64 = 1e-4;

/// Scale of the reconstruction that minimizes the one-way Chamfer distance
/// from the ground truth, keeping the alignment's rotation and translation.
/// Golden-section search over `[0.25, 4]` times the alignment scale; the
/// alignment scale itself is returned if the search does not beat it.
pub fn optimize_scale_chamfer<T: Real>(gt: &[Vector3<T>], recon: &[Vector3<T>], aligned: &AlignmentResult<T>) -> Result<T> {
    if gt.is_empty() || recon.is_empty() {
        return Err(Error::invalid("Chamfer distance needs two non-empty point sets"));
    }
    if !(aligned.scale > T::zero()) {
        return Err(Error::invalid("alignment scale must be positive"));
    }
    let cost = |s: T| {
        let moved: Vec<_> = recon.iter().map(|p| aligned.apply_with_scale(p, s)).collect();
        one_way(gt, &KdTree::new(&moved))
    };
    let phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut lo, mut hi) = (aligned.scale * T::lit(0.25), aligned.scale * T::lit(4.0));
    let tol = T::lit(GOLDEN_TOLERANCE) * aligned.scale;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = cost(x2);
        }
    }
    let best = (lo + hi) / T::lit(2.0);
    Ok(if cost(best) <= cost(aligned.scale) { best } else { aligned.scale })
}

/// Area-weighted uniform samples on the mesh surface.
pub fn sample_mesh_surface<T: Real>(mesh: &Mesh<T>, count: usize, seed: u64) -> Result<Vec<Vector3<T>>> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t).as_f64();
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("mesh has no surface area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let pick = rng.random_range(0.0..total);
            let t = cumulative.partition_point(|c| *c <= pick).min(cumulative.len() - 1);
            let [a, b, c] = mesh.corners(t);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            a * T::lit(1.0 - s) + b * T::lit(s * (1.0 - r2)) + c * T::lit(s * r2)
        })
        .collect())
}
