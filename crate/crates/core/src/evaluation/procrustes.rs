use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::scalar::Real;

/// Similarity transform `b = scale * rotation * a + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
    pub scale: T,
    /// RMS distance between aligned `a` and `b`.
    pub residual: T,
}

impl<T: Real> AlignmentResult<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            scale: T::one(),
            residual: T::zero(),
        }
    }

    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        self.apply_with_scale(p, self.scale)
    }

    /// Applies the rotation and translation with a different scale.
    pub fn apply_with_scale(&self, p: &Vector3<T>, scale: T) -> Vector3<T> {
        self.rotation * p * scale + self.translation
    }
}

fn centroid<T: Real>(points: &[Vector3<T>]) -> Vector3<T> {
    points.iter().fold(Vector3::zeros(), |a, p| a + p) / T::from_usize_lossy(points.len())
}

fn rank_deficient<T: Real>(m: &Matrix3<T>) -> bool {
    let sv = m.singular_values();
    let mut s: Vec<T> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    !(s[1] > s[0] * T::lit(1e-12)) || !(s[0] > T::zero())
}

/// Least-squares similarity mapping `a` onto `b` (Umeyama). Reflections are
/// resolved to the nearest proper rotation.
pub fn procrustes_align<T: Real>(a: &[Vector3<T>], b: &[Vector3<T>]) -> Result<AlignmentResult<T>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("{} points cannot correspond to {}", a.len(), b.len())));
    }
    if a.len() < 3 {
        return Err(Error::invalid("alignment needs at least 3 correspondences"));
    }
    let n = T::from_usize_lossy(a.len());
    let (ca, cb) = (centroid(a), centroid(b));
    let mut cov = Matrix3::zeros();
    let mut spread_a = Matrix3::zeros();
    let mut var_a = T::zero();
    for (p, q) in a.iter().zip(b) {
        let (pa, qb) = (p - ca, q - cb);
        cov += qb * pa.transpose();
        spread_a += pa * pa.transpose();
        var_a += pa.norm_squared();
    }
    cov /= n;
    var_a /= n;
    if rank_deficient(&spread_a) || rank_deficient(&cov) {
        return Err(Error::Degenerate("correspondences are collinear or coincident".into()));
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut signs = Vector3::new(T::one(), T::one(), T::one());
    if (u * v_t).determinant() < T::zero() {
        signs.z = -T::one();
    }
    let rotation = u * Matrix3::from_diagonal(&signs) * v_t;
    let trace = svd.singular_values.component_mul(&signs).sum();
    let scale = trace / var_a;
    let translation = cb - rotation * ca * scale;
    let mut result = AlignmentResult {
        rotation,
        translation,
        scale,
        residual: T::zero(),
    };
    let sq = a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + (result.apply(p) - q).norm_squared());
    result.residual = (sq / n).sqrt();
    Ok(result)
}

/// Aligns trajectory `a` onto `b` through their camera centers, pairing
/// frames by position in the lists.
pub fn align_trajectories<T: Real>(a: &[Pose<T>], b: &[Pose<T>]) -> Result<AlignmentResult<T>> {
    let centers = |poses: &[Pose<T>]| poses.iter().map(|p| *p.translation()).collect::<Vec<_>>();
    procrustes_align(&centers(a), &centers(b))
}
