use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh<T: Real> {
    pub vertices: Vec<Vector3<T>>,
    pub triangles: Vec<[usize; 3]>,
}

impl<T: Real> Mesh<T> {
    pub fn new(vertices: Vec<Vector3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|i| *i >= vertices.len())) {
            return Err(Error::invalid(format!("triangle {t:?} references a missing vertex")));
        }
        Ok(Self { vertices, triangles })
    }

    pub fn corners(&self, t: usize) -> [Vector3<T>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).norm() * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).fold(T::zero(), |acc, t| acc + self.triangle_area(t))
    }
}
