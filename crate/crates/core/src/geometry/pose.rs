use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rigid transform `x -> rotation * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T: Real> {
    rotation: Matrix3<T>,
    translation: Vector3<T>,
}

impl<T: Real> Pose<T> {
    /// Builds a pose, checking that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self> {
        let tol = T::validation_tolerance();
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(ortho <= tol) {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (deviation {:.3e})",
                ortho.as_f64()
            )));
        }
        let det = rotation.determinant();
        if !((det - T::one()).abs() <= tol) {
            return Err(Error::invalid(format!(
                "rotation determinant {} is not +1",
                det.as_f64()
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: &UnitQuaternion<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation: rotation.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    /// Axis-angle rotation followed by translation.
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T, translation: Vector3<T>) -> Self {
        let q = UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self::from_rotation(&q, translation)
    }

    /// Quaternion given as `[qx, qy, qz, qw]`; it is normalized first.
    pub fn from_quaternion(q: [T; 4], translation: Vector3<T>) -> Result<Self> {
        let quat = Quaternion::new(q[3], q[0], q[1], q[2]);
        let n = quat.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::invalid("quaternion must be non-zero and finite"));
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Ok(Self::from_rotation(&unit, translation))
    }

    /// Returns `[qx, qy, qz, qw]` with `qw >= 0`.
    pub fn quaternion(&self) -> [T; 4] {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let c = q.coords;
        if c.w < T::zero() {
            [-c.x, -c.y, -c.z, -c.w]
        } else {
            [c.x, c.y, c.z, c.w]
        }
    }

    /// Camera-to-world pose with the optical (+z) axis along `forward` and the
    /// image y axis as close as possible to `down`.
    pub fn looking_along(position: Vector3<T>, forward: &Vector3<T>, down: &Vector3<T>) -> Result<Self> {
        let z = forward.try_normalize(T::default_epsilon()).ok_or_else(|| Error::invalid("zero forward vector"))?;
        let y_raw = down - z * z.dot(down);
        let y = y_raw
            .try_normalize(T::lit(1e-9))
            .ok_or_else(|| Error::invalid("down vector parallel to forward"))?;
        let x = y.cross(&z);
        let rotation = Matrix3::from_columns(&[x, y, z]);
        Self::new(rotation, position)
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Angle of the rotation component in radians.
    pub fn rotation_angle(&self) -> T {
        let c = (self.rotation.trace() - T::one()) * T::lit(0.5);
        c.max(-T::one()).min(T::one()).acos()
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose {
            rotation: self.rotation.map(|v| U::lit(v.as_f64())),
            translation: self.translation.map(|v| U::lit(v.as_f64())),
        }
    }
}

/// Relative transform taking target-camera coordinates into the source
/// camera, given world-from-camera poses of both frames.
pub fn relative_pose<T: Real>(world_from_target: &Pose<T>, world_from_source: &Pose<T>) -> Pose<T> {
    world_from_source.inverse().compose(world_from_target)
}
