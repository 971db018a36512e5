use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::Phantom;
use crate::error::Result;
use crate::geometry::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewType {
    /// Optical axis along the centerline.
    DownTheBarrel,
    /// Optical axis towards the wall.
    EnFace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub view: ViewType,
    /// `(frame id, camera-to-world pose)` in capture order.
    pub frames: Vec<(usize, Pose<f64>)>,
}

/// Smooth scalar jitter: a sum of two low-frequency sinusoids in the frame
/// index with random phases.
struct Jitter {
    amplitude: f64,
    phases: [f64; 2],
}

impl Jitter {
    fn new(rng: &mut ChaCha8Rng, amplitude: f64) -> Self {
        Self {
            amplitude,
            phases: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
        }
    }

    fn at(&self, i: usize) -> f64 {
        let t = i as f64;
        0.5 * self.amplitude * ((0.31 * t + self.phases[0]).sin() + (0.13 * t + self.phases[1]).sin())
    }
}

/// Camera path through the phantom. Down-the-barrel frames advance by
/// `0.1 R0` along the centerline; en face frames sit `0.3 R0` off the wall,
/// stepping along and around the tube. Positions and orientations carry
/// seeded smooth perturbations (at most `0.03 R0` and 3 degrees).
pub fn make_trajectory(phantom: &Phantom, view: ViewType, frame_count: usize, seed: u64) -> Result<Trajectory> {
    let r0 = phantom.params().radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<Jitter> = (0..3).map(|_| Jitter::new(&mut rng, 0.03 * r0)).collect();
    let tilts: Vec<Jitter> = (0..2).map(|_| Jitter::new(&mut rng, 3f64.to_radians())).collect();
    let wall_start = rng.random_range(0.0..TAU);

    let mut frames = Vec::with_capacity(frame_count);
    for i in 0..frame_count {
        let offset = Vector3::new(offsets[0].at(i), offsets[1].at(i), offsets[2].at(i));
        let (position, forward, down) = match view {
            ViewType::DownTheBarrel => {
                let frame = phantom.frame(0.1 * r0 * i as f64);
                (frame.origin, frame.tangent, frame.binormal)
            }
            ViewType::EnFace => {
                let u = 0.02 * r0 * i as f64;
                let theta = wall_start + 0.08 * i as f64;
                let wall = phantom.surface_point(u, theta);
                let inward = phantom.inward_normal(&wall);
                let down = phantom.frame(u).tangent;
                (wall + inward * (0.3 * r0), -inward, down)
            }
        };
        let base = Pose::looking_along(position + offset, &forward, &down)?;
        let x = Unit::new_normalize(base.transform_vector(&Vector3::x()));
        let y = Unit::new_normalize(base.transform_vector(&Vector3::y()));
        let tilt = UnitQuaternion::from_axis_angle(&x, tilts[0].at(i)) * UnitQuaternion::from_axis_angle(&y, tilts[1].at(i));
        let rotation = tilt.to_rotation_matrix().into_inner() * base.rotation();
        frames.push((i, Pose::new(rotation, *base.translation())?));
    }
    Ok(Trajectory { view, frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::render::trace;
    use crate::phantom::{make_phantom, Centerline, PhantomParams};

    fn phantoms() -> Vec<Phantom> {
        [Centerline::Straight, Centerline::Arc { radius: 8.0 }]
            .into_iter()
            .map(|centerline| {
                make_phantom(PhantomParams {
                    centerline,
                    fold_amplitude: 0.2,
                    ..PhantomParams::default()
                })
                .unwrap()
            })
            .collect()
    }

    fn axis(pose: &Pose<f64>) -> Vector3<f64> {
        pose.transform_vector(&Vector3::z())
    }

    #[test]
    fn en_face_looks_at_the_wall() {
        for ph in phantoms() {
            let t = make_trajectory(&ph, ViewType::EnFace, 12, 7).unwrap();
            for (_, pose) in &t.frames {
                let c = pose.translation();
                let t = trace(&ph, c, &axis(pose)).unwrap();
                let outward = -ph.inward_normal(&(c + axis(pose) * t));
                assert!(axis(pose).angle(&outward).to_degrees() <= 10.0);
                assert!(ph.implicit(c) < -0.1 * ph.params().radius);
            }
        }
    }

    #[test]
    fn down_the_barrel_follows_the_centerline() {
        for ph in phantoms() {
            let t = make_trajectory(&ph, ViewType::DownTheBarrel, 12, 7).unwrap();
            for (_, pose) in &t.frames {
                let c = pose.translation();
                let tangent = ph.frame(ph.tube_coords(c).u).tangent;
                assert!(axis(pose).angle(&tangent).to_degrees() <= 5.0);
                assert!(ph.implicit(c) < -0.1 * ph.params().radius);
            }
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        let ph = &phantoms()[0];
        let a = make_trajectory(ph, ViewType::EnFace, 5, 1).unwrap();
        let b = make_trajectory(ph, ViewType::EnFace, 5, 1).unwrap();
        let c = make_trajectory(ph, ViewType::EnFace, 5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
