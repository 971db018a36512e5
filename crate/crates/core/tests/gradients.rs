//! Analytic loss gradients against central finite differences.

use colonorm::geometry::{DepthMap, Intrinsics, Mask, NormalMap, Pose};
use colonorm::losses::{
    depth_consistency_gradients, loss_depth_consistency, loss_normal_consistency, loss_orthogonality,
    normal_consistency_gradient, numeric_gradient, orthogonality_gradient, relative_error,
};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;
const TOL: f64 = 1e-3;

struct Instance {
    k: Intrinsics<f64>,
    pose: Pose<f64>,
    depth_t: DepthMap<f64>,
    depth_s: DepthMap<f64>,
    normals_t: NormalMap<f64>,
    normals_s: NormalMap<f64>,
    mask: Mask<f64>,
}

fn random_normal(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), -1.0).normalize()
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::new(8.0, 8.0, 3.5, 3.5, 8, 8).unwrap();
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let pose = Pose::from_axis_angle(
        &axis,
        rng.random_range(-0.05..0.05),
        Vector3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)),
    );
    let depth_t = DepthMap::from_fn(8, 8, |_, _| rng.random_range(1.0..2.0));
    let depth_s = DepthMap::from_fn(8, 8, |_, _| rng.random_range(1.0..2.0));
    let normals_t = NormalMap::from_fn(8, 8, |_, _| random_normal(&mut rng));
    let normals_s = NormalMap::from_fn(8, 8, |_, _| random_normal(&mut rng));
    Instance {
        k,
        pose,
        depth_t,
        depth_s,
        normals_t,
        normals_s,
        mask: Mask::ones(8, 8),
    }
}

#[test]
fn orthogonality_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let inst = instance(seed);
        let analytic = orthogonality_gradient(&inst.normals_t, &inst.depth_t, &inst.k).unwrap();
        let numeric = numeric_gradient(
            |d: &DepthMap<f64>| loss_orthogonality(&inst.normals_t, d, &inst.k).map(|l| l.value),
            &inst.depth_t,
            STEP,
        )
        .unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err <= TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn depth_consistency_gradients_match_finite_differences() {
    for seed in 0..20 {
        let inst = instance(100 + seed);
        let (g_t, g_s) =
            depth_consistency_gradients(&inst.depth_s, &inst.depth_t, &inst.pose, &inst.k, &inst.mask).unwrap();
        let num_t = numeric_gradient(
            |d: &DepthMap<f64>| loss_depth_consistency(&inst.depth_s, d, &inst.pose, &inst.k, &inst.mask).map(|l| l.value),
            &inst.depth_t,
            STEP,
        )
        .unwrap();
        let num_s = numeric_gradient(
            |d: &DepthMap<f64>| loss_depth_consistency(d, &inst.depth_t, &inst.pose, &inst.k, &inst.mask).map(|l| l.value),
            &inst.depth_s,
            STEP,
        )
        .unwrap();
        let et = relative_error(&g_t, &num_t);
        let es = relative_error(&g_s, &num_s);
        assert!(et <= TOL, "seed {seed}: target relative error {et:e}");
        assert!(es <= TOL, "seed {seed}: source relative error {es:e}");
    }
}

#[test]
fn normal_consistency_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let inst = instance(200 + seed);
        let analytic = normal_consistency_gradient(
            &inst.normals_s,
            &inst.normals_t,
            &inst.depth_t,
            &inst.pose,
            &inst.k,
            &inst.mask,
        )
        .unwrap();
        let numeric = numeric_gradient(
            |d: &DepthMap<f64>| {
                loss_normal_consistency(&inst.normals_s, &inst.normals_t, d, &inst.pose, &inst.k, &inst.mask)
                    .map(|l| l.value)
            },
            &inst.depth_t,
            STEP,
        )
        .unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err <= TOL, "seed {seed}: relative error {err:e}");
    }
}
