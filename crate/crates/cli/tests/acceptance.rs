//! End-to-end acceptance checks on the synthetic phantom. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fail.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use colonorm::evaluation::{chamfer_distance, depth_metrics, optimize_scale_chamfer, procrustes_align, AlignmentResult, ChamferDirection};
use colonorm::fusion::{coverage_holes, extract_mesh, frame_bounds, fuse_tsdf, CoverageConfig, GridConfig, PosedDepth};
use colonorm::geometry::{relative_pose, DepthMap, Intrinsics, Mask, NormalMap, Pose};
use colonorm::illumination::light_field;
use colonorm::integration::{integrate_normals, normals_from_depth, refine_multiscale, resize_depth_bilinear, RefinementConfig};
use colonorm::losses::{
    depth_consistency_gradients, loss_depth_consistency, loss_init_total, loss_normal_consistency, loss_orthogonality,
    normal_consistency_gradient, numeric_gradient, orthogonality_gradient, relative_error, Frame, FramePair, LossConfig,
};
use colonorm::phantom::{make_phantom, make_trajectory, render_frame, Centerline, Phantom, PhantomParams, ViewType};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn phantom(centerline: Centerline, fold_amplitude: f64) -> Phantom {
    make_phantom(PhantomParams {
        centerline,
        fold_amplitude,
        ..PhantomParams::default()
    })
    .expect("valid phantom")
}

fn k64() -> Intrinsics<f64> {
    Intrinsics::from_fov(70f64.to_radians(), 64, 64).expect("valid intrinsics")
}

fn zero_loss_suite() -> Check {
    let start = Instant::now();
    let ph = phantom(Centerline::Straight, 0.0);
    let k = k64();
    let traj = make_trajectory(&ph, ViewType::DownTheBarrel, 6, 42).map_err(err)?;
    let frames = traj
        .frames
        .iter()
        .map(|(_, pose)| {
            render_frame(&ph, pose, &k, 2.0).map(|r| Frame {
                image: r.image,
                depth: r.depth,
                normals: r.normals,
            })
        })
        .collect::<colonorm::Result<Vec<_>>>()
        .map_err(err)?;
    let mut worst = [0.0f64; 4];
    for i in 0..frames.len() - 1 {
        let pair = FramePair {
            target: &frames[i + 1],
            source: &frames[i],
            pose_t_to_s: relative_pose(&traj.frames[i + 1].1, &traj.frames[i].1),
            intrinsics: k,
        };
        let r = loss_init_total(&pair, &LossConfig::default(), None).map_err(err)?.report;
        for (w, v) in worst.iter_mut().zip([r.norm, r.depth, r.orth, r.photo]) {
            *w = w.max(v);
        }
    }
    let [norm, depth, orth, photo] = worst;
    ensure(norm <= 1e-2 && depth <= 1e-2 && orth <= 1e-2, format!("norm {norm:.2e} depth {depth:.2e} orth {orth:.2e}"))?;
    ensure(photo <= 0.02, format!("photo {photo:.2e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("max norm {norm:.1e}, depth {depth:.1e}, orth {orth:.1e}, photo {photo:.1e}"))
}

struct GradientCase {
    k: Intrinsics<f64>,
    pose: Pose<f64>,
    depth_t: DepthMap<f64>,
    depth_s: DepthMap<f64>,
    normals_t: NormalMap<f64>,
    normals_s: NormalMap<f64>,
    mask: Mask<f64>,
}

fn gradient_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| Vector3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), -1.0).normalize();
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let angle = rng.random_range(-0.05..0.05);
    let shift = Vector3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    GradientCase {
        k: Intrinsics::new(8.0, 8.0, 3.5, 3.5, 8, 8).expect("valid intrinsics"),
        pose: Pose::from_axis_angle(&axis, angle, shift),
        depth_t: DepthMap::from_fn(8, 8, |_, _| rng.random_range(1.0..2.0)),
        depth_s: DepthMap::from_fn(8, 8, |_, _| rng.random_range(1.0..2.0)),
        normals_t: NormalMap::from_fn(8, 8, |_, _| normal(&mut rng)),
        normals_s: NormalMap::from_fn(8, 8, |_, _| normal(&mut rng)),
        mask: Mask::ones(8, 8),
    }
}

fn gradient_oracle() -> Check {
    const STEP: f64 = 1e-4;
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let c = gradient_case(1000 + seed);
        let orth = relative_error(
            &orthogonality_gradient(&c.normals_t, &c.depth_t, &c.k).map_err(err)?,
            &numeric_gradient(|d| loss_orthogonality(&c.normals_t, d, &c.k).map(|l| l.value), &c.depth_t, STEP).map_err(err)?,
        );
        let (g_t, g_s) = depth_consistency_gradients(&c.depth_s, &c.depth_t, &c.pose, &c.k, &c.mask).map_err(err)?;
        let depth_t = relative_error(
            &g_t,
            &numeric_gradient(|d| loss_depth_consistency(&c.depth_s, d, &c.pose, &c.k, &c.mask).map(|l| l.value), &c.depth_t, STEP)
                .map_err(err)?,
        );
        let depth_s = relative_error(
            &g_s,
            &numeric_gradient(|d| loss_depth_consistency(d, &c.depth_t, &c.pose, &c.k, &c.mask).map(|l| l.value), &c.depth_s, STEP)
                .map_err(err)?,
        );
        let norm = relative_error(
            &normal_consistency_gradient(&c.normals_s, &c.normals_t, &c.depth_t, &c.pose, &c.k, &c.mask).map_err(err)?,
            &numeric_gradient(
                |d| loss_normal_consistency(&c.normals_s, &c.normals_t, d, &c.pose, &c.k, &c.mask).map(|l| l.value),
                &c.depth_t,
                STEP,
            )
            .map_err(err)?,
        );
        worst = worst.max(orth).max(depth_t).max(depth_s).max(norm);
    }
    ensure(worst <= 1e-3, format!("relative error {worst:.2e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("max relative error {worst:.1e} over 20 instances"))
}

fn mean_angle_deg(a: &NormalMap<f64>, b: &NormalMap<f64>) -> f64 {
    let (w, h) = a.dims();
    let mut sum = 0.0;
    let mut n = 0;
    for y in 0..h {
        for x in 0..w {
            if let (Some(u), Some(v)) = (a.get(x, y), b.get(x, y)) {
                sum += u.dot(&v).clamp(-1.0, 1.0).acos().to_degrees();
                n += 1;
            }
        }
    }
    sum / n as f64
}

fn round_trip(name: &str, depth: &DepthMap<f64>, normals: &NormalMap<f64>, k: &Intrinsics<f64>) -> Result<String, String> {
    let anchor = depth.median().ok_or("empty depth")?;
    let integrated = integrate_normals(normals, k, anchor).map_err(err)?.depth;
    let angle = mean_angle_deg(&normals_from_depth(&integrated, k).map_err(err)?, normals);
    let derived = normals_from_depth(depth, k).map_err(err)?;
    let back = integrate_normals(&derived, k, anchor).map_err(err)?.depth;
    let rmse = depth_metrics(&back, depth, &Mask::ones(64, 64)).map_err(err)?.rmse;
    let values = depth.valid_values();
    let range = values.iter().copied().fold(f64::MIN, f64::max) - values.iter().copied().fold(f64::MAX, f64::min);
    let rel = rmse / range;
    ensure(angle <= 1.0, format!("{name}: mean angular error {angle:.3} deg"))?;
    ensure(rel <= 0.01, format!("{name}: depth RMSE {:.3}% of range", 100.0 * rel))?;
    Ok(format!("{name} {angle:.2} deg / {:.2}%", 100.0 * rel))
}

fn normal_depth_round_trip() -> Check {
    let k = k64();
    let mut parts = Vec::new();

    let plane = Vector3::new(0.3, -0.2, -1.0).normalize();
    let offset = -2.0;
    let depth = DepthMap::from_fn(64, 64, |x, y| offset / plane.dot(&k.ray(x as f64, y as f64)));
    parts.push(round_trip("plane", &depth, &NormalMap::constant(64, 64, plane), &k)?);

    let (center, radius) = (Vector3::new(0.2, -0.1, 4.0), 3.5);
    let hit = |x: usize, y: usize| {
        let ray = k.ray(x as f64, y as f64);
        let d = ray.normalize();
        let b = d.dot(&center);
        let t = b - (b * b - center.norm_squared() + radius * radius).sqrt();
        d * t
    };
    let depth = DepthMap::from_fn(64, 64, |x, y| hit(x, y).z);
    let normals = NormalMap::from_fn(64, 64, |x, y| (hit(x, y) - center).normalize());
    parts.push(round_trip("sphere", &depth, &normals, &k)?);

    let ph = phantom(Centerline::Arc { radius: 8.0 }, 0.1);
    let traj = make_trajectory(&ph, ViewType::EnFace, 10, 42).map_err(err)?;
    for i in [0, 5] {
        let f = render_frame(&ph, &traj.frames[i].1, &k, 2.0).map_err(err)?;
        parts.push(round_trip(&format!("wall{i}"), &f.depth, &f.normals, &k)?);
    }
    Ok(parts.join(", "))
}

fn refinement_efficacy() -> Check {
    let start = Instant::now();
    let ph = phantom(Centerline::Arc { radius: 8.0 }, 0.1);
    let k = k64();
    let traj = make_trajectory(&ph, ViewType::EnFace, 10, 42).map_err(err)?;
    let config = RefinementConfig::default();
    let mask = Mask::ones(64, 64);
    let mut worst = [0.0f64; 2];
    for (_, pose) in &traj.frames {
        let f = render_frame(&ph, pose, &k, 2.0).map_err(err)?;
        let corrupted = DepthMap::from_fn(64, 64, |x, y| {
            let (u, v) = (x as f64 / 64.0, y as f64 / 64.0);
            f.depth.get(x, y).unwrap_or(1.0) * (1.0 + 0.2 * (3.0 * u + 0.5).sin() * (2.5 * v).cos())
        });
        let flat = DepthMap::constant(config.base_size[0], config.base_size[1], 1.0);
        for (slot, init) in worst.iter_mut().zip([&flat, &corrupted]) {
            let before = depth_metrics(&resize_depth_bilinear(init, 64, 64), &f.depth, &mask).map_err(err)?.rmse;
            let result = refine_multiscale(&f.image, init, &k, &config).map_err(err)?;
            let after = depth_metrics(&result.state.depth, &f.depth, &mask).map_err(err)?.rmse;
            let monotone = result
                .passes
                .iter()
                .all(|p| p.energy_trace.windows(2).all(|w| w[1] <= w[0]));
            ensure(monotone, "energy trace increased")?;
            *slot = slot.max(after / before);
        }
    }
    let [flat, corrupted] = worst;
    ensure(flat <= 0.5 && corrupted <= 0.5, format!("worst RMSE ratio flat {flat:.3}, corrupted {corrupted:.3}"))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!("worst RMSE ratio flat {flat:.2}, corrupted {corrupted:.2}"))
}

fn brute_force_chamfer(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt())
        .sum::<f64>()
        / from.len() as f64
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn metric_correctness() -> Check {
    let ones = Mask::ones(2, 2);
    let pred = DepthMap::from_vec(2, 2, vec![1.0, 1.0, 1.0, 4.0]).map_err(err)?;
    let gt = DepthMap::from_vec(2, 2, vec![1.0, 1.0, 1.0, 2.0]).map_err(err)?;
    let m = depth_metrics(&pred, &gt, &ones).map_err(err)?;
    let log = (4f64.ln() - 2f64.ln()).powi(2);
    ensure(m.scale_applied == 1.0, "scale on unit-median case")?;
    ensure(
        m.abs_rel == 0.25 && m.sq_rel == 0.5 && m.rmse == 1.0 && m.log_rmse == (log / 4.0).sqrt(),
        format!("unit-median case {m:?}"),
    )?;

    // median scaling by 2, one pixel masked out
    let pred = DepthMap::from_vec(2, 2, vec![0.5, 1.0, 3.0, 9.0]).map_err(err)?;
    let gt = DepthMap::from_vec(2, 2, vec![1.0, 2.0, 4.0, 1.0]).map_err(err)?;
    let mask = Mask::from_bools(&colonorm::geometry::Grid::from_fn(2, 2, |x, y| (x, y) != (1, 1)));
    let m = depth_metrics(&pred, &gt, &mask).map_err(err)?;
    let (abs_rel, sq_rel, rmse) = (((6.0f64 - 4.0) / 4.0) / 3.0, (2f64.powi(2) / 4.0) / 3.0, (4.0f64 / 3.0).sqrt());
    let log_rmse = ((6f64.ln() - 4f64.ln()).powi(2) / 3.0).sqrt();
    ensure(
        m.scale_applied == 2.0 && m.abs_rel == abs_rel && m.sq_rel == sq_rel && m.rmse == rmse && m.log_rmse == log_rmse,
        format!("masked case {m:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gt = DepthMap::from_fn(32, 32, |_, _| rng.random_range(0.5..3.0));
    let pred = DepthMap::from_fn(32, 32, |_, _| rng.random_range(0.5..3.0));
    let mask = Mask::ones(32, 32);
    let base = depth_metrics(&pred, &gt, &mask).map_err(err)?;
    for s in [1e-3, 0.37, 7.0, 1e4] {
        let m = depth_metrics(&pred.scaled(s), &gt, &mask).map_err(err)?;
        let diffs: [f64; 4] = [m.abs_rel - base.abs_rel, m.sq_rel - base.sq_rel, m.rmse - base.rmse, m.log_rmse - base.log_rmse];
        ensure(diffs.iter().all(|d| d.abs() <= 1e-12), format!("scale {s}: {diffs:?}"))?;
    }

    let a = random_cloud(&mut rng, 1000);
    let b = random_cloud(&mut rng, 1000);
    let fast = chamfer_distance(&a, &b, ChamferDirection::OneWay).map_err(err)?;
    let sym = chamfer_distance(&a, &b, ChamferDirection::Symmetric).map_err(err)?;
    let (ab, ba) = (brute_force_chamfer(&a, &b), brute_force_chamfer(&b, &a));
    ensure((fast - ab).abs() <= 1e-12, format!("one-way {fast} vs {ab}"))?;
    ensure((sym - 0.5 * (ab + ba)).abs() <= 1e-12, format!("symmetric {sym} vs {}", 0.5 * (ab + ba)))?;
    Ok(format!("oracle exact, scale drift <= 1e-12, chamfer {fast:.6}"))
}

fn alignment_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_cloud(&mut rng, 50);
    let truth = Pose::from_axis_angle(&Vector3::new(0.3, -1.0, 0.5), 1.1, Vector3::new(0.4, -2.0, 1.5));
    let scale = 1.7;
    let b: Vec<_> = a.iter().map(|p| truth.rotation() * p * scale + truth.translation()).collect();
    let fit = procrustes_align(&a, &b).map_err(err)?;
    let rot = (fit.rotation - truth.rotation()).amax();
    let shift = (fit.translation - truth.translation()).amax();
    ensure(
        rot <= 1e-9 && shift <= 1e-9 && (fit.scale - scale).abs() <= 1e-9,
        format!("rotation {rot:.1e}, translation {shift:.1e}, scale {}", fit.scale),
    )?;

    let gt = random_cloud(&mut rng, 2000);
    let factor = 1.3;
    let recon: Vec<_> = gt.iter().map(|p| p / factor).collect();
    let found = optimize_scale_chamfer(&gt, &recon, &AlignmentResult::identity()).map_err(err)?;
    ensure((found - factor).abs() <= 1e-3, format!("scale {found} vs {factor}"))?;
    Ok(format!("similarity error {:.1e}, scale {found:.5}", rot.max(shift)))
}

fn fusion_and_holes() -> Check {
    let ph = phantom(Centerline::Straight, 0.0);
    let k = Intrinsics::from_fov(60f64.to_radians(), 32, 32).map_err(err)?;
    let ring = |angles: &[f64]| -> Result<Vec<PosedDepth>, String> {
        let mut frames = Vec::new();
        for u in [0.0, 0.5, 1.0] {
            for a in angles {
                let (s, c) = a.to_radians().sin_cos();
                let pose = Pose::looking_along(Vector3::new(0.0, 0.0, u), &Vector3::new(c, s, 0.0), &Vector3::z()).map_err(err)?;
                frames.push((render_frame(&ph, &pose, &k, 2.0).map_err(err)?.depth, pose));
            }
        }
        Ok(frames)
    };
    let config = CoverageConfig {
        cells_u: 40,
        ..CoverageConfig::new(0.0, 1.0)
    };
    let full: Vec<f64> = (0..18).map(|i| 20.0 * i as f64).collect();
    let covered = coverage_holes(&ring(&full)?, &k, &ph, &config).map_err(err)?.coverage();
    ensure(covered >= 0.99, format!("full-ring coverage {covered:.4}"))?;

    let partial: Vec<f64> = (0..15).map(|i| 120.0 + 15.0 * i as f64).collect();
    let map = coverage_holes(&ring(&partial)?, &k, &ph, &config).map_err(err)?;
    ensure(map.holes.len() == 1, format!("{} holes", map.holes.len()))?;
    let hole = map.holes[0].area_fraction;
    ensure((hole - 0.25).abs() <= 0.02, format!("hole fraction {hole:.4}"))?;

    let k = k64();
    let frames = vec![(DepthMap::constant(64, 64, 2.0), Pose::identity())];
    let (lo, hi) = frame_bounds(&frames, &k).ok_or("no bounds")?;
    let grid = GridConfig::from_bounds(lo - Vector3::new(0.0, 0.0, 0.3), hi).map_err(err)?;
    let mesh = extract_mesh(&fuse_tsdf(&frames, &k, &grid).map_err(err)?);
    ensure(!mesh.triangles.is_empty(), "empty plane mesh")?;
    let dev = mesh.vertices.iter().map(|v| (v.z - 2.0).abs()).fold(0.0, f64::max) / grid.voxel_size;
    ensure(dev <= 1.0, format!("plane deviation {dev:.3} voxels"))?;
    Ok(format!("coverage {covered:.3}, hole {hole:.3}, plane deviation {dev:.2} voxels"))
}

fn attenuation_sanity() -> Check {
    let k = Intrinsics::new(40.0, 40.0, 4.0, 4.0, 9, 9).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let depth = DepthMap::from_fn(9, 9, |_, _| rng.random_range(0.5..4.0));
    let d: f64 = depth.get(4, 4).ok_or("invalid center")?;
    let mut worst = 0.0f64;
    for mu in [0.0, 0.5, 1.0, 2.0, 4.5] {
        let field = light_field(&depth, &k, mu).map_err(err)?;
        let a: f64 = field.attenuation(4, 4).ok_or("invalid center")?;
        ensure((a * d * d - 1.0).abs() <= 1e-12, format!("mu {mu}: on-axis {a} vs {}", 1.0 / (d * d)))?;
        for s in [0.25, 3.0] {
            let scaled = light_field(&depth.scaled(s), &k, mu).map_err(err)?;
            for y in 0..9 {
                for x in 0..9 {
                    let (a, b): (f64, f64) = (field.attenuation(x, y).ok_or("invalid")?, scaled.attenuation(x, y).ok_or("invalid")?);
                    worst = worst.max((b * s * s / a - 1.0).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, format!("scaling error {worst:.1e}"))?;
    Ok(format!("scaling error {worst:.1e}"))
}

fn run(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_colonorm")).args(args).output().map_err(err)?;
    ensure(
        out.status.success(),
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim()),
    )
}

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(err)? {
            let path = entry.map_err(err)?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).map_err(err)?.to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).map_err(err)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let path = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    for run_name in ["a", "b"] {
        let data = path(&format!("data_{run_name}"));
        run(&["render", "--out", &data, "--frames", "3", "--seed", "7", "--view", "en-face"])?;
        run(&["refine", "--data", &data, "--iterations", "3", "--out", &path(&format!("refined_{run_name}"))])?;
    }
    let count = files(&tmp.path().join("data_a"))?.len() + files(&tmp.path().join("refined_a"))?.len();
    ensure(files(&tmp.path().join("data_a"))? == files(&tmp.path().join("data_b"))?, "render outputs differ")?;
    ensure(files(&tmp.path().join("refined_a"))? == files(&tmp.path().join("refined_b"))?, "refine outputs differ")?;
    Ok(format!("{count} files bit-identical across reruns"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("ground-truth zero-loss suite", zero_loss_suite),
        ("gradient oracle", gradient_oracle),
        ("normal/depth round trip", normal_depth_round_trip),
        ("refinement efficacy", refinement_efficacy),
        ("metric correctness", metric_correctness),
        ("alignment recovery", alignment_recovery),
        ("fusion and holes", fusion_and_holes),
        ("attenuation sanity", attenuation_sanity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}; {secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({detail}; {secs:.2} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
