use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn colonorm() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_colonorm"));
    cmd.env_remove("COLONORM_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    colonorm().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn render(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut args = vec!["render", "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn count(dir: &Path, suffix: &str) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(suffix))
        .count()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn render_writes_a_complete_dataset() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--seed", "3"]);
    assert_eq!(count(&data, ".png"), 10);
    assert_eq!(count(&data, ".pfm"), 20);
    for f in ["trajectory.txt", "manifest.json", "intrinsics.json"] {
        assert!(data.join(f).is_file(), "{f}");
    }
    let lines = fs::read_to_string(data.join("trajectory.txt")).unwrap();
    assert_eq!(lines.lines().filter(|l| !l.starts_with('#')).count(), 10);
}

#[test]
fn render_rejects_invalid_config_before_writing() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[scene.phantom]\nfold_amplitude = 1.2\n").unwrap();
    let out_dir = tmp.path().join("never");
    let out = run(&["--config", s(&config), "render", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
    let out = run(&["render", "--out", s(&out_dir), "--fold-amplitude", "1.2"]);
    assert_eq!(code(&out), 1);
    assert!(!out_dir.exists());
}

#[test]
fn config_file_is_read_from_the_environment_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("scene.toml");
    fs::write(&config, "[scene]\nview = \"en-face\"\nframes = 3\nwidth = 24\nheight = 20\n").unwrap();
    let data = tmp.path().join("data");
    let out = colonorm()
        .env("COLONORM_CONFIG", &config)
        .args(["render", "--out", s(&data), "--frames", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(count(&data, ".png"), 2);
    let manifest = json(&data.join("manifest.json"));
    assert_eq!(manifest["view"], "en-face");
    let k = json(&data.join("intrinsics.json"));
    assert_eq!((k["width"].as_u64(), k["height"].as_u64()), (Some(24), Some(20)));
}

#[test]
fn ground_truth_losses_are_near_zero_and_weights_apply() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--fold-amplitude", "0", "--frames", "3"]);
    let report: Value = serde_json::from_str(&ok(&["losses", "--data", s(&data), "--pair", "1", "0"])).unwrap();
    for term in ["norm", "depth", "orth"] {
        assert!(report[term].as_f64().unwrap() <= 1e-2, "{term}: {report}");
    }
    assert!(report["photo"].as_f64().unwrap() <= 0.02);

    let maps = tmp.path().join("maps");
    let weighted: Value = serde_json::from_str(&ok(&[
        "losses", "--data", s(&data), "--pair", "1", "0", "--lambda3", "10", "--out", s(&maps), "--dump-maps",
    ]))
    .unwrap();
    let f = |v: &Value, k: &str| v[k].as_f64().unwrap();
    let expected = f(&report, "total") + (10.0 - 0.05) * f(&report, "orth");
    assert!((f(&weighted, "total") - expected).abs() <= 1e-9 * expected.max(1.0));
    assert_eq!(count(&maps, ".pfm"), 5);
    assert!(maps.join("losses_0001_0000.json").is_file());
}

#[test]
fn uniform_images_leave_no_support() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--frames", "2", "--width", "16", "--height", "16"]);
    for id in 0..2 {
        let white = image::RgbImage::from_pixel(16, 16, image::Rgb([255, 255, 255]));
        white.save(data.join(format!("frame_{id:04}.png"))).unwrap();
    }
    let out = run(&["losses", "--data", s(&data), "--pair", "1", "0"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_files_exit_with_io_code() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["losses", "--data", s(&tmp.path().join("absent")), "--pair", "1", "0"]);
    assert_eq!(code(&out), 3);
    let data = render(&tmp, "data", &["--frames", "2", "--width", "16", "--height", "16"]);
    fs::remove_file(data.join("depth_0001.pfm")).unwrap();
    let out = run(&["losses", "--data", s(&data), "--pair", "1", "0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame 1"));
}

#[test]
fn refine_improves_flat_init_and_validates_iterations() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--view", "en-face", "--frames", "3", "--seed", "42"]);
    let out = tmp.path().join("refined");
    let zero = run(&["refine", "--data", s(&data), "--iterations", "0", "--out", s(&out)]);
    assert_eq!(code(&zero), 1);
    assert!(!out.exists());

    ok(&["refine", "--data", s(&data), "--iterations", "4", "--out", s(&out)]);
    let report = json(&out.join("refine_report.json"));
    let rmse = |k: &str| report[k]["rmse"]["mean"].as_f64().unwrap();
    assert!(rmse("after") <= 0.5 * rmse("before"), "{report}");
    let frame = out.join("frame_0000");
    assert_eq!(count(&frame, ".pfm"), 8);
    let csv = fs::read_to_string(frame.join("energy.csv")).unwrap();
    assert!(csv.starts_with("iteration,step,energy"));
    assert_eq!(count(&out, ".pfm"), 6);

    let one = tmp.path().join("one");
    ok(&["refine", "--data", s(&data), "--iterations", "1", "--frames", "2", "--out", s(&one)]);
    assert_eq!(count(&one.join("frame_0002"), ".pfm"), 2);
    assert!(one.join("depth_0002.pfm").is_file() && !one.join("depth_0000.pfm").exists());
}

#[test]
fn evaluate_ground_truth_against_itself_is_zero() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--frames", "3", "--width", "24", "--height", "24"]);
    let report = tmp.path().join("gt.json");
    let table = ok(&["evaluate", "--pred", s(&data), "--gt", s(&data), "--report", s(&report)]);
    assert!(table.contains("0.000 ± 0.000"));
    let r = json(&report);
    for m in ["abs_rel", "sq_rel", "rmse", "log_rmse"] {
        assert!(r["aggregate"][m]["mean"].as_f64().unwrap().abs() < 1e-6, "{m}");
    }
    assert!(r["chamfer"].is_null());
    let rows = ok(&["report", s(&report)]);
    assert!(rows.lines().nth(1).unwrap().starts_with("gt "));
}

#[test]
fn evaluate_reports_mismatched_frames() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--frames", "3", "--width", "16", "--height", "16"]);
    let pred = tmp.path().join("pred");
    fs::create_dir(&pred).unwrap();
    fs::copy(data.join("depth_0000.pfm"), pred.join("depth_0000.pfm")).unwrap();
    fs::copy(data.join("depth_0001.pfm"), pred.join("depth_0007.pfm")).unwrap();
    let out = run(&["evaluate", "--pred", s(&pred), "--gt", s(&data)]);
    assert_eq!(code(&out), 1);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("[1, 2]") && msg.contains("[7]"), "{msg}");
}

#[test]
fn folds_average_frames_before_aggregating() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--frames", "2", "--width", "16", "--height", "16"]);
    let pred = tmp.path().join("pred");
    fs::create_dir(&pred).unwrap();
    // frame 0 exact; frame 1 replaced by the constant median of its ground truth
    fs::copy(data.join("depth_0000.pfm"), pred.join("depth_0000.pfm")).unwrap();
    let gt1 = colonorm::io::read_depth(&data.join("depth_0001.pfm")).unwrap();
    let flat = colonorm::geometry::DepthMap::constant(16, 16, gt1.median().unwrap());
    colonorm::io::write_depth(&pred.join("depth_0001.pfm"), &flat).unwrap();

    let per_frame = tmp.path().join("frames.json");
    ok(&["evaluate", "--pred", s(&pred), "--gt", s(&data), "--report", s(&per_frame)]);
    let r = json(&per_frame);
    let rmse1 = r["frames"][1]["metrics"]["rmse"].as_f64().unwrap();
    assert!(rmse1 > 0.0);
    let agg = &r["aggregate"]["rmse"];
    assert!((agg["mean"].as_f64().unwrap() - rmse1 / 2.0).abs() < 1e-12);
    assert!((agg["std"].as_f64().unwrap() - rmse1 / 2.0).abs() < 1e-12);

    let one_fold = tmp.path().join("fold.json");
    ok(&["evaluate", "--pred", s(&pred), "--gt", s(&data), "--folds", "1", "--report", s(&one_fold)]);
    let agg = &json(&one_fold)["aggregate"]["rmse"];
    assert!((agg["mean"].as_f64().unwrap() - rmse1 / 2.0).abs() < 1e-12);
    assert_eq!(agg["std"].as_f64().unwrap(), 0.0);
}

#[test]
fn fuse_writes_mesh_and_coverage_then_chamfer_is_reported() {
    let tmp = TempDir::new().unwrap();
    let data = render(&tmp, "data", &["--frames", "4", "--width", "32", "--height", "32", "--fold-amplitude", "0"]);
    let fused = tmp.path().join("fused");
    ok(&["fuse", "--frames", s(&data), "--out", s(&fused)]);
    for f in ["mesh.ply", "coverage.png", "holes.json", "fusion.json"] {
        assert!(fused.join(f).is_file(), "{f}");
    }
    let summary = json(&fused.join("fusion.json"));
    assert!(summary["triangles"].as_u64().unwrap() > 0);
    let coverage = summary["coverage"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&coverage));

    let pred = tmp.path().join("pred");
    fs::create_dir(&pred).unwrap();
    for id in 0..4 {
        let name = format!("depth_{id:04}.pfm");
        fs::copy(data.join(&name), pred.join(&name)).unwrap();
    }
    fs::copy(fused.join("mesh.ply"), pred.join("mesh.ply")).unwrap();
    fs::copy(fused.join("mesh.ply"), data.join("mesh.ply")).unwrap();
    let report = tmp.path().join("eval.json");
    ok(&["evaluate", "--pred", s(&pred), "--gt", s(&data), "--report", s(&report)]);
    let chamfer = json(&report)["chamfer"]["distance"].as_f64().unwrap();
    assert!(chamfer < 1e-2, "chamfer {chamfer}");
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(code(&run(&["render"])), 1);
    assert_eq!(code(&run(&["--jobs", "0", "report", "x.json"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}
