use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"{
  "width": 80, "height": 80, "seed": 4,
  "sea": {"copol_power": 1.0, "copol_ratio_db": 0.0, "rho": [0.9, 0.0], "cross_pol_fraction": 0.02},
  "ships": [{"center": [40, 40], "extent": [5, 9], "multiplier": 30.0, "weights": [0.4, 0.2, 0.1, 0.3], "mode": "speckled"}]
}"#;

fn polship(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polship")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = polship(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    polship(dir, args).status.code().unwrap()
}

/// Tempdir holding `spec.json`, `scene.qpi` and `truth.pgm`.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), SPEC).unwrap();
    ok(dir.path(), &["simulate", "--spec", "spec.json", "--out", "scene.qpi", "--truth", "truth.pgm", "--write-spec", "echo.json"]);
    dir
}

#[test]
fn simulate_writes_image_truth_and_spec() {
    let dir = workspace();
    let d = dir.path();
    let img = polship::io::read_qpi(&d.join("scene.qpi")).unwrap();
    assert_eq!((img.width, img.height), (80, 80));
    let (_, _, truth) = polship::io::read_mask_pgm(&d.join("truth.pgm")).unwrap();
    assert_eq!(truth.iter().filter(|&&t| t).count(), 45);
    let echo: serde_json::Value = serde_json::from_slice(&fs::read(d.join("echo.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 4);

    ok(d, &["simulate", "--spec", "spec.json", "--seed", "5", "--out", "other.qpi"]);
    assert_ne!(fs::read(d.join("scene.qpi")).unwrap(), fs::read(d.join("other.qpi")).unwrap());
    ok(d, &["--threads", "1", "simulate", "--spec", "spec.json", "--out", "again.qpi"]);
    assert_eq!(fs::read(d.join("scene.qpi")).unwrap(), fs::read(d.join("again.qpi")).unwrap());
}

#[test]
fn eval_scores_the_ship() {
    let dir = workspace();
    let d = dir.path();
    let args = ["eval", "--in", "scene.qpi", "--truth", "truth.pgm", "--pfa", "1e-3", "--guard-pct", "98", "--out", "run"];
    let stdout = ok(d, &args);
    assert!(stdout.contains("detected 1/1"), "{stdout}");
    for f in ["map.bin", "map.bin.json", "mask.pgm", "report.json", "histogram.csv"] {
        assert!(d.join("run").join(f).is_file(), "{f}");
    }
    let stdout = ok(d, &["eval", "--spec", "spec.json", "--detector", "dbsp", "--pfa", "1e-3", "--guard-pct", "98", "--out", "run2"]);
    assert!(stdout.contains("detected"), "{stdout}");
}

#[test]
fn missing_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["eval", "--in", "nope.qpi", "--out", "run"]), 4);
    assert!(!d.join("run").exists());
    assert_eq!(code(d, &["render", "--in", "nope.bin", "--out", "x.pgm"]), 4);
    assert!(!d.join("x.pgm").exists());
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(code(d, &["eval"]), 2);
    assert_eq!(code(d, &["eval", "--in", "scene.qpi", "--window", "4", "--out", "run"]), 3);
    assert_eq!(code(d, &["eval", "--in", "scene.qpi", "--pfa", "2", "--out", "run"]), 3);
    fs::write(d.join("junk.qpi"), "junk\n").unwrap();
    assert_eq!(code(d, &["eval", "--in", "junk.qpi", "--out", "run"]), 5);
    assert!(!d.join("run").exists());

    ok(d, &["detector", "--in", "scene.qpi", "--detector", "span", "--out", "span.bin"]);
    assert_eq!(code(d, &["scr", "--in", "span.bin", "--target", "0,0,2,2", "--clutter", "79,79,2,2"]), 3);
    let zero = polship::detectors::DetectorMap::new(4, 4, "z", 1, vec![0.0; 16]).unwrap();
    polship::io::write_map(&d.join("zero.bin"), &zero).unwrap();
    assert_eq!(code(d, &["scr", "--in", "zero.bin", "--target", "0,0,1,1", "--clutter", "2,2,1,1"]), 7);
    assert_eq!(code(d, &["fit", "--in", "zero.bin"]), 6);
}

#[test]
fn per_stage_commands() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["covariance", "--in", "scene.qpi", "--out", "c.bin"]);
    assert_eq!(polship::io::read_raster(&d.join("c.bin")).unwrap().bands.len(), 9);
    ok(d, &["decompose", "--in", "scene.qpi", "--out", "p.bin"]);
    let p = polship::io::read_raster(&d.join("p.bin")).unwrap();
    assert_eq!(p.meta.bands, vec!["ps", "pd", "pv", "ph"]);
    ok(d, &["anisotropy", "--in", "scene.qpi", "--window", "3", "--out", "a.bin"]);
    let a = polship::io::read_raster(&d.join("a.bin")).unwrap();
    assert!(a.band("delta_s").unwrap().iter().all(|&v| (0.0..=1.0).contains(&v)));

    ok(d, &["detector", "--in", "scene.qpi", "--out", "jsa.bin"]);
    let fit = ok(d, &["fit", "--in", "jsa.bin", "--guard-pct", "98", "--histogram", "h.csv"]);
    let v: serde_json::Value = serde_json::from_str(&fit).unwrap();
    assert!(v["kappa"].as_f64().unwrap() > 0.0 && v["kl"].as_f64().unwrap() >= 0.0);
    assert!(fs::read_to_string(d.join("h.csv")).unwrap().starts_with("bin_left,"));

    ok(d, &["cfar", "--in", "jsa.bin", "--pfa", "1e-3", "--guard-pct", "98", "--truth", "truth.pgm", "--out", "m.pgm", "--report", "r.json"]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(r["detection"]["detected"], 1);
    assert!(d.join("m.pgm").is_file());
}

#[test]
fn scr_and_render() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["detector", "--in", "scene.qpi", "--detector", "span", "--out", "span.bin"]);
    ok(d, &["detector", "--in", "scene.qpi", "--detector", "joint-sa", "--out", "jsa.bin"]);
    fs::write(d.join("regions.txt"), "# one ship\nship 38,36,5,9 5,5,20,20\n").unwrap();
    let csv = ok(d, &["scr", "--in", "span.bin", "jsa.bin", "--regions", "regions.txt"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "name,scr_span_db,scr_joint-sa_db");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (span, jsa): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
    assert!(jsa > span && span > 0.0, "{csv}");

    ok(d, &["render", "--in", "scene.qpi", "--out", "pauli.ppm"]);
    assert_eq!(polship::io::read_pnm(&d.join("pauli.ppm")).unwrap().2, 3);
    ok(d, &["render", "--in", "jsa.bin", "--out", "jsa.pgm"]);
    ok(d, &["render", "--in", "truth.pgm", "--out", "truth2.pgm"]);
    assert_eq!(fs::read(d.join("truth.pgm")).unwrap(), fs::read(d.join("truth2.pgm")).unwrap());
}
