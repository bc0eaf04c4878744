use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).to_string_lossy().into_owned()
}

fn surfoffset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfoffset"))
        .args(args)
        .env("SURFOFFSET_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn prefix(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn offset_torus(out: &Path) -> Output {
    surfoffset(&[
        "offset",
        "--surface",
        &data("surfaces/torus.json"),
        "--curve",
        &data("curves/torus_circle.json"),
        "--distance",
        "0.4",
        "--grid",
        "49,25",
        "--segments",
        "64",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn offset_writes_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(&dir, "torus");
    let run = offset_torus(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for ext in ["obj", "svg"] {
        assert!(out.with_extension(ext).is_file(), "missing {ext}");
    }
    let json = read_json(out.with_extension("json"));
    assert_eq!(json["polylines"].as_array().unwrap().len(), 2);
    assert_eq!(json["seed"], 42);
    assert!(json.get("timings").is_none());
}

#[test]
fn offset_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (prefix(&dir, "a"), prefix(&dir, "b"));
    assert!(offset_torus(&a).status.success());
    assert!(offset_torus(&b).status.success());
    let read = |p: &PathBuf| std::fs::read(p.with_extension("json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn several_distances_get_suffixed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(&dir, "bump");
    let run = surfoffset(&[
        "offset", "--surface", "gaussian_bump", "--curve", "bump_circle", "--distance", "0.1,0.2", "--grid", "25,25",
        "--segments", "48", "--formats", "json", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for d in ["0.1", "0.2"] {
        let json = read_json(dir.path().join(format!("bump_d{d}.json")));
        assert_eq!(json["offset_distance"].as_f64().unwrap().to_string(), d);
    }
    assert!(!dir.path().join("bump_d0.1.obj").exists());
}

#[test]
fn missing_distance_is_a_usage_error() {
    let run = surfoffset(&["offset", "--surface", "torus", "--curve", "torus_circle"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(&dir, "x");
    let out = out.to_str().unwrap();
    let unknown = surfoffset(&["offset", "--surface", "no_such_surface", "--curve", "equator", "--distance", "0.3", "--out", out]);
    assert_eq!(unknown.status.code(), Some(2));
    let tiny = surfoffset(&["offset", "--surface", "sphere", "--curve", "equator", "--distance", "0.3", "--grid", "4,4", "--out", out]);
    assert_eq!(tiny.status.code(), Some(2));
    let beyond = surfoffset(&[
        "offset", "--surface", "sphere", "--curve", "equator", "--distance", "0.3", "--cutoff", "0.2", "--out", out,
    ]);
    assert_eq!(beyond.status.code(), Some(2));
    assert!(!dir.path().join("x.diagnostics.json").exists());
}

#[test]
fn corrupted_field_exits_with_code_3_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(&dir, "stress");
    let run = surfoffset(&[
        "offset",
        "--surface",
        "torus",
        "--curve",
        "torus_circle",
        "--distance",
        "0.4",
        "--config",
        &data("configs/stress.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(3));
    let diag = read_json(dir.path().join("stress.diagnostics.json"));
    assert!(diag["violation_count"].as_u64().unwrap() > 0);
    assert!(!diag["violations"].as_array().unwrap().is_empty());
    assert!(!out.with_extension("obj").exists());
}

#[test]
fn geodesic_on_sphere_matches_great_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = prefix(&dir, "geo");
    let run = surfoffset(&[
        "geodesic", "--surface", "sphere", "--grid", "97,49", "--from", "0.5,0.3", "--to", "2.5,-0.4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json = read_json(out.with_extension("json"));
    let length = json["length"].as_f64().unwrap();
    let lifted = json["lifted"].as_array().unwrap();
    let point = |v: &Value| -> [f64; 3] {
        let a = v.as_array().unwrap();
        [a[0].as_f64().unwrap(), a[1].as_f64().unwrap(), a[2].as_f64().unwrap()]
    };
    let (a, b) = (point(&lifted[0]), point(lifted.last().unwrap()));
    let exact = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos();
    assert!((length - exact).abs() < 1e-3 * exact, "{length} vs {exact}");
}

#[test]
fn voronoi_and_morph_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let vor = prefix(&dir, "vor");
    let run = surfoffset(&[
        "voronoi", "--surface", "plane", "--curve", "segment", "--distance", "0.3", "--grid", "25,25", "--segments", "40",
        "--out", vor.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json = read_json(vor.with_extension("json"));
    assert_eq!(json["sites"].as_array().unwrap().len(), 40);
    assert!(std::fs::read_to_string(vor.with_extension("obj")).unwrap().contains("\nf "));

    let morph = prefix(&dir, "morph");
    let run = surfoffset(&[
        "morph", "--surface", "plane", "--curve", "holed_disk", "--op", "closing", "--distance", "0.1", "--grid", "41,41",
        "--segments", "200", "--out", morph.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json = read_json(morph.with_extension("json"));
    assert_eq!(json["loops"].as_array().unwrap().len(), 1, "closing fills the small hole");
}
