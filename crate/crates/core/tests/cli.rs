use std::path::Path;
use std::process::{Command, Output};

use nao::seedio::{self, Dtype, SeedSet};
use nao::SeedPoint;
use serde_json::Value;

fn nao(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nao"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_pair(dir: &Path, name: &str, a: &[f64], b: &[f64]) -> std::path::PathBuf {
    let file = dir.join(name);
    let seeds = vec![SeedPoint::new(a.to_vec()).unwrap(), SeedPoint::new(b.to_vec()).unwrap()];
    seedio::write_seedset(&file, &SeedSet::new(seeds, Dtype::F64).unwrap()).unwrap();
    file
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_is_deterministic_and_near_the_mode_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    for f in [&a, &b] {
        let out = nao(&[
            "sample",
            "--dim",
            "16384",
            "--count",
            "2",
            "--rng-seed",
            "7",
            "--out",
            s(f),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let set = seedio::read_seedset(&a).unwrap();
    assert_eq!(set.count(), 2);
    for z in &set.seeds {
        let r = z.norm();
        assert!((124.0..=132.0).contains(&r), "norm {r}");
    }
}

#[test]
fn sample_rejects_zero_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = nao(&[
        "sample",
        "--dim",
        "4",
        "--count",
        "0",
        "--out",
        s(&dir.path().join("x.bin")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prior_grid_is_a_symmetric_ring() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    let svg = dir.path().join("grid.svg");
    let out = nao(&[
        "prior-grid",
        "--dim",
        "2",
        "--min",
        "-2",
        "--max",
        "2",
        "--res",
        "4",
        "--out",
        s(&csv),
        "--svg",
        s(&svg),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // Cell centres at ±0.5, ±1.5. The (1.5, 0.5) cell has radius √2.5.
    let r: f64 = 2.5f64.sqrt();
    let want = r.ln() - 0.5 * r * r;
    assert!((rows[0][2] - want).abs() < 1e-12, "{} vs {want}", rows[0][2]);
    for j in 0..4 {
        for i in 0..4 {
            assert_eq!(rows[j][i], rows[3 - j][i]);
            assert_eq!(rows[j][i], rows[j][3 - i]);
            assert_eq!(rows[j][i], rows[i][j]);
        }
    }
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn prior_grid_value_on_the_unit_circle() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    // Cell centres at 0 and 1 on both axes.
    let out = nao(&[
        "prior-grid",
        "--min",
        "-0.5",
        "--max",
        "1.5",
        "--res",
        "2",
        "--out",
        s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][0], "-inf");
    let v: f64 = rows[0][1].parse().unwrap();
    assert!((v + 0.5).abs() < 1e-15, "{v}");
    let w: f64 = rows[1][1].parse().unwrap();
    assert!((w - (0.5 * 2f64.ln() - 1.0)).abs() < 1e-12, "{w}");
}

#[test]
fn prior_grid_rejects_zero_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = nao(&[
        "prior-grid",
        "--min",
        "-2",
        "--max",
        "2",
        "--res",
        "0",
        "--out",
        s(&dir.path().join("g.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn slerp_between_antipodal_seeds_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write_pair(dir.path(), "p.bin", &[1.0, 0.0], &[-1.0, 0.0]);
    let out = nao(&["interpolate", "--method", "slerp", "--in", s(&pair)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lerp_writes_n_plus_one_points() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write_pair(dir.path(), "p.bin", &[1.0, 0.0, 0.5], &[0.0, 1.0, -0.5]);
    let csv = dir.path().join("path.csv");
    let rep = dir.path().join("r.json");
    let out = nao(&[
        "interpolate",
        "--method",
        "lerp",
        "--in",
        s(&pair),
        "--n",
        "10",
        "--out-path",
        s(&csv),
        "--report",
        s(&rep),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,c0,c1,c2"));
    assert_eq!(lines.count(), 11);
    let r = report(&rep);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["path"]["points"], 11);
    assert_eq!(r["samples"]["norms"].as_array().unwrap().len(), 3);
}

#[test]
fn nao_interpolation_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write_pair(dir.path(), "p.bin", &[1.2, 0.1], &[-0.2, 0.9]);
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let rep = dir.path().join(name);
        let out = nao(&[
            "interpolate",
            "--method",
            "nao",
            "--in",
            s(&pair),
            "--iters",
            "300",
            "--report",
            s(&rep),
        ]);
        assert!(matches!(out.status.code(), Some(0 | 3)));
        let mut v = report(&rep);
        nao::cli::strip_timing(&mut v);
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
    let r = &reports[0];
    let lerp_like = r["optimizer"]["objective_trace"][0].as_f64().unwrap();
    assert!(r["final_objective"].as_f64().unwrap() <= lerp_like);
}

#[test]
fn audit_rejects_zero_trials() {
    let out = nao(&["audit", "--dim", "2", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn centroid_of_mismatched_file_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a seed set").unwrap();
    let out = nao(&[
        "centroid",
        "--method",
        "euclidean",
        "--in",
        s(&junk),
        "--out",
        s(&dir.path().join("c.bin")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
