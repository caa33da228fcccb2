//! End-to-end runs of the `melnikov3d` binary.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use melnikov3d::closed_form::{
    hill_base_integral, hill_zero_latitudes, hill_zero_longitudes, swirl_coefficients, swirl_local_amplitude,
};
use melnikov3d::io::read_csv;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melnikov3d"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MELNIKOV3D_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn table(path: &Path) -> (Value, Vec<Vec<f64>>, Vec<String>) {
    let text = std::fs::read_to_string(path).unwrap();
    let (config, rows, headers) = read_csv(&text).unwrap();
    let rows = rows.iter().map(|r| r.iter().map(|x| x.parse().unwrap()).collect()).collect();
    (config, rows, headers.iter().map(String::from).collect())
}

fn column(headers: &[String], name: &str) -> usize {
    headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn classical_grid_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    ok(&["melnikov", "--model", "hill-classical", "--perturbation", "gr", "--t", "1", "--p", "-2:2:200", "--alpha", "192"], dir.path());
    let (config, rows, headers) = table(&dir.path().join("melnikov.csv"));
    assert_eq!(rows.len(), 200 * 192);
    assert_eq!(config["t"], 1.0);
    assert_eq!(config["p_range"]["n"], 200);
    let dev = column(&headers, "deviation");
    let worst = rows.iter().map(|r| r[dev].abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn zero_perturbation_gives_a_zero_grid() {
    let dir = TempDir::new().unwrap();
    ok(&["melnikov", "--perturbation", "none", "--p", "-1:1:10", "--alpha", "8"], dir.path());
    let (_, rows, headers) = table(&dir.path().join("melnikov.csv"));
    let m = column(&headers, "M");
    assert!(rows.iter().all(|r| r[m] == 0.0));
}

#[test]
fn swirl_grid_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    ok(&["melnikov", "--model", "hill-swirl", "--R0", "0.1", "--t", "1", "--p", "-2:2:24", "--alpha", "24"], dir.path());
    let (config, rows, headers) = table(&dir.path().join("melnikov.csv"));
    assert_eq!(config["R0"], 0.1);
    let (a, b) = swirl_coefficients(0.1).unwrap();
    let (alpha, dev) = (column(&headers, "alpha"), column(&headers, "deviation"));
    let worst = rows.iter().map(|r| r[dev].abs() / swirl_local_amplitude(a, b, r[alpha])).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn surface_radius_follows_the_parametric_formula() {
    let dir = TempDir::new().unwrap();
    ok(&["surface", "--kind", "unstable", "--t", "1", "--eps", "0.1", "--p", "-2:1:13", "--alpha", "12"], dir.path());
    let (_, rows, headers) = table(&dir.path().join("surface_unstable.csv"));
    let [p, alpha, x, y, z] = ["p", "alpha", "x", "y", "z"].map(|n| column(&headers, n));
    let (t, eps) = (1.0, 0.1);
    for r in rows.iter().step_by(7) {
        // r = 1 + eps cosh^2(3p/2) int_{-inf}^p sech^3(3s/2) sin(6 pi alpha) cos(4(s + t - p)) ds
        let n = 20_000;
        let lo = r[p] - 30.0;
        let h = (r[p] - lo) / n as f64;
        let f = |s: f64| (1.0 / (1.5 * s).cosh()).powi(3) * (4.0 * (s + t - r[p])).cos();
        let mut sum = f(lo) + f(r[p]);
        for k in 1..n {
            sum += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = sum * h / 3.0 * (6.0 * PI * r[alpha]).sin();
        let expected = 1.0 + eps * (1.5 * r[p]).cosh().powi(2) * integral;
        let radius = (r[x] * r[x] + r[y] * r[y] + r[z] * r[z]).sqrt();
        assert!((radius - expected).abs() < 1e-6, "p {} alpha {}: {radius} vs {expected}", r[p], r[alpha]);
    }
}

#[test]
fn zero_eps_surface_and_mesh_format() {
    let dir = TempDir::new().unwrap();
    ok(&["surface", "--eps", "0", "--p", "-1:1:9", "--alpha", "8"], dir.path());
    for kind in ["unstable", "stable"] {
        let (_, rows, headers) = table(&dir.path().join(format!("surface_{kind}.csv")));
        let pairs = [("x", "x0"), ("y", "y0"), ("z", "z0")].map(|(a, b)| (column(&headers, a), column(&headers, b)));
        assert!(rows.iter().all(|r| pairs.iter().all(|&(a, b)| r[a] == r[b])));
        let mesh = std::fs::read_to_string(dir.path().join(format!("surface_{kind}.mesh"))).unwrap();
        let mut lines = mesh.lines();
        let config: Value = serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
        assert_eq!(config["command"], "surface");
        let v = mesh.lines().filter(|l| l.starts_with("v ")).count();
        let f: Vec<Vec<usize>> = mesh
            .lines()
            .filter(|l| l.starts_with("f "))
            .map(|l| l.split_whitespace().skip(1).map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(v, 9 * 8);
        assert_eq!(f.len(), 2 * 8 * 8);
        assert!(f.iter().flatten().all(|&i| (1..=v).contains(&i)));
    }
}

#[test]
fn classical_contours_cover_the_zero_set() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["contours", "--model", "hill-classical", "--t", "1", "--p", "-2:2:100", "--alpha", "96"], dir.path());
    assert!(stdout.contains("polylines"));
    let (_, rows, headers) = table(&dir.path().join("contours.csv"));
    let [p, alpha] = ["p", "alpha"].map(|n| column(&headers, n));
    let (hp, ha) = (4.0 / 99.0, 1.0 / 96.0);
    let gap = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    // each longitude is met across the whole p range, each latitude all
    // the way round in alpha
    for lon in hill_zero_longitudes() {
        let mut ps: Vec<f64> = rows.iter().filter(|r| gap(r[alpha], lon) <= ha).map(|r| r[p]).collect();
        ps.sort_by(f64::total_cmp);
        assert!(ps.first().unwrap() - (-2.0) <= hp && 2.0 - ps.last().unwrap() <= hp, "longitude {lon}");
        assert!(ps.windows(2).all(|w| w[1] - w[0] <= 2.0 * hp), "longitude {lon} has a gap");
    }
    let lats = hill_zero_latitudes(1.0, -2.0, 2.0);
    assert_eq!(lats.len(), 5);
    for lat in lats {
        let mut alphas: Vec<f64> = rows.iter().filter(|r| (r[p] - lat).abs() <= hp).map(|r| r[alpha]).collect();
        alphas.sort_by(f64::total_cmp);
        assert!(alphas.windows(2).all(|w| w[1] - w[0] <= 2.0 * ha), "latitude {lat} has a gap");
        assert!(alphas[0] + 1.0 - alphas[alphas.len() - 1] <= 2.0 * ha, "latitude {lat} does not wrap");
    }
    assert!(rows.iter().all(|r| {
        hill_zero_longitudes().iter().any(|&l| gap(r[alpha], l) <= ha)
            || hill_zero_latitudes(1.0, -2.0, 2.0).iter().any(|&l| (r[p] - l).abs() <= hp)
    }));
}

#[test]
fn lobe_volume_at_default_resolution() {
    let dir = TempDir::new().unwrap();
    ok(&["lobes", "--model", "hill-classical", "--t", "0", "--eps", "0.1"], dir.path());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("lobes.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["command"], "lobes");
    let expected = 0.1 * hill_base_integral();
    let lobes = doc["lobes"].as_array().unwrap();
    // latitudes at +-pi/8, +-3pi/8, +-5pi/8 and six longitudes enclose 5 x 6
    // lobes, all of the same volume
    let bounded: Vec<&Value> = lobes.iter().filter(|l| !l["unbounded"].as_bool().unwrap()).collect();
    assert_eq!(bounded.len(), 30);
    for l in bounded {
        let extrapolated = l["volume_extrapolated"].as_f64().unwrap();
        let leading = l["volume_leading"].as_f64().unwrap();
        let estimate = l["volume_error_estimate"].as_f64().unwrap();
        assert!((extrapolated - expected).abs() < 1e-5, "{extrapolated} vs {expected}");
        assert!((leading - expected).abs() < 1.5 * estimate, "{leading} vs {expected}, estimate {estimate}");
    }
}

#[test]
fn verify_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["verify", "--model", "hill-classical", "--eps", "1e-2,3e-3,1e-3"], dir.path());
    assert!(stdout.contains("slope"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fits.json")).unwrap()).unwrap();
    let slope = doc["fits"][0]["slope"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&slope), "{slope}");
    let text = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let (config, rows, headers) = read_csv(&text).unwrap();
    assert_eq!(rows.len(), 3);
    let kind = headers.iter().position(|h| h == "kind").unwrap();
    assert!(rows.iter().all(|r| &r[kind] == "unstable"));
    assert_eq!(config["eps"], serde_json::json!([1e-2, 3e-3, 1e-3]));
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let snapshot = |names: &[&str]| -> Vec<Vec<u8>> { names.iter().map(|n| std::fs::read(dir.path().join(n)).unwrap()).collect() };
    for (args, names) in [
        (&["verify", "--random-points", "2", "--seed", "11", "--eps", "1e-2,3e-3,1e-3"][..], &["samples.csv", "fits.json"][..]),
        (&["lobes", "--p", "0:2:40", "--alpha", "48"][..], &["lobes.json", "contours.csv"][..]),
    ] {
        ok(args, dir.path());
        let first = snapshot(names);
        ok(args, dir.path());
        assert_eq!(first, snapshot(names), "{args:?}");
    }
}

#[test]
fn config_file_then_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "hill-swirl", "R0": 0.25, "t": 0.5, "n_alpha": 16, "p_range": {"min": -1, "max": 1, "n": 9}}"#).unwrap();
    let out = dir.path().join("o");
    let c = cfg.to_str().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_melnikov3d"))
        .args(["melnikov", "--config", c, "--t", "-0.5", "--out"])
        .arg(&out)
        .env("MELNIKOV3D_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (config, rows, _) = table(&out.join("melnikov.csv"));
    assert_eq!(config["model"], "hill-swirl");
    assert_eq!(config["R0"], 0.25);
    assert_eq!(config["t"], -0.5);
    assert_eq!(rows.len(), 9 * 16);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| run(args, dir.path()).status.code();
    assert_eq!(code(&["melnikov", "--model", "lorenz"]), Some(2));
    assert_eq!(code(&["melnikov", "--perturbation", "gx"]), Some(2));
    assert_eq!(code(&["melnikov", "--model", "hill-swirl", "--R0", "-1"]), Some(2));
    assert_eq!(code(&["melnikov", "--p", "2:-2:10"]), Some(2));
    assert_eq!(code(&["lobes", "--kind", "unstable"]), Some(2));
    assert_eq!(code(&["melnikov", "--bogus"]), Some(2));
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"colour": "red"}"#).unwrap();
    assert_eq!(code(&["melnikov", "--config", cfg.to_str().unwrap()]), Some(2));
    // the quadrature cannot converge in a single subdivision
    std::fs::write(&cfg, r#"{"quadrature": {"max_subdivisions": 1}, "p_range": {"min": -1, "max": 1, "n": 8}, "n_alpha": 8}"#).unwrap();
    assert_eq!(code(&["melnikov", "--config", cfg.to_str().unwrap()]), Some(3));
}

#[test]
fn plot_scripts_are_emitted() {
    let dir = TempDir::new().unwrap();
    ok(&["melnikov", "--p", "-1:1:8", "--alpha", "8", "--emit-plot-script"], dir.path());
    let script = std::fs::read_to_string(dir.path().join("plot_melnikov.py")).unwrap();
    assert!(script.starts_with("#!/usr/bin/env python3"));
    assert!(script.contains("melnikov.csv") && script.contains("n_alpha = 8"));
}
