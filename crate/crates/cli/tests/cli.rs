mod common;

use std::fs;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::DMatrix;
use serde_json::{json, Value};
use tensor_art_cli::formats::{load_model, load_tensor_series, SeriesFormat};

#[test]
fn simulate_writes_reproducible_series_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"dims": [3, 3, 2], "rank": 2, "sampler": {"seed": 11}, "simulate": {"length": 200}}),
    );
    assert_ok(&run("simulate", &cfg, &["--out", dir.path().join("a").to_str().unwrap()]));
    assert_ok(&run("simulate", &cfg, &["--out", dir.path().join("b").to_str().unwrap()]));
    for f in ["series.csv", "model.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
    let series = dir.path().join("a/series.csv");
    assert_eq!(line_count(&series), 1 + 200 * 18);
    let loaded = load_tensor_series(&series, SeriesFormat::CsvLong, Some(&[3, 3, 2])).unwrap();
    assert_eq!(loaded.len(), 200);

    assert_ok(&run("simulate", &cfg, &["--out", dir.path().join("c").to_str().unwrap(), "--seed", "12"]));
    assert_ne!(fs::read(dir.path().join("c/series.csv")).unwrap(), fs::read(&series).unwrap());
}

#[test]
fn simulate_honors_the_stability_bound() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5u64 {
        let cfg = write_config(
            dir.path(),
            json!({"dims": [3, 3, 2], "rank": 2, "sampler": {"seed": seed},
                   "simulate": {"length": 10, "rho_bound": 0.5}}),
        );
        assert_ok(&run("simulate", &cfg, &[]));
        let text = fs::read_to_string(dir.path().join("out/model.json")).unwrap();
        let reported = serde_json::from_str::<Value>(&text).unwrap()["rho"].as_f64().unwrap();
        let model = load_model(&dir.path().join("out/model.json")).unwrap();
        let rho = tensor_art::linalg::spectral_radius(&model.to_var().coefs[0]);
        assert!(reported <= 0.5 && (rho - reported).abs() < 1e-12, "{reported} vs {rho}");
    }
}

#[test]
fn simulate_from_a_model_file_and_ndjson_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"dims": [2, 2], "rank": 1, "output": {"dir": "gen"}}));
    assert_ok(&run("simulate", &cfg, &[]));
    let cfg = write_config(
        dir.path(),
        json!({"dims": [2, 2], "simulate": {"model": "gen/model.json", "length": 7, "format": "ndjson"}}),
    );
    assert_ok(&run("simulate", &cfg, &[]));
    assert_eq!(line_count(&dir.path().join("out/series.ndjson")), 7);
    assert_eq!(fs::read(dir.path().join("gen/model.json")).unwrap(), fs::read(dir.path().join("out/model.json")).unwrap());

    let cfg = write_config(dir.path(), json!({"dims": [2, 3], "simulate": {"model": "gen/model.json"}}));
    assert_eq!(code(&run("simulate", &cfg, &[])), 2);
}

fn fit_config(dir: &std::path::Path, seed: u64, chains: usize) -> std::path::PathBuf {
    write_config(
        dir,
        json!({"dims": [2, 2, 1], "rank": 2, "data": {"path": "sim/series.csv"},
               "sampler": {"iters": 200, "burn_in": 100, "thin": 2, "seed": seed, "chains": chains}}),
    )
}

#[test]
fn tiny_fit_is_fast_deterministic_and_thinned() {
    let dir = tempfile::tempdir().unwrap();
    simulate_data(dir.path(), &[2, 2, 1], 1, 20, 3);
    let cfg = fit_config(dir.path(), 5, 2);

    let start = Instant::now();
    assert_ok(&run("fit", &cfg, &["--out", dir.path().join("a").to_str().unwrap()]));
    assert!(start.elapsed() < Duration::from_secs(10), "fit took {:?}", start.elapsed());
    assert_ok(&run("fit", &cfg, &["--out", dir.path().join("b").to_str().unwrap()]));
    assert_ok(&run("fit", &cfg, &["--out", dir.path().join("c").to_str().unwrap(), "--seed", "6"]));

    for chain in 0..2 {
        let name = format!("trace-{chain}.ndjson");
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(&name)).unwrap());
        assert_ne!(a, fs::read(dir.path().join("c").join(&name)).unwrap());
        assert_eq!(line_count(&dir.path().join("a").join(&name)), (200 - 100) / 2);
    }
    assert_ne!(fs::read(dir.path().join("a/trace-0.ndjson")).unwrap(), fs::read(dir.path().join("a/trace-1.ndjson")).unwrap());
    assert_eq!(fs::read(dir.path().join("a/summary.json")).unwrap(), fs::read(dir.path().join("b/summary.json")).unwrap());

    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["draws"], json!(100));
    assert_eq!(summary["chains"], json!(2));
    assert_eq!(summary["coefficient"]["mean"].as_array().unwrap().len(), 16);
    assert!(summary["rho_posterior_mean"].as_f64().unwrap().is_finite());
    let names: Vec<&str> = summary["diagnostics"].as_array().unwrap().iter().map(|d| d["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"log_tau") && names.contains(&"spectral_radius"));
    assert!(summary["diagnostics"][0]["rhat"].as_f64().is_some());
}

#[test]
fn worker_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    simulate_data(dir.path(), &[2, 2, 1], 1, 20, 3);
    let cfg = fit_config(dir.path(), 9, 3);
    assert_ok(&run("fit", &cfg, &["--out", dir.path().join("a").to_str().unwrap()]));
    let out = bin()
        .env("TENSORART_THREADS", "1")
        .args(["fit", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert_ok(&out);
    for chain in 0..3 {
        let name = format!("trace-{chain}.ndjson");
        assert_eq!(fs::read(dir.path().join("a").join(&name)).unwrap(), fs::read(dir.path().join("b").join(&name)).unwrap());
    }
    let bad = bin().env("TENSORART_THREADS", "zero").args(["fit", "--quiet", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn summarize_pools_existing_traces() {
    let dir = tempfile::tempdir().unwrap();
    simulate_data(dir.path(), &[2, 2, 1], 1, 20, 3);
    let cfg = fit_config(dir.path(), 1, 2);
    assert_ok(&run("fit", &cfg, &[]));
    let fitted = fs::read(dir.path().join("out/summary.json")).unwrap();
    fs::remove_file(dir.path().join("out/summary.json")).unwrap();
    let out = bin().args(["summarize", "--config"]).arg(&cfg).output().unwrap();
    assert_ok(&out);
    assert_eq!(fs::read(dir.path().join("out/summary.json")).unwrap(), fitted);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("rho(posterior mean)") && table.contains("log_gamma"), "{table}");
}

#[test]
fn dimension_mismatch_fails_before_sampling() {
    let dir = tempfile::tempdir().unwrap();
    simulate_data(dir.path(), &[2, 2, 1], 1, 20, 3);
    let cfg = write_config(
        dir.path(),
        json!({"dims": [2, 2], "rank": 1, "data": {"path": "sim/series.csv"}, "sampler": {"iters": 10, "burn_in": 0, "thin": 1}}),
    );
    let out = run("fit", &cfg, &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("differ from config dims"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run("fit", &missing, &[])), 2);
    assert_eq!(code(&bin().arg("fit").output().unwrap()), 2);
    assert_eq!(code(&bin().arg("bogus").output().unwrap()), 2);

    let cfg = write_config(dir.path(), json!({"dims": [2], "rank": 1, "sampler": {"thin": 0}, "data": {"path": "x.csv"}}));
    assert_eq!(code(&run("fit", &cfg, &[])), 2);
    let cfg = write_config(dir.path(), json!({"dims": [2], "rank": 1, "data": {"path": "x.csv"}}));
    assert_eq!(code(&run("fit", &cfg, &[])), 2);
    let cfg = write_config(dir.path(), json!({"dims": [2], "schema_version": 7}));
    assert_eq!(code(&run("simulate", &cfg, &[])), 2);

    fs::write(dir.path().join("dup.csv"), "t,i1,value\n1,1,0.5\n1,2,0.1\n1,1,0.2\n").unwrap();
    let cfg = write_config(dir.path(), json!({"dims": [2], "rank": 1, "data": {"path": "dup.csv"}}));
    let out = run("fit", &cfg, &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dup.csv:4"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn impossible_stability_bound_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"dims": [2, 2], "rank": 3, "simulate": {"rho_bound": 1e-300}}));
    let out = run("simulate", &cfg, &[]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn irf_grid_has_one_row_per_method_horizon_and_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"dims": [3, 3, 2], "rank": 2, "output": {"dir": "gen"}}));
    assert_ok(&run("simulate", &cfg, &[]));
    let cfg = write_config(
        dir.path(),
        json!({"dims": [3, 3, 2], "irf": {"model": "gen/model.json", "horizon": 2, "shock": {"cells": [[1, 2, 1]]}}}),
    );
    assert_ok(&run("irf", &cfg, &[]));
    let path = dir.path().join("out/irf.csv");
    let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "method,h,i1,i2,i3,response,q16,q84,q05,q95,significant");
    assert_eq!(line_count(&path) - 1, 2 * 3 * 18);
    let first = fs::read(&path).unwrap();
    assert_ok(&run("irf", &cfg, &[]));
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn irf_of_identity_point_trace_hits_only_the_shocked_cell() {
    let dir = tempfile::tempdir().unwrap();
    let dims = [2, 3, 1];
    let eye = |n| DMatrix::<f64>::identity(n, n);
    point_trace(dir.path(), &dims, &DMatrix::from_element(6, 6, 0.1), vec![eye(2), eye(3), eye(1)]);
    let cfg = write_config(
        dir.path(),
        json!({"dims": dims, "irf": {"horizon": 0, "shock": {"cells": [[2, 3, 1]]}}, "output": {"dir": "."}}),
    );
    assert_ok(&run("irf", &cfg, &[]));
    let rows = read_irf(&dir.path().join("irf.csv"));
    assert_eq!(rows.len(), 2 * 6);
    for method in ["girf", "oirf"] {
        let nonzero: Vec<_> = rows.iter().filter(|r| r.method == method && r.response != 0.0).collect();
        assert_eq!(nonzero.len(), 1, "{method}");
        assert_eq!(nonzero[0].cell, vec![2, 3, 1]);
        assert_eq!(nonzero[0].response, 1.0);
        assert!(nonzero[0].significant);
    }
}

#[test]
fn irf_of_diagonal_point_trace_decays_geometrically() {
    let dir = tempfile::tempdir().unwrap();
    let dims = [2, 2];
    let a = DMatrix::from_diagonal_element(4, 4, 0.6);
    let s1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
    point_trace(dir.path(), &dims, &a, vec![s1, DMatrix::identity(2, 2)]);
    let cfg = write_config(
        dir.path(),
        json!({"dims": dims, "irf": {"horizon": 12, "shock": {"cells": [[1, 1]]}}, "output": {"dir": "."}}),
    );
    assert_ok(&run("irf", &cfg, &[]));
    let rows = read_irf(&dir.path().join("irf.csv"));
    assert_eq!(rows.len(), 2 * 13 * 4);
    for method in ["girf", "oirf"] {
        for cell in [vec![1, 1], vec![2, 1]] {
            let path: Vec<f64> =
                rows.iter().filter(|r| r.method == method && r.cell == cell).map(|r| r.response).collect();
            assert!(path[0] != 0.0);
            for h in 1..path.len() {
                let ratio = path[h] / path[h - 1];
                assert!((ratio - 0.6).abs() < 1e-12, "{method} {cell:?} h={h}: {ratio}");
            }
        }
    }
}

#[test]
fn irf_rejects_shocks_outside_the_dims() {
    let dir = tempfile::tempdir().unwrap();
    point_trace(dir.path(), &[2], &DMatrix::identity(2, 2), vec![DMatrix::identity(2, 2)]);
    for cells in [json!([[3]]), json!([[0]]), json!([[1, 1]]), json!([])] {
        let cfg = write_config(dir.path(), json!({"dims": [2], "irf": {"shock": {"cells": cells}}, "output": {"dir": "."}}));
        assert_eq!(code(&run("irf", &cfg, &[])), 2, "{cells}");
    }
    assert!(!dir.path().join("irf.csv").exists());
}

#[cfg(unix)]
#[test]
fn interrupt_aborts_with_130_and_leaves_no_trace() {
    let dir = tempfile::tempdir().unwrap();
    simulate_data(dir.path(), &[3, 3, 2], 2, 100, 3);
    let cfg = write_config(
        dir.path(),
        json!({"dims": [3, 3, 2], "rank": 2, "data": {"path": "sim/series.csv"},
               "sampler": {"iters": 10000000, "burn_in": 0, "thin": 1}}),
    );
    let mut child =
        bin().args(["fit", "--quiet", "--config"]).arg(&cfg).stderr(std::process::Stdio::null()).spawn().unwrap();
    std::thread::sleep(Duration::from_millis(1500));
    let killed = std::process::Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(130));
    assert!(!dir.path().join("out/trace-0.ndjson").exists());
    assert!(!dir.path().join("out/summary.json").exists());
}
