#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use serde_json::{json, Value};
use tensor_art::gibbs::{Draw, TauUpdate, TraceMeta};
use tensor_art_cli::formats::{trace_path, TraceWriter};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tensorart"));
    c.env_remove("TENSORART_THREADS");
    c
}

/// Writes `config.json` into `dir` and returns its path.
pub fn write_config(dir: &Path, body: Value) -> PathBuf {
    let mut body = body;
    body.as_object_mut().unwrap().entry("schema_version").or_insert(json!(1));
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    p
}

pub fn run(sub: &str, config: &Path, extra: &[&str]) -> Output {
    bin().arg(sub).arg("--config").arg(config).arg("--quiet").args(extra).output().unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

/// Simulates a series into `dir/sim` and returns the series path.
pub fn simulate_data(dir: &Path, dims: &[usize], rank: usize, length: usize, seed: u64) -> PathBuf {
    let cfg = write_config(
        dir,
        json!({"dims": dims, "rank": rank, "sampler": {"seed": seed},
               "simulate": {"length": length, "rho_bound": 0.9}, "output": {"dir": "sim"}}),
    );
    assert_ok(&run("simulate", &cfg, &[]));
    dir.join("sim/series.csv")
}

/// A one-draw trace with coefficient `A` (as a VAR matrix) and the given mode covariances.
pub fn point_trace(dir: &Path, dims: &[usize], a: &DMatrix<f64>, sigma: Vec<DMatrix<f64>>) -> PathBuf {
    let path = trace_path(dir, 0);
    let mut w = TraceWriter::create(&path).unwrap();
    w.write(&Draw {
        iteration: 1,
        coefficient: a.as_slice().to_vec(),
        sigma,
        tau: 1.0,
        phi: vec![1.0],
        gamma: 1.0,
        marginals: None,
    })
    .unwrap();
    w.finish(&TraceMeta {
        dims: dims.to_vec(),
        rank: 1,
        seed: 0,
        chain: 0,
        iters: 1,
        burn_in: 0,
        thin: 1,
        tau_update: TauUpdate::Gig,
        retained: 1,
        hmc_acceptance: None,
        hmc_step_size: None,
    })
    .unwrap();
    path
}

pub struct IrfRow {
    pub method: String,
    pub h: usize,
    pub cell: Vec<usize>,
    pub response: f64,
    pub significant: bool,
}

pub fn read_irf(path: &Path) -> Vec<IrfRow> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let n = header.len() - 8;
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            IrfRow {
                method: f[0].to_string(),
                h: f[1].parse().unwrap(),
                cell: f[2..2 + n].iter().map(|x| x.parse().unwrap()).collect(),
                response: f[2 + n].parse().unwrap(),
                significant: f[7 + n].parse().unwrap(),
            }
        })
        .collect()
}

pub fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}
