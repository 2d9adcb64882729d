//! Tensor time series on disk.
//!
//! `csv_long`: header `t,i1,…,iN,value`, one row per cell, 1-based indices, every
//! cell of every time point present. `ndjson`: one object per line,
//! `{"t": …, "dims": […], "data": […]}` with `data` in mode-1-fastest order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor_art::{Tensor, TensorSeries};

use crate::atomic::write_atomic;
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    CsvLong,
    Ndjson,
}

impl SeriesFormat {
    /// `.ndjson`/`.jsonl` files are NDJSON, anything else is `csv_long`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ndjson") | Some("jsonl") => SeriesFormat::Ndjson,
            _ => SeriesFormat::CsvLong,
        }
    }
}

fn invalid(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("{}:{line}: {msg}", path.display()))
}

/// Loads a series, checking it against `dims` when given.
pub fn load_tensor_series(path: &Path, format: SeriesFormat, dims: Option<&[usize]>) -> Result<TensorSeries> {
    let series = match format {
        SeriesFormat::CsvLong => load_csv_long(path, dims)?,
        SeriesFormat::Ndjson => load_ndjson(path)?,
    };
    if let Some(d) = dims {
        if series.dims() != d {
            return Err(CliError::validation(format!(
                "{}: data dims {:?} do not match configured dims {:?}",
                path.display(),
                series.dims(),
                d
            )));
        }
    }
    Ok(series)
}

struct Cell {
    line: u64,
    t: i64,
    idx: Vec<usize>,
    value: f64,
}

fn load_csv_long(path: &Path, dims: Option<&[usize]>) -> Result<TensorSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| invalid(path, 1, e))?.clone();
    let n = headers.len().saturating_sub(2);
    let expected: Vec<String> =
        std::iter::once("t".to_string()).chain((1..=n).map(|k| format!("i{k}"))).chain(std::iter::once("value".into())).collect();
    if n == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid(path, 1, format!("header must be {}", expected.join(","))));
    }
    if let Some(d) = dims {
        if d.len() != n {
            return Err(invalid(path, 1, format!("file has {n} index columns, configured dims have {} modes", d.len())));
        }
    }

    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            invalid(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let t: i64 = record[0].parse().map_err(|_| invalid(path, line, format!("time index {:?} is not an integer", &record[0])))?;
        let mut idx = Vec::with_capacity(n);
        for k in 0..n {
            let v: usize = record[k + 1]
                .parse()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| invalid(path, line, format!("index i{} = {:?} is not a positive integer", k + 1, &record[k + 1])))?;
            if let Some(d) = dims {
                if v > d[k] {
                    return Err(invalid(path, line, format!("index i{} = {v} out of range 1..={}", k + 1, d[k])));
                }
            }
            idx.push(v - 1);
        }
        let value: f64 = record[n + 1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| invalid(path, line, format!("value {:?} is not a finite number", &record[n + 1])))?;
        cells.push(Cell { line, t, idx, value });
    }
    if cells.is_empty() {
        return Err(invalid(path, 2, "no observations"));
    }

    let dims: Vec<usize> = match dims {
        Some(d) => d.to_vec(),
        None => (0..n).map(|k| cells.iter().map(|c| c.idx[k] + 1).max().unwrap_or(1)).collect(),
    };
    let total: usize = dims.iter().product();
    let flat = |idx: &[usize]| idx.iter().zip(&dims).rev().fold(0, |acc, (&i, &d)| acc * d + i);
    let mut by_time: BTreeMap<i64, Vec<Option<(u64, f64)>>> = BTreeMap::new();
    for c in &cells {
        let slot = &mut by_time.entry(c.t).or_insert_with(|| vec![None; total])[flat(&c.idx)];
        if let Some((first, _)) = slot {
            return Err(invalid(path, c.line, format!("duplicate cell (t={}, {:?}), first given on line {first}", c.t, one_based(&c.idx))));
        }
        *slot = Some((c.line, c.value));
    }
    let mut observations = Vec::with_capacity(by_time.len());
    for (t, values) in by_time {
        let data = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                v.map(|(_, x)| x).ok_or_else(|| {
                    let idx = Tensor::zeros(&dims).multi_index(k);
                    CliError::validation(format!("{}: time {t} is missing cell {:?}", path.display(), one_based(&idx)))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        observations.push(Tensor::new(dims.clone(), data)?);
    }
    Ok(TensorSeries::new(dims, observations)?)
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NdjsonRow {
    t: i64,
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn load_ndjson(path: &Path) -> Result<TensorSeries> {
    let file = File::open(path).map_err(|e| CliError::at_path(path, e))?;
    let mut rows: Vec<(u64, NdjsonRow)> = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line_no = k as u64 + 1;
        let line = line.map_err(|e| CliError::at_path(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: NdjsonRow = serde_json::from_str(&line).map_err(|e| invalid(path, line_no, e))?;
        if let Some((prev, _)) = rows.iter().find(|(_, r)| r.t == row.t) {
            return Err(invalid(path, line_no, format!("duplicate time {}, first given on line {prev}", row.t)));
        }
        if let Some((_, first)) = rows.first() {
            if first.dims != row.dims {
                return Err(invalid(path, line_no, format!("dims {:?} differ from {:?}", row.dims, first.dims)));
            }
        }
        if row.data.iter().any(|v| !v.is_finite()) {
            return Err(invalid(path, line_no, "non-finite value"));
        }
        Tensor::new(row.dims.clone(), row.data.clone()).map_err(|e| invalid(path, line_no, e))?;
        rows.push((line_no, row));
    }
    let (_, first) = rows.first().ok_or_else(|| invalid(path, 1, "no observations"))?;
    let dims = first.dims.clone();
    rows.sort_by_key(|(_, r)| r.t);
    let obs = rows.into_iter().map(|(_, r)| Tensor::new(r.dims, r.data)).collect::<tensor_art::Result<Vec<_>>>()?;
    Ok(TensorSeries::new(dims, obs)?)
}

/// Writes `t = 1..T` in `csv_long`, cells in mode-1-fastest order.
pub fn write_series(path: &Path, format: SeriesFormat, series: &TensorSeries) -> Result<()> {
    write_atomic(path, |w| match format {
        SeriesFormat::CsvLong => write_csv_long(w, series),
        SeriesFormat::Ndjson => write_ndjson(w, series),
    })
}

fn write_csv_long(w: &mut dyn Write, series: &TensorSeries) -> std::io::Result<()> {
    let n = series.dims().len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("i{k}")));
    header.push("value".into());
    writeln!(w, "{}", header.join(","))?;
    for (t, y) in series.observations().iter().enumerate() {
        for (k, v) in y.as_slice().iter().enumerate() {
            write!(w, "{}", t + 1)?;
            for i in y.multi_index(k) {
                write!(w, ",{}", i + 1)?;
            }
            writeln!(w, ",{v:?}")?;
        }
    }
    Ok(())
}

fn write_ndjson(w: &mut dyn Write, series: &TensorSeries) -> std::io::Result<()> {
    for (t, y) in series.observations().iter().enumerate() {
        let row = NdjsonRow { t: t as i64 + 1, dims: y.dims().to_vec(), data: y.as_slice().to_vec() };
        serde_json::to_writer(&mut *w, &row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
