//! CSV and JSON artefacts.
//!
//! CSV values use 17 significant digits so every `f64` round-trips. JSON
//! documents share the layout `{meta, axes, values}`; complex numbers are
//! written as `{re, im}`.

use std::fmt::Write as _;
use std::path::Path;

use commsim::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::OutputFormat;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Real values on a rectangular grid; `values[i][j]` sits at
/// `(axis1[i], axis2[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn new(axis1: Axis, axis2: Axis, values: Vec<Vec<f64>>) -> Result<Self, CliError> {
        if axis1.values.is_empty() || axis2.values.is_empty() {
            return Err(CliError::Config("refusing to emit an empty grid".into()));
        }
        if values.len() != axis1.values.len()
            || values.iter().any(|row| row.len() != axis2.values.len())
        {
            return Err(CliError::Config(format!(
                "grid values do not match axes {}x{}",
                axis1.values.len(),
                axis2.values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::Core(commsim::Error::NonFinite));
        }
        Ok(Self {
            axis1,
            axis2,
            values,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Complex> for C64 {
    fn from(z: Complex) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<V> {
    pub meta: Value,
    pub axes: Vec<Axis>,
    pub values: V,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn grid_csv(grid: &LandscapeGrid) -> String {
    let mut out = format!("{},{},value\n", grid.axis1.name, grid.axis2.name);
    for (i, a) in grid.axis1.values.iter().enumerate() {
        for (j, b) in grid.axis2.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt_f64(*a), fmt_f64(*b), fmt_f64(grid.values[i][j]));
        }
    }
    out
}

pub fn grid_json(grid: &LandscapeGrid, meta: Value) -> Result<String, CliError> {
    let doc = Document {
        meta,
        axes: vec![grid.axis1.clone(), grid.axis2.clone()],
        values: grid.values.clone(),
        extra: None,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn index_axis(name: &str, n: usize) -> Axis {
    Axis::new(name, (0..n).map(|i| i as f64).collect())
}

/// Square complex matrix given row by row.
pub fn matrix_csv(rows: &[Vec<C64>]) -> String {
    let mut out = String::from("row,col,re,im\n");
    for (r, row) in rows.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            let _ = writeln!(out, "{r},{c},{},{}", fmt_f64(z.re), fmt_f64(z.im));
        }
    }
    out
}

pub fn matrix_json(rows: &[Vec<C64>], meta: Value, extra: Option<Value>) -> Result<String, CliError> {
    let doc = Document {
        meta,
        axes: vec![index_axis("row", rows.len()), index_axis("col", rows.len())],
        values: rows
            .iter()
            .map(|row| row.iter().copied().map(Complex::from).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        extra,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Time series of complex matrices.
pub fn trajectory_csv(times: &[f64], states: &[Vec<Vec<C64>>]) -> String {
    let mut out = String::from("t,row,col,re,im\n");
    for (t, state) in times.iter().zip(states) {
        for (r, row) in state.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{r},{c},{},{}", fmt_f64(*t), fmt_f64(z.re), fmt_f64(z.im));
            }
        }
    }
    out
}

pub fn trajectory_json(times: &[f64], states: &[Vec<Vec<C64>>], meta: Value) -> Result<String, CliError> {
    let dim = states.first().map_or(0, Vec::len);
    let doc = Document {
        meta,
        axes: vec![
            Axis::new("t", times.to_vec()),
            index_axis("row", dim),
            index_axis("col", dim),
        ],
        values: states
            .iter()
            .map(|s| {
                s.iter()
                    .map(|row| row.iter().copied().map(Complex::from).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>(),
        extra: None,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            std::fs::write(p, contents).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

/// Reads back a grid written by [`grid_csv`].
pub fn parse_grid_csv(text: &str) -> Result<LandscapeGrid, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty CSV".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.len() != 3 || names[2] != "value" {
        return Err(CliError::Config(format!("unexpected CSV header `{header}`")));
    }
    let mut a_vals: Vec<f64> = Vec::new();
    let mut b_vals: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    for (n, line) in lines.enumerate() {
        let nums: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("line {}: `{t}` is not a number", n + 2))
                })
            })
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 {
            return Err(CliError::Config(format!("line {}: expected 3 fields", n + 2)));
        }
        if a_vals.last() != Some(&nums[0]) {
            a_vals.push(nums[0]);
        }
        if a_vals.len() == 1 {
            b_vals.push(nums[1]);
        }
        cells.push(nums[2]);
    }
    let cols = b_vals.len();
    if cols == 0 || cells.len() != a_vals.len() * cols {
        return Err(CliError::Config("CSV is not a full rectangular grid".into()));
    }
    let values = cells.chunks(cols).map(<[f64]>::to_vec).collect();
    LandscapeGrid::new(Axis::new(names[0], a_vals), Axis::new(names[1], b_vals), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> LandscapeGrid {
        LandscapeGrid::new(
            Axis::new("theta", vec![0.0, 0.1, 1.0 / 3.0]),
            Axis::new("t", vec![0.0, 2.0f64.sqrt()]),
            vec![vec![1.0, -0.0], vec![1e-300, std::f64::consts::PI], vec![-7.25, 0.1 + 0.2]],
        )
        .unwrap()
    }

    #[test]
    fn empty_and_ragged_grids_refused() {
        assert!(LandscapeGrid::new(Axis::new("a", vec![]), Axis::new("b", vec![1.0]), vec![]).is_err());
        assert!(LandscapeGrid::new(Axis::new("a", vec![1.0]), Axis::new("b", vec![1.0]), vec![vec![]]).is_err());
        assert!(LandscapeGrid::new(Axis::new("a", vec![1.0]), Axis::new("b", vec![1.0]), vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn csv_round_trip_and_digits() {
        let g = sample();
        let text = grid_csv(&g);
        assert!(text.starts_with("theta,t,value\n"));
        let second = text.lines().nth(1).unwrap();
        let mantissa = second.split(',').next().unwrap().split('e').next().unwrap();
        assert!(mantissa.chars().filter(char::is_ascii_digit).count() >= 12);
        let back = parse_grid_csv(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = sample();
        let text = grid_json(&g, json!({"panel": "a"})).unwrap();
        let doc: Document<Vec<Vec<f64>>> = serde_json::from_str(&text).unwrap();
        for (row, want) in doc.values.iter().zip(&g.values) {
            for (a, b) in row.iter().zip(want) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert_eq!(doc.axes[0], g.axis1);
    }

    #[test]
    fn two_by_two_matrix_json() {
        let rows = vec![
            vec![C64::new(0.5, 0.0), C64::new(0.1, -0.2)],
            vec![C64::new(0.1, 0.2), C64::new(-0.5, 1e-17)],
        ];
        let text = matrix_json(&rows, json!({}), None).unwrap();
        let doc: Document<Vec<Vec<Complex>>> = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.values.iter().flatten().count(), 4);
        assert_eq!(C64::from(doc.values[0][1]), rows[0][1]);
        assert_eq!(matrix_csv(&rows).lines().count(), 5);
    }

    #[test]
    fn unwritable_path_reports_path() {
        let dir = std::env::temp_dir().join(format!("commsim-emit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let blocker = dir.join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_output(Some(&blocker.join("out.csv")), "data").unwrap_err();
        assert!(err.to_string().contains("file"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
