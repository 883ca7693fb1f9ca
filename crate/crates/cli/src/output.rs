//! CSV rendering. Every float is printed with 17 significant digits.

use std::path::Path;

use genbath::{HusimiGrid, ThermoSeries, COLUMNS};

use crate::CliError;

pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_csv(series: &ThermoSeries) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for rec in series.records() {
        let cells: Vec<String> = rec.row().iter().map(|v| v.map(number).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn husimi_csv(grid: &HusimiGrid) -> String {
    let mut out = String::from("re,im,q\n");
    for (re, im, q) in grid.iter() {
        out.push_str(&format!("{},{},{}\n", number(re), number(im), number(q)));
    }
    out
}

/// `husimi_<t>.csv`, with `t` as the shortest decimal that round-trips.
pub fn husimi_file_name(t: f64) -> String {
    format!("husimi_{t}.csv")
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}
