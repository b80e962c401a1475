//! CSV and JSON emission plus point-file loading.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::kernels::ChainTrace;
use crate::{Error, Result};

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Writes a header row and numeric rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `step, x_0 … x_{d−1}, H, accepted`.
pub fn write_chain_csv(path: &Path, trace: &ChainTrace) -> Result<()> {
    let d = trace.states.first().map_or(0, Vec::len);
    let mut header = vec!["step".to_string()];
    header.extend((0..d).map(|j| format!("x{j}")));
    header.push("H".into());
    header.push("accepted".into());
    let rows: Vec<Vec<String>> = trace
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = vec![i.to_string()];
            r.extend(s.iter().map(f64::to_string));
            r.push(trace.energies[i].to_string());
            r.push(u8::from(trace.accepted[i]).to_string());
            r
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Matrix rows as CSV with columns `c0 … c{d−1}`.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    let rows: Vec<Vec<String>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect())
        .collect();
    write_table(path, &header, &rows)
}

/// Reads numeric rows; a first row with any non-numeric field is treated as
/// a header. Columns named `step`, `H` or `accepted` (chain CSVs) are dropped.
pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut keep: Option<Vec<bool>> = None;
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        if line == 0 && parsed.iter().any(Option::is_none) {
            keep = Some(
                rec.iter()
                    .map(|name| !matches!(name, "step" | "H" | "accepted"))
                    .collect(),
            );
            continue;
        }
        let row = parsed
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                keep.as_ref()
                    .is_none_or(|k| k.get(*j).copied().unwrap_or(true))
            })
            .map(|(j, v)| {
                v.ok_or_else(|| {
                    Error::invalid(format!(
                        "{}: non-numeric field in row {}, column {}",
                        path.display(),
                        line + 1,
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(row);
    }
    Ok(points)
}
