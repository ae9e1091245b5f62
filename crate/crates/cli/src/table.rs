//! CSV input and numeric formatting.

use std::fs;
use std::path::Path;

use ppgpr_core::Matrix;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

/// Numeric CSV with a header row; lines starting with `#` are skipped.
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    CliError::usage(format!(
                        "{}: data row {}: '{v}' is not a number",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::usage(format!("{}: no data rows", path.display())));
    }
    Matrix::from_rows(&rows).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Splits the last column off as responses.
pub fn read_training(path: &Path) -> CliResult<(Matrix, Vec<f64>)> {
    let m = read_matrix(path)?;
    if m.cols() < 2 {
        return Err(CliError::usage(format!(
            "{}: training data needs input columns and a response column",
            path.display()
        )));
    }
    let d = m.cols() - 1;
    let x = Matrix::from_fn(m.rows(), d, |i, j| m[(i, j)]);
    let y = m.row_iter().map(|r| r[d]).collect();
    Ok((x, y))
}

pub fn column_names(prefix: &str, d: usize) -> String {
    (1..=d)
        .map(|j| format!("{prefix}{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Shortest representation that parses back to the same bits.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}
