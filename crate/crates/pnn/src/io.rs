//! CSV and JSON file formats.
//!
//! Datasets use the header `x1,...,xD,y,group`; every float is written with 17
//! significant digits so that reading a file back reproduces the exact bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use pnn_core::gpr::GprTuning;
use pnn_core::metrics::EvalReport;
use pnn_core::{Dataset, GridResult, Matrix, Provenance, Vector};
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// How rows are assigned to replicate groups when reading a CSV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GroupMode {
    /// Rows with bit-identical parsed inputs form one group.
    #[default]
    Exact,
    /// Integer group ids are read from the named column.
    Column(String),
}

/// Name of the group-id column in files written by [`write_csv`]; never used
/// as an input unless listed explicitly.
pub const GROUP_COLUMN: &str = "group";

/// Which columns of a CSV hold what.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    /// `None` takes every column except the output column, the group column
    /// and any column named [`GROUP_COLUMN`].
    pub inputs: Option<Vec<String>>,
    pub output: String,
    pub group: GroupMode,
}

impl Default for CsvLayout {
    fn default() -> Self {
        CsvLayout {
            inputs: None,
            output: "y".into(),
            group: GroupMode::Exact,
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::validation(format!("{}: no column named '{name}'", path.display())))
}

pub fn load_csv(path: &Path, layout: &CsvLayout) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    let bad = |line: u64, msg: String| CliError::validation(format!("{}: line {line}: {msg}", path.display()));

    let out_col = column_index(&headers, &layout.output, path)?;
    let group_col = match &layout.group {
        GroupMode::Exact => None,
        GroupMode::Column(name) => Some(column_index(&headers, name, path)?),
    };
    let in_cols: Vec<usize> = match &layout.inputs {
        Some(names) => names.iter().map(|n| column_index(&headers, n, path)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| i != out_col && Some(i) != group_col && &headers[i] != GROUP_COLUMN)
            .collect(),
    };
    if in_cols.is_empty() {
        return Err(CliError::validation(format!("{}: no input columns", path.display())));
    }

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut keys = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            bad(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(bad(line, format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let number = |i: usize| -> Result<f64> {
            let field = record[i].trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(line, format!("column '{}': '{field}' is not a finite number", &headers[i]))),
            }
        };
        for &c in &in_cols {
            inputs.push(number(c)?);
        }
        outputs.push(number(out_col)?);
        if let Some(g) = group_col {
            let field = record[g].trim();
            let key = field
                .parse::<u64>()
                .map_err(|_| bad(line, format!("column '{}': '{field}' is not a group id", &headers[g])))?;
            keys.push(key);
        }
    }
    if outputs.is_empty() {
        return Err(CliError::validation(format!("{}: no data rows", path.display())));
    }
    let n = outputs.len();
    let inputs = Matrix::new(n, in_cols.len(), inputs)?;
    let outputs = Vector::new(outputs);
    let dataset = match layout.group {
        GroupMode::Exact => Dataset::from_exact_inputs(inputs, outputs, Provenance::Csv),
        GroupMode::Column(_) => Dataset::new(inputs, outputs, keys, Provenance::Csv),
    };
    dataset.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents).map_err(|e| CliError::io(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
    write_file(path, &bytes)
}

pub fn write_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let d = dataset.input_dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    header.push(GROUP_COLUMN.into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..dataset.len()).map(|r| {
        let mut row: Vec<String> = dataset.input(r).iter().map(|v| fmt_f64(*v)).collect();
        row.push(fmt_f64(dataset.output(r)));
        row.push(dataset.group_keys()[r].to_string());
        row
    });
    write_rows(path, &header, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(path, e))?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// `epoch,mean_train_nll`, epochs counted from 1.
pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let rows = history.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), fmt_f64(*l)]);
    write_rows(path, &["epoch", "mean_train_nll"], rows)
}

/// One row per run. `seconds` is written only when `timing` is set, so that
/// repeated runs produce identical files by default.
pub fn write_grid(path: &Path, result: &GridResult, timing: bool) -> Result<()> {
    let rows = result.runs.iter().map(|o| {
        vec![
            o.run.depth.to_string(),
            o.run.width.to_string(),
            o.run.seed.to_string(),
            fmt_opt(o.kl),
            o.status.as_str().to_string(),
            if timing { fmt_opt(o.seconds) } else { String::new() },
        ]
    });
    write_rows(path, &["depth", "width", "seed", "kl", "status", "seconds"], rows)
}

/// Per-cell aggregates over seeds.
pub fn write_grid_cells(path: &Path, result: &GridResult) -> Result<()> {
    let rows = result.cells.iter().map(|c| {
        vec![
            c.depth.to_string(),
            c.width.to_string(),
            c.parameter_count.to_string(),
            c.valid_runs.to_string(),
            fmt_opt(c.mean_kl),
            fmt_opt(c.median_kl),
        ]
    });
    write_rows(
        path,
        &["depth", "width", "parameter_count", "valid_runs", "mean_kl", "median_kl"],
        rows,
    )
}

pub fn write_tuning(path: &Path, tuning: &GprTuning) -> Result<()> {
    let rows = tuning.rows.iter().map(|r| {
        vec![
            fmt_f64(r.length_scale_bound),
            fmt_f64(r.noise_variance),
            fmt_opt(r.kl),
            r.status.as_str().to_string(),
            fmt_opt(r.length_scale),
        ]
    });
    write_rows(
        path,
        &["length_scale_bound", "noise_variance", "kl", "status", "length_scale"],
        rows,
    )
}

/// Scatter files for predicted vs empirical means and interval widths.
pub fn write_scatter(dir: &Path, report: &EvalReport) -> Result<()> {
    write_rows(
        &dir.join("scatter_mean.csv"),
        &["emp_mean", "pred_mean"],
        report.rows.iter().map(|r| vec![fmt_f64(r.emp_mean), fmt_f64(r.pred_mean)]),
    )?;
    write_rows(
        &dir.join("scatter_interval.csv"),
        &["emp_interval", "pred_interval"],
        report
            .rows
            .iter()
            .filter(|r| !r.degenerate)
            .map(|r| vec![fmt_f64(r.interval.empirical), fmt_f64(r.interval.predicted)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use pnn_core::bench::{gen_cubic, CubicSpec};

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456789.12345679, f64::MIN_POSITIVE, -0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn dataset_round_trip_both_group_modes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = gen_cubic(&CubicSpec { n_unique: 7, replicates: 3, seed: 2 }).unwrap();
        write_csv(&path, &data).unwrap();
        for group in [GroupMode::Exact, GroupMode::Column("group".into())] {
            let back = load_csv(&path, &CsvLayout { group, ..CsvLayout::default() }).unwrap();
            assert_eq!(back.inputs(), data.inputs());
            assert_eq!(back.outputs(), data.outputs());
            assert_eq!(back.group_keys(), data.group_keys());
        }
    }
}
