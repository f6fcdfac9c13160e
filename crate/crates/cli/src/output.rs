//! Solution JSON and history CSV writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use semiflow::engine::ConvergenceReport;
use semiflow::matrixkit::DenseMatrix;

use crate::problem::Kind;
use crate::solve::RunOutput;

#[derive(Debug, Serialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` pairs.
    pub data: Vec<[f64; 2]>,
}

impl From<&DenseMatrix> for MatrixJson {
    fn from(m: &DenseMatrix) -> Self {
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let z = m.get(i, j);
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.rows(), cols: m.cols(), data }
    }
}

#[derive(Debug, Serialize)]
struct SolutionFile<'a> {
    kind: &'a str,
    mode: String,
    order: u32,
    status: &'a str,
    solution: Option<MatrixJson>,
    final_residual: Option<f64>,
    estimated_order: Option<f64>,
    estimated_rate: Option<f64>,
    outer_steps: usize,
    total_applies: u64,
    message: &'a str,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subspace_residual: Option<f64>,
}

pub fn solution_json(kind: Kind, out: &RunOutput) -> Value {
    let file = SolutionFile {
        kind: kind.name(),
        mode: out.report.mode.to_string(),
        order: out.report.order,
        status: out.status.label(),
        solution: out.x.as_ref().map(MatrixJson::from),
        final_residual: out.report.final_residual(),
        estimated_order: out.report.estimated_order,
        estimated_rate: out.report.estimated_rate,
        outer_steps: out.report.outer_steps(),
        total_applies: out.report.total_applies(),
        message: &out.message,
        warnings: &out.warnings,
        lambda: out.pencil.as_ref().map(|p| MatrixJson::from(&p.lambda)),
        subspace_residual: out.pencil.as_ref().map(|p| p.residual),
    };
    serde_json::to_value(file).expect("solution record serializes")
}

/// Writes the `k, index, residual, elapsed_us` rows of a report.
pub fn write_history<W: Write>(writer: W, report: &ConvergenceReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "index", "residual", "elapsed_us"])?;
    for k in 0..report.len() {
        w.write_record([
            (k + 1).to_string(),
            report.iterate_indices[k].to_string(),
            format!("{:e}", report.residuals[k]),
            report.elapsed_us[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `<prefix><suffix>`, keeping any directory part of the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_solve_outputs(prefix: &Path, kind: Kind, out: &RunOutput) -> anyhow::Result<(PathBuf, PathBuf)> {
    let json_path = with_suffix(prefix, ".solution.json");
    let csv_path = with_suffix(prefix, ".history.csv");
    let text = serde_json::to_string_pretty(&solution_json(kind, out))?;
    std::fs::write(&json_path, text + "\n")?;
    write_history(std::fs::File::create(&csv_path)?, &out.report)?;
    Ok((json_path, csv_path))
}
