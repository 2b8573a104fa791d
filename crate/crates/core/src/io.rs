//! Text formats: matrices and CSV traces.

use std::fmt::Write as _;
use std::path::Path;

use crate::engine::{ConvergenceTrace, DenseMatrix};
use crate::error::{Error, Result};

/// First line `m n`, then `m` lines of `n` whitespace-separated numbers.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let data = tokens
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad entry '{t}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if data.len() != rows * cols {
        return Err(Error::Parse(format!("expected {} entries for {rows}x{cols}, found {}", rows * cols, data.len())));
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| match e {
        Error::NonFinite(_) => Error::Parse("matrix entries must be finite".into()),
        other => other,
    })
}

/// Seventeen significant digits per entry, so values round-trip exactly.
pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

pub const TRACE_HEADER: &str = "iter,matmuls,fro_err,spec_err";

/// `iter,matmuls,fro_err,spec_err`, with an empty last column when no
/// spectral error was measured.
pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in &trace.records {
        let spec = r.spec_err.map(|e| format!("{e:e}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{:e},{}", r.iter, r.matmuls, r.fro_err, spec);
    }
    out
}

pub const OPTIMIZER_HEADER: &str = "step,objective,orth_residual,step_norm";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerRecord {
    pub step: usize,
    pub objective: f64,
    pub orth_residual: f64,
    pub step_norm: f64,
}

pub fn optimizer_csv(records: &[OptimizerRecord]) -> String {
    let mut out = format!("{OPTIMIZER_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", r.step, r.objective, r.orth_residual, r.step_norm);
    }
    out
}
