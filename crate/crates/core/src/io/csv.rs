use std::fmt::Write as _;

use thiserror::Error;

use crate::driver::ConvergenceRecord;

pub const CSV_HEADER: &str = "grid,ndof,iterations,final_residual,dpg_eta,assembly_s,solve_s";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("line {0}: malformed row")]
    Row(usize),
}

/// One row of a study table. `dpg_eta` is `sqrt(sum_K eta_K^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub grid: usize,
    pub ndof: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub dpg_eta: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
}

impl From<&ConvergenceRecord> for CsvRow {
    fn from(r: &ConvergenceRecord) -> Self {
        Self {
            grid: r.grid,
            ndof: r.ndof,
            iterations: r.iterations,
            final_residual: r.final_residual,
            dpg_eta: r.dpg_eta,
            assembly_s: r.assembly_s,
            solve_s: r.solve_s,
        }
    }
}

/// Floats use the shortest representation that parses back to the same value.
pub fn write_csv<'a>(rows: impl IntoIterator<Item = &'a ConvergenceRecord>) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:e},{:e},{:e},{:e}",
            r.grid, r.ndof, r.iterations, r.final_residual, r.dpg_eta, r.assembly_s, r.solve_s
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    if header != CSV_HEADER {
        return Err(CsvError::Header(header.to_string()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = || CsvError::Row(i + 2);
            let f: Vec<&str> = l.trim().split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            let u = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let x = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(CsvRow {
                grid: u(f[0])?,
                ndof: u(f[1])?,
                iterations: u(f[2])?,
                final_residual: x(f[3])?,
                dpg_eta: x(f[4])?,
                assembly_s: x(f[5])?,
                solve_s: x(f[6])?,
            })
        })
        .collect()
}
