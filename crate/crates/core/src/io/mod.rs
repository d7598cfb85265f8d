//! Study configuration files, CSV tables and legacy VTK output.

mod config;
mod csv;
mod vtk;

pub use config::{parse_config, parse_config_str, serialize_config, ConfigError};
pub use csv::{parse_csv, write_csv, CsvError, CsvRow, CSV_HEADER};
pub use vtk::{parse_vtk, write_vtk, VtkError, VtkSummary};
