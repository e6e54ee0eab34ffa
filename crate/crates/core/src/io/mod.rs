//! Configuration files and result tables.

mod config;
mod csv;

pub use config::{parse_config, parse_config_with_profile, ConfigError, Profile, Settings, KEYS};
pub use csv::{format_row, parse_csv, to_csv_string, write_csv, CsvRow, CSV_HEADER};
