//! CSV tables with a `#` preamble naming the tool version, command, seed and
//! the hash of the resolved configuration, followed by that configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::Resolved;
use crate::error::CliError;

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.10}")
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_table(out: &mut dyn Write, config: &Resolved, table: &Table) -> Result<(), CliError> {
    writeln!(out, "# qswd {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {}", config.command)?;
    writeln!(out, "# seed: {}", config.seed)?;
    writeln!(out, "# config_sha256: {}", config.sha256())?;
    for line in config.to_toml().lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
