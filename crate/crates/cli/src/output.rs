//! Table emission: CSV with a JSON sidecar, or a single JSON document.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, Config, OutputOptions};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a Config,
}

#[derive(Serialize)]
struct JsonDocument<'a, R: Serialize> {
    #[serde(flatten)]
    meta: Provenance<'a>,
    rows: &'a [R],
}

/// `results.csv` → `results.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn write_csv<R: Serialize, W: Write>(rows: &[R], sink: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows` per `opts`; CSV files get a sidecar with the config and version.
pub fn emit<R: Serialize>(command: &str, cfg: &Config, rows: &[R], opts: &OutputOptions) -> Result<(), CliError> {
    let meta = Provenance { command, version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, config: cfg };
    let sink: Box<dyn Write> = match &opts.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    match opts.format {
        Format::Csv => {
            write_csv(rows, sink)?;
            if let Some(path) = &opts.out {
                let side = BufWriter::new(File::create(sidecar_path(path))?);
                serde_json::to_writer_pretty(side, &meta).map_err(io::Error::from)?;
            }
        }
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, &JsonDocument { meta, rows }).map_err(io::Error::from)?;
            writeln!(sink)?;
            sink.flush()?;
        }
    }
    Ok(())
}
