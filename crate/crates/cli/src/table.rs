//! Comma-separated result files: `#` metadata lines (including the full
//! config, prefixed `#% `), one header row, then numeric rows written with 17
//! significant digits.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::runner::ResultTable;

const CONFIG_PREFIX: &str = "#% ";

/// `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(table: &ResultTable) -> Vec<String> {
    let mut cols = table.coord_names.clone();
    for m in &table.metric_names {
        cols.push(format!("{m}_mean"));
        cols.push(format!("{m}_std"));
    }
    cols.push("count".into());
    cols
}

/// Writes `table` as CSV to `out`.
pub fn write_table<W: Write>(table: &ResultTable, mut out: W) -> CliResult<()> {
    let m = &table.meta;
    writeln!(out, "# gdtc result table")?;
    writeln!(out, "# experiment = {}", table.experiment.name())?;
    writeln!(out, "# version = {}", m.version)?;
    writeln!(out, "# master_seed = {}", m.master_seed)?;
    writeln!(out, "# config_sha256 = {}", m.config_sha256)?;
    writeln!(out, "# wall_time_s = {:.3}", m.wall_time_s)?;
    writeln!(out, "# rows = {}", table.rows.len())?;
    for line in m.config.to_toml().lines() {
        writeln!(out, "{CONFIG_PREFIX}{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(table))?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.coords.iter().map(|&c| format_number(c)).collect();
        for s in &row.stats {
            rec.push(format_number(s.mean));
            rec.push(format_number(s.std));
        }
        rec.push(row.stats.first().map_or(0, |s| s.count).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<stem>.csv`, creating `dir` if needed.
pub fn save_table(table: &ResultTable, dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let cfg = &table.meta.config;
    let stem = cfg.output.name.clone().unwrap_or_else(|| cfg.experiment.name().to_string());
    let path = dir.join(format!("{stem}.csv"));
    let file = std::fs::File::create(&path)?;
    write_table(table, std::io::BufWriter::new(file))?;
    Ok(path)
}

/// Re-parses the config embedded in a result file.
pub fn read_embedded_config(path: &Path) -> CliResult<ExperimentConfig> {
    let file = std::fs::File::open(path)?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix(CONFIG_PREFIX) {
            text.push_str(rest);
            text.push('\n');
        } else if line == CONFIG_PREFIX.trim_end() {
            text.push('\n');
        }
    }
    if text.is_empty() {
        return Err(CliError::Config(format!("{} has no embedded config", path.display())));
    }
    ExperimentConfig::from_toml(&text)
}

/// Header and numeric rows of a result file, metadata skipped.
pub fn read_rows(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| CliError::Config(format!("bad number '{f}': {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
