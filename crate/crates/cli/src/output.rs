use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::commands::Emitted;
use crate::config::{Format, RunConfig};

/// Identifier of the JSON document written for table commands.
pub const TABLES_SCHEMA: &str = "favard-lab/tables/v1";

fn json_document(emitted: &Emitted, config: &RunConfig) -> Result<Value> {
    if let Some(report) = &emitted.report {
        return Ok(serde_json::to_value(report)?);
    }
    let tables: Map<String, Value> = emitted
        .tables
        .iter()
        .map(|t| (t.name.clone(), t.to_json()))
        .collect();
    Ok(json!({
        "schema": TABLES_SCHEMA,
        "command": emitted.command,
        "config": config,
        "tables": tables,
    }))
}

fn command_name(emitted: &Emitted) -> String {
    serde_json::to_value(emitted.command)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| "output".to_string())
}

/// Write the tables to `--out` (one file per CSV table, one JSON document per
/// command) or to stdout.
pub fn emit(emitted: &Emitted, config: &RunConfig) -> Result<()> {
    let mut files: Vec<(String, String)> = Vec::new();
    match config.format {
        Format::Csv => {
            for t in &emitted.tables {
                files.push((format!("{}.csv", t.name), t.to_csv()));
            }
        }
        Format::Json => {
            let doc = json_document(emitted, config)?;
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            files.push((format!("{}.json", command_name(emitted)), text));
        }
    }
    match &config.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, text) in files {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let many = files.len() > 1;
            for (name, text) in files {
                if many {
                    writeln!(lock, "# {name}")?;
                }
                lock.write_all(text.as_bytes())?;
                if many {
                    writeln!(lock)?;
                }
            }
        }
    }
    Ok(())
}
