//! Rendering with provenance: every artifact records the tool version,
//! the resolved configuration and the wall-clock time of the computation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;
use crate::error::CliError;
use crate::svg::{self, Plot};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub parallel: bool,
    pub config: BTreeMap<&'static str, String>,
    pub wall_clock_s: f64,
}

impl Meta {
    pub fn new(command: &str, config: BTreeMap<&'static str, String>, wall_clock_s: f64) -> Self {
        Meta {
            tool: "tongues",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parallel: cfg!(feature = "parallel"),
            config,
            wall_clock_s,
        }
    }

    fn config_line(&self) -> String {
        self.config
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A computed result in every form a command can emit.
#[derive(Debug, Default)]
pub struct Report {
    pub json: Value,
    pub csv: Option<(String, Vec<String>)>,
    pub plot: Option<Plot>,
    /// Non-fatal per-item failures; reported on stderr, exit status 1.
    pub failures: Vec<String>,
}

pub fn render(report: &Report, format: Format, meta: &Meta) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let meta_value = serde_json::to_value(meta).expect("meta serializes");
            let doc = match &report.json {
                Value::Object(map) => {
                    let mut map = map.clone();
                    map.insert("meta".into(), meta_value);
                    Value::Object(map)
                }
                other => serde_json::json!({ "meta": meta_value, "data": other }),
            };
            Ok(serde_json::to_string_pretty(&doc).expect("json serializes") + "\n")
        }
        Format::Csv => {
            let (header, rows) = report
                .csv
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("'{}' has no csv output", meta.command)))?;
            let mut s = format!(
                "# {} {}\n# command: {}\n# config: {}\n# wall_clock_s: {}\n",
                meta.tool,
                meta.version,
                meta.command,
                meta.config_line(),
                meta.wall_clock_s
            );
            s.push_str(header);
            s.push('\n');
            for r in rows {
                s.push_str(r);
                s.push('\n');
            }
            Ok(s)
        }
        Format::Svg => {
            let mut plot = report
                .plot
                .clone()
                .ok_or_else(|| CliError::Usage(format!("'{}' has no svg output", meta.command)))?;
            // wall-clock time would break byte-for-byte reproducibility; it
            // goes to stderr instead (see `emit`)
            plot.comment = vec![
                format!("{} {}", meta.tool, meta.version),
                format!("command: {}", meta.command),
                format!("config: {}", meta.config_line()),
            ];
            svg::render(&plot).map_err(CliError::numerical)
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>, format: Format, meta: &Meta) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    if format == Format::Svg {
        eprintln!("wall_clock_s: {}", meta.wall_clock_s);
    }
    Ok(())
}
