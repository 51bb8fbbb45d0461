use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde_json::{json, Map, Value};

use crate::config::{RunConfig, UNITS};

/// Destination chosen by `output`.
pub fn open(config: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &config.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `# key = value` lines: command, units, the resolved config, then `extra`.
pub fn csv_header(w: &mut dyn Write, command: &str, config: &RunConfig, extra: &[(&str, String)]) -> io::Result<()> {
    writeln!(w, "# iongate {command}")?;
    writeln!(w, "# units: {UNITS}")?;
    for (k, v) in config.entries() {
        writeln!(w, "# {k} = {v}")?;
    }
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

pub fn csv_body(w: &mut dyn Write, columns: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()
}

pub fn json_document(command: &str, config: &RunConfig, summary: Value, result: Value) -> Value {
    let cfg: Map<String, Value> = config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    json!({
        "command": command,
        "units": UNITS,
        "config": cfg,
        "summary": summary,
        "result": result,
    })
}

pub fn write_json(w: &mut dyn Write, doc: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, doc)?;
    writeln!(w)
}

/// Shortest round-trip formatting, empty for missing values.
pub fn cell(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}
