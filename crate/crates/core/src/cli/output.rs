use std::io::Write;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// A named table of JSON-typed cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }
}

/// Everything one subcommand emits.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub workers: usize,
    /// Fully resolved configuration, in display order.
    pub config: Vec<(String, Value)>,
    pub tables: Vec<Table>,
    /// Only written to JSON so that CSV output stays byte-identical.
    pub wall_time: Option<f64>,
}

impl Report {
    pub fn new(command: &'static str, seed: Option<u64>, workers: usize) -> Self {
        Report {
            command,
            seed,
            workers,
            config: Vec::new(),
            tables: Vec::new(),
            wall_time: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.push((key.to_string(), value.into()));
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// CSV cell text: numbers in Rust's shortest round-trip form, `.` decimals.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `# key: value` preamble lines shared by the CSV and lines formats.
pub fn write_preamble<W: Write + ?Sized>(report: &Report, w: &mut W) -> Result<()> {
    writeln!(w, "# derange {}", report.command)?;
    if let Some(seed) = report.seed {
        writeln!(w, "# seed: {seed}")?;
    }
    writeln!(w, "# workers: {}", report.workers)?;
    for (k, v) in &report.config {
        writeln!(w, "# {k}: {}", cell(v))?;
    }
    Ok(())
}

/// Preamble, then one `# table: <name>` section per table, each with its
/// own header row.
pub fn write_csv<W: Write + ?Sized>(report: &Report, w: &mut W) -> Result<()> {
    write_preamble(report, w)?;
    for t in &report.tables {
        writeln!(w, "# table: {}", t.name)?;
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        csv.write_record(&t.columns)?;
        for row in &t.rows {
            csv.write_record(row.iter().map(cell))?;
        }
        let bytes = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn to_json(report: &Report) -> Value {
    let mut root = Map::new();
    root.insert("command".into(), report.command.into());
    root.insert("seed".into(), report.seed.map_or(Value::Null, Value::from));
    root.insert("workers".into(), report.workers.into());
    if let Some(t) = report.wall_time {
        root.insert("wall_time_seconds".into(), t.into());
    }
    let config: Map<String, Value> = report.config.iter().cloned().collect();
    root.insert("config".into(), Value::Object(config));
    let mut tables = Map::new();
    for t in &report.tables {
        let rows = t
            .rows
            .iter()
            .map(|row| {
                Value::Object(t.columns.iter().cloned().zip(row.iter().cloned()).collect())
            })
            .collect();
        tables.insert(t.name.clone(), Value::Array(rows));
    }
    root.insert("tables".into(), Value::Object(tables));
    Value::Object(root)
}

pub fn write_json<W: Write + ?Sized>(report: &Report, w: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, &to_json(report))?;
    writeln!(w)?;
    Ok(())
}

/// A table read back from CSV output, cells as text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Parses the sectioned CSV written by [`write_csv`]; preamble comments
/// are skipped.
pub fn read_csv_tables(text: &str) -> Result<Vec<CsvTable>> {
    let mut out = Vec::new();
    let mut current: Option<(String, String)> = None;
    let flush = |cur: Option<(String, String)>, out: &mut Vec<CsvTable>| -> Result<()> {
        if let Some((name, body)) = cur {
            let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let columns = rdr.headers()?.iter().map(String::from).collect();
            let rows = rdr
                .records()
                .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
                .collect::<std::result::Result<_, _>>()?;
            out.push(CsvTable {
                name,
                columns,
                rows,
            });
        }
        Ok(())
    };
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("# table: ") {
            flush(current.take(), &mut out)?;
            current = Some((name.to_string(), String::new()));
        } else if line.starts_with('#') && current.is_none() {
            continue;
        } else if let Some((_, body)) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    flush(current, &mut out)?;
    Ok(out)
}
