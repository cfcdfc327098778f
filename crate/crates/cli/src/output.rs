//! Result envelopes, CSV tables and their JSON sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

/// One CSV field. Floats are written as the shortest decimal that reads back
/// to the same binary64; `Empty` is an empty field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => format_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("flushing CSV buffer: {e}"))
    }

    fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| Value::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().map(Cell::json)).collect()))
            .collect();
        Value::Array(rows)
    }
}

/// What a subcommand produces: a table plus everything that does not fit in
/// one (events, statistics, annotations).
#[derive(Debug, Clone)]
pub struct Product {
    pub table: Table,
    pub meta: Map<String, Value>,
    /// Suffix of the JSON sidecar written next to a CSV file.
    pub sidecar: &'static str,
}

impl Product {
    pub fn new(table: Table, sidecar: &'static str) -> Self {
        Self { table, meta: Map::new(), sidecar }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.meta.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }
}

#[derive(Debug, Serialize)]
pub struct ResultEnvelope<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub timestamp: String,
    /// SHA-256 of the compact JSON encoding of `payload`.
    pub payload_digest: String,
    pub payload: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl<'a> ResultEnvelope<'a> {
    pub fn new(config: &'a RunConfig, payload: Value) -> Result<Self> {
        let digest = sha256_hex(&serde_json::to_vec(&payload)?);
        Ok(Self {
            version: env!("CARGO_PKG_VERSION"),
            config,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            payload_digest: digest,
            payload,
        })
    }

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// `run.csv` -> `run.<tag>.json`.
pub fn sidecar_path(out: &Path, tag: &str) -> PathBuf {
    out.with_extension(format!("{tag}.json"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).context("writing to standard output")
}

/// Writes `product` as configured and returns the paths written.
pub fn emit(config: &RunConfig, product: Product) -> Result<Vec<PathBuf>> {
    let Product { table, mut meta, sidecar } = product;
    match (config.format.unwrap_or(Format::Csv), &config.out) {
        (Format::Json, out) => {
            meta.insert("rows".into(), table.to_json());
            let bytes = ResultEnvelope::new(config, Value::Object(meta))?.to_bytes()?;
            match out {
                Some(p) => write_file(p, &bytes).map(|_| vec![p.clone()]),
                None => write_stdout(&bytes).map(|_| Vec::new()),
            }
        }
        (Format::Csv, None) => write_stdout(&table.to_csv()?).map(|_| Vec::new()),
        (Format::Csv, Some(p)) => {
            let csv = table.to_csv()?;
            let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let mut t = Map::new();
            t.insert("file".into(), file.into());
            t.insert("sha256".into(), sha256_hex(&csv).into());
            t.insert("rows".into(), table.rows.len().into());
            meta.insert("table".into(), Value::Object(t));
            let side = sidecar_path(p, sidecar);
            let bytes = ResultEnvelope::new(config, Value::Object(meta))?.to_bytes()?;
            write_file(p, &csv)?;
            write_file(&side, &bytes)?;
            Ok(vec![p.clone(), side])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_in_shortest_form() {
        for v in [0.1, 1.0, 2.6e11, 1e-300, -0.176_862_964, f64::MAX, 5e-324] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_f64(0.1), "0.1");
        assert_eq!(format_f64(f64::NAN), "NaN");
    }

    #[test]
    fn csv_uses_lf_and_empty_fields() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::F(1.5), Cell::Empty]);
        t.push(vec![Cell::U(3), "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1.5,\n3,\"x,y\"\n");
    }

    #[test]
    fn json_rows_keep_types() {
        let mut t = Table::new(&["g", "N"]);
        t.push(vec![Cell::F(-0.1), Cell::U(15)]);
        assert_eq!(t.to_json(), serde_json::json!([{"g": -0.1, "N": 15}]));
    }

    #[test]
    fn sidecars_sit_next_to_the_table() {
        assert_eq!(sidecar_path(Path::new("out/run.csv"), "events"), Path::new("out/run.events.json"));
        assert_eq!(sidecar_path(Path::new("run"), "stats"), Path::new("run.stats.json"));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
