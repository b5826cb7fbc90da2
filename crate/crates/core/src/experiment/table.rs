//! Result tables: CSV data plus a JSON sidecar with metadata and the config
//! echo.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::ExperimentError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON config echo.
    pub config_hash: String,
    /// Write time; not part of the hash.
    pub timestamp_unix: u64,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    metadata: Metadata,
    label_column: Option<String>,
    columns: Vec<String>,
    rows: usize,
    config: Value,
}

/// Rectangular table of finite reals with an optional leading text column.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    label_column: Option<String>,
    labels: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

/// Hex SHA-256 of the compact JSON serialization.
pub fn config_hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            label_column: None,
            labels: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn with_label_column(mut self, name: &str) -> Self {
        self.label_column = Some(name.to_string());
        self
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn push_row(&mut self, values: Vec<f64>) -> Result<(), ExperimentError> {
        if self.label_column.is_some() {
            return Err(ExperimentError::Numeric("labeled table needs a row label".into()));
        }
        self.push_checked(values)
    }

    pub fn push_labeled_row(&mut self, label: &str, values: Vec<f64>) -> Result<(), ExperimentError> {
        if self.label_column.is_none() {
            return Err(ExperimentError::Numeric("table has no label column".into()));
        }
        self.push_checked(values)?;
        self.labels.push(label.to_string());
        Ok(())
    }

    fn push_checked(&mut self, values: Vec<f64>) -> Result<(), ExperimentError> {
        if values.len() != self.columns.len() {
            return Err(ExperimentError::Numeric(format!(
                "row of {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ExperimentError::Numeric(format!("non-finite value {v} in column {}", self.columns[k])));
        }
        self.rows.push(values);
        Ok(())
    }

    pub fn set_extra(&mut self, key: &str, value: f64) -> Result<(), ExperimentError> {
        if !value.is_finite() {
            return Err(ExperimentError::Numeric(format!("non-finite metadata value {key}")));
        }
        self.metadata.extras.insert(key.to_string(), value);
        Ok(())
    }

    /// CSV bytes: header, then one line per row, reals as `{:.16e}`.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<&str> =
            self.label_column.iter().map(String::as_str).chain(self.columns.iter().map(String::as_str)).collect();
        w.write_record(&header).expect("writing to memory");
        for (i, row) in self.rows.iter().enumerate() {
            let record: Vec<String> =
                self.labels.get(i).cloned().into_iter().chain(row.iter().map(|v| format_real(*v))).collect();
            w.write_record(&record).expect("writing to memory");
        }
        w.into_inner().expect("flushing to memory")
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, stem: &str, config: &Value) -> Result<(PathBuf, PathBuf), ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv_bytes()).map_err(|e| ExperimentError::io(&csv_path, e))?;
        let sidecar = Sidecar {
            metadata: self.metadata.clone(),
            label_column: self.label_column.clone(),
            columns: self.columns.clone(),
            rows: self.rows.len(),
            config: config.clone(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        text.push('\n');
        fs::write(&json_path, text).map_err(|e| ExperimentError::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }

    /// Read a table written by [`ResultTable::write`], returning it with the
    /// config echo.
    pub fn read(csv_path: &Path) -> Result<(Self, Value), ExperimentError> {
        let json_path = csv_path.with_extension("json");
        let text = fs::read_to_string(&json_path).map_err(|e| ExperimentError::io(&json_path, e))?;
        let sidecar: Sidecar =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Parse(format!("{}: {e}", json_path.display())))?;
        let mut reader = csv::Reader::from_path(csv_path)
            .map_err(|e| ExperimentError::Parse(format!("{}: {e}", csv_path.display())))?;
        let mut table = Self {
            label_column: sidecar.label_column,
            labels: Vec::new(),
            columns: sidecar.columns,
            rows: Vec::new(),
            metadata: sidecar.metadata,
        };
        let offset = usize::from(table.label_column.is_some());
        for record in reader.records() {
            let record = record.map_err(|e| ExperimentError::Parse(e.to_string()))?;
            let values = record
                .iter()
                .skip(offset)
                .map(|s| s.parse::<f64>().map_err(|e| ExperimentError::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match record.get(0).filter(|_| offset == 1) {
                Some(label) => table.push_labeled_row(label, values)?,
                None => table.push_row(values)?,
            }
        }
        if table.rows.len() != sidecar.rows {
            return Err(ExperimentError::Parse(format!(
                "sidecar lists {} rows, CSV has {}",
                sidecar.rows,
                table.rows.len()
            )));
        }
        Ok((table, sidecar.config))
    }
}
