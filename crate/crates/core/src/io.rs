//! CSV ingestion with filters and shifts, and plot-data emission.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::tail_dependence::BivariateSample;

/// A column addressed by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = Error;

    /// Digits select by index; anything else by name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Configuration("empty column reference".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n}"),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// One column for univariate data, two for bivariate.
    pub columns: Vec<ColumnRef>,
    /// Rows with a value below the bound (or a non-numeric value) are dropped.
    pub min_filters: Vec<(ColumnRef, f64)>,
    /// Rows whose trimmed cell differs from the value are dropped.
    pub row_filters: Vec<(ColumnRef, String)>,
    /// Added to the loaded values of the column after filtering.
    pub shifts: Vec<(ColumnRef, f64)>,
}

/// Rows kept and the reasons others were dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_by_filter: usize,
    pub dropped_non_numeric: usize,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dropped_non_numeric > 0 {
            w.push(format!("{} rows dropped for non-numeric cells", self.dropped_non_numeric));
        }
        w
    }
}

fn resolve(headers: &csv::StringRecord, c: &ColumnRef) -> Result<usize> {
    match c {
        ColumnRef::Index(i) if *i < headers.len() => Ok(*i),
        ColumnRef::Index(i) => Err(Error::Data(format!(
            "column index {i} out of range ({} columns)",
            headers.len()
        ))),
        ColumnRef::Name(n) => headers
            .iter()
            .position(|h| h.trim() == n)
            .ok_or_else(|| Error::Data(format!("column '{n}' not found in header"))),
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    let v = s.trim().replace(['$', ','], "");
    v.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Reads the selected columns; returns one vector of values per column.
pub fn load_columns(cfg: &DatasetConfig) -> Result<(Vec<Vec<f64>>, LoadReport)> {
    if cfg.columns.is_empty() {
        return Err(Error::Configuration("no columns selected".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(&cfg.path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", cfg.path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {}: {e}", cfg.path.display())))?
        .clone();
    let cols: Vec<usize> = cfg.columns.iter().map(|c| resolve(&headers, c)).collect::<Result<_>>()?;
    let mins: Vec<(usize, f64)> = cfg
        .min_filters
        .iter()
        .map(|(c, v)| Ok((resolve(&headers, c)?, *v)))
        .collect::<Result<_>>()?;
    let eqs: Vec<(usize, &str)> = cfg
        .row_filters
        .iter()
        .map(|(c, v)| Ok((resolve(&headers, c)?, v.as_str())))
        .collect::<Result<_>>()?;
    let mut shifts = vec![0.0; cols.len()];
    for (c, s) in &cfg.shifts {
        let idx = resolve(&headers, c)?;
        let pos = cols
            .iter()
            .position(|&x| x == idx)
            .ok_or_else(|| Error::Configuration(format!("shift refers to unselected column {c}")))?;
        shifts[pos] += s;
    }

    let mut out = vec![Vec::new(); cols.len()];
    let mut report = LoadReport {
        rows_read: 0,
        dropped_by_filter: 0,
        dropped_non_numeric: 0,
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("malformed CSV: {e}")))?;
        report.rows_read += 1;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        if eqs.iter().any(|&(i, v)| cell(i).trim() != v) {
            report.dropped_by_filter += 1;
            continue;
        }
        let values: Option<Vec<f64>> = cols.iter().map(|&i| parse_cell(cell(i))).collect();
        let Some(values) = values else {
            report.dropped_non_numeric += 1;
            continue;
        };
        let passes = mins.iter().all(|&(i, lo)| parse_cell(cell(i)).is_some_and(|x| x >= lo));
        if !passes {
            report.dropped_by_filter += 1;
            continue;
        }
        for ((o, v), s) in out.iter_mut().zip(values).zip(&shifts) {
            o.push(v + s);
        }
    }
    if out[0].is_empty() {
        return Err(Error::Data(format!(
            "no rows left after filtering {} ({} read)",
            cfg.path.display(),
            report.rows_read
        )));
    }
    Ok((out, report))
}

pub fn load_univariate(cfg: &DatasetConfig) -> Result<(Sample, LoadReport)> {
    if cfg.columns.len() != 1 {
        return Err(Error::Configuration(format!("univariate load needs one column, got {}", cfg.columns.len())));
    }
    let (mut cols, report) = load_columns(cfg)?;
    Ok((Sample::new(cols.remove(0))?, report))
}

pub fn load_bivariate(cfg: &DatasetConfig) -> Result<(BivariateSample, LoadReport)> {
    if cfg.columns.len() != 2 {
        return Err(Error::Configuration(format!("bivariate load needs two columns, got {}", cfg.columns.len())));
    }
    let (cols, report) = load_columns(cfg)?;
    let pairs = cols[0].iter().copied().zip(cols[1].iter().copied()).collect();
    Ok((BivariateSample::new(pairs)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

/// Named equal-length series plus the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotEmission {
    metadata: Vec<(String, String)>,
    series: Vec<(String, Vec<f64>)>,
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

impl PlotEmission {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a metadata entry. Line breaks are flattened to spaces.
    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let v = value.to_string().replace(['\n', '\r'], " ");
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.metadata.push((key.to_string(), v)),
        }
        self
    }

    pub fn series(&mut self, name: &str, values: Vec<f64>) -> Result<&mut Self> {
        if let Some((_, first)) = self.series.first() {
            if first.len() != values.len() {
                return Err(Error::Configuration(format!(
                    "series '{name}' has length {}, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        if self.series.iter().any(|(n, _)| n == name) {
            return Err(Error::Configuration(format!("duplicate series '{name}'")));
        }
        self.series.push((name.to_string(), values));
        Ok(self)
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn series_names(&self) -> impl Iterator<Item = &str> {
        self.series.iter().map(|(n, _)| n.as_str())
    }

    /// Equality that treats NaN as equal to NaN.
    pub fn same_as(&self, other: &Self) -> bool {
        self.metadata == other.metadata
            && self.series.len() == other.series.len()
            && self.series.iter().zip(&other.series).all(|(a, b)| a.0 == b.0 && bits_eq(&a.1, &b.1))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    /// `# key=value` lines, then a header and one row per index. Values use
    /// 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Data(format!("CSV write failed: {e}"));
        w.write_record(self.series.iter().map(|(n, _)| n.as_str())).map_err(csv_err)?;
        let rows = self.series.first().map_or(0, |s| s.1.len());
        for i in 0..rows {
            w.write_record(self.series.iter().map(|(_, v)| format!("{:.16e}", v[i]))).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(format!("CSV write failed: {e}")))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut em = Self::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let rest = rest.trim_end_matches(['\n', '\r']);
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("metadata line without '=': {rest}")))?;
            em.metadata.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let mut rdr = csv::ReaderBuilder::new().from_reader(text[body_start..].as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
        let mut cols = vec![Vec::new(); headers.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
            for (c, cell) in cols.iter_mut().zip(rec.iter()) {
                c.push(cell.parse::<f64>().map_err(|e| Error::Data(format!("bad number '{cell}': {e}")))?);
            }
        }
        for (h, c) in headers.iter().zip(cols) {
            em.series(h, c)?;
        }
        Ok(em)
    }

    /// `{"metadata": {...}, "series": [{"name", "values"}]}`; non-finite values
    /// become the strings `"NaN"`, `"inf"`, `"-inf"`.
    pub fn to_json(&self) -> String {
        let meta: serde_json::Map<String, Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let series: Vec<Value> = self
            .series
            .iter()
            .map(|(n, v)| {
                let vals: Vec<Value> = v
                    .iter()
                    .map(|&x| {
                        if x.is_finite() {
                            json!(x)
                        } else {
                            Value::String(format!("{x}"))
                        }
                    })
                    .collect();
                json!({ "name": n, "values": vals })
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "metadata": meta, "series": series }))
            .expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Data(format!("invalid JSON: {e}")))?;
        let bad = |what: &str| Error::Data(format!("emission JSON: {what}"));
        let mut em = Self::new();
        for (k, val) in v["metadata"].as_object().ok_or_else(|| bad("missing metadata"))? {
            em.metadata.push((k.clone(), val.as_str().ok_or_else(|| bad("metadata not a string"))?.to_string()));
        }
        for s in v["series"].as_array().ok_or_else(|| bad("missing series"))? {
            let name = s["name"].as_str().ok_or_else(|| bad("series without name"))?;
            let values = s["values"]
                .as_array()
                .ok_or_else(|| bad("series without values"))?
                .iter()
                .map(|x| match x {
                    Value::Number(n) => n.as_f64().ok_or_else(|| bad("number out of range")),
                    Value::String(t) => t.parse::<f64>().map_err(|_| bad("bad non-finite marker")),
                    _ => Err(bad("value is neither number nor marker")),
                })
                .collect::<Result<Vec<f64>>>()?;
            em.series(name, values)?;
        }
        Ok(em)
    }
}
