//! Item x participant tables with a missing-cell mask.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// An `m x n` table of measures: rows are items, columns are participants.
///
/// Storage is column-major so that a participant's measures are contiguous.
/// Absent cells hold `0.0` in `values` and `false` in `present`; nothing reads
/// `values` without consulting the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    m: usize,
    n: usize,
    values: Vec<f64>,
    present: Vec<bool>,
    n_absent: usize,
    item_labels: Option<Vec<String>>,
    participant_labels: Option<Vec<String>>,
}

impl DataTable {
    /// Builds a table from rows where `None` marks an absent cell.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; m * n];
        let mut present = vec![false; m * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Ragged {
                    line: i + 1,
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(v) = cell {
                    values[j * m + i] = *v;
                    present[j * m + i] = true;
                }
            }
        }
        Self::from_column_major(m, n, values, present)
    }

    /// Builds a complete table from row-major values.
    pub fn complete(m: usize, n: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != m * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for a {m}x{n} table, got {}",
                m * n,
                row_major.len()
            )));
        }
        let mut values = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                values[j * m + i] = row_major[i * n + j];
            }
        }
        Self::from_column_major(m, n, values, vec![true; m * n])
    }

    pub fn from_column_major(m: usize, n: usize, mut values: Vec<f64>, present: Vec<bool>) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::TooSmall { rows: m, cols: n });
        }
        if values.len() != m * n || present.len() != m * n {
            return Err(Error::InvalidParameter(format!(
                "buffers do not match a {m}x{n} table"
            )));
        }
        let mut row_count = vec![0usize; m];
        let mut n_absent = 0;
        for j in 0..n {
            let mut col_count = 0;
            #[allow(clippy::needless_range_loop)]
            for i in 0..m {
                let k = j * m + i;
                if present[k] {
                    if !values[k].is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "cell ({}, {}) is not finite",
                            i + 1,
                            j + 1
                        )));
                    }
                    row_count[i] += 1;
                    col_count += 1;
                } else {
                    values[k] = 0.0;
                    n_absent += 1;
                }
            }
            if col_count == 0 {
                return Err(Error::EmptyColumn(j + 1));
            }
        }
        if let Some(i) = row_count.iter().position(|&c| c == 0) {
            return Err(Error::EmptyRow(i + 1));
        }
        Ok(DataTable {
            m,
            n,
            values,
            present,
            n_absent,
            item_labels: None,
            participant_labels: None,
        })
    }

    pub fn with_item_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.m {
            return Err(Error::InvalidParameter(format!(
                "{} item labels for {} items",
                labels.len(),
                self.m
            )));
        }
        self.item_labels = Some(labels);
        Ok(self)
    }

    pub fn with_participant_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} participant labels for {} participants",
                labels.len(),
                self.n
            )));
        }
        self.participant_labels = Some(labels);
        Ok(self)
    }

    /// Returns a copy with the listed `(item, participant)` cells marked
    /// absent, re-checking the row and column invariants.
    pub fn with_absent<I>(&self, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut present = self.present.clone();
        for (i, j) in cells {
            if i >= self.m || j >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "cell ({i}, {j}) outside a {}x{} table",
                    self.m, self.n
                )));
            }
            present[j * self.m + i] = false;
        }
        let mut t = Self::from_column_major(self.m, self.n, self.values.clone(), present)?;
        t.item_labels = self.item_labels.clone();
        t.participant_labels = self.participant_labels.clone();
        Ok(t)
    }

    pub fn items(&self) -> usize {
        self.m
    }

    pub fn participants(&self) -> usize {
        self.n
    }

    pub fn get(&self, item: usize, participant: usize) -> Option<f64> {
        let k = participant * self.m + item;
        self.present[k].then(|| self.values[k])
    }

    /// Values of one participant; absent cells read as `0.0`.
    pub fn column(&self, participant: usize) -> &[f64] {
        &self.values[participant * self.m..(participant + 1) * self.m]
    }

    pub fn column_mask(&self, participant: usize) -> &[bool] {
        &self.present[participant * self.m..(participant + 1) * self.m]
    }

    pub fn is_complete(&self) -> bool {
        self.n_absent == 0
    }

    pub fn absent_count(&self) -> usize {
        self.n_absent
    }

    pub fn present_count(&self) -> usize {
        self.m * self.n - self.n_absent
    }

    pub fn missing_fraction(&self) -> f64 {
        self.n_absent as f64 / (self.m * self.n) as f64
    }

    pub fn item_labels(&self) -> Option<&[String]> {
        self.item_labels.as_deref()
    }

    pub fn participant_labels(&self) -> Option<&[String]> {
        self.participant_labels.as_deref()
    }

    /// Applies `f` to every present cell.
    pub fn map_present(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for j in 0..self.n {
            for i in 0..self.m {
                let k = j * self.m + i;
                if self.present[k] {
                    out.values[k] = f(i, j, self.values[k]);
                }
            }
        }
        out
    }

    /// Returns the table with its participant columns reordered so that new
    /// column `j` is old column `order[j]`.
    pub fn permute_participants(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if order.len() != self.n
            || order
                .iter()
                .any(|&j| j >= self.n || std::mem::replace(&mut seen[j], true))
        {
            return Err(Error::InvalidParameter(
                "not a permutation of participants".into(),
            ));
        }
        let mut values = Vec::with_capacity(self.values.len());
        let mut present = Vec::with_capacity(self.present.len());
        for &j in order {
            values.extend_from_slice(self.column(j));
            present.extend_from_slice(self.column_mask(j));
        }
        let mut t = Self::from_column_major(self.m, self.n, values, present)?;
        t.item_labels = self.item_labels.clone();
        t.participant_labels = self
            .participant_labels
            .as_ref()
            .map(|l| order.iter().map(|&j| l[j].clone()).collect());
        Ok(t)
    }
}

/// Per-item present-cell means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemMeans {
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn item_means(t: &DataTable) -> ItemMeans {
    let mut sums = vec![0.0; t.m];
    let mut counts = vec![0usize; t.m];
    for j in 0..t.n {
        for ((s, c), (v, p)) in sums
            .iter_mut()
            .zip(counts.iter_mut())
            .zip(t.column(j).iter().zip(t.column_mask(j)))
        {
            if *p {
                *s += v;
                *c += 1;
            }
        }
    }
    let means = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    ItemMeans { means, counts }
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    let len = x.len() as f64;
    let mx = x.iter().sum::<f64>() / len;
    let my = y.iter().sum::<f64>() / len;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateInput(
            "zero variance vector in correlation".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Parsing options for delimited text tables.
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Field delimiter; autodetected among comma, tab and semicolon if unset.
    pub delimiter: Option<u8>,
    /// Whether the first line is a header; autodetected if unset.
    pub header: Option<bool>,
    /// Whether the first field of each row is an item label; autodetected if unset.
    pub label_column: Option<bool>,
    /// Numeric code for absent cells, in addition to `NA` and empty fields.
    pub missing_code: Option<f64>,
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn is_numeric(s: &str) -> bool {
    s.parse::<f64>().map(f64::is_finite).unwrap_or(false)
}

pub fn detect_delimiter(text: &str) -> u8 {
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    (*b",\t;")
        .into_iter()
        .max_by_key(|&d| (line.bytes().filter(|&b| b == d).count(), d == b','))
        .unwrap_or(b',')
}

pub(crate) fn read_records(text: &str, delimiter: u8) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(records)
}

/// Reads a delimited text table.
pub fn load_table<R: Read>(mut source: R, opts: &LoadOptions) -> Result<DataTable> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let delimiter = opts.delimiter.unwrap_or_else(|| detect_delimiter(&text));
    let records = read_records(&text, delimiter)?;
    if records.is_empty() {
        return Err(Error::TooSmall { rows: 0, cols: 0 });
    }

    let header = opts
        .header
        .unwrap_or_else(|| records[0].iter().any(|f| !is_missing_token(f) && !is_numeric(f)));
    let body_start = usize::from(header);
    let labels = opts.label_column.unwrap_or_else(|| {
        records[body_start..]
            .iter()
            .any(|r| r.first().is_some_and(|f| !is_missing_token(f) && !is_numeric(f)))
    });
    let skip = usize::from(labels);

    let width = records[body_start..].first().map_or(0, Vec::len);
    let mut item_labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, rec) in records.iter().enumerate().skip(body_start) {
        if rec.len() != width {
            return Err(Error::Ragged {
                line: idx + 1,
                expected: width,
                found: rec.len(),
            });
        }
        if labels {
            item_labels.push(rec[0].clone());
        }
        let mut row = Vec::with_capacity(width.saturating_sub(skip));
        for (f, field) in rec.iter().enumerate().skip(skip) {
            if is_missing_token(field) {
                row.push(None);
                continue;
            }
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    field: f + 1,
                    token: field.clone(),
                })?;
            if opts.missing_code == Some(v) {
                row.push(None);
            } else {
                row.push(Some(v));
            }
        }
        rows.push(row);
    }

    let mut table = DataTable::from_rows(&rows)?;
    if labels {
        table = table.with_item_labels(item_labels)?;
    }
    if header {
        let h = &records[0];
        let names: Vec<String> = if h.len() == width {
            h[skip..].to_vec()
        } else if h.len() + skip == width {
            h.clone()
        } else {
            return Err(Error::Ragged {
                line: 1,
                expected: width,
                found: h.len(),
            });
        };
        table = table.with_participant_labels(names)?;
    }
    Ok(table)
}

/// Writes a table in the format [`load_table`] reads; absent cells are `NA`.
pub fn write_table<W: Write>(t: &DataTable, out: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    if let Some(names) = &t.participant_labels {
        let mut rec: Vec<&str> = Vec::with_capacity(t.n + 1);
        if t.item_labels.is_some() {
            rec.push("item");
        }
        rec.extend(names.iter().map(String::as_str));
        w.write_record(&rec)?;
    }
    let mut rec: Vec<String> = Vec::with_capacity(t.n + 1);
    for i in 0..t.m {
        rec.clear();
        if let Some(l) = &t.item_labels {
            rec.push(l[i].clone());
        }
        for j in 0..t.n {
            rec.push(match t.get(i, j) {
                Some(v) => format!("{v}"),
                None => "NA".to_owned(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
