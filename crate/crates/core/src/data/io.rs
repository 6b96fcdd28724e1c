use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// `<label> <index>:<value> ...` with 1-based ascending indices.
    SparseText,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" | "svm" | "sparse-svm-text" | "libsvm" => Ok(Format::SparseText),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidInput(format!("unknown format `{other}`"))),
        }
    }
}

/// Rows as read from disk; labels are present only when the file carries them.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<f64>,
    pub n_features: usize,
    pub labels: Option<Vec<i8>>,
}

impl Samples {
    pub fn len(&self) -> usize {
        if self.n_features == 0 {
            self.labels.as_ref().map_or(0, Vec::len)
        } else {
            self.points.len() / self.n_features
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_features..(i + 1) * self.n_features]
    }
}

/// Loads a labeled dataset. Labels other than ±1 are mapped in lexicographic
/// order, the smaller one to -1.
pub fn load_dataset(path: &Path, format: Format, label_column: Option<usize>) -> Result<Dataset> {
    let samples = load_samples(path, format, label_column)?;
    let labels = samples
        .labels
        .ok_or_else(|| Error::Domain(format!("{}: no labels", path.display())))?;
    Dataset::new(samples.points, labels, samples.n_features)
}

pub fn load_samples(path: &Path, format: Format, label_column: Option<usize>) -> Result<Samples> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let raw = match format {
        Format::SparseText => read_sparse(reader)?,
        Format::Csv => read_csv(reader, label_column)?,
    };
    if raw.rows.is_empty() {
        return Err(Error::Domain(format!("{}: no rows", path.display())));
    }
    raw.into_samples()
}

struct RawTable {
    rows: Vec<Vec<(usize, f64)>>,
    n_features: usize,
    labels: Vec<Option<String>>,
}

impl RawTable {
    fn into_samples(self) -> Result<Samples> {
        let d = self.n_features;
        let mut points = vec![0.0; self.rows.len() * d];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                points[i * d + j] = v;
            }
        }
        let labels = if self.labels.iter().all(Option::is_none) {
            None
        } else {
            let raw: Vec<String> = self
                .labels
                .into_iter()
                .enumerate()
                .map(|(i, l)| {
                    l.ok_or(Error::Parse {
                        line: i + 1,
                        msg: "missing label".into(),
                    })
                })
                .collect::<Result<_>>()?;
            Some(map_labels(&raw)?)
        };
        Ok(Samples {
            points,
            n_features: d,
            labels,
        })
    }
}

fn map_labels(raw: &[String]) -> Result<Vec<i8>> {
    let as_sign = |s: &str| match s.parse::<f64>() {
        Ok(v) if v == 1.0 => Some(1i8),
        Ok(v) if v == -1.0 => Some(-1i8),
        _ => None,
    };
    if raw.iter().all(|s| as_sign(s).is_some()) {
        return Ok(raw.iter().map(|s| as_sign(s).unwrap()).collect());
    }
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::Domain(format!(
            "expected two classes, found {} distinct labels",
            distinct.len()
        )));
    }
    let smallest = *distinct.iter().next().unwrap();
    Ok(raw
        .iter()
        .map(|s| if s == smallest { -1 } else { 1 })
        .collect())
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value `{token}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value `{token}`"),
        });
    }
    Ok(v)
}

fn read_sparse(reader: impl BufRead) -> Result<RawTable> {
    let mut table = RawTable {
        rows: Vec::new(),
        n_features: 0,
        labels: Vec::new(),
    };
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace().peekable();
        let label = match tokens.peek() {
            Some(t) if !t.contains(':') => tokens.next().map(str::to_owned),
            _ => None,
        };
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index `{idx}`"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("indices must be 1-based and ascending (got {idx} after {last})"),
                });
            }
            last = idx;
            row.push((idx - 1, parse_value(val, lineno)?));
        }
        table.n_features = table.n_features.max(last);
        table.rows.push(row);
        table.labels.push(label);
    }
    Ok(table)
}

/// Number of fields in the first record of a CSV file.
pub fn csv_columns(path: &Path) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(file));
    match rdr.records().next() {
        Some(r) => Ok(r.map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.len()),
        None => Err(Error::InvalidInput(format!("{}: empty file", path.display()))),
    }
}

fn read_csv(reader: impl BufRead, label_column: Option<usize>) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut table = RawTable {
        rows: Vec::new(),
        n_features: 0,
        labels: Vec::new(),
    };
    for (i, record) in rdr.records().enumerate() {
        let lineno = i + 1;
        let record = record.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if let Some(c) = label_column {
            if c >= record.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("label column {c} out of range"),
                });
            }
        }
        let features = || {
            record
                .iter()
                .enumerate()
                .filter(|&(j, _)| Some(j) != label_column)
                .map(|(_, f)| f)
        };
        // a non-numeric first row is a header
        if i == 0 && features().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let row = features()
            .enumerate()
            .map(|(j, f)| parse_value(f, lineno).map(|v| (j, v)))
            .collect::<Result<Vec<_>>>()?;
        table.n_features = row.len();
        table.rows.push(row);
        table.labels.push(label_column.map(|c| record[c].to_owned()));
    }
    Ok(table)
}

/// Writes `ds` in the sparse text format. Values are printed in shortest
/// round-trip form, so reading the file back reproduces them bit for bit.
pub fn write_sparse(ds: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    for (i, row) in ds.rows().enumerate() {
        write!(out, "{}", if ds.label(i) > 0 { "+1" } else { "-1" })?;
        for (j, v) in row.iter().enumerate() {
            if v.to_bits() != 0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_sparse(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_sparse(ds, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
