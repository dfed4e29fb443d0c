use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::LabeledSample;
use crate::{Error, Result};

/// Which CSV column holds the group label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Parses a column spec: a bare non-negative integer is an index, anything
    /// else is a header name.
    pub fn parse(spec: &str) -> LabelColumn {
        match spec.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.to_string()),
        }
    }
}

/// Reads a header-first CSV with one row per observation.
///
/// Lines starting with `#` are comments. The label column must hold exactly
/// two distinct values; group 1 is `positive` when given, otherwise the
/// lexicographically smaller value. Every other column must be numeric and
/// finite. Each group needs at least two rows.
pub fn load_csv(path: &Path, label: &LabelColumn, positive: Option<&str>) -> Result<LabeledSample> {
    let file = File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label {
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("label column '{name}' not found")))?,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::invalid(format!("label column index {i} out of range ({} columns)", headers.len())))
        }
    };
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(Error::invalid("no feature columns"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::invalid(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::invalid(format!("non-numeric value '{cell}' at row {}, column '{}'", row + 1, headers[col]))
            })?;
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value '{cell}' at row {}, column '{}'",
                    row + 1,
                    headers[col]
                )));
            }
            values.push(v);
        }
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::invalid(format!("more than two groups in label column ({} values)", distinct.len())));
    }
    if distinct.len() < 2 {
        return Err(Error::invalid("label column must contain two groups"));
    }
    let mut it = distinct.iter();
    let (first, second) = (*it.next().unwrap(), *it.next().unwrap());
    let group1 = match positive {
        Some(p) if p == first || p == second => p,
        Some(p) => return Err(Error::invalid(format!("positive label '{p}' not present"))),
        None => first,
    };
    let group0 = if group1 == first { second } else { first };
    let labels: Vec<u8> = raw_labels.iter().map(|l| u8::from(l == group1)).collect();
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 < 2 || n0 < 2 {
        return Err(Error::invalid(format!("each group needs at least 2 rows (got {n1} and {n0})")));
    }
    let points = Array2::from_shape_vec((labels.len(), dim), values).expect("row lengths checked");
    Ok(LabeledSample::new(points, labels)?.with_label_names(group1.to_string(), group0.to_string()))
}

/// Writes a sample as CSV: `#` comment lines, a header `x1..xD,<label>`, then
/// one row per observation. Values use the shortest round-trip formatting.
pub fn write_csv(sample: &LabeledSample, path: &Path, comments: &[String], label_name: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut header: Vec<String> = (1..=sample.dim()).map(|j| format!("x{j}")).collect();
    header.push(label_name.to_string());
    writeln!(out, "{}", header.join(","))?;
    for (row, &l) in sample.points().rows().into_iter().zip(sample.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        fields.push(sample.label_name(l));
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}
