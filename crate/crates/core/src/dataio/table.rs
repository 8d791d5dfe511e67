use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::hierarchy::LabelMatrix;
use crate::learner::FeatureMatrix;

/// Column layout of a delimited dataset file.
///
/// Without a header row, columns are addressed by their 0-based position
/// written as a decimal string (`"0"`, `"1"`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    /// Feature columns; empty means every column that is not a label column.
    pub feature_columns: Vec<String>,
    /// Label columns, shallow level first.
    pub label_columns: Vec<String>,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            feature_columns: Vec::new(),
            label_columns: Vec::new(),
            delimiter: b',',
            has_header: true,
        }
    }
}

impl DatasetSchema {
    pub fn with_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self {
            label_columns: labels.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(c) = self
            .feature_columns
            .iter()
            .find(|c| self.label_columns.contains(c))
        {
            return Err(Error::InvalidSchema(format!(
                "column {c:?} is both a feature and a label column"
            )));
        }
        Ok(())
    }
}

struct Table {
    headers: Vec<String>,
    records: Vec<StringRecord>,
}

impl Table {
    fn read(reader: impl Read, schema: &DatasetSchema) -> Result<Self> {
        let mut rdr = ReaderBuilder::new()
            .delimiter(schema.delimiter)
            .has_headers(schema.has_header)
            .from_reader(reader);
        let mut headers: Vec<String> = if schema.has_header {
            rdr.headers()?.iter().map(str::to_string).collect()
        } else {
            Vec::new()
        };
        let records = rdr.records().collect::<Result<Vec<_>, _>>()?;
        if !schema.has_header {
            let width = records.first().map_or(0, StringRecord::len);
            headers = (0..width).map(|i| i.to_string()).collect();
        }
        Ok(Self { headers, records })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn columns(&self, names: &[String]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.column(n)).collect()
    }

    fn feature_columns(&self, schema: &DatasetSchema) -> Result<Vec<usize>> {
        if schema.feature_columns.is_empty() {
            let labels = self.columns(&schema.label_columns)?;
            Ok((0..self.headers.len()).filter(|i| !labels.contains(i)).collect())
        } else {
            self.columns(&schema.feature_columns)
        }
    }

    fn label_columns(&self, schema: &DatasetSchema) -> Result<Vec<usize>> {
        if schema.label_columns.is_empty() {
            Ok((0..self.headers.len()).collect())
        } else {
            self.columns(&schema.label_columns)
        }
    }

    fn features(&self, cols: &[usize]) -> Result<FeatureMatrix> {
        let mut rows = Vec::with_capacity(self.records.len());
        for (r, rec) in self.records.iter().enumerate() {
            let row = cols
                .iter()
                .map(|&c| {
                    let cell = rec.get(c).unwrap_or("").trim();
                    cell.parse::<f64>().map_err(|e| Error::Parse {
                        row: r,
                        column: self.headers[c].clone(),
                        message: format!("{cell:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        FeatureMatrix::from_rows_with_width(&rows, cols.len())
    }

    fn labels(&self, cols: &[usize]) -> Result<LabelMatrix> {
        let rows = self
            .records
            .iter()
            .map(|rec| cols.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect())
            .collect();
        LabelMatrix::with_levels(rows, cols.len())
    }
}

fn open(path: &Path) -> Result<File> {
    Ok(File::open(path)?)
}

/// Reads features and labels from one file.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<(FeatureMatrix, LabelMatrix)> {
    schema.validate()?;
    if schema.label_columns.is_empty() {
        return Err(Error::InvalidSchema("no label columns given".into()));
    }
    let table = Table::read(open(path.as_ref())?, schema)?;
    let x = table.features(&table.feature_columns(schema)?)?;
    let y = table.labels(&table.label_columns(schema)?)?;
    Ok((x, y))
}

/// Reads only the feature columns; label columns, if listed, are skipped.
pub fn load_features(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<FeatureMatrix> {
    schema.validate()?;
    let table = Table::read(open(path.as_ref())?, schema)?;
    let cols = if schema.feature_columns.is_empty() {
        // listed label columns need not be present in a feature-only file
        let labels: Vec<usize> = schema
            .label_columns
            .iter()
            .filter_map(|n| table.column(n).ok())
            .collect();
        (0..table.headers.len()).filter(|i| !labels.contains(i)).collect()
    } else {
        table.feature_columns(schema)?
    };
    table.features(&cols)
}

/// Reads only the label columns; with none listed, every column is a label column.
pub fn load_labels(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<LabelMatrix> {
    schema.validate()?;
    let table = Table::read(open(path.as_ref())?, schema)?;
    table.labels(&table.label_columns(schema)?)
}

/// Writes a label (or prediction) matrix with a header row.
pub fn write_labels<W: Write>(out: W, headers: &[String], labels: &LabelMatrix, delimiter: u8) -> Result<()> {
    if headers.len() != labels.n_levels() {
        return Err(Error::InvalidSchema(format!(
            "{} header names for {} label levels",
            headers.len(),
            labels.n_levels()
        )));
    }
    let mut w = WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(headers)?;
    for row in labels.rows() {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes features followed by labels. Features use the shortest decimal
/// form that reads back to the same `f64`.
pub fn write_dataset<W: Write>(
    out: W,
    feature_names: &[String],
    x: &FeatureMatrix,
    label_names: &[String],
    y: &LabelMatrix,
    delimiter: u8,
) -> Result<()> {
    if feature_names.len() != x.n_features() || label_names.len() != y.n_levels() {
        return Err(Error::InvalidSchema("column names do not match matrix widths".into()));
    }
    if x.n_samples() != y.n_samples() {
        return Err(Error::Alignment {
            left: x.n_samples(),
            right: y.n_samples(),
        });
    }
    let mut w = WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(feature_names.iter().chain(label_names))?;
    for i in 0..x.n_samples() {
        let mut record: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        record.extend(y.row(i).iter().cloned());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
