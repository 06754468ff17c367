//! Incomplete numeric tables: storage, response indicators, column role
//! classification, and CSV ingestion/emission.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An n-row numeric table where individual cells may be missing.
///
/// Storage is column-major. Missing cells hold NaN and are flagged false
/// in the mask; observed cells are always finite.
#[derive(Debug, Clone)]
pub struct IncompleteMatrix {
    names: Vec<String>,
    // cols[j][i] is the value in row i, column j; NaN where masked off.
    cols: Vec<Vec<f64>>,
    // mask[j][i] is true when cell (i, j) is observed.
    mask: Vec<Vec<bool>>,
}

// Masked cells carry no value, so equality compares the mask and the
// observed cells only.
impl PartialEq for IncompleteMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.mask == other.mask
            && self
                .cols
                .iter()
                .zip(&other.cols)
                .zip(&self.mask)
                .all(|((a, b), m)| {
                    a.iter()
                        .zip(b)
                        .zip(m)
                        .all(|((x, y), &obs)| !obs || x == y)
                })
    }
}

impl IncompleteMatrix {
    /// Build from column-major values and an observation mask.
    ///
    /// Masked-off cells are overwritten with NaN so that deleted values
    /// cannot leak into downstream computations.
    pub fn new(names: Vec<String>, mut cols: Vec<Vec<f64>>, mask: Vec<Vec<bool>>) -> Result<Self> {
        if names.is_empty() || names.len() != cols.len() || cols.len() != mask.len() {
            return Err(Error::InvalidArgument(
                "names, columns and mask must have the same nonzero length".into(),
            ));
        }
        let n = cols[0].len();
        for (j, (col, m)) in cols.iter_mut().zip(&mask).enumerate() {
            if col.len() != n || m.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "column {} has inconsistent length",
                    names[j]
                )));
            }
            for (i, (v, &obs)) in col.iter_mut().zip(m).enumerate() {
                if obs {
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            context: format!("row {}, column {}", i + 1, names[j]),
                        });
                    }
                } else {
                    *v = f64::NAN;
                }
            }
        }
        Ok(IncompleteMatrix { names, cols, mask })
    }

    /// Build a fully observed matrix from column-major values.
    pub fn from_complete(names: Vec<String>, cols: Vec<Vec<f64>>) -> Result<Self> {
        let mask = cols.iter().map(|c| vec![true; c.len()]).collect();
        Self::new(names, cols, mask)
    }

    pub fn n_rows(&self) -> usize {
        self.cols[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Raw column values; missing cells are NaN.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn mask_col(&self, j: usize) -> &[bool] {
        &self.mask[j]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[col][row]
    }

    /// Observed value at (row, col), or None when missing.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.mask[col][row].then(|| self.cols[col][row])
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.mask[col].iter().filter(|&&obs| !obs).count()
    }

    /// Index of the first row with no observed cell, if any.
    pub fn fully_missing_row(&self) -> Option<usize> {
        (0..self.n_rows()).find(|&i| (0..self.n_cols()).all(|j| !self.mask[j][i]))
    }

    /// Copy with the given rows removed.
    pub fn drop_rows(&self, drop: &[usize]) -> IncompleteMatrix {
        let keep: Vec<usize> = (0..self.n_rows()).filter(|i| !drop.contains(i)).collect();
        let cols = self
            .cols
            .iter()
            .map(|c| keep.iter().map(|&i| c[i]).collect())
            .collect();
        let mask = self
            .mask
            .iter()
            .map(|m| keep.iter().map(|&i| m[i]).collect())
            .collect();
        IncompleteMatrix {
            names: self.names.clone(),
            cols,
            mask,
        }
    }
}

/// Partition of columns into fully observed ("X") and incomplete ("Y").
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRoles {
    x_indices: Vec<usize>,
    y_indices: Vec<usize>,
}

impl ColumnRoles {
    pub fn x_indices(&self) -> &[usize] {
        &self.x_indices
    }

    pub fn y_indices(&self) -> &[usize] {
        &self.y_indices
    }

    /// Number of fully observed columns.
    pub fn p(&self) -> usize {
        self.x_indices.len()
    }

    /// Number of incomplete columns.
    pub fn q(&self) -> usize {
        self.y_indices.len()
    }

    // Roles must partition the columns of the matrix they are used with.
    pub(crate) fn check_against(&self, m: &IncompleteMatrix) -> Result<()> {
        let mut seen = vec![false; m.n_cols()];
        for &j in self.x_indices.iter().chain(&self.y_indices) {
            if j >= m.n_cols() || seen[j] {
                return Err(Error::InvalidArgument(
                    "column roles do not match the matrix".into(),
                ));
            }
            seen[j] = true;
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "column roles do not cover every column".into(),
            ))
        }
    }
}

/// Classify each column by its realized missingness: columns without any
/// missing cell are X, all others are Y.
pub fn classify_columns(m: &IncompleteMatrix) -> ColumnRoles {
    classify_with_forced_y(m, &[]).expect("no forced columns")
}

/// Like [`classify_columns`], but the listed columns are forced into the
/// incomplete group regardless of realized holes.
pub fn classify_with_forced_y(m: &IncompleteMatrix, forced_y: &[usize]) -> Result<ColumnRoles> {
    for &j in forced_y {
        if j >= m.n_cols() {
            return Err(Error::InvalidArgument(format!(
                "forced Y column index {j} out of range (matrix has {} columns)",
                m.n_cols()
            )));
        }
    }
    let mut x_indices = Vec::new();
    let mut y_indices = Vec::new();
    for j in 0..m.n_cols() {
        if forced_y.contains(&j) || m.missing_count(j) > 0 {
            y_indices.push(j);
        } else {
            x_indices.push(j);
        }
    }
    Ok(ColumnRoles {
        x_indices,
        y_indices,
    })
}

/// Response indicators for the incomplete columns: one 0/1 column per
/// Y column, in the order of `roles.y_indices()`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    cols: Vec<Vec<f64>>,
}

impl IndicatorMatrix {
    pub fn q(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, v: usize) -> &[f64] {
        &self.cols[v]
    }

    /// Number of observed cells in indicator column v.
    pub fn observed_count(&self, v: usize) -> usize {
        self.cols[v].iter().filter(|&&r| r > 0.5).count()
    }
}

/// Indicator matrix R, with `R[i][v] = 1` exactly when cell (i, y_v) is observed.
pub fn indicators(m: &IncompleteMatrix, roles: &ColumnRoles) -> IndicatorMatrix {
    let cols = roles
        .y_indices()
        .iter()
        .map(|&j| {
            m.mask_col(j)
                .iter()
                .map(|&obs| if obs { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    IndicatorMatrix { cols }
}

/// Zero-filled copy of the data: Y columns carry their observed values
/// with missing cells replaced by 0, X columns pass through unchanged.
///
/// Returned column-major, in the original column order.
pub fn zero_fill(m: &IncompleteMatrix, roles: &ColumnRoles) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..m.n_cols()).map(|j| m.col(j).to_vec()).collect();
    for &j in roles.y_indices() {
        for (v, &obs) in out[j].iter_mut().zip(m.mask_col(j)) {
            if !obs {
                *v = 0.0;
            }
        }
    }
    out
}

/// Read an incomplete matrix from a CSV file with a mandatory header row.
///
/// Fields equal to `na_marker` (or empty) are treated as missing; all
/// other fields must parse as finite numbers.
pub fn read_csv(path: impl AsRef<Path>, na_marker: &str) -> Result<IncompleteMatrix> {
    let file = File::open(path)?;
    read_csv_from(BufReader::new(file), na_marker)
}

/// Same as [`read_csv`] over any reader.
pub fn read_csv_from<R: Read>(reader: R, na_marker: &str) -> Result<IncompleteMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::CsvFormat(e.to_string()))?
        .clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::CsvFormat("empty header row".into()));
    }

    let ncols = names.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); ncols];
    let mut mask: Vec<Vec<bool>> = vec![Vec::new(); ncols];

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1; // 1-based data row
        let record = record.map_err(|e| Error::CsvFormat(format!("row {row}: {e}")))?;
        if record.len() != ncols {
            return Err(Error::CsvFormat(format!(
                "row {row}: expected {ncols} fields, got {}",
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() || field == na_marker {
                cols[j].push(f64::NAN);
                mask[j].push(false);
            } else {
                let value: f64 = field.parse().map_err(|_| Error::CsvParse {
                    row,
                    column: names[j].clone(),
                    message: format!("cannot parse {field:?} as a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::CsvParse {
                        row,
                        column: names[j].clone(),
                        message: format!("non-finite value {field:?}"),
                    });
                }
                cols[j].push(value);
                mask[j].push(true);
            }
        }
    }

    IncompleteMatrix::new(names, cols, mask)
}

/// Write a matrix as CSV, emitting `na_marker` for missing cells.
///
/// Observed values are printed with Rust's shortest round-trip formatting,
/// so reading the file back reproduces them bit for bit.
pub fn write_csv(m: &IncompleteMatrix, path: impl AsRef<Path>, na_marker: &str) -> Result<()> {
    let file = File::create(path)?;
    write_csv_to(m, BufWriter::new(file), na_marker)
}

/// Same as [`write_csv`] onto any writer.
pub fn write_csv_to<W: Write>(m: &IncompleteMatrix, mut w: W, na_marker: &str) -> Result<()> {
    writeln!(w, "{}", m.names().join(","))?;
    for i in 0..m.n_rows() {
        let mut line = String::new();
        for j in 0..m.n_cols() {
            if j > 0 {
                line.push(',');
            }
            match m.value(i, j) {
                Some(v) => line.push_str(&format!("{v}")),
                None => line.push_str(na_marker),
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
