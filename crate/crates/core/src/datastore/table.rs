use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use super::schema::{ColumnKind, Schema};
use super::DataError;

/// A single typed cell. Numeric columns hold reals, everything else text.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Number(f64),
}

impl Cell {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            Cell::Number(_) => None,
        }
    }

    fn matches_kind(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Cell::Number(v), ColumnKind::Numeric) if v.is_finite()
        ) || matches!(
            (self, kind),
            (Cell::Text(_), ColumnKind::Identifier | ColumnKind::Categorical)
        )
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            // Shortest representation that parses back to the same f64.
            Cell::Number(v) => write!(f, "{v}"),
        }
    }
}

pub type Record = Vec<Cell>;

/// Rows of typed cells conforming to a schema. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Vec<Record>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Record>) -> Result<Self, DataError> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(DataError::RowWidth {
                    row: r,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (cell, col) in row.iter().zip(schema.columns()) {
                if !cell.matches_kind(col.kind) {
                    return Err(DataError::CellKind {
                        row: r,
                        column: col.name.clone(),
                    });
                }
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<Record> {
        self.rows
    }

    /// Values of one numeric column, in row order.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>, DataError> {
        let idx = self
            .schema
            .index_of(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
        if !self.schema.columns()[idx].kind.is_numeric() {
            return Err(DataError::NotNumeric(name.to_string()));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r[idx].as_number().expect("numeric invariant"))
            .collect())
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let idx = self.schema.index_of(column)?;
        self.rows.get(row).map(|r| &r[idx])
    }

    /// Keep only the named columns (schema order).
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Result<Table, DataError> {
        let schema = self.schema.project(names)?;
        let idx: Vec<usize> = schema
            .names()
            .map(|n| self.schema.index_of(n).expect("projected from self"))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect();
        Ok(Table { schema, rows })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(self.schema.names())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    /// Parse CSV whose header equals `schema`'s column names in order.
    pub fn read_csv<R: Read>(input: R, schema: &Schema) -> Result<Table, DataError> {
        let (header, records) = read_records(input)?;
        let expected: Vec<&str> = schema.names().collect();
        if header != expected {
            return Err(DataError::HeaderMismatch {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: header,
            });
        }
        Self::from_raw(schema.clone(), records)
    }

    /// Parse CSV whose header names any subset of `shared` in shared order.
    /// Used for result tables, which arrive projected and with suppressed
    /// columns removed.
    pub fn read_csv_subset<R: Read>(input: R, shared: &Schema) -> Result<Table, DataError> {
        let (header, records) = read_records(input)?;
        let schema = shared.project(&header)?;
        if schema.names().ne(header.iter().map(String::as_str)) {
            return Err(DataError::HeaderMismatch {
                expected: schema.names().map(str::to_string).collect(),
                found: header,
            });
        }
        Self::from_raw(schema, records)
    }

    fn from_raw(schema: Schema, records: Vec<csv::StringRecord>) -> Result<Table, DataError> {
        let mut rows = Vec::with_capacity(records.len());
        for (r, rec) in records.iter().enumerate() {
            if rec.len() != schema.len() {
                return Err(DataError::RowWidth {
                    row: r,
                    expected: schema.len(),
                    found: rec.len(),
                });
            }
            let mut row = Vec::with_capacity(schema.len());
            for (raw, col) in rec.iter().zip(schema.columns()) {
                row.push(match col.kind {
                    ColumnKind::Numeric => match raw.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => Cell::Number(v),
                        _ => {
                            return Err(DataError::Parse {
                                row: r,
                                column: col.name.clone(),
                                value: raw.to_string(),
                            })
                        }
                    },
                    _ => Cell::Text(raw.to_string()),
                });
            }
            rows.push(row);
        }
        Ok(Table { schema, rows })
    }

    pub fn from_csv_str(text: &str, schema: &Schema) -> Result<Table, DataError> {
        Self::read_csv(text.as_bytes(), schema)
    }
}

fn read_records<R: Read>(input: R) -> Result<(Vec<String>, Vec<csv::StringRecord>), DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records = rdr.records().collect::<Result<Vec<_>, _>>()?;
    Ok((header, records))
}

/// Load a provider table from disk.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Table, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Table::read_csv(file, schema)
}
