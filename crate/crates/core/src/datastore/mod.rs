//! Provider-side tables over the shared hospital schema: CSV ingestion,
//! query matching and synthetic data.

mod query;
mod schema;
mod synthetic;
mod table;

pub use query::{match_query, Predicate, Query};
pub use schema::{Column, ColumnKind, Schema};
pub use synthetic::{gen_synthetic, ColumnDist, SyntheticSpec};
pub use table::{load_csv, Cell, Record, Table};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("column {0} is not numeric")]
    NotNumeric(String),
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("cannot parse {value:?} in row {row}, column {column}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cell in column {column} does not fit the column kind")]
    CellKind { row: usize, column: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

/// The two hospital tables shipped with the crate.
pub mod fixtures {
    use super::{Schema, Table};

    pub const HOSPITAL_A_CSV: &str = include_str!("../../fixtures/hospital_a.csv");
    pub const HOSPITAL_B_CSV: &str = include_str!("../../fixtures/hospital_b.csv");

    /// Ten patient records with person ids.
    pub fn hospital_a() -> Table {
        Table::from_csv_str(HOSPITAL_A_CSV, &Schema::hospital()).expect("bundled fixture")
    }

    /// Ten patient records with the personid column left blank.
    pub fn hospital_b() -> Table {
        Table::from_csv_str(HOSPITAL_B_CSV, &Schema::hospital()).expect("bundled fixture")
    }
}
