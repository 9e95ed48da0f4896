use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, Schema};
use super::table::{Cell, Table};
use super::DataError;

/// Single-column predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Predicate {
    /// Exact match. Compared numerically on numeric columns.
    Eq { value: String },
    /// Inclusive numeric range.
    Range { low: f64, high: f64 },
    /// Matches every row.
    Any,
}

/// A client query: one predicate plus an optional projection. Without a
/// projection every column is requested; the provider's policy still
/// removes suppressed columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub column: String,
    #[serde(flatten)]
    pub predicate: Predicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<String>>,
}

impl Query {
    pub fn any(column: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            predicate: Predicate::Any,
            projection: None,
        }
    }

    pub fn eq(column: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            predicate: Predicate::Eq {
                value: value.into(),
            },
            projection: None,
        }
    }

    pub fn range(column: impl Into<String>, low: f64, high: f64) -> Self {
        Self {
            column: column.into(),
            predicate: Predicate::Range { low, high },
            projection: None,
        }
    }

    pub fn with_projection<S: Into<String>>(mut self, cols: impl IntoIterator<Item = S>) -> Self {
        self.projection = Some(cols.into_iter().map(Into::into).collect());
        self
    }

    pub fn validate(&self, schema: &Schema) -> Result<(), DataError> {
        let col = schema
            .column(&self.column)
            .ok_or_else(|| DataError::UnknownColumn(self.column.clone()))?;
        match &self.predicate {
            Predicate::Any => {}
            Predicate::Eq { value } => {
                if col.kind == ColumnKind::Numeric && value.trim().parse::<f64>().is_err() {
                    return Err(DataError::InvalidQuery(format!(
                        "{} is numeric but {value:?} is not a number",
                        col.name
                    )));
                }
            }
            Predicate::Range { low, high } => {
                if col.kind != ColumnKind::Numeric {
                    return Err(DataError::InvalidQuery(format!(
                        "range on non-numeric column {}",
                        col.name
                    )));
                }
                if !low.partial_cmp(high).is_some_and(|o| o.is_le()) {
                    return Err(DataError::InvalidQuery(format!(
                        "range low {low} exceeds high {high}"
                    )));
                }
            }
        }
        if let Some(p) = &self.projection {
            schema.project(p)?;
        }
        Ok(())
    }

    fn matches(&self, cell: &Cell) -> bool {
        match (&self.predicate, cell) {
            (Predicate::Any, _) => true,
            (Predicate::Eq { value }, Cell::Text(s)) => s == value,
            (Predicate::Eq { value }, Cell::Number(v)) => {
                value.trim().parse::<f64>().is_ok_and(|q| q == *v)
            }
            (Predicate::Range { low, high }, Cell::Number(v)) => low <= v && v <= high,
            (Predicate::Range { .. }, Cell::Text(_)) => false,
        }
    }
}

/// Rows of `table` satisfying the query, projected to the requested columns.
pub fn match_query(table: &Table, query: &Query) -> Result<Table, DataError> {
    query.validate(table.schema())?;
    let idx = table
        .schema()
        .index_of(&query.column)
        .expect("validated above");
    let rows = table
        .rows()
        .iter()
        .filter(|r| query.matches(&r[idx]))
        .cloned()
        .collect();
    let selected = Table::new(table.schema().clone(), rows)?;
    match &query.projection {
        Some(p) => selected.project(p),
        None => Ok(selected),
    }
}
