use serde::{Deserialize, Serialize};

use super::DataError;

/// How a column's cells are typed and treated by perturbation and queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    /// Direct identifiers such as serial numbers or person ids. Stored as text.
    Identifier,
    /// Real-valued columns. The only kind that may receive additive noise.
    Numeric,
    /// Free-text categories (disease names, medicines).
    Categorical,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Numeric)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered list of uniquely named columns shared by every provider.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Column>", into = "Vec<Column>")]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Self { columns })
    }

    /// The hospital record layout every provider maintains:
    /// `sno, personid, zipcode, diseasename, age, medicine`.
    pub fn hospital() -> Self {
        use ColumnKind::*;
        Self {
            columns: vec![
                Column::new("sno", Identifier),
                Column::new("personid", Identifier),
                Column::new("zipcode", Numeric),
                Column::new("diseasename", Categorical),
                Column::new("age", Numeric),
                Column::new("medicine", Categorical),
            ],
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Sub-schema with the named columns, kept in this schema's order.
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Result<Schema, DataError> {
        for n in names {
            if self.index_of(n.as_ref()).is_none() {
                return Err(DataError::UnknownColumn(n.as_ref().to_string()));
            }
        }
        Ok(Schema {
            columns: self
                .columns
                .iter()
                .filter(|c| names.iter().any(|n| n.as_ref() == c.name))
                .cloned()
                .collect(),
        })
    }
}

impl TryFrom<Vec<Column>> for Schema {
    type Error = DataError;

    fn try_from(columns: Vec<Column>) -> Result<Self, Self::Error> {
        Schema::new(columns)
    }
}

impl From<Schema> for Vec<Column> {
    fn from(s: Schema) -> Self {
        s.columns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hospital_schema_layout() {
        let s = Schema::hospital();
        let names: Vec<_> = s.names().collect();
        assert_eq!(
            names,
            ["sno", "personid", "zipcode", "diseasename", "age", "medicine"]
        );
        assert_eq!(s.column("age").unwrap().kind, ColumnKind::Numeric);
        assert_eq!(s.column("personid").unwrap().kind, ColumnKind::Identifier);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = Schema::new(vec![
            Column::new("a", ColumnKind::Numeric),
            Column::new("a", ColumnKind::Categorical),
        ])
        .unwrap_err();
        assert!(matches!(err, DataError::DuplicateColumn(n) if n == "a"));
    }

    #[test]
    fn projection_keeps_schema_order() {
        let p = Schema::hospital().project(&["age", "sno"]).unwrap();
        assert_eq!(p.names().collect::<Vec<_>>(), ["sno", "age"]);
        assert!(Schema::hospital().project(&["blood"]).is_err());
    }
}
