use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, Schema};
use super::table::{Cell, Table};
use super::DataError;

/// Generator for one column of a synthetic table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ColumnDist {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    UniformInt { low: i64, high: i64 },
    Gaussian { mean: f64, std_dev: f64 },
    /// Text: `prefix` followed by the 1-based row number.
    Sequence { prefix: String },
    /// Text: one of `values`, uniformly.
    Choice { values: Vec<String> },
    /// Text: looked up from an earlier column's value; unknown keys give "".
    Lookup {
        key: String,
        map: BTreeMap<String, String>,
    },
    Blank,
}

impl ColumnDist {
    fn is_numeric(&self) -> bool {
        matches!(
            self,
            ColumnDist::Constant { .. }
                | ColumnDist::Uniform { .. }
                | ColumnDist::UniformInt { .. }
                | ColumnDist::Gaussian { .. }
        )
    }
}

/// Column name → generator. Every schema column needs an entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub columns: BTreeMap<String, ColumnDist>,
}

const CONDITIONS: &[(&str, &str)] = &[
    ("Swine flu", "Tami flu"),
    ("Diabetis", "Glycheck"),
    ("Epistaxis", "Nasivion"),
    ("Otitis externa", "Betnor eye-ear drops"),
    ("Acute conjunctivitis", "Ciprocent"),
    ("Urticaria", "Benadryl softgel"),
    ("Hayfever", "Foristal"),
    ("Chicken pox", "Daivonex"),
    ("Dandruff", "Tetmosol soap"),
    ("Constipation", "Cremaffin"),
];

impl SyntheticSpec {
    /// Hospital-shaped records: sequential ids, six-digit zipcodes, ages
    /// uniform on 18..=90, and matching disease/medicine pairs.
    pub fn hospital() -> Self {
        let mut columns = BTreeMap::new();
        columns.insert("sno".into(), ColumnDist::Sequence { prefix: "g".into() });
        columns.insert(
            "personid".into(),
            ColumnDist::Sequence { prefix: "q".into() },
        );
        columns.insert(
            "zipcode".into(),
            ColumnDist::UniformInt {
                low: 500_000,
                high: 599_999,
            },
        );
        columns.insert(
            "diseasename".into(),
            ColumnDist::Choice {
                values: CONDITIONS.iter().map(|(d, _)| d.to_string()).collect(),
            },
        );
        columns.insert("age".into(), ColumnDist::UniformInt { low: 18, high: 90 });
        columns.insert(
            "medicine".into(),
            ColumnDist::Lookup {
                key: "diseasename".into(),
                map: CONDITIONS
                    .iter()
                    .map(|(d, m)| (d.to_string(), m.to_string()))
                    .collect(),
            },
        );
        Self { columns }
    }

    /// Override one column's generator.
    pub fn with(mut self, column: &str, dist: ColumnDist) -> Self {
        self.columns.insert(column.to_string(), dist);
        self
    }
}

/// `n` schema-conformant rows drawn from `spec`, deterministic in `seed`.
pub fn gen_synthetic(
    n: usize,
    seed: u64,
    schema: &Schema,
    spec: &SyntheticSpec,
) -> Result<Table, DataError> {
    let mut plan = Vec::with_capacity(schema.len());
    for (i, col) in schema.columns().iter().enumerate() {
        let dist = spec
            .columns
            .get(&col.name)
            .ok_or_else(|| DataError::InvalidSynthetic(format!("no generator for {}", col.name)))?;
        if dist.is_numeric() != (col.kind == ColumnKind::Numeric) {
            return Err(DataError::InvalidSynthetic(format!(
                "generator kind does not fit column {}",
                col.name
            )));
        }
        let lookup_key = match dist {
            ColumnDist::Lookup { key, .. } => {
                let k = schema.index_of(key).filter(|&k| k < i).ok_or_else(|| {
                    DataError::InvalidSynthetic(format!(
                        "lookup key {key} must be an earlier column than {}",
                        col.name
                    ))
                })?;
                Some(k)
            }
            _ => None,
        };
        let normal = match dist {
            ColumnDist::Gaussian { mean, std_dev } => Some(
                Normal::new(*mean, *std_dev)
                    .map_err(|e| DataError::InvalidSynthetic(e.to_string()))?,
            ),
            ColumnDist::Uniform { low, high } if !low.partial_cmp(high).is_some_and(|o| o.is_le()) => {
                return Err(DataError::InvalidSynthetic(format!("empty range on {}", col.name)))
            }
            ColumnDist::UniformInt { low, high } if low > high => {
                return Err(DataError::InvalidSynthetic(format!("empty range on {}", col.name)))
            }
            ColumnDist::Choice { values } if values.is_empty() => {
                return Err(DataError::InvalidSynthetic(format!("no choices for {}", col.name)))
            }
            _ => None,
        };
        plan.push((dist, lookup_key, normal));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let mut row: Vec<Cell> = Vec::with_capacity(plan.len());
        for (dist, lookup_key, normal) in &plan {
            let cell = match dist {
                ColumnDist::Constant { value } => Cell::Number(*value),
                ColumnDist::Uniform { low, high } => Cell::Number(if low == high {
                    *low
                } else {
                    rng.gen_range(*low..*high)
                }),
                ColumnDist::UniformInt { low, high } => {
                    Cell::Number(rng.gen_range(*low..=*high) as f64)
                }
                ColumnDist::Gaussian { .. } => {
                    Cell::Number(normal.as_ref().expect("built above").sample(&mut rng))
                }
                ColumnDist::Sequence { prefix } => Cell::Text(format!("{prefix}{}", r + 1)),
                ColumnDist::Choice { values } => {
                    Cell::Text(values.choose(&mut rng).expect("non-empty").clone())
                }
                ColumnDist::Lookup { map, .. } => {
                    let key = row[lookup_key.expect("lookup")].to_string();
                    Cell::Text(map.get(&key).cloned().unwrap_or_default())
                }
                ColumnDist::Blank => Cell::Text(String::new()),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Table::new(schema.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rows() {
        let t = gen_synthetic(0, 1, &Schema::hospital(), &SyntheticSpec::hospital()).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.schema(), &Schema::hospital());
    }

    #[test]
    fn constant_age() {
        let spec = SyntheticSpec::hospital().with("age", ColumnDist::Constant { value: 50.0 });
        let t = gen_synthetic(10_000, 3, &Schema::hospital(), &spec).unwrap();
        assert_eq!(t.len(), 10_000);
        assert!(t.numeric_column("age").unwrap().iter().all(|&a| a == 50.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSpec::hospital();
        let a = gen_synthetic(200, 9, &Schema::hospital(), &spec).unwrap();
        let b = gen_synthetic(200, 9, &Schema::hospital(), &spec).unwrap();
        let c = gen_synthetic(200, 10, &Schema::hospital(), &spec).unwrap();
        assert_eq!(a.to_csv_bytes(), b.to_csv_bytes());
        assert_ne!(a.to_csv_bytes(), c.to_csv_bytes());
    }

    #[test]
    fn medicine_follows_disease() {
        let t = gen_synthetic(50, 4, &Schema::hospital(), &SyntheticSpec::hospital()).unwrap();
        for r in 0..t.len() {
            let d = t.cell(r, "diseasename").unwrap().to_string();
            let m = t.cell(r, "medicine").unwrap().to_string();
            assert!(CONDITIONS.contains(&(d.as_str(), m.as_str())));
        }
    }

    #[test]
    fn misfit_spec_rejected() {
        let spec = SyntheticSpec::hospital().with("age", ColumnDist::Blank);
        assert!(gen_synthetic(1, 0, &Schema::hospital(), &spec).is_err());
        let mut spec = SyntheticSpec::hospital();
        spec.columns.remove("zipcode");
        assert!(gen_synthetic(1, 0, &Schema::hospital(), &spec).is_err());
    }
}
