use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Level codes `0..levels`, stored as exact small floats.
    Categorical { levels: u32 },
}

/// Column-major feature matrix. `NaN` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, kinds: Vec<FeatureKind>) -> Result<Self> {
        if names.len() != kinds.len() {
            return Err(Error::InvalidParameter(format!(
                "{} feature names for {} feature kinds",
                names.len(),
                kinds.len()
            )));
        }
        Ok(Self {
            columns: vec![Vec::new(); names.len()],
            names,
            kinds,
            n_rows: 0,
        })
    }

    /// All-numeric dataset from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let names = (0..d).map(|i| format!("f{i}")).collect();
        let mut ds = Self::new(names, vec![FeatureKind::Numeric; d])?;
        for r in rows {
            ds.push_row(r)?;
        }
        Ok(ds)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        check_row(&self.kinds, row, self.n_rows)?;
        for (col, v) in self.columns.iter_mut().zip(row) {
            col.push(*v);
        }
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }
}

/// Rejects infinities and out-of-range categorical codes; `NaN` passes.
pub(crate) fn check_row(kinds: &[FeatureKind], row: &[f64], row_index: usize) -> Result<()> {
    if row.len() != kinds.len() {
        return Err(Error::DimensionMismatch {
            expected: kinds.len(),
            got: row.len(),
        });
    }
    for (column, (kind, v)) in kinds.iter().zip(row).enumerate() {
        if v.is_nan() {
            continue;
        }
        let ok = match kind {
            FeatureKind::Numeric => v.is_finite(),
            FeatureKind::Categorical { levels } => {
                v.fract() == 0.0 && *v >= 0.0 && *v < f64::from(*levels)
            }
        };
        if !ok {
            return Err(Error::NonFiniteFeature {
                row: row_index,
                column,
            });
        }
    }
    Ok(())
}
