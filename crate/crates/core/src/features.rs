//! Encoding of building attributes into the model's feature matrix.

use serde::{Deserialize, Serialize};

use crate::data::{
    BasementCode, BoilerType, BuildingRecord, Categorical, FeatureVector, OwnershipType,
    ProximityCode, NUMERIC_FEATURES,
};
use crate::error::{Error, Result};
use crate::gbdt::{Dataset, FeatureKind};

/// Median imputation for numeric attributes, fitted on training buildings.
///
/// Column layout: the eight numerics, the five categoricals (`has_super` as a
/// two-level categorical), then one 0/1 missingness flag for every numeric
/// attribute that had a missing value in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub medians: [f64; 8],
    pub flagged: Vec<bool>,
}

impl FeatureEncoder {
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 8];
        let mut flagged = vec![false; 8];
        let mut n = 0usize;
        for fv in features {
            n += 1;
            for (k, v) in fv.numeric().into_iter().enumerate() {
                match v {
                    Some(x) => cols[k].push(x),
                    None => flagged[k] = true,
                }
            }
        }
        if n == 0 {
            return Err(Error::EmptyInput("no buildings to fit the feature encoder".into()));
        }
        let mut medians = [0.0; 8];
        for (k, col) in cols.iter_mut().enumerate() {
            medians[k] = median(col).unwrap_or(0.0);
        }
        Ok(Self { medians, flagged })
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect();
        names.extend(
            [
                BasementCode::NAME,
                ProximityCode::NAME,
                OwnershipType::NAME,
                "has_super",
                BoilerType::NAME,
            ]
            .map(String::from),
        );
        for (k, f) in self.flagged.iter().enumerate() {
            if *f {
                names.push(format!("{}_missing", NUMERIC_FEATURES[k]));
            }
        }
        names
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        let cat = |levels: usize| FeatureKind::Categorical {
            levels: levels as u32,
        };
        let mut kinds = vec![FeatureKind::Numeric; 8];
        kinds.extend([
            cat(BasementCode::LEVELS.len()),
            cat(ProximityCode::LEVELS.len()),
            cat(OwnershipType::LEVELS.len()),
            cat(2),
            cat(BoilerType::LEVELS.len()),
        ]);
        kinds.extend(self.flagged.iter().filter(|f| **f).map(|_| FeatureKind::Numeric));
        kinds
    }

    pub fn encode_row(&self, fv: &FeatureVector) -> Vec<f64> {
        let numeric = fv.numeric();
        let mut row: Vec<f64> = numeric
            .iter()
            .zip(self.medians)
            .map(|(v, m)| v.unwrap_or(m))
            .collect();
        row.extend([
            f64::from(fv.basement_code.code()),
            f64::from(fv.proximity_code.code()),
            f64::from(fv.ownership_type.code()),
            f64::from(u8::from(fv.has_super)),
            f64::from(fv.boiler_type.code()),
        ]);
        for (k, f) in self.flagged.iter().enumerate() {
            if *f {
                row.push(if numeric[k].is_none() { 1.0 } else { 0.0 });
            }
        }
        row
    }

    pub fn encode<'a>(&self, features: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Dataset> {
        let mut ds = Dataset::new(self.names(), self.kinds())?;
        for fv in features {
            ds.push_row(&self.encode_row(fv))?;
        }
        Ok(ds)
    }

    pub fn encode_buildings(&self, buildings: &[BuildingRecord]) -> Result<Dataset> {
        self.encode(buildings.iter().map(|b| &b.features))
    }
}

/// Lower-upper average median; `None` for an empty slice.
fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
