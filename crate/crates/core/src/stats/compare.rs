use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::welch::{t_test, TTestResult, TTestVariant};
use crate::classify::{ClassifiedBuilding, Direction};
use crate::data::{BlockGroupProfile, Demographic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestLevel {
    /// Each mismatched building contributes its block group's values.
    #[default]
    Building,
    /// Each block group contributes once, to the direction holding the
    /// majority of its mismatched buildings; ties are left out.
    #[serde(alias = "blockgroup")]
    BlockGroup,
}

impl std::str::FromStr for TestLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "building" => Ok(Self::Building),
            "blockgroup" | "block_group" => Ok(Self::BlockGroup),
            other => Err(Error::InvalidParameter(format!(
                "unknown test level `{other}` (building, blockgroup)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    #[serde(flatten)]
    pub test: TTestResult,
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Sorted by |t| descending, then feature name.
    pub rows: Vec<ComparisonRow>,
    pub level: TestLevel,
    pub variant: TTestVariant,
    /// Mismatched buildings whose block group had no profile.
    pub excluded_buildings: usize,
}

/// Tests every demographic attribute for a difference between the
/// under-reporting (Type 2) and over-reporting (Type 3) groups.
pub fn compare_groups(
    classified: &[ClassifiedBuilding],
    profiles: &[BlockGroupProfile],
    level: TestLevel,
    variant: TTestVariant,
) -> Result<Comparison> {
    let by_id: HashMap<&str, &BlockGroupProfile> =
        profiles.iter().map(|p| (p.block_group_id.as_str(), p)).collect();

    let mut excluded = 0;
    let mut under: Vec<&BlockGroupProfile> = Vec::new();
    let mut over: Vec<&BlockGroupProfile> = Vec::new();
    // Per block group: (under count, over count), in id order.
    let mut tallies: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for b in classified {
        let Some(direction) = b.building_type.direction() else {
            continue;
        };
        let Some(profile) = by_id.get(b.block_group_id.as_str()) else {
            excluded += 1;
            continue;
        };
        match level {
            TestLevel::Building => match direction {
                Direction::UnderReporting => under.push(profile),
                Direction::OverReporting => over.push(profile),
            },
            TestLevel::BlockGroup => {
                let t = tallies.entry(profile.block_group_id.as_str()).or_default();
                match direction {
                    Direction::UnderReporting => t.0 += 1,
                    Direction::OverReporting => t.1 += 1,
                }
            }
        }
    }
    for (id, (u, o)) in tallies {
        let p = by_id[id];
        if u > o {
            under.push(p);
        } else if o > u {
            over.push(p);
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} mismatched buildings have no block-group profile and were excluded");
    }
    if under.len() < 2 || over.len() < 2 {
        return Err(Error::UndersizedSample(format!(
            "{} under-reporting and {} over-reporting units, need at least 2 each",
            under.len(),
            over.len()
        )));
    }

    let n_tests = Demographic::ALL.len() as f64;
    let mut rows = Vec::with_capacity(Demographic::ALL.len());
    for d in Demographic::ALL {
        let a: Vec<f64> = under.iter().map(|p| p.value(d)).collect();
        let b: Vec<f64> = over.iter().map(|p| p.value(d)).collect();
        let mut test = t_test(&a, &b, variant)?;
        test.feature = d.name().to_string();
        rows.push(ComparisonRow {
            p_bonferroni: (test.p_value * n_tests).min(1.0),
            test,
        });
    }
    rows.sort_by(|x, y| {
        y.test
            .t_value
            .abs()
            .total_cmp(&x.test.t_value.abs())
            .then_with(|| x.test.feature.cmp(&y.test.feature))
    });
    Ok(Comparison {
        rows,
        level,
        variant,
        excluded_buildings: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::BuildingType;

    fn profile(id: &str, v: f64) -> BlockGroupProfile {
        BlockGroupProfile {
            block_group_id: id.into(),
            population: 100,
            median_rent: 1000.0 * v,
            race_diversity: 0.5 * v,
            vacancy_rate: 0.1 * v,
            pct_minority: 0.2 * v,
            median_income: 5000.0 * v,
            pct_limited_english: 0.3 * v,
            pct_married: 0.4,
            unemployment_rate: 0.05 * v,
            pct_over70: 0.1,
            pct_white: 0.5 / v,
            pct_bachelor_plus: 0.3,
            pct_female: 0.5,
            pct_living_alone: 0.2 + 0.01 * v,
            race_shares: vec![("a".into(), 1.0)],
        }
    }

    fn building(bg: &str, t: BuildingType) -> ClassifiedBuilding {
        let (pred, count) = match t {
            BuildingType::Type1 => (0.1, 0),
            BuildingType::Type2 => (0.9, 0),
            BuildingType::Type3 => (0.1, 2),
            BuildingType::Type4 => (0.9, 1),
        };
        ClassifiedBuilding::new("x".into(), bg.into(), 0.0, 0.0, pred, 0.5, count)
    }

    #[test]
    fn same_block_groups_give_zero_t() {
        let profiles = vec![profile("a", 1.0), profile("b", 2.0)];
        let mut cb = Vec::new();
        for bg in ["a", "b", "a", "b"] {
            cb.push(building(bg, BuildingType::Type2));
            cb.push(building(bg, BuildingType::Type3));
        }
        let c = compare_groups(&cb, &profiles, TestLevel::Building, TTestVariant::Welch).unwrap();
        assert_eq!(c.rows.len(), 13);
        assert!(c.rows.iter().all(|r| r.test.t_value == 0.0));
    }

    #[test]
    fn rows_sorted_by_abs_t_and_signed_under_minus_over() {
        let profiles: Vec<_> = (1..=6).map(|i| profile(&i.to_string(), i as f64)).collect();
        let mut cb = Vec::new();
        for i in 1..=3 {
            cb.push(building(&i.to_string(), BuildingType::Type3));
            cb.push(building(&(i + 3).to_string(), BuildingType::Type2));
        }
        cb.push(building("missing", BuildingType::Type2));
        cb.push(building("1", BuildingType::Type1));
        let c = compare_groups(&cb, &profiles, TestLevel::Building, TTestVariant::Welch).unwrap();
        assert_eq!(c.excluded_buildings, 1);
        let ts: Vec<f64> = c.rows.iter().map(|r| r.test.t_value.abs()).collect();
        assert!(ts.windows(2).all(|w| w[0] >= w[1]));
        let rent = c.rows.iter().find(|r| r.test.feature == "median_rent").unwrap();
        assert!(rent.test.t_value > 0.0);
        assert_eq!((rent.test.n_under, rent.test.n_over), (3, 3));
        assert!(rent.p_bonferroni >= rent.test.p_value);
    }

    #[test]
    fn block_group_level_uses_majority_direction() {
        let profiles: Vec<_> = (1..=5).map(|i| profile(&i.to_string(), i as f64)).collect();
        let mut cb = Vec::new();
        for (bg, t2, t3) in [("1", 3, 1), ("2", 2, 0), ("3", 1, 1), ("4", 0, 2), ("5", 1, 4)] {
            cb.extend(std::iter::repeat_with(|| building(bg, BuildingType::Type2)).take(t2));
            cb.extend(std::iter::repeat_with(|| building(bg, BuildingType::Type3)).take(t3));
        }
        let c = compare_groups(&cb, &profiles, TestLevel::BlockGroup, TTestVariant::Welch).unwrap();
        assert_eq!((c.rows[0].test.n_under, c.rows[0].test.n_over), (2, 2));
    }

    #[test]
    fn too_few_members_is_an_error() {
        let profiles = vec![profile("a", 1.0)];
        let cb = vec![building("a", BuildingType::Type2), building("a", BuildingType::Type3)];
        assert!(matches!(
            compare_groups(&cb, &profiles, TestLevel::Building, TTestVariant::Welch),
            Err(Error::UndersizedSample(_))
        ));
    }
}
