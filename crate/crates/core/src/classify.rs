//! Cross-classification of predicted violations against observed complaints.
//!
//! |                  | no violation predicted | violation predicted |
//! |------------------|------------------------|---------------------|
//! | no complaint     | Type 1                 | Type 2 (under)      |
//! | complaint(s)     | Type 3 (over)          | Type 4              |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::HeatingSeason;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuildingType {
    Type1,
    Type2,
    Type3,
    Type4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    AsExpected,
    Mismatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    UnderReporting,
    OverReporting,
}

impl BuildingType {
    pub const ALL: [BuildingType; 4] = [
        BuildingType::Type1,
        BuildingType::Type2,
        BuildingType::Type3,
        BuildingType::Type4,
    ];

    pub fn group(self) -> Group {
        regroup(self).0
    }

    pub fn direction(self) -> Option<Direction> {
        regroup(self).1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            BuildingType::Type1 => "type1",
            BuildingType::Type2 => "type2",
            BuildingType::Type3 => "type3",
            BuildingType::Type4 => "type4",
        }
    }
}

impl fmt::Display for BuildingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BuildingType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuildingType::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown building type `{s}`")))
    }
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::AsExpected => "as_expected",
            Group::Mismatched => "mismatched",
        }
    }
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::UnderReporting => "under_reporting",
            Direction::OverReporting => "over_reporting",
        }
    }
}

/// A building complained if it logged at least one complaint; volume is
/// deliberately discarded.
pub fn binarize_complaints(complaint_count: u32) -> bool {
    complaint_count >= 1
}

pub fn classify_building(predicted_violation: bool, complained: bool) -> BuildingType {
    match (predicted_violation, complained) {
        (false, false) => BuildingType::Type1,
        (true, false) => BuildingType::Type2,
        (false, true) => BuildingType::Type3,
        (true, true) => BuildingType::Type4,
    }
}

pub fn regroup(t: BuildingType) -> (Group, Option<Direction>) {
    match t {
        BuildingType::Type1 | BuildingType::Type4 => (Group::AsExpected, None),
        BuildingType::Type2 => (Group::Mismatched, Some(Direction::UnderReporting)),
        BuildingType::Type3 => (Group::Mismatched, Some(Direction::OverReporting)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedBuilding {
    pub bbl: String,
    pub block_group_id: String,
    pub x: f64,
    pub y: f64,
    pub predicted_probability: f64,
    pub predicted_violation: bool,
    pub complained: bool,
    pub complaint_count: u32,
    pub building_type: BuildingType,
}

impl ClassifiedBuilding {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bbl: String,
        block_group_id: String,
        x: f64,
        y: f64,
        predicted_probability: f64,
        threshold: f64,
        complaint_count: u32,
    ) -> Self {
        let predicted_violation = predicted_probability >= threshold;
        let complained = binarize_complaints(complaint_count);
        Self {
            bbl,
            block_group_id,
            x,
            y,
            predicted_probability,
            predicted_violation,
            complained,
            complaint_count,
            building_type: classify_building(predicted_violation, complained),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub type1: u64,
    pub type2: u64,
    pub type3: u64,
    pub type4: u64,
}

impl TypeCounts {
    pub fn get(&self, t: BuildingType) -> u64 {
        match t {
            BuildingType::Type1 => self.type1,
            BuildingType::Type2 => self.type2,
            BuildingType::Type3 => self.type3,
            BuildingType::Type4 => self.type4,
        }
    }

    fn bump(&mut self, t: BuildingType) {
        match t {
            BuildingType::Type1 => self.type1 += 1,
            BuildingType::Type2 => self.type2 += 1,
            BuildingType::Type3 => self.type3 += 1,
            BuildingType::Type4 => self.type4 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.type1 + self.type2 + self.type3 + self.type4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeShares {
    pub type1: f64,
    pub type2: f64,
    pub type3: f64,
    pub type4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub season: Option<HeatingSeason>,
    pub threshold: f64,
    pub total: u64,
    pub counts: TypeCounts,
    /// Count over the full classified sample.
    pub shares: TypeShares,
    pub as_expected: u64,
    pub mismatched: u64,
}

impl ClassificationSummary {
    pub fn share(&self, t: BuildingType) -> f64 {
        match t {
            BuildingType::Type1 => self.shares.type1,
            BuildingType::Type2 => self.shares.type2,
            BuildingType::Type3 => self.shares.type3,
            BuildingType::Type4 => self.shares.type4,
        }
    }
}

pub fn summarize(
    types: impl IntoIterator<Item = BuildingType>,
    season: Option<HeatingSeason>,
    threshold: f64,
) -> Result<ClassificationSummary> {
    let mut counts = TypeCounts::default();
    for t in types {
        counts.bump(t);
    }
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyInput("no classified buildings to summarize".into()));
    }
    let share = |n: u64| n as f64 / total as f64;
    Ok(ClassificationSummary {
        season,
        threshold,
        total,
        shares: TypeShares {
            type1: share(counts.type1),
            type2: share(counts.type2),
            type3: share(counts.type3),
            type4: share(counts.type4),
        },
        as_expected: counts.type1 + counts.type4,
        mismatched: counts.type2 + counts.type3,
        counts,
    })
}
