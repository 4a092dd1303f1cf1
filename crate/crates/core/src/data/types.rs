use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::season::HeatingSeason;

/// A closed set of labelled levels for one categorical building attribute.
pub trait Categorical: Copy + Eq + Sized + 'static {
    /// Attribute name as used in CSV headers and model feature names.
    const NAME: &'static str;
    const LEVELS: &'static [Self];

    fn label(self) -> &'static str;

    /// Level that unrecognised or missing labels collapse to.
    fn fallback() -> Self;

    fn code(self) -> u32 {
        Self::LEVELS
            .iter()
            .position(|l| *l == self)
            .expect("level listed in LEVELS") as u32
    }

    fn from_code(code: u32) -> Option<Self> {
        Self::LEVELS.get(code as usize).copied()
    }

    fn parse(s: &str) -> Option<Self> {
        let norm = normalize_label(s);
        Self::LEVELS.iter().copied().find(|l| l.label() == norm)
    }
}

fn normalize_label(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

macro_rules! categorical {
    ($name:ident, $field:literal, fallback = $fb:ident, { $($variant:ident => $label:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl Categorical for $name {
            const NAME: &'static str = $field;
            const LEVELS: &'static [Self] = &[$($name::$variant),+];

            fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            fn fallback() -> Self {
                $name::$fb
            }
        }
    };
}

categorical!(BasementCode, "basement_code", fallback = Unknown, {
    FullOrPartial => "full_or_partial",
    None => "none",
    Unknown => "unknown",
});

categorical!(ProximityCode, "proximity_code", fallback = Unknown, {
    Detached => "detached",
    SemiAttached => "semi_attached",
    Attached => "attached",
    Unknown => "unknown",
});

categorical!(OwnershipType, "ownership_type", fallback = Other, {
    Individual => "individual",
    Corp => "corp",
    Company => "company",
    Other => "other",
});

categorical!(BoilerType, "boiler_type", fallback = Unknown, {
    Gas => "gas",
    Oil => "oil",
    Electricity => "electricity",
    Other => "other",
    Unknown => "unknown",
});

/// Physical and property attributes of one building.
///
/// Numeric fields are `None` when the source cell was empty; they are imputed
/// later by [`crate::features::FeatureEncoder`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub value_per_sqft: Option<f64>,
    pub units: Option<u32>,
    pub area_per_unit: Option<f64>,
    pub residential_ratio: Option<f64>,
    pub width: Option<f64>,
    pub depth: Option<f64>,
    pub building_age: Option<f64>,
    pub basement_code: BasementCode,
    pub proximity_code: ProximityCode,
    pub ownership_type: OwnershipType,
    pub has_super: bool,
    pub boiler_type: BoilerType,
    pub boiler_age: Option<f64>,
}

/// Numeric attributes in model column order.
pub const NUMERIC_FEATURES: [&str; 8] = [
    "value_per_sqft",
    "units",
    "area_per_unit",
    "residential_ratio",
    "width",
    "depth",
    "building_age",
    "boiler_age",
];

impl FeatureVector {
    pub fn numeric(&self) -> [Option<f64>; 8] {
        [
            self.value_per_sqft,
            self.units.map(f64::from),
            self.area_per_unit,
            self.residential_ratio,
            self.width,
            self.depth,
            self.building_age,
            self.boiler_age,
        ]
    }

    /// Returns the name of the first field that breaks a range constraint.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        fn finite(name: &'static str, v: Option<f64>) -> Result<(), (&'static str, String)> {
            match v {
                Some(x) if !x.is_finite() => Err((name, format!("non-finite value {x}"))),
                _ => Ok(()),
            }
        }
        for (name, v) in NUMERIC_FEATURES.iter().zip(self.numeric()) {
            finite(name, v)?;
        }
        let non_negative = [
            ("value_per_sqft", self.value_per_sqft),
            ("building_age", self.building_age),
            ("boiler_age", self.boiler_age),
        ];
        for (name, v) in non_negative {
            if let Some(x) = v.filter(|x| *x < 0.0) {
                return Err((name, format!("{x} is negative")));
            }
        }
        let positive = [
            ("area_per_unit", self.area_per_unit),
            ("width", self.width),
            ("depth", self.depth),
        ];
        for (name, v) in positive {
            if let Some(x) = v.filter(|x| *x <= 0.0) {
                return Err((name, format!("{x} is not positive")));
            }
        }
        if self.units == Some(0) {
            return Err(("units", "unit count must be positive".into()));
        }
        if let Some(r) = self.residential_ratio.filter(|r| !(0.0..=1.0).contains(r)) {
            return Err(("residential_ratio", format!("{r} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingRecord {
    pub bbl: String,
    pub block_group_id: String,
    pub x: f64,
    pub y: f64,
    pub features: FeatureVector,
    pub complaint_count: BTreeMap<HeatingSeason, u32>,
    pub violation_flag: BTreeMap<HeatingSeason, bool>,
}

impl BuildingRecord {
    pub fn complaints_in(&self, season: HeatingSeason) -> u32 {
        self.complaint_count.get(&season).copied().unwrap_or(0)
    }

    pub fn violated_in(&self, season: HeatingSeason) -> bool {
        self.violation_flag.get(&season).copied().unwrap_or(false)
    }
}

/// The block-group attributes compared between reporting groups, in the
/// order they are conventionally reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demographic {
    MedianRent,
    RaceDiversity,
    VacancyRate,
    PctMinority,
    MedianIncome,
    PctLimitedEnglish,
    PctMarried,
    UnemploymentRate,
    PctOver70,
    PctWhite,
    PctBachelorPlus,
    PctFemale,
    PctLivingAlone,
}

impl Demographic {
    pub const ALL: [Demographic; 13] = [
        Demographic::MedianRent,
        Demographic::RaceDiversity,
        Demographic::VacancyRate,
        Demographic::PctMinority,
        Demographic::MedianIncome,
        Demographic::PctLimitedEnglish,
        Demographic::PctMarried,
        Demographic::UnemploymentRate,
        Demographic::PctOver70,
        Demographic::PctWhite,
        Demographic::PctBachelorPlus,
        Demographic::PctFemale,
        Demographic::PctLivingAlone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Demographic::MedianRent => "median_rent",
            Demographic::RaceDiversity => "race_diversity",
            Demographic::VacancyRate => "vacancy_rate",
            Demographic::PctMinority => "pct_minority",
            Demographic::MedianIncome => "median_income",
            Demographic::PctLimitedEnglish => "pct_limited_english",
            Demographic::PctMarried => "pct_married",
            Demographic::UnemploymentRate => "unemployment_rate",
            Demographic::PctOver70 => "pct_over70",
            Demographic::PctWhite => "pct_white",
            Demographic::PctBachelorPlus => "pct_bachelor_plus",
            Demographic::PctFemale => "pct_female",
            Demographic::PctLivingAlone => "pct_living_alone",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    /// Currency-valued attributes; everything else is a proportion.
    pub fn is_currency(self) -> bool {
        matches!(self, Demographic::MedianRent | Demographic::MedianIncome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGroupProfile {
    pub block_group_id: String,
    pub population: u64,
    pub median_rent: f64,
    pub race_diversity: f64,
    pub vacancy_rate: f64,
    pub pct_minority: f64,
    pub median_income: f64,
    pub pct_limited_english: f64,
    pub pct_married: f64,
    pub unemployment_rate: f64,
    pub pct_over70: f64,
    pub pct_white: f64,
    pub pct_bachelor_plus: f64,
    pub pct_female: f64,
    pub pct_living_alone: f64,
    /// Share column name (without the `race_` prefix) to population share.
    pub race_shares: Vec<(String, f64)>,
}

impl BlockGroupProfile {
    pub fn value(&self, d: Demographic) -> f64 {
        match d {
            Demographic::MedianRent => self.median_rent,
            Demographic::RaceDiversity => self.race_diversity,
            Demographic::VacancyRate => self.vacancy_rate,
            Demographic::PctMinority => self.pct_minority,
            Demographic::MedianIncome => self.median_income,
            Demographic::PctLimitedEnglish => self.pct_limited_english,
            Demographic::PctMarried => self.pct_married,
            Demographic::UnemploymentRate => self.unemployment_rate,
            Demographic::PctOver70 => self.pct_over70,
            Demographic::PctWhite => self.pct_white,
            Demographic::PctBachelorPlus => self.pct_bachelor_plus,
            Demographic::PctFemale => self.pct_female,
            Demographic::PctLivingAlone => self.pct_living_alone,
        }
    }

    pub fn set(&mut self, d: Demographic, v: f64) {
        let slot = match d {
            Demographic::MedianRent => &mut self.median_rent,
            Demographic::RaceDiversity => &mut self.race_diversity,
            Demographic::VacancyRate => &mut self.vacancy_rate,
            Demographic::PctMinority => &mut self.pct_minority,
            Demographic::MedianIncome => &mut self.median_income,
            Demographic::PctLimitedEnglish => &mut self.pct_limited_english,
            Demographic::PctMarried => &mut self.pct_married,
            Demographic::UnemploymentRate => &mut self.unemployment_rate,
            Demographic::PctOver70 => &mut self.pct_over70,
            Demographic::PctWhite => &mut self.pct_white,
            Demographic::PctBachelorPlus => &mut self.pct_bachelor_plus,
            Demographic::PctFemale => &mut self.pct_female,
            Demographic::PctLivingAlone => &mut self.pct_living_alone,
        };
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_loosely() {
        assert_eq!(BasementCode::parse("Full or partial"), Some(BasementCode::FullOrPartial));
        assert_eq!(ProximityCode::parse("semi-attached"), Some(ProximityCode::SemiAttached));
        assert_eq!(OwnershipType::parse("CORP"), Some(OwnershipType::Corp));
        assert_eq!(BoilerType::parse("steam"), None);
        assert_eq!(OwnershipType::fallback(), OwnershipType::Other);
    }

    #[test]
    fn codes_round_trip() {
        for l in BoilerType::LEVELS {
            assert_eq!(BoilerType::from_code(l.code()), Some(*l));
        }
        assert_eq!(BoilerType::from_code(9), None);
    }

    #[test]
    fn demographic_names_are_unique() {
        for d in Demographic::ALL {
            assert_eq!(Demographic::from_name(d.name()), Some(d));
        }
    }
}
