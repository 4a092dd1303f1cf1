use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// A heating season, identified by the calendar year in which it starts.
///
/// Season `y` covers `[y-10-01 00:00, (y+1)-06-01 00:00)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeatingSeason {
    pub start_year: i32,
}

impl HeatingSeason {
    pub fn new(start_year: i32) -> Self {
        Self { start_year }
    }

    pub fn start(&self) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(self.start_year, 10, 1)
            .expect("valid date")
            .and_hms_opt(0, 0, 0)
            .expect("valid time")
    }

    /// Exclusive end: June 1st of the following year.
    pub fn end(&self) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(self.start_year + 1, 6, 1)
            .expect("valid date")
            .and_hms_opt(0, 0, 0)
            .expect("valid time")
    }

    pub fn contains(&self, t: &NaiveDateTime) -> bool {
        *t >= self.start() && *t < self.end()
    }

    pub fn next(&self) -> Self {
        Self::new(self.start_year + 1)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.start_year, self.start_year + 1)
    }
}

impl fmt::Display for HeatingSeason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start_year)
    }
}

pub fn season_of(t: &NaiveDateTime) -> Option<HeatingSeason> {
    match t.month() {
        10..=12 => Some(HeatingSeason::new(t.year())),
        1..=5 => Some(HeatingSeason::new(t.year() - 1)),
        _ => None,
    }
}

/// Parses an ISO-8601 date or datetime. Offsets are dropped and the local
/// wall-clock reading is kept, since seasons are defined on civil dates.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn season_boundaries() {
        assert_eq!(season_of(&ts("2016-10-01")), Some(HeatingSeason::new(2016)));
        assert_eq!(season_of(&ts("2017-05-31")), Some(HeatingSeason::new(2016)));
        assert_eq!(
            season_of(&ts("2017-05-31T23:59:59")),
            Some(HeatingSeason::new(2016))
        );
        assert_eq!(season_of(&ts("2017-06-01T00:00:00")), None);
        assert_eq!(season_of(&ts("2016-09-30T23:59:59")), None);
        assert_eq!(season_of(&ts("2017-07-15")), None);
        assert_eq!(season_of(&ts("2015-01-20")), Some(HeatingSeason::new(2014)));
    }

    #[test]
    fn parses_common_iso_forms() {
        assert_eq!(ts("2016-11-02T08:30:00Z"), ts("2016-11-02 08:30:00"));
        assert_eq!(ts("2016-11-02T08:30:00-05:00"), ts("2016-11-02T08:30:00"));
        assert_eq!(ts("2016-11-02T08:30"), ts("2016-11-02T08:30:00.000"));
        assert!(parse_timestamp("11/02/2016").is_none());
        assert!(parse_timestamp("").is_none());
    }

    #[test]
    fn contains_agrees_with_season_of() {
        let s = HeatingSeason::new(2016);
        for d in ["2016-10-01", "2016-12-31T23:59:59", "2017-03-01", "2017-05-31T12:00:00"] {
            assert!(s.contains(&ts(d)), "{d}");
        }
        assert!(!s.contains(&s.end()));
        assert!(s.contains(&s.start()));
        assert_eq!(s.label(), "2016-2017");
    }

    proptest::proptest! {
        #[test]
        fn season_partition(days in 0i64..(365 * 40), secs in 0u32..86_400) {
            let base = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
            let t = base + chrono::Duration::days(days) + chrono::Duration::seconds(i64::from(secs));
            let hits: Vec<i32> = (1988..2032)
                .map(HeatingSeason::new)
                .filter(|s| s.contains(&t))
                .map(|s| s.start_year)
                .collect();
            match season_of(&t) {
                Some(s) => proptest::prop_assert_eq!(hits, vec![s.start_year]),
                None => {
                    proptest::prop_assert!(hits.is_empty());
                    proptest::prop_assert!((6..=9).contains(&t.month()));
                }
            }
        }
    }
}
