use std::collections::{BTreeSet, HashMap};

use super::load::Event;
use super::season::{season_of, HeatingSeason};
use super::types::BuildingRecord;

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AttachReport {
    /// Contiguous range of seasons covered by any retained event.
    pub seasons: Vec<HeatingSeason>,
    pub complaints_retained: usize,
    pub violations_retained: usize,
    pub off_season_complaints: usize,
    pub off_season_violations: usize,
    /// Bbls of events that matched no building, sorted and deduplicated.
    pub unmatched_complaint_bbls: Vec<String>,
    pub unmatched_violation_bbls: Vec<String>,
    pub unmatched_complaints: usize,
    pub unmatched_violations: usize,
}

/// Windows complaint and violation events into heating seasons and attaches
/// per-season counts and flags to each building.
///
/// Every building gets an entry for every season in the observed range, so
/// a building with no events reads as zero complaints and no violation.
pub fn attach_events(
    mut buildings: Vec<BuildingRecord>,
    complaints: &[Event],
    violations: &[Event],
) -> (Vec<BuildingRecord>, AttachReport) {
    let index: HashMap<&str, usize> = buildings
        .iter()
        .enumerate()
        .map(|(i, b)| (b.bbl.as_str(), i))
        .collect();
    let mut report = AttachReport::default();

    let mut placed_complaints = Vec::new();
    let mut unmatched = BTreeSet::new();
    for e in complaints {
        let Some(season) = season_of(&e.timestamp) else {
            report.off_season_complaints += 1;
            continue;
        };
        match index.get(e.bbl.as_str()) {
            Some(&i) => placed_complaints.push((i, season)),
            None => {
                report.unmatched_complaints += 1;
                unmatched.insert(e.bbl.clone());
            }
        }
    }
    report.unmatched_complaint_bbls = unmatched.into_iter().collect();

    let mut placed_violations = Vec::new();
    let mut unmatched = BTreeSet::new();
    for e in violations {
        let Some(season) = season_of(&e.timestamp) else {
            report.off_season_violations += 1;
            continue;
        };
        match index.get(e.bbl.as_str()) {
            Some(&i) => placed_violations.push((i, season)),
            None => {
                report.unmatched_violations += 1;
                unmatched.insert(e.bbl.clone());
            }
        }
    }
    report.unmatched_violation_bbls = unmatched.into_iter().collect();

    let observed = placed_complaints
        .iter()
        .chain(&placed_violations)
        .map(|(_, s)| s.start_year);
    let (lo, hi) = observed.fold((i32::MAX, i32::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if lo <= hi {
        report.seasons = (lo..=hi).map(HeatingSeason::new).collect();
    }

    for b in &mut buildings {
        b.complaint_count.clear();
        b.violation_flag.clear();
        for s in &report.seasons {
            b.complaint_count.insert(*s, 0);
            b.violation_flag.insert(*s, false);
        }
    }
    for (i, s) in placed_complaints {
        *buildings[i].complaint_count.get_mut(&s).expect("season in range") += 1;
        report.complaints_retained += 1;
    }
    for (i, s) in placed_violations {
        buildings[i].violation_flag.insert(s, true);
        report.violations_retained += 1;
    }
    (buildings, report)
}
