use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use super::season::HeatingSeason;
use crate::error::{Error, Result};
use super::types::{BlockGroupProfile, BuildingRecord};

/// Requests per resident, or `None` (an `undefined_rate`) when the block
/// group has no population.
pub fn per_capita_rate(request_count: u64, population: u64) -> Option<f64> {
    (population > 0).then(|| request_count as f64 / population as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGroupRate {
    pub block_group_id: String,
    pub population: u64,
    pub requests: u64,
    pub rate: Option<f64>,
}

/// Sums building complaints per block group for one season and normalizes
/// by population. Output follows block-group id order.
pub fn block_group_rates(
    buildings: &[BuildingRecord],
    profiles: &[BlockGroupProfile],
    season: HeatingSeason,
) -> Vec<BlockGroupRate> {
    let mut requests: BTreeMap<&str, u64> = BTreeMap::new();
    for b in buildings {
        *requests.entry(b.block_group_id.as_str()).or_default() += u64::from(b.complaints_in(season));
    }
    let mut out: Vec<BlockGroupRate> = profiles
        .iter()
        .map(|p| {
            let n = requests.get(p.block_group_id.as_str()).copied().unwrap_or(0);
            BlockGroupRate {
                block_group_id: p.block_group_id.clone(),
                population: p.population,
                requests: n,
                rate: per_capita_rate(n, p.population),
            }
        })
        .collect();
    out.sort_by(|a, b| a.block_group_id.cmp(&b.block_group_id));
    out
}

/// Writes `block_group_id, population, requests, rate`; the rate cell reads
/// `undefined_rate` for unpopulated block groups.
pub fn write_rates(path: impl AsRef<Path>, rates: &[BlockGroupRate]) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::csv(path, e);
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_record(["block_group_id", "population", "requests", "rate"])
        .map_err(wrap)?;
    for r in rates {
        w.write_record([
            r.block_group_id.clone(),
            r.population.to_string(),
            r.requests.to_string(),
            r.rate.map_or_else(|| "undefined_rate".to_string(), |v| v.to_string()),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
