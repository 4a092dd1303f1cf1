//! CSV ingestion and export for buildings, events and block groups.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::season::parse_timestamp;
use super::types::{
    BasementCode, BlockGroupProfile, BoilerType, BuildingRecord, Categorical, Demographic,
    FeatureVector, OwnershipType, ProximityCode,
};
use crate::error::{Error, Result};

pub const BUILDING_COLUMNS: [&str; 17] = [
    "bbl",
    "x",
    "y",
    "block_group_id",
    "value_per_sqft",
    "units",
    "area_per_unit",
    "residential_ratio",
    "width",
    "depth",
    "building_age",
    "basement_code",
    "proximity_code",
    "ownership_type",
    "has_super",
    "boiler_type",
    "boiler_age",
];

pub const EVENT_COLUMNS: [&str; 2] = ["bbl", "timestamp"];

const RACE_PREFIX: &str = "race_";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Maps canonical field names to the column names used by a source file.
/// Fields without an entry are looked up under their canonical name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap(pub BTreeMap<String, String>);

impl ColumnMap {
    pub fn source<'a>(&'a self, field: &'a str) -> &'a str {
        self.0.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    /// Unrecognised categorical labels become the attribute's fallback level.
    #[default]
    Collapse,
    Reject,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub columns: ColumnMap,
    pub unknown_policy: UnknownPolicy,
}

/// One rejected cell. `row` is the 1-based data row (the header is row 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub row: usize,
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub rejections: Vec<Rejection>,
    /// Number of distinct rows dropped.
    pub rejected_rows: usize,
}

impl<T> Default for Loaded<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            rejections: Vec::new(),
            rejected_rows: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub bbl: String,
    pub timestamp: NaiveDateTime,
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn header_index(
    path: &Path,
    headers: &csv::StringRecord,
    columns: &ColumnMap,
    fields: &[&str],
) -> Result<Vec<usize>> {
    fields
        .iter()
        .map(|f| {
            let name = columns.source(f);
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn {
                    path: path.to_path_buf(),
                    column: name.to_string(),
                })
        })
        .collect()
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null" | "unknown"
    )
}

fn parse_optional(cell: &str) -> Result<Option<f64>, String> {
    if is_missing(cell) {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("unparsable number `{cell}`"))
}

fn parse_required(cell: &str) -> Result<f64, String> {
    match parse_optional(cell)? {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(format!("non-finite value {v}")),
        None => Err("missing value".into()),
    }
}

fn parse_bool(cell: &str) -> Result<bool, String> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Ok(true),
        "0" | "false" | "f" | "no" | "n" => Ok(false),
        _ => Err(format!("unparsable boolean `{cell}`")),
    }
}

struct RowCtx<'a> {
    row: usize,
    record: &'a csv::StringRecord,
    rejections: Vec<Rejection>,
}

impl RowCtx<'_> {
    fn cell(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("")
    }

    fn reject(&mut self, field: &str, reason: impl Into<String>) {
        self.rejections.push(Rejection {
            row: self.row,
            field: field.to_string(),
            reason: reason.into(),
        });
    }

    fn take<T>(&mut self, field: &str, r: Result<T, String>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(reason) => {
                self.reject(field, reason);
                None
            }
        }
    }

    fn categorical<C: Categorical>(&mut self, idx: usize, policy: UnknownPolicy) -> Option<C> {
        let cell = self.cell(idx).to_string();
        match C::parse(&cell) {
            Some(level) => Some(level),
            None if policy == UnknownPolicy::Collapse || cell.is_empty() => Some(C::fallback()),
            None => {
                self.reject(C::NAME, format!("unknown level `{cell}`"));
                None
            }
        }
    }
}

/// Loads and validates `buildings.csv`.
///
/// Rows breaking a field constraint are dropped and reported; a duplicated
/// `bbl` aborts the load.
pub fn load_buildings(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Loaded<BuildingRecord>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx = header_index(path, &headers, &opts.columns, &BUILDING_COLUMNS)?;

    let mut out = Loaded::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let mut ctx = RowCtx {
            row,
            record: &rec,
            rejections: Vec::new(),
        };

        let bbl = ctx.cell(idx[0]).to_string();
        if !bbl.is_empty() {
            if let Some(&first) = seen.get(&bbl) {
                return Err(Error::DuplicateBbl {
                    bbl,
                    first,
                    second: row,
                });
            }
            seen.insert(bbl.clone(), row);
        } else {
            ctx.reject("bbl", "empty identifier");
        }
        let x = ctx.take("x", parse_required(ctx.cell(idx[1])));
        let y = ctx.take("y", parse_required(ctx.cell(idx[2])));
        let block_group_id = ctx.cell(idx[3]).to_string();
        if block_group_id.is_empty() {
            ctx.reject("block_group_id", "empty identifier");
        }

        let num = |ctx: &mut RowCtx, k: usize| -> Option<Option<f64>> {
            let field = BUILDING_COLUMNS[k];
            ctx.take(field, parse_optional(ctx.cell(idx[k])))
        };
        let value_per_sqft = num(&mut ctx, 4);
        let units_raw = num(&mut ctx, 5);
        let area_per_unit = num(&mut ctx, 6);
        let residential_ratio = num(&mut ctx, 7);
        let width = num(&mut ctx, 8);
        let depth = num(&mut ctx, 9);
        let building_age = num(&mut ctx, 10);
        let boiler_age = num(&mut ctx, 16);
        let units = units_raw.and_then(|u| match u {
            None => Some(None),
            Some(v) if v.fract() == 0.0 && v >= 1.0 && v <= f64::from(u32::MAX) => Some(Some(v as u32)),
            Some(v) => {
                ctx.reject("units", format!("{v} is not a positive integer"));
                None
            }
        });

        let policy = opts.unknown_policy;
        let basement_code = ctx.categorical::<BasementCode>(idx[11], policy);
        let proximity_code = ctx.categorical::<ProximityCode>(idx[12], policy);
        let ownership_type = ctx.categorical::<OwnershipType>(idx[13], policy);
        let has_super = ctx.take("has_super", parse_bool(ctx.cell(idx[14])));
        let boiler_type = ctx.categorical::<BoilerType>(idx[15], policy);

        if !ctx.rejections.is_empty() {
            out.rejected_rows += 1;
            out.rejections.append(&mut ctx.rejections);
            continue;
        }
        // All parsers succeeded, so every Option below is Some.
        let features = FeatureVector {
            value_per_sqft: value_per_sqft.unwrap(),
            units: units.unwrap(),
            area_per_unit: area_per_unit.unwrap(),
            residential_ratio: residential_ratio.unwrap(),
            width: width.unwrap(),
            depth: depth.unwrap(),
            building_age: building_age.unwrap(),
            basement_code: basement_code.unwrap(),
            proximity_code: proximity_code.unwrap(),
            ownership_type: ownership_type.unwrap(),
            has_super: has_super.unwrap(),
            boiler_type: boiler_type.unwrap(),
            boiler_age: boiler_age.unwrap(),
        };
        if let Err((field, reason)) = features.check() {
            ctx.reject(field, reason);
            out.rejected_rows += 1;
            out.rejections.append(&mut ctx.rejections);
            continue;
        }
        out.records.push(BuildingRecord {
            bbl,
            block_group_id,
            x: x.unwrap(),
            y: y.unwrap(),
            features,
            complaint_count: BTreeMap::new(),
            violation_flag: BTreeMap::new(),
        });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_buildings(path: impl AsRef<Path>, records: &[BuildingRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let wrap = |e| Error::csv(path, e);
    w.write_record(BUILDING_COLUMNS).map_err(wrap)?;
    for r in records {
        let f = &r.features;
        w.write_record([
            r.bbl.clone(),
            r.x.to_string(),
            r.y.to_string(),
            r.block_group_id.clone(),
            fmt_opt(f.value_per_sqft),
            f.units.map(|u| u.to_string()).unwrap_or_default(),
            fmt_opt(f.area_per_unit),
            fmt_opt(f.residential_ratio),
            fmt_opt(f.width),
            fmt_opt(f.depth),
            fmt_opt(f.building_age),
            f.basement_code.label().to_string(),
            f.proximity_code.label().to_string(),
            f.ownership_type.label().to_string(),
            f.has_super.to_string(),
            f.boiler_type.label().to_string(),
            fmt_opt(f.boiler_age),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_rejections(path: impl AsRef<Path>, rejections: &[Rejection]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let wrap = |e| Error::csv(path, e);
    w.write_record(["row", "field", "reason"]).map_err(wrap)?;
    for r in rejections {
        w.write_record([r.row.to_string().as_str(), &r.field, &r.reason])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a `bbl,timestamp` event file. Rows with an empty bbl or an
/// unparsable timestamp are rejected.
pub fn load_events(path: impl AsRef<Path>) -> Result<Loaded<Event>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx = header_index(path, &headers, &ColumnMap::default(), &EVENT_COLUMNS)?;
    let mut out = Loaded::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let row = i + 1;
        let bbl = rec.get(idx[0]).unwrap_or("");
        let raw = rec.get(idx[1]).unwrap_or("");
        let (field, reason) = if bbl.is_empty() {
            ("bbl", "empty identifier".to_string())
        } else if let Some(timestamp) = parse_timestamp(raw) {
            out.records.push(Event {
                bbl: bbl.to_string(),
                timestamp,
            });
            continue;
        } else {
            ("timestamp", format!("unparsable timestamp `{raw}`"))
        };
        out.rejected_rows += 1;
        out.rejections.push(Rejection {
            row,
            field: field.into(),
            reason,
        });
    }
    Ok(out)
}

pub fn write_events(path: impl AsRef<Path>, events: &[Event]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let wrap = |e| Error::csv(path, e);
    w.write_record(EVENT_COLUMNS).map_err(wrap)?;
    for e in events {
        w.write_record([e.bbl.clone(), e.timestamp.format(TIMESTAMP_FORMAT).to_string()])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads `blockgroups.csv`. Race diversity is always recomputed from the
/// `race_*` share columns; a `race_diversity` column, if present, is ignored.
pub fn load_block_groups(path: impl AsRef<Path>) -> Result<Loaded<BlockGroupProfile>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let direct: Vec<Demographic> = Demographic::ALL
        .into_iter()
        .filter(|d| *d != Demographic::RaceDiversity)
        .collect();
    let mut fields = vec!["block_group_id", "population"];
    fields.extend(direct.iter().map(|d| d.name()));
    let idx = header_index(path, &headers, &ColumnMap::default(), &fields)?;
    let race_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with(RACE_PREFIX) && *h != Demographic::RaceDiversity.name())
        .map(|(i, h)| (i, h[RACE_PREFIX.len()..].to_string()))
        .collect();
    if race_cols.is_empty() {
        return Err(Error::MissingColumn {
            path: path.to_path_buf(),
            column: format!("{RACE_PREFIX}*"),
        });
    }

    let mut out = Loaded::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let mut ctx = RowCtx {
            row: i + 1,
            record: &rec,
            rejections: Vec::new(),
        };
        let id = ctx.cell(idx[0]).to_string();
        if id.is_empty() {
            ctx.reject("block_group_id", "empty identifier");
        } else if let Some(first) = seen.insert(id.clone(), ctx.row) {
            ctx.reject("block_group_id", format!("duplicate of row {first}"));
        }
        let population = ctx.take(
            "population",
            parse_required(ctx.cell(idx[1])).and_then(|p| {
                if p >= 0.0 && p.fract() == 0.0 {
                    Ok(p as u64)
                } else {
                    Err(format!("{p} is not a non-negative integer"))
                }
            }),
        );
        let mut profile = BlockGroupProfile {
            block_group_id: id,
            population: population.unwrap_or(0),
            median_rent: 0.0,
            race_diversity: 0.0,
            vacancy_rate: 0.0,
            pct_minority: 0.0,
            median_income: 0.0,
            pct_limited_english: 0.0,
            pct_married: 0.0,
            unemployment_rate: 0.0,
            pct_over70: 0.0,
            pct_white: 0.0,
            pct_bachelor_plus: 0.0,
            pct_female: 0.0,
            pct_living_alone: 0.0,
            race_shares: Vec::with_capacity(race_cols.len()),
        };
        for (k, d) in direct.iter().enumerate() {
            let parsed = parse_required(ctx.cell(idx[k + 2])).and_then(|v| {
                if d.is_currency() || (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(format!("{v} outside [0, 1]"))
                }
            });
            if let Some(v) = ctx.take(d.name(), parsed) {
                profile.set(*d, v);
            }
        }
        for (col, name) in &race_cols {
            let field = format!("{RACE_PREFIX}{name}");
            if let Some(v) = ctx.take(&field, parse_required(ctx.cell(*col))) {
                profile.race_shares.push((name.clone(), v));
            }
        }
        if ctx.rejections.is_empty() {
            let shares: Vec<f64> = profile.race_shares.iter().map(|(_, v)| *v).collect();
            match crate::stats::race_diversity(&shares) {
                Ok(d) => profile.race_diversity = d,
                Err(e) => ctx.reject("race_shares", e.to_string()),
            }
        }
        if !ctx.rejections.is_empty() {
            out.rejected_rows += 1;
            out.rejections.append(&mut ctx.rejections);
            continue;
        }
        out.records.push(profile);
    }
    Ok(out)
}

pub fn write_block_groups(path: impl AsRef<Path>, profiles: &[BlockGroupProfile]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let wrap = |e| Error::csv(path, e);
    let race_names: Vec<String> = profiles
        .first()
        .map(|p| p.race_shares.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    let mut header = vec!["block_group_id".to_string(), "population".to_string()];
    header.extend(Demographic::ALL.iter().map(|d| d.name().to_string()));
    header.extend(race_names.iter().map(|n| format!("{RACE_PREFIX}{n}")));
    w.write_record(&header).map_err(wrap)?;
    for p in profiles {
        let mut row = vec![p.block_group_id.clone(), p.population.to_string()];
        row.extend(Demographic::ALL.iter().map(|d| p.value(*d).to_string()));
        row.extend(p.race_shares.iter().map(|(_, v)| v.to_string()));
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
