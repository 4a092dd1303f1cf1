//! Stage functions shared by the command-line tool and the browser demo:
//! ingest, train, classify, hotspot and compare, plus their file formats.

use std::collections::HashMap;
use std::fs::{self, File};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::classify::{summarize, BuildingType, ClassificationSummary, ClassifiedBuilding, Direction};
use crate::data::{
    attach_events, load_block_groups, load_buildings, load_events, AttachReport, BlockGroupProfile,
    BuildingRecord, HeatingSeason, LoadOptions, Rejection,
};
use crate::error::{Error, Result};
use crate::features::FeatureEncoder;
use crate::gbdt::{
    evaluate_scores, feature_importance, fit, tune_threshold, BoostedModel, GbdtParams, Metrics,
    ThresholdObjective,
};
use crate::geo::{hotspots, hotspots_geojson, kde, silverman_bandwidth, DensitySurface, GridSpec, Hotspots, KdeOptions};
use crate::rng::{SeedStreams, SPLIT};
use crate::stats::{compare_groups, Comparison, TTestVariant, TestLevel};
use crate::synth::{BLOCK_GROUPS_FILE, BUILDINGS_FILE, COMPLAINTS_FILE, VIOLATIONS_FILE};

pub const MODEL_FORMAT: &str = "propensity-violation-model";
pub const MODEL_VERSION: u32 = 1;

/// Buildings with per-season event counts, and the block groups they sit in.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub buildings: Vec<BuildingRecord>,
    pub block_groups: Vec<BlockGroupProfile>,
    pub report: AttachReport,
    pub building_rejections: Vec<Rejection>,
    pub block_group_rejections: Vec<Rejection>,
    pub event_rejections: usize,
}

/// Loads the four input tables of a dataset directory.
pub fn ingest_dir(dir: impl AsRef<Path>, opts: &LoadOptions) -> Result<Ingested> {
    let dir = dir.as_ref();
    ingest(
        &dir.join(BUILDINGS_FILE),
        &dir.join(COMPLAINTS_FILE),
        &dir.join(VIOLATIONS_FILE),
        &dir.join(BLOCK_GROUPS_FILE),
        opts,
    )
}

pub fn ingest(
    buildings: &Path,
    complaints: &Path,
    violations: &Path,
    block_groups: &Path,
    opts: &LoadOptions,
) -> Result<Ingested> {
    let b = load_buildings(buildings, opts)?;
    let c = load_events(complaints)?;
    let v = load_events(violations)?;
    let g = load_block_groups(block_groups)?;
    let (records, report) = attach_events(b.records, &c.records, &v.records);
    if records.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no valid buildings in {}",
            buildings.display()
        )));
    }
    Ok(Ingested {
        buildings: records,
        block_groups: g.records,
        report,
        building_rejections: b.rejections,
        block_group_rejections: g.rejections,
        event_rejections: c.rejected_rows + v.rejected_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gbdt: GbdtParams,
    pub objective: ThresholdObjective,
    /// Season whose violations the model is evaluated against; the latest
    /// observed season when unset.
    pub target_season: Option<i32>,
    /// Share of buildings held out for threshold tuning and evaluation.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gbdt: GbdtParams::default(),
            objective: ThresholdObjective::Youden,
            target_season: None,
            holdout_fraction: 0.2,
        }
    }
}

/// Encoder, boosted trees and decision threshold as one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationModel {
    pub format: String,
    pub version: u32,
    pub target_season: HeatingSeason,
    pub objective: ThresholdObjective,
    pub encoder: FeatureEncoder,
    pub gbdt: BoostedModel,
}

impl ViolationModel {
    pub fn threshold(&self) -> f64 {
        self.gbdt.threshold
    }

    pub fn predict_proba(&self, b: &BuildingRecord) -> Result<f64> {
        self.gbdt.predict_proba(&self.encoder.encode_row(&b.features))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "expected {MODEL_FORMAT} version {MODEL_VERSION}, found {} version {}",
                m.format, m.version
            )));
        }
        // Re-validates the embedded ensemble.
        BoostedModel::from_json(&serde_json::to_string(&m.gbdt)?)?;
        if m.encoder.names() != m.gbdt.feature_names {
            return Err(Error::ModelFormat("encoder and ensemble disagree on features".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub target_season: HeatingSeason,
    /// Seasons whose violations make up the training label.
    pub label_seasons: Vec<HeatingSeason>,
    pub objective: ThresholdObjective,
    pub threshold: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    /// Held-out buildings against their target-season violations.
    pub holdout: Metrics,
    /// Held-out buildings against the training label, on which the
    /// threshold was tuned.
    pub holdout_training_label: Metrics,
    pub training_deviance: Vec<f64>,
    pub feature_importance: Vec<(String, f64)>,
}

/// Season-based training: the label is any violation in the seasons before
/// the target, and held-out buildings are scored against the target season.
/// With a single season both use that season's violations.
pub fn train(buildings: &[BuildingRecord], seasons: &[HeatingSeason], cfg: &TrainConfig) -> Result<(ViolationModel, TrainReport)> {
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout_fraction {} outside (0, 1)",
            cfg.holdout_fraction
        )));
    }
    let Some(&latest) = seasons.last() else {
        return Err(Error::DegenerateLabels("no heating season has any event".into()));
    };
    let target = cfg.target_season.map_or(latest, HeatingSeason::new);
    if !seasons.contains(&target) {
        return Err(Error::InvalidParameter(format!("target season {target} has no events")));
    }
    let mut label_seasons: Vec<HeatingSeason> = seasons.iter().copied().filter(|s| *s < target).collect();
    if label_seasons.is_empty() {
        label_seasons.push(target);
    }
    let train_label = |b: &BuildingRecord| label_seasons.iter().any(|s| b.violated_in(*s));
    let target_label = |b: &BuildingRecord| b.violated_in(target);

    let mut order: Vec<usize> = (0..buildings.len()).collect();
    order.shuffle(&mut SeedStreams::new(cfg.gbdt.seed).rng(SPLIT));
    let n_holdout = ((buildings.len() as f64) * cfg.holdout_fraction).round() as usize;
    let (holdout, train_idx) = order.split_at(n_holdout);
    let mut train_idx = train_idx.to_vec();
    let mut holdout = holdout.to_vec();
    train_idx.sort_unstable();
    holdout.sort_unstable();

    let train_b: Vec<&BuildingRecord> = train_idx.iter().map(|&i| &buildings[i]).collect();
    let hold_b: Vec<&BuildingRecord> = holdout.iter().map(|&i| &buildings[i]).collect();
    let encoder = FeatureEncoder::fit(train_b.iter().map(|b| &b.features))?;
    let data = encoder.encode(train_b.iter().map(|b| &b.features))?;
    let labels: Vec<bool> = train_b.iter().map(|b| train_label(b)).collect();
    let mut gbdt = fit(&data, &labels, &cfg.gbdt)?;

    let hold_data = encoder.encode(hold_b.iter().map(|b| &b.features))?;
    let scores = gbdt.predict_dataset(&hold_data)?;
    let hold_train_labels: Vec<bool> = hold_b.iter().map(|b| train_label(b)).collect();
    let hold_target_labels: Vec<bool> = hold_b.iter().map(|b| target_label(b)).collect();
    let threshold = tune_threshold(&scores, &hold_train_labels, cfg.objective)?;
    gbdt.threshold = threshold;

    let report = TrainReport {
        target_season: target,
        label_seasons,
        objective: cfg.objective,
        threshold,
        n_train: train_idx.len(),
        n_holdout: holdout.len(),
        holdout: evaluate_scores(&scores, &hold_target_labels, threshold)?,
        holdout_training_label: evaluate_scores(&scores, &hold_train_labels, threshold)?,
        training_deviance: gbdt.meta.training_deviance.clone(),
        feature_importance: feature_importance(&gbdt),
    };
    let model = ViolationModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        target_season: target,
        objective: cfg.objective,
        encoder,
        gbdt,
    };
    Ok((model, report))
}

/// Classifies every building for `season` (the model's target season when
/// unset) against the model's threshold.
pub fn classify_buildings(
    model: &ViolationModel,
    buildings: &[BuildingRecord],
    season: Option<HeatingSeason>,
) -> Result<(Vec<ClassifiedBuilding>, ClassificationSummary)> {
    let season = season.unwrap_or(model.target_season);
    let threshold = model.threshold();
    let classified = buildings
        .iter()
        .map(|b| {
            Ok(ClassifiedBuilding::new(
                b.bbl.clone(),
                b.block_group_id.clone(),
                b.x,
                b.y,
                model.predict_proba(b)?,
                threshold,
                b.complaints_in(season),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(classified.iter().map(|c| c.building_type), Some(season), threshold)?;
    Ok((classified, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotConfig {
    /// Kernel bandwidth in metres; the rule-of-thumb value when unset.
    pub bandwidth: Option<f64>,
    pub cell_size: f64,
    /// Grid padding around the points, in bandwidths.
    pub pad_bandwidths: f64,
    pub quantile: f64,
    pub cutoff_bandwidths: Option<f64>,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        Self {
            bandwidth: None,
            cell_size: 250.0,
            pad_bandwidths: 4.0,
            quantile: 0.95,
            cutoff_bandwidths: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirectionHotspots {
    pub direction: Direction,
    pub surface: DensitySurface,
    pub hotspots: Hotspots,
}

impl DirectionHotspots {
    pub fn geojson(&self, extra: &Map<String, Value>) -> Value {
        let mut props = extra.clone();
        props.insert("direction".into(), json!(self.direction.label()));
        props.insert("bandwidth".into(), json!(self.surface.bandwidth));
        hotspots_geojson(&self.hotspots, &props)
    }
}

/// Density surface and hotspots of the buildings mismatched in `direction`.
pub fn hotspot_direction(classified: &[ClassifiedBuilding], direction: Direction, cfg: &HotspotConfig) -> Result<DirectionHotspots> {
    let points: Vec<(f64, f64)> = classified
        .iter()
        .filter(|c| c.building_type.direction() == Some(direction))
        .map(|c| (c.x, c.y))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyInput(format!("no {} buildings", direction.label())));
    }
    let bandwidth = match cfg.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&points)?,
    };
    if !(cfg.pad_bandwidths >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pad_bandwidths {} must be non-negative",
            cfg.pad_bandwidths
        )));
    }
    let grid = GridSpec::covering(&points, cfg.pad_bandwidths * bandwidth, cfg.cell_size)?;
    let surface = kde(
        &points,
        bandwidth,
        &grid,
        &KdeOptions {
            cutoff_bandwidths: cfg.cutoff_bandwidths,
        },
    )?;
    let hotspots = hotspots(&surface, cfg.quantile)?;
    Ok(DirectionHotspots {
        direction,
        surface,
        hotspots,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub level: TestLevel,
    pub variant: TTestVariant,
}

pub fn compare(classified: &[ClassifiedBuilding], profiles: &[BlockGroupProfile], cfg: &CompareConfig) -> Result<Comparison> {
    compare_groups(classified, profiles, cfg.level, cfg.variant)
}

pub const CLASSIFIED_COLUMNS: [&str; 11] = [
    "bbl",
    "block_group_id",
    "x",
    "y",
    "predicted_probability",
    "predicted_violation",
    "complained",
    "complaint_count",
    "type",
    "group",
    "direction",
];

pub fn write_classified(path: impl AsRef<Path>, rows: &[ClassifiedBuilding]) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::csv(path, e);
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_record(CLASSIFIED_COLUMNS).map_err(wrap)?;
    for c in rows {
        let t = c.building_type;
        w.write_record([
            c.bbl.clone(),
            c.block_group_id.clone(),
            c.x.to_string(),
            c.y.to_string(),
            c.predicted_probability.to_string(),
            c.predicted_violation.to_string(),
            c.complained.to_string(),
            c.complaint_count.to_string(),
            t.label().to_string(),
            t.group().label().to_string(),
            t.direction().map(|d| d.label().to_string()).unwrap_or_default(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a classification written by [`write_classified`]. The stored type
/// must agree with the stored prediction and complaint flags.
pub fn load_classified(path: impl AsRef<Path>) -> Result<Vec<ClassifiedBuilding>> {
    let path = path.as_ref();
    let wrap = |e| Error::csv(path, e);
    let mut r = csv::Reader::from_reader(File::open(path).map_err(|e| Error::io(path, e))?);
    let headers = r.headers().map_err(wrap)?.clone();
    let mut col = HashMap::new();
    for name in CLASSIFIED_COLUMNS {
        let k = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
        col.insert(name, k);
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(wrap)?;
        let row = i + 1;
        let get = |name: &str| rec.get(col[name]).unwrap_or("");
        let bad = |field: &str| Error::ModelFormat(format!("{}: row {row}: invalid `{field}`", path.display()));
        let num = |field: &str| get(field).parse::<f64>().map_err(|_| bad(field));
        let flag = |field: &str| get(field).parse::<bool>().map_err(|_| bad(field));
        let t: BuildingType = get("type").parse().map_err(|_| bad("type"))?;
        let c = ClassifiedBuilding {
            bbl: get("bbl").to_string(),
            block_group_id: get("block_group_id").to_string(),
            x: num("x")?,
            y: num("y")?,
            predicted_probability: num("predicted_probability")?,
            predicted_violation: flag("predicted_violation")?,
            complained: flag("complained")?,
            complaint_count: get("complaint_count").parse().map_err(|_| bad("complaint_count"))?,
            building_type: t,
        };
        if crate::classify::classify_building(c.predicted_violation, c.complained) != t {
            return Err(bad("type"));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn write_surface(path: impl AsRef<Path>, s: &DensitySurface) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::csv(path, e);
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_record(["x", "y", "density"]).map_err(wrap)?;
    for row in 0..s.grid.n_rows {
        for c in 0..s.grid.n_cols {
            let (x, y) = s.grid.center(c, row);
            w.write_record([x.to_string(), y.to_string(), s.value(c, row).to_string()])
                .map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const TTEST_COLUMNS: [&str; 9] = [
    "feature",
    "t",
    "df",
    "p",
    "p_bonferroni",
    "mean_under",
    "mean_over",
    "n_under",
    "n_over",
];

pub fn write_ttests(path: impl AsRef<Path>, c: &Comparison) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::csv(path, e);
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_record(TTEST_COLUMNS).map_err(wrap)?;
    for r in &c.rows {
        let t = &r.test;
        w.write_record([
            t.feature.clone(),
            t.t_value.to_string(),
            t.degrees_of_freedom.to_string(),
            t.p_value.to_string(),
            r.p_bonferroni.to_string(),
            t.mean_under.to_string(),
            t.mean_over.to_string(),
            t.n_under.to_string(),
            t.n_over.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn city() -> Ingested {
        let cfg = SynthConfig {
            n_buildings: 3_000,
            n_block_groups: 60,
            seed: 11,
            ..SynthConfig::paper_like()
        };
        let dir = tempfile::tempdir().unwrap();
        generate(&cfg).unwrap().write(dir.path()).unwrap();
        ingest_dir(dir.path(), &LoadOptions::default()).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            gbdt: GbdtParams {
                n_trees: 30,
                ..GbdtParams::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn stages_compose_in_memory() {
        let data = city();
        assert_eq!(data.report.seasons.len(), 4);
        let (model, report) = train(&data.buildings, &data.report.seasons, &quick()).unwrap();
        assert_eq!(report.target_season, HeatingSeason::new(2016));
        assert_eq!(report.label_seasons.len(), 3);
        assert_eq!(report.n_train + report.n_holdout, data.buildings.len());
        let (classified, summary) = classify_buildings(&model, &data.buildings, None).unwrap();
        assert_eq!(summary.total as usize, data.buildings.len());
        let hs = hotspot_direction(&classified, Direction::UnderReporting, &HotspotConfig::default()).unwrap();
        assert!(hs.surface.mass() > 0.95 && hs.surface.mass() <= 1.0 + 1e-9);
        let cmp = compare(&classified, &data.block_groups, &CompareConfig::default()).unwrap();
        assert_eq!(cmp.rows.len(), 13);
    }

    #[test]
    fn model_and_classification_round_trip() {
        let data = city();
        let (model, _) = train(&data.buildings, &data.report.seasons, &quick()).unwrap();
        let back = ViolationModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let (classified, _) = classify_buildings(&back, &data.buildings, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("classified.csv");
        write_classified(&p, &classified).unwrap();
        assert_eq!(load_classified(&p).unwrap(), classified);
    }

    #[test]
    fn foreign_model_document_is_rejected() {
        let data = city();
        let (model, _) = train(&data.buildings, &data.report.seasons, &quick()).unwrap();
        let tampered = model.to_json().unwrap().replace(MODEL_FORMAT, "something-else");
        assert!(matches!(ViolationModel::from_json(&tampered), Err(Error::ModelFormat(_))));
    }
}
