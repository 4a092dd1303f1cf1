//! The six pipeline stages. Each one reads its inputs from disk or from the
//! previous stage, writes its artifacts under the output directory and
//! returns a record of what it touched.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use propensity_core::classify::{ClassifiedBuilding, Direction};
use propensity_core::data::{block_group_rates, write_rates, write_rejections, HeatingSeason};
use propensity_core::pipeline::{
    classify_buildings, compare, hotspot_direction, ingest, load_classified, train, write_classified,
    write_surface, write_ttests, Ingested, ViolationModel,
};
use propensity_core::synth::{generate_to, SynthConfig};
use propensity_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{require_inputs, sha256_file, InputPaths, RunConfig};
use crate::error::CliError;

pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const CLASSIFIED_FILE: &str = "classified.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TTESTS_FILE: &str = "ttests.csv";
pub const REJECTS_FILE: &str = "rejects.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const INGEST_FILE: &str = "ingest.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_DIR: &str = "data";

pub fn surface_file(d: Direction) -> String {
    format!("surface_{}.csv", d.label())
}

pub fn hotspots_file(d: Direction) -> String {
    format!("hotspots_{}.geojson", d.label())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// `ran` or `skipped`.
    pub status: String,
    pub seconds: f64,
    /// Path to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StageRecord {
    pub fn skipped(name: &str, note: &str) -> Self {
        Self {
            name: name.into(),
            status: "skipped".into(),
            note: Some(note.into()),
            ..Self::default()
        }
    }
}

/// Tracks one running stage.
pub struct Stage {
    record: StageRecord,
    started: Instant,
}

impl Stage {
    pub fn start(name: &str) -> Self {
        log::info!("stage {name}");
        Self {
            record: StageRecord {
                name: name.into(),
                status: "ran".into(),
                ..StageRecord::default()
            },
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, p: &Path) -> Result<(), CliError> {
        self.record.inputs.insert(display(p), sha256_file(p)?);
        Ok(())
    }

    pub fn output(&mut self, p: &Path) -> Result<(), CliError> {
        self.record.outputs.insert(display(p), sha256_file(p)?);
        Ok(())
    }

    pub fn finish(mut self) -> StageRecord {
        self.record.seconds = self.started.elapsed().as_secs_f64();
        self.record
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub config_hash: String,
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    /// `seed` and `config_hash` merged into a JSON report.
    fn stamped(&self, value: Value) -> Value {
        let mut m = Map::new();
        m.insert("seed".into(), json!(self.cfg.seed));
        m.insert("config_hash".into(), json!(self.config_hash));
        match value {
            Value::Object(o) => m.extend(o),
            other => {
                m.insert("value".into(), other);
            }
        }
        Value::Object(m)
    }

    fn write_json(&self, path: &Path, value: Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(&self.stamped(value)).map_err(Error::from)?;
        s.push('\n');
        fs::write(path, s).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn ensure_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.cfg.out)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", self.cfg.out.display())))
    }

    pub fn synth(&self, synth: &SynthConfig, dir: &Path) -> Result<StageRecord, CliError> {
        let mut st = Stage::start("synth");
        generate_to(synth, dir)?;
        for f in fs::read_dir(dir)
            .map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?
            .flatten()
            .map(|e| e.path())
            .collect::<std::collections::BTreeSet<_>>()
        {
            st.output(&f)?;
        }
        Ok(st.finish())
    }

    pub fn ingest(&self, paths: &InputPaths) -> Result<(Ingested, StageRecord), CliError> {
        require_inputs(paths)?;
        let mut st = Stage::start("ingest");
        for p in paths.all() {
            st.input(p)?;
        }
        let data = ingest(
            &paths.buildings,
            &paths.complaints,
            &paths.violations,
            &paths.block_groups,
            &self.cfg.input.load_options(),
        )?;
        let rejects = self.out(REJECTS_FILE);
        let mut all = data.building_rejections.clone();
        all.extend(data.block_group_rejections.iter().cloned());
        write_rejections(&rejects, &all)?;
        st.output(&rejects)?;
        let rates = self.out(RATES_FILE);
        let season = data.report.seasons.last().copied();
        let rate_rows = season
            .map(|s| block_group_rates(&data.buildings, &data.block_groups, s))
            .unwrap_or_default();
        write_rates(&rates, &rate_rows)?;
        st.output(&rates)?;
        let report = self.out(INGEST_FILE);
        self.write_json(
            &report,
            json!({
                "buildings": data.buildings.len(),
                "block_groups": data.block_groups.len(),
                "rejected_buildings": data.building_rejections.iter().map(|r| r.row).collect::<std::collections::BTreeSet<_>>().len(),
                "rejected_block_groups": data.block_group_rejections.iter().map(|r| r.row).collect::<std::collections::BTreeSet<_>>().len(),
                "rejected_events": data.event_rejections,
                "rate_season": season,
                "events": data.report,
            }),
        )?;
        st.output(&report)?;
        Ok((data, st.finish()))
    }

    pub fn train(&self, data: &Ingested) -> Result<(ViolationModel, StageRecord), CliError> {
        let mut st = Stage::start("train");
        let (model, report) = train(&data.buildings, &data.report.seasons, &self.cfg.train)?;
        let model_path = self.out(MODEL_FILE);
        model.save(&model_path)?;
        st.output(&model_path)?;
        let metrics = self.out(METRICS_FILE);
        self.write_json(&metrics, serde_json::to_value(&report).map_err(Error::from)?)?;
        st.output(&metrics)?;
        log::info!(
            "holdout balanced accuracy {:.3} at threshold {:.4}",
            report.holdout.balanced_accuracy,
            report.threshold
        );
        Ok((model, st.finish()))
    }

    pub fn load_model(&self, path: &Path) -> Result<ViolationModel, CliError> {
        if !path.is_file() {
            return Err(CliError::Usage(format!("model file {} does not exist", path.display())));
        }
        Ok(ViolationModel::load(path)?)
    }

    pub fn classify(
        &self,
        data: &Ingested,
        model: &ViolationModel,
        model_path: &Path,
        season: Option<HeatingSeason>,
    ) -> Result<(Vec<ClassifiedBuilding>, StageRecord), CliError> {
        let mut st = Stage::start("classify");
        st.input(model_path)?;
        let (classified, summary) = classify_buildings(model, &data.buildings, season)?;
        let path = self.out(CLASSIFIED_FILE);
        write_classified(&path, &classified)?;
        st.output(&path)?;
        let sp = self.out(SUMMARY_FILE);
        self.write_json(&sp, serde_json::to_value(&summary).map_err(Error::from)?)?;
        st.output(&sp)?;
        Ok((classified, st.finish()))
    }

    pub fn read_classified(&self, path: &Path) -> Result<Vec<ClassifiedBuilding>, CliError> {
        if !path.is_file() {
            return Err(CliError::Usage(format!("classified file {} does not exist", path.display())));
        }
        Ok(load_classified(path)?)
    }

    pub fn hotspot(&self, classified: &[ClassifiedBuilding], source: &Path) -> Result<StageRecord, CliError> {
        let mut st = Stage::start("hotspot");
        st.input(source)?;
        let mut skipped = Vec::new();
        for direction in [Direction::UnderReporting, Direction::OverReporting] {
            let hs = match hotspot_direction(classified, direction, &self.cfg.hotspot) {
                Err(Error::EmptyInput(msg)) => {
                    log::warn!("no hotspot map for {}: {msg}", direction.label());
                    skipped.push(direction.label());
                    continue;
                }
                other => other?,
            };
            let sp = self.out(&surface_file(direction));
            write_surface(&sp, &hs.surface)?;
            st.output(&sp)?;
            let mut props = Map::new();
            props.insert("seed".into(), json!(self.cfg.seed));
            props.insert("config_hash".into(), json!(self.config_hash));
            let gp = self.out(&hotspots_file(direction));
            let mut s = serde_json::to_string_pretty(&hs.geojson(&props)).map_err(Error::from)?;
            s.push('\n');
            fs::write(&gp, s).map_err(|e| CliError::Data(format!("cannot write {}: {e}", gp.display())))?;
            st.output(&gp)?;
        }
        let mut rec = st.finish();
        if !skipped.is_empty() {
            rec.note = Some(format!("no buildings for {}", skipped.join(", ")));
        }
        Ok(rec)
    }

    pub fn compare(
        &self,
        classified: &[ClassifiedBuilding],
        data: &Ingested,
        source: &Path,
    ) -> Result<StageRecord, CliError> {
        let mut st = Stage::start("compare");
        st.input(source)?;
        let cmp = compare(classified, &data.block_groups, &self.cfg.compare)?;
        let path = self.out(TTESTS_FILE);
        write_ttests(&path, &cmp)?;
        st.output(&path)?;
        Ok(st.finish())
    }

    /// Provenance written next to the artifacts of one stand-alone command.
    pub fn write_run_record(&self, command: &str, stages: Vec<StageRecord>) -> Result<(), CliError> {
        let path = self.out(&format!("{command}.run.json"));
        self.write_json(&path, self.provenance(stages))
    }

    pub fn write_manifest(&self, stages: Vec<StageRecord>) -> Result<PathBuf, CliError> {
        let path = self.out(MANIFEST_FILE);
        self.write_json(&path, self.provenance(stages))?;
        Ok(path)
    }

    fn provenance(&self, stages: Vec<StageRecord>) -> Value {
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": propensity_core::VERSION,
            "model_format": propensity_core::pipeline::MODEL_FORMAT,
            "model_version": propensity_core::pipeline::MODEL_VERSION,
            "seed_streams": ["sampling", "split", "synth"],
            "config": self.cfg,
            "stages": stages,
        })
    }
}
