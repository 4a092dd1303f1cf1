//! Browser bindings. Every operation returns a JSON string so the page needs
//! no generated type definitions.
//!
//! The [`City`] type and [`welch_json`] hold the logic and run natively as
//! well; the `wasm_bindgen` wrappers only translate errors.

use propensity_core::classify::{ClassificationSummary, ClassifiedBuilding, Direction};
use propensity_core::data::{attach_events, BlockGroupProfile};
use propensity_core::gbdt::GbdtParams;
use propensity_core::pipeline::{
    classify_buildings, compare, hotspot_direction, train, CompareConfig, HotspotConfig, TrainConfig, TrainReport,
};
use propensity_core::stats::{welch_t, TestLevel};
use propensity_core::synth::{generate, SynthConfig};
use propensity_core::{Error, Result};
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

/// A generated city after training and classification.
pub struct City {
    classified: Vec<ClassifiedBuilding>,
    block_groups: Vec<BlockGroupProfile>,
    summary: ClassificationSummary,
    report: TrainReport,
    oracle_balanced_accuracy: f64,
}

impl City {
    /// `preset` is `paper-like` (injected reporting bias) or `null`.
    pub fn build(n_buildings: usize, seed: u64, preset: &str, n_trees: usize) -> Result<Self> {
        let base = match preset {
            "paper-like" => SynthConfig::paper_like(),
            "null" => SynthConfig::default(),
            other => return Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
        };
        let cfg = SynthConfig {
            n_buildings,
            n_block_groups: (n_buildings / 50).max(4),
            seed,
            ..base
        };
        let city = generate(&cfg)?;
        let (buildings, events) = attach_events(city.buildings, &city.complaints, &city.violations);
        let tc = TrainConfig {
            gbdt: GbdtParams {
                n_trees,
                seed,
                ..GbdtParams::default()
            },
            ..TrainConfig::default()
        };
        let (model, report) = train(&buildings, &events.seasons, &tc)?;
        let (classified, summary) = classify_buildings(&model, &buildings, None)?;
        Ok(Self {
            classified,
            block_groups: city.block_groups,
            summary,
            report,
            oracle_balanced_accuracy: city.truth.oracle_balanced_accuracy,
        })
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "summary": self.summary,
            "threshold": self.report.threshold,
            "holdout": self.report.holdout,
            "oracle_balanced_accuracy": self.oracle_balanced_accuracy,
            "feature_importance": self.report.feature_importance,
        })
    }

    /// Building coordinates with their type index 0..=3.
    pub fn points_json(&self) -> Value {
        let xs: Vec<f64> = self.classified.iter().map(|c| c.x).collect();
        let ys: Vec<f64> = self.classified.iter().map(|c| c.y).collect();
        let types: Vec<usize> = self.classified.iter().map(|c| c.building_type.index()).collect();
        json!({ "x": xs, "y": ys, "type": types })
    }

    /// Density grid and hotspot polygons for one mismatch direction.
    pub fn hotspots_json(&self, direction: &str, bandwidth: Option<f64>, quantile: f64) -> Result<Value> {
        let direction = match direction {
            "under_reporting" => Direction::UnderReporting,
            "over_reporting" => Direction::OverReporting,
            other => return Err(Error::InvalidParameter(format!("unknown direction `{other}`"))),
        };
        let cfg = HotspotConfig {
            bandwidth,
            quantile,
            ..HotspotConfig::default()
        };
        let hs = hotspot_direction(&self.classified, direction, &cfg)?;
        let g = hs.surface.grid;
        Ok(json!({
            "grid": g,
            "bandwidth": hs.surface.bandwidth,
            "values": hs.surface.values,
            "max": hs.surface.max(),
            "threshold": hs.hotspots.threshold,
            "geojson": hs.geojson(&Map::new()),
        }))
    }

    /// `level` is `building` or `blockgroup`.
    pub fn compare_json(&self, level: &str) -> Result<Value> {
        let level: TestLevel = level.parse()?;
        let cmp = compare(
            &self.classified,
            &self.block_groups,
            &CompareConfig {
                level,
                ..CompareConfig::default()
            },
        )?;
        Ok(serde_json::to_value(&cmp)?)
    }
}

fn parse_sample(s: &str, which: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("sample {which}: `{t}` is not a number")))
        })
        .collect()
}

/// Welch test on two samples typed as comma- or space-separated numbers.
pub fn welch_json(a: &str, b: &str) -> Result<Value> {
    let r = welch_t(&parse_sample(a, "a")?, &parse_sample(b, "b")?)?;
    Ok(serde_json::to_value(&r)?)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    city: City,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n_buildings: usize, seed: u32, preset: &str, n_trees: usize) -> Result<Demo, JsError> {
        City::build(n_buildings, u64::from(seed), preset, n_trees)
            .map(|city| Demo { city })
            .map_err(js)
    }

    pub fn summary(&self) -> String {
        self.city.summary_json().to_string()
    }

    pub fn points(&self) -> String {
        self.city.points_json().to_string()
    }

    /// A non-positive `bandwidth` selects the rule-of-thumb value.
    pub fn hotspots(&self, direction: &str, bandwidth: f64, quantile: f64) -> Result<String, JsError> {
        let bw = (bandwidth > 0.0).then_some(bandwidth);
        self.city.hotspots_json(direction, bw, quantile).map(|v| v.to_string()).map_err(js)
    }

    pub fn compare(&self, level: &str) -> Result<String, JsError> {
        self.city.compare_json(level).map(|v| v.to_string()).map_err(js)
    }
}

#[wasm_bindgen]
pub fn welch(a: &str, b: &str) -> Result<String, JsError> {
    welch_json(a, b).map(|v| v.to_string()).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_city_round_trip() {
        let c = City::build(2_000, 3, "paper-like", 20).unwrap();
        let s = c.summary_json();
        assert_eq!(s["summary"]["total"], 2_000);
        assert_eq!(c.points_json()["x"].as_array().unwrap().len(), 2_000);
        let h = c.hotspots_json("under_reporting", None, 0.9).unwrap();
        let g = &h["grid"];
        let cells = g["n_cols"].as_u64().unwrap() * g["n_rows"].as_u64().unwrap();
        assert_eq!(h["values"].as_array().unwrap().len() as u64, cells);
        assert_eq!(h["geojson"]["type"], "FeatureCollection");
        let cmp = c.compare_json("building").unwrap();
        assert_eq!(cmp["rows"].as_array().unwrap().len(), 13);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(City::build(500, 1, "nope", 5).is_err());
        let c = City::build(1_000, 1, "null", 5).unwrap();
        assert!(c.hotspots_json("sideways", None, 0.9).is_err());
        assert!(c.compare_json("county").is_err());
    }

    #[test]
    fn welch_parses_free_text() {
        let v = welch_json("1, 2 3", "2;3\n4").unwrap();
        assert!((v["t_value"].as_f64().unwrap() + 1.224744871391589).abs() < 1e-12);
        assert_eq!(v["degrees_of_freedom"], 4.0);
        assert!(welch_json("1 x", "2 3").is_err());
        assert!(welch_json("1", "2 3").is_err());
    }
}
