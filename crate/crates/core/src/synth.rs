//! Synthetic city with known violation risk and reporting propensity.
//!
//! Block groups get spatially smooth, correlated demographics. Buildings get
//! physical attributes drawn independently of where they stand, a latent
//! violation probability driven by those attributes, and complaints whose
//! probability given a violation depends only on block-group demographics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{
    write_block_groups, write_buildings, write_events, BasementCode, BlockGroupProfile, BoilerType,
    BuildingRecord, Categorical, Demographic, Event, FeatureVector, HeatingSeason, OwnershipType, ProximityCode,
    NUMERIC_FEATURES,
};
use crate::error::{Error, Result};
use crate::gbdt::sigmoid;
use crate::rng::{SeedStreams, SYNTH};
use crate::stats::race_diversity;

pub const BUILDINGS_FILE: &str = "buildings.csv";
pub const COMPLAINTS_FILE: &str = "complaints.csv";
pub const VIOLATIONS_FILE: &str = "violations.csv";
pub const BLOCK_GROUPS_FILE: &str = "blockgroups.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Largest allowed gap between the realized and configured violation rate.
pub const CALIBRATION_TOLERANCE: f64 = 0.003;

pub const RACES: [&str; 5] = ["white", "black", "hispanic", "asian", "other"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_buildings: usize,
    pub n_block_groups: usize,
    pub seed: u64,
    pub first_season: i32,
    pub n_seasons: usize,
    /// Share of building-seasons with a violation.
    pub violation_base_rate: f64,
    /// Log-odds per standard deviation of each numeric building attribute.
    pub risk_weights: BTreeMap<String, f64>,
    /// Standard deviation of a per-building log-odds term no attribute explains.
    pub noise_sd: f64,
    /// Log-odds of complaining per standard deviation of each demographic.
    pub propensity_weights: BTreeMap<String, f64>,
    pub propensity_intercept: f64,
    /// Probability of a complaint in a season without a violation.
    pub false_complaint_rate: f64,
    /// Poisson mean of extra complaints once a building complains in a season.
    pub extra_complaints_mean: f64,
    /// Loading of demographics on the shared neighbourhood factor, in [0, 1).
    pub demographic_correlation: f64,
    /// Share of the neighbourhood factor that varies smoothly over space.
    pub spatial_smoothness: f64,
    pub city_size_m: f64,
    /// Probability that any numeric attribute cell is left blank.
    pub missing_rate: f64,
    /// Extra events per real event that fall outside the heating season.
    pub off_season_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let risk_weights = [
            ("building_age", 1.4),
            ("boiler_age", 1.1),
            ("value_per_sqft", -0.5),
            ("units", 0.3),
        ];
        Self {
            n_buildings: 20_000,
            n_block_groups: 400,
            seed: 0,
            first_season: 2013,
            n_seasons: 4,
            violation_base_rate: 0.0514,
            risk_weights: risk_weights.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            noise_sd: 1.0,
            propensity_weights: BTreeMap::new(),
            propensity_intercept: 0.5,
            false_complaint_rate: 0.004,
            extra_complaints_mean: 1.0,
            demographic_correlation: 0.7,
            spatial_smoothness: 0.8,
            city_size_m: 15_000.0,
            missing_rate: 0.02,
            off_season_rate: 0.02,
        }
    }
}

impl SynthConfig {
    /// Reporting propensity falls with limited English, unemployment and
    /// minority share and rises with income, age over 70 and education.
    pub fn paper_like() -> Self {
        let weights = [
            ("pct_limited_english", -1.2),
            ("unemployment_rate", -1.2),
            ("pct_minority", -1.2),
            ("median_income", 1.2),
            ("pct_over70", 1.2),
            ("pct_bachelor_plus", 1.2),
        ];
        Self {
            n_buildings: 40_000,
            n_block_groups: 800,
            propensity_weights: weights.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ..Self::default()
        }
    }

    pub fn seasons(&self) -> Vec<HeatingSeason> {
        (0..self.n_seasons)
            .map(|k| HeatingSeason::new(self.first_season + k as i32))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_buildings == 0 || self.n_block_groups == 0 || self.n_seasons == 0 {
            return bad("n_buildings, n_block_groups and n_seasons must be positive".into());
        }
        if !(self.violation_base_rate > 0.0 && self.violation_base_rate < 1.0) {
            return bad(format!("violation_base_rate {} outside (0, 1)", self.violation_base_rate));
        }
        for (name, v) in [
            ("false_complaint_rate", self.false_complaint_rate),
            ("spatial_smoothness", self.spatial_smoothness),
            ("missing_rate", self.missing_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.demographic_correlation) {
            return bad(format!(
                "demographic_correlation {} outside [0, 1)",
                self.demographic_correlation
            ));
        }
        for (name, v) in [
            ("noise_sd", self.noise_sd),
            ("extra_complaints_mean", self.extra_complaints_mean),
            ("off_season_rate", self.off_season_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be a non-negative number"));
            }
        }
        if !(self.city_size_m > 0.0 && self.city_size_m.is_finite()) {
            return bad(format!("city_size_m {} must be positive", self.city_size_m));
        }
        if !self.propensity_intercept.is_finite() {
            return bad("propensity_intercept must be finite".into());
        }
        for (name, w) in &self.risk_weights {
            if !NUMERIC_FEATURES.contains(&name.as_str()) {
                return bad(format!("unknown risk feature `{name}`"));
            }
            if !w.is_finite() {
                return bad(format!("risk weight for `{name}` is not finite"));
            }
        }
        for (name, w) in &self.propensity_weights {
            if Demographic::from_name(name).is_none() {
                return bad(format!("unknown demographic `{name}`"));
            }
            if !w.is_finite() {
                return bad(format!("propensity weight for `{name}` is not finite"));
            }
        }
        Ok(())
    }
}

/// Location and scale used to standardize one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTruth {
    pub season: HeatingSeason,
    pub violation_rate: f64,
    pub complaint_rate: f64,
}

/// Every latent parameter and realized summary of a generated city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config: SynthConfig,
    pub risk_intercept: f64,
    pub risk_standardization: BTreeMap<String, Standardization>,
    pub demographic_standardization: BTreeMap<String, Standardization>,
    /// Correlation of each demographic's latent score with the shared factor.
    pub demographic_loadings: BTreeMap<String, f64>,
    /// Standard deviation of the latent violation log-odds across buildings.
    pub risk_logit_sd: f64,
    /// Standard deviation of the complaint log-odds across buildings.
    pub propensity_logit_sd: f64,
    /// Balanced accuracy of the true violation probabilities on the last
    /// season at their best threshold: a ceiling for any model.
    pub oracle_balanced_accuracy: f64,
    pub realized_violation_rate: f64,
    pub realized_complaint_given_violation: f64,
    pub realized_false_complaint_rate: f64,
    pub seasons: Vec<SeasonTruth>,
    pub n_complaint_events: usize,
    pub n_violation_events: usize,
    pub n_off_season_events: usize,
}

/// A generated city held in memory. Building records already carry the
/// per-season counts implied by the in-season events.
#[derive(Debug, Clone)]
pub struct SynthCity {
    pub buildings: Vec<BuildingRecord>,
    pub block_groups: Vec<BlockGroupProfile>,
    pub complaints: Vec<Event>,
    pub violations: Vec<Event>,
    pub truth: Truth,
    /// True violation probability of each building in every season.
    pub violation_probability: Vec<f64>,
    /// True probability of complaining given a violation, per building.
    pub complaint_probability: Vec<f64>,
}

impl SynthCity {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_buildings(dir.join(BUILDINGS_FILE), &self.buildings)?;
        write_events(dir.join(COMPLAINTS_FILE), &self.complaints)?;
        write_events(dir.join(VIOLATIONS_FILE), &self.violations)?;
        write_block_groups(dir.join(BLOCK_GROUPS_FILE), &self.block_groups)?;
        let truth = dir.join(TRUTH_FILE);
        let mut json = serde_json::to_string_pretty(&self.truth)?;
        json.push('\n');
        fs::write(&truth, json).map_err(|e| Error::io(&truth, e))
    }
}

/// Writes a generated city to `dir` and returns it.
pub fn generate_to(config: &SynthConfig, dir: impl AsRef<Path>) -> Result<SynthCity> {
    let city = generate(config)?;
    city.write(dir)?;
    Ok(city)
}

pub fn generate(config: &SynthConfig) -> Result<SynthCity> {
    config.validate()?;
    let streams = SeedStreams::new(config.seed);
    let stream = |part: &str| streams.rng(&format!("{SYNTH}/{part}"));

    let (block_groups, centers, cell) = block_groups(config, &mut stream("block-groups"));
    let demo_std = standardize_demographics(&block_groups);
    let bg_propensity: Vec<f64> = block_groups
        .iter()
        .map(|bg| {
            config.propensity_intercept
                + config
                    .propensity_weights
                    .iter()
                    .map(|(name, w)| {
                        let d = Demographic::from_name(name).expect("validated");
                        let s = demo_std[name];
                        w * (bg.value(d) - s.mean) / s.sd
                    })
                    .sum::<f64>()
        })
        .collect();

    let mut rng = stream("buildings");
    let n = config.n_buildings;
    let mut buildings = Vec::with_capacity(n);
    let mut truth_features = Vec::with_capacity(n);
    let mut bg_of = Vec::with_capacity(n);
    for i in 0..n {
        let g = rng.random_range(0..block_groups.len());
        let (cx, cy) = centers[g];
        let x = cx + (rng.random::<f64>() - 0.5) * cell;
        let y = cy + (rng.random::<f64>() - 0.5) * cell;
        let full = building_features(&mut rng);
        truth_features.push(full.numeric().map(|v| v.expect("complete")));
        let features = blank_cells(full, config.missing_rate, &mut rng);
        buildings.push(BuildingRecord {
            bbl: format!("{}", 1_000_000_000u64 + i as u64),
            block_group_id: block_groups[g].block_group_id.clone(),
            x: round_to(x, 0.01),
            y: round_to(y, 0.01),
            features,
            complaint_count: BTreeMap::new(),
            violation_flag: BTreeMap::new(),
        });
        bg_of.push(g);
    }

    // Latent risk on standardized complete attributes.
    let mut risk_std = BTreeMap::new();
    let mut linear = vec![0.0; n];
    let noise = Normal::new(0.0, config.noise_sd.max(f64::MIN_POSITIVE)).expect("valid sd");
    for (k, name) in NUMERIC_FEATURES.iter().enumerate() {
        let col: Vec<f64> = truth_features.iter().map(|f| f[k]).collect();
        let s = mean_sd(&col);
        risk_std.insert(name.to_string(), s);
        if let Some(w) = config.risk_weights.get(*name) {
            for (l, v) in linear.iter_mut().zip(&col) {
                *l += w * (v - s.mean) / s.sd;
            }
        }
    }
    let mut noise_rng = stream("risk-noise");
    if config.noise_sd > 0.0 {
        for l in linear.iter_mut() {
            *l += noise.sample(&mut noise_rng);
        }
    }

    let seasons = config.seasons();
    let mut u_rng = stream("violations");
    let uniforms: Vec<f64> = (0..n * seasons.len()).map(|_| u_rng.random::<f64>()).collect();
    let intercept = calibrate_intercept(&linear, &uniforms, config.violation_base_rate)?;
    let p_violation: Vec<f64> = linear.iter().map(|l| sigmoid(intercept + l)).collect();
    let p_complain: Vec<f64> = bg_of.iter().map(|&g| sigmoid(bg_propensity[g])).collect();

    let mut ev_rng = stream("events");
    let extra = (config.extra_complaints_mean > 0.0)
        .then(|| Poisson::new(config.extra_complaints_mean).expect("positive mean"));
    let mut complaints = Vec::new();
    let mut violations = Vec::new();
    let mut off_season = 0usize;
    let (mut n_viol, mut n_viol_complained, mut n_clean, mut n_false) = (0usize, 0usize, 0usize, 0usize);
    let mut season_truth = Vec::new();
    for (si, &season) in seasons.iter().enumerate() {
        let (mut sv, mut sc) = (0usize, 0usize);
        for i in 0..n {
            let violated = uniforms[si * n + i] < p_violation[i];
            let complained = if violated {
                ev_rng.random::<f64>() < p_complain[i]
            } else {
                ev_rng.random::<f64>() < config.false_complaint_rate
            };
            let b = &mut buildings[i];
            if violated {
                n_viol += 1;
                sv += 1;
                n_viol_complained += usize::from(complained);
                violations.push(Event {
                    bbl: b.bbl.clone(),
                    timestamp: in_season(season, &mut ev_rng),
                });
            } else {
                n_clean += 1;
                n_false += usize::from(complained);
            }
            let mut count = 0u32;
            if complained {
                sc += 1;
                count = 1 + extra.as_ref().map_or(0, |p| p.sample(&mut ev_rng) as u32);
                for _ in 0..count {
                    complaints.push(Event {
                        bbl: b.bbl.clone(),
                        timestamp: in_season(season, &mut ev_rng),
                    });
                }
            }
            b.violation_flag.insert(season, violated);
            b.complaint_count.insert(season, count);
        }
        season_truth.push(SeasonTruth {
            season,
            violation_rate: sv as f64 / n as f64,
            complaint_rate: sc as f64 / n as f64,
        });
    }

    let mut off_rng = stream("off-season");
    for (events, _) in [(&mut complaints, 0), (&mut violations, 1)] {
        let k = poisson_count(events.len() as f64 * config.off_season_rate, &mut off_rng);
        for _ in 0..k {
            let bbl = buildings[off_rng.random_range(0..n)].bbl.clone();
            let season = seasons[off_rng.random_range(0..seasons.len())];
            events.push(Event {
                bbl,
                timestamp: off_season_time(season, &mut off_rng),
            });
        }
        off_season += k;
        events.sort_by(|a, b| (a.timestamp, &a.bbl).cmp(&(b.timestamp, &b.bbl)));
    }

    let last = seasons.len() - 1;
    let last_labels: Vec<bool> = (0..n).map(|i| uniforms[last * n + i] < p_violation[i]).collect();
    let truth = Truth {
        config: config.clone(),
        risk_intercept: intercept,
        risk_standardization: risk_std,
        demographic_loadings: Demographic::ALL
            .iter()
            .filter_map(|d| loading(*d).map(|l| (d.name().to_string(), l * config.demographic_correlation)))
            .collect(),
        demographic_standardization: demo_std,
        risk_logit_sd: mean_sd(&linear).sd,
        propensity_logit_sd: mean_sd(&bg_of.iter().map(|&g| bg_propensity[g]).collect::<Vec<_>>()).sd,
        oracle_balanced_accuracy: oracle_balanced_accuracy(&p_violation, &last_labels),
        realized_violation_rate: n_viol as f64 / (n * seasons.len()) as f64,
        realized_complaint_given_violation: ratio(n_viol_complained, n_viol),
        realized_false_complaint_rate: ratio(n_false, n_clean),
        seasons: season_truth,
        n_complaint_events: complaints.len(),
        n_violation_events: violations.len(),
        n_off_season_events: off_season,
    };

    Ok(SynthCity {
        buildings,
        block_groups,
        complaints,
        violations,
        truth,
        violation_probability: p_violation,
        complaint_probability: p_complain,
    })
}

/// Finds the risk intercept whose realized violation rate, under the fixed
/// uniforms, is closest to `target`. The rate is a non-decreasing step
/// function of the intercept, so bisection converges to the target's step.
pub fn calibrate_intercept(linear: &[f64], uniforms: &[f64], target: f64) -> Result<f64> {
    let n = linear.len();
    if n == 0 || uniforms.len() % n != 0 || uniforms.is_empty() {
        return Err(Error::Calibration("no building-seasons to calibrate on".into()));
    }
    let rate = |b: f64| {
        let hits = uniforms
            .iter()
            .enumerate()
            .filter(|(k, u)| **u < sigmoid(b + linear[k % n]))
            .count();
        hits as f64 / uniforms.len() as f64
    };
    let (mut lo, mut hi) = (-40.0, 40.0);
    if rate(lo) > target || rate(hi) < target {
        return Err(Error::Calibration(format!(
            "cannot bracket violation rate {target}: intercepts in [{lo}, {hi}] give [{}, {}]",
            rate(lo),
            rate(hi)
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if (rate(lo) - target).abs() <= (rate(hi) - target).abs() {
        lo
    } else {
        hi
    };
    let realized = rate(best);
    if (realized - target).abs() > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(format!(
            "realized violation rate {realized:.5} misses target {target} by more than {CALIBRATION_TOLERANCE}"
        )));
    }
    Ok(best)
}

/// Correlation of each demographic's latent score with the neighbourhood
/// factor before scaling. `None` for attributes derived from race shares.
fn loading(d: Demographic) -> Option<f64> {
    use Demographic::*;
    Some(match d {
        MedianRent => 0.9,
        MedianIncome => 1.0,
        PctBachelorPlus => 0.9,
        VacancyRate => -0.5,
        PctLimitedEnglish => -0.8,
        UnemploymentRate => -0.8,
        PctMarried => 0.5,
        PctOver70 => 0.5,
        PctFemale => 0.3,
        PctLivingAlone => 0.3,
        RaceDiversity | PctMinority | PctWhite => return None,
    })
}

/// Logistic or log-normal transform of a latent score into a plausible value.
fn demographic_value(d: Demographic, z: f64) -> f64 {
    use Demographic::*;
    match d {
        MedianRent => (1400.0 * (0.35 * z).exp()).round(),
        MedianIncome => (62_000.0 * (0.5 * z).exp()).round(),
        VacancyRate => sigmoid(-2.7 + 0.5 * z),
        PctLimitedEnglish => sigmoid(-1.8 + 0.8 * z),
        PctMarried => sigmoid(-0.4 + 0.4 * z),
        UnemploymentRate => sigmoid(-2.4 + 0.5 * z),
        PctOver70 => sigmoid(-2.4 + 0.4 * z),
        PctBachelorPlus => sigmoid(-0.8 + 0.8 * z),
        PctFemale => sigmoid(0.1 + 0.15 * z),
        PctLivingAlone => sigmoid(-1.2 + 0.4 * z),
        RaceDiversity | PctMinority | PctWhite => unreachable!("derived from race shares"),
    }
}

/// Race share log-odds as (base, slope, factor loading).
const RACE_MODEL: [(f64, f64, f64); 5] = [
    (0.3, 1.2, 0.9),
    (0.0, 1.0, -0.6),
    (0.2, 1.0, -0.7),
    (-0.8, 0.5, 0.3),
    (-2.0, 0.3, 0.0),
];

fn block_groups(config: &SynthConfig, rng: &mut ChaCha8Rng) -> (Vec<BlockGroupProfile>, Vec<(f64, f64)>, f64) {
    let m = config.n_block_groups;
    let cols = (m as f64).sqrt().ceil() as usize;
    let rows = m.div_ceil(cols);
    let cell = config.city_size_m / cols.max(rows) as f64;
    let centers: Vec<(f64, f64)> = (0..m)
        .map(|g| (((g % cols) as f64 + 0.5) * cell, ((g / cols) as f64 + 0.5) * cell))
        .collect();

    // Smooth field: a sum of Gaussian bumps, standardized over block groups.
    let bumps: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.random::<f64>() * config.city_size_m,
                rng.random::<f64>() * config.city_size_m,
                config.city_size_m * (0.15 + 0.2 * rng.random::<f64>()),
                if rng.random::<bool>() { 1.0 } else { -1.0 },
            )
        })
        .collect();
    let field: Vec<f64> = centers
        .iter()
        .map(|&(x, y)| {
            bumps
                .iter()
                .map(|&(bx, by, w, s)| s * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * w * w)).exp())
                .sum()
        })
        .collect();
    let fs = mean_sd(&field);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let smooth = config.spatial_smoothness;
    let rho = config.demographic_correlation;

    let mut out = Vec::with_capacity(m);
    for (g, f_raw) in field.iter().enumerate() {
        let spatial = if fs.sd > 0.0 { (f_raw - fs.mean) / fs.sd } else { 0.0 };
        let factor = smooth * spatial + (1.0 - smooth * smooth).sqrt() * std_normal.sample(rng);
        let population = 300 + (rng.random::<f64>() * 2700.0) as u64;
        let mut latent = |l: f64| {
            let l = (l * rho).clamp(-1.0, 1.0);
            l * factor + (1.0 - l * l).sqrt() * std_normal.sample(rng)
        };
        let logits: Vec<f64> = RACE_MODEL.iter().map(|&(a, b, l)| a + b * latent(l)).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let shares: Vec<f64> = exps.iter().map(|e| e / total).collect();
        let mut profile = BlockGroupProfile {
            block_group_id: format!("bg{g:05}"),
            population,
            median_rent: 0.0,
            race_diversity: race_diversity(&shares).expect("softmax shares"),
            vacancy_rate: 0.0,
            pct_minority: 1.0 - shares[0] - shares[3],
            median_income: 0.0,
            pct_limited_english: 0.0,
            pct_married: 0.0,
            unemployment_rate: 0.0,
            pct_over70: 0.0,
            pct_white: shares[0],
            pct_bachelor_plus: 0.0,
            pct_female: 0.0,
            pct_living_alone: 0.0,
            race_shares: RACES.iter().map(|r| r.to_string()).zip(shares.iter().copied()).collect(),
        };
        for d in Demographic::ALL {
            if let Some(l) = loading(d) {
                let z = latent(l);
                profile.set(d, demographic_value(d, z));
            }
        }
        out.push(profile);
    }
    (out, centers, cell)
}

fn standardize_demographics(bgs: &[BlockGroupProfile]) -> BTreeMap<String, Standardization> {
    Demographic::ALL
        .iter()
        .map(|d| {
            let col: Vec<f64> = bgs.iter().map(|b| b.value(*d)).collect();
            let mut s = mean_sd(&col);
            if s.sd == 0.0 {
                s.sd = 1.0;
            }
            (d.name().to_string(), s)
        })
        .collect()
}

fn building_features(rng: &mut ChaCha8Rng) -> FeatureVector {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut z = || -> f64 { std_normal.sample(rng) };
    let value_per_sqft = round_to(180.0 * (0.5 * z()).exp(), 0.01);
    let units = (3.0 + 20.0 * (0.8 * z()).exp()).round() as u32;
    let area_per_unit = round_to(850.0 * (0.3 * z()).exp(), 0.1);
    let width = round_to((25.0 * (0.4 * z()).exp()).max(10.0), 0.1);
    let depth = round_to((90.0 * (0.25 * z()).exp()).max(30.0), 0.1);
    let mut u = || rng.random::<f64>();
    let residential_ratio = round_to(1.0 - 0.4 * u() * u(), 0.001);
    let building_age = (10.0 + 110.0 * u()).round();
    let boiler_age = (building_age.min(45.0) * u()).round();
    let pick = |u: f64, cum: &[f64]| cum.iter().position(|c| u < *c).unwrap_or(cum.len());
    let basement_code = BasementCode::from_code(pick(u(), &[0.7, 0.9]) as u32).expect("level");
    let proximity_code = ProximityCode::from_code(pick(u(), &[0.2, 0.3, 0.95]) as u32).expect("level");
    let ownership_type = OwnershipType::from_code(pick(u(), &[0.25, 0.65, 0.9]) as u32).expect("level");
    let has_super = u() < 0.6;
    let boiler_type = BoilerType::from_code(pick(u(), &[0.55, 0.85, 0.9, 0.95]) as u32).expect("level");
    FeatureVector {
        value_per_sqft: Some(value_per_sqft),
        units: Some(units),
        area_per_unit: Some(area_per_unit),
        residential_ratio: Some(residential_ratio),
        width: Some(width),
        depth: Some(depth),
        building_age: Some(building_age),
        basement_code,
        proximity_code,
        ownership_type,
        has_super,
        boiler_type,
        boiler_age: Some(boiler_age),
    }
}

fn blank_cells(mut f: FeatureVector, rate: f64, rng: &mut ChaCha8Rng) -> FeatureVector {
    if rate == 0.0 {
        return f;
    }
    let mut blank = || rng.random::<f64>() < rate;
    for slot in [
        &mut f.value_per_sqft,
        &mut f.area_per_unit,
        &mut f.residential_ratio,
        &mut f.width,
        &mut f.depth,
        &mut f.building_age,
        &mut f.boiler_age,
    ] {
        if blank() {
            *slot = None;
        }
    }
    if blank() {
        f.units = None;
    }
    f
}

fn in_season(season: HeatingSeason, rng: &mut ChaCha8Rng) -> NaiveDateTime {
    let span = (season.end() - season.start()).num_seconds();
    season.start() + Duration::seconds(rng.random_range(0..span))
}

/// A time in the June to September gap after `season`.
fn off_season_time(season: HeatingSeason, rng: &mut ChaCha8Rng) -> NaiveDateTime {
    let start = season.end();
    let end = NaiveDate::from_ymd_opt(season.start_year + 1, 10, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time");
    start + Duration::seconds(rng.random_range(0..(end - start).num_seconds()))
}

fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn oracle_balanced_accuracy(p: &[f64], labels: &[bool]) -> f64 {
    crate::gbdt::threshold_sweep(p, labels, crate::gbdt::ThresholdObjective::Balanced)
        .map(|pts| {
            pts.iter()
                .map(|pt| pt.confusion.balanced_accuracy())
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::NAN)
}

fn mean_sd(v: &[f64]) -> Standardization {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Standardization { mean, sd: var.sqrt() }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}
