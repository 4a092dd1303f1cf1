use std::fs;
use std::path::{Path, PathBuf};

use propensity_core::data::{ColumnMap, LoadOptions, UnknownPolicy};
use propensity_core::pipeline::{CompareConfig, HotspotConfig, TrainConfig};
use propensity_core::synth::{SynthConfig, BLOCK_GROUPS_FILE, BUILDINGS_FILE, COMPLAINTS_FILE, VIOLATIONS_FILE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Where the four input tables live. Explicit paths win over `dir`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub dir: Option<PathBuf>,
    pub buildings: Option<PathBuf>,
    pub complaints: Option<PathBuf>,
    pub violations: Option<PathBuf>,
    pub block_groups: Option<PathBuf>,
    pub unknown_policy: UnknownPolicy,
    pub columns: ColumnMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPaths {
    pub buildings: PathBuf,
    pub complaints: PathBuf,
    pub violations: PathBuf,
    pub block_groups: PathBuf,
}

impl InputPaths {
    pub fn all(&self) -> [&Path; 4] {
        [&self.buildings, &self.complaints, &self.violations, &self.block_groups]
    }
}

impl InputConfig {
    pub fn is_set(&self) -> bool {
        self.dir.is_some()
            || self.buildings.is_some()
            || self.complaints.is_some()
            || self.violations.is_some()
            || self.block_groups.is_some()
    }

    /// Resolves each table, falling back to `fallback_dir` when neither an
    /// explicit path nor `dir` is configured.
    pub fn paths(&self, fallback_dir: &Path) -> InputPaths {
        let dir = self.dir.clone().unwrap_or_else(|| fallback_dir.to_path_buf());
        let pick = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| dir.join(name));
        InputPaths {
            buildings: pick(&self.buildings, BUILDINGS_FILE),
            complaints: pick(&self.complaints, COMPLAINTS_FILE),
            violations: pick(&self.violations, VIOLATIONS_FILE),
            block_groups: pick(&self.block_groups, BLOCK_GROUPS_FILE),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            columns: self.columns.clone(),
            unknown_policy: self.unknown_policy,
        }
    }
}

/// One run, read from a TOML file and then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Top-level seed; it replaces the seeds of the synth and train sections.
    pub seed: u64,
    pub out: PathBuf,
    pub input: InputConfig,
    /// When present and no input is configured, the pipeline generates its
    /// own dataset under `<out>/data`.
    pub synth: Option<SynthConfig>,
    pub train: TrainConfig,
    pub hotspot: HotspotConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            input: InputConfig::default(),
            synth: None,
            train: TrainConfig::default(),
            hotspot: HotspotConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML file. Relative paths inside it are taken from the
    /// file's own directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.out);
        for p in [
            &mut cfg.input.dir,
            &mut cfg.input.buildings,
            &mut cfg.input.complaints,
            &mut cfg.input.violations,
            &mut cfg.input.block_groups,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }

    /// Propagates the top-level seed into every seeded section.
    pub fn apply_seed(&mut self) {
        if let Some(s) = self.synth.as_mut() {
            s.seed = self.seed;
        }
        self.train.gbdt.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: propensity_core::Error| CliError::Usage(e.to_string());
        self.train.gbdt.validate().map_err(usage)?;
        if let Some(s) = &self.synth {
            s.validate().map_err(usage)?;
        }
        let h = &self.hotspot;
        if !(0.0..=1.0).contains(&h.quantile) {
            return Err(CliError::Usage(format!("hotspot.quantile {} outside [0, 1]", h.quantile)));
        }
        if !(h.cell_size > 0.0) {
            return Err(CliError::Usage(format!("hotspot.cell_size {} must be positive", h.cell_size)));
        }
        if let Some(b) = h.bandwidth.filter(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(CliError::Usage(format!("hotspot.bandwidth {b} must be positive")));
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Every configured input must exist before any stage runs.
pub fn require_inputs(paths: &InputPaths) -> Result<(), CliError> {
    for p in paths.all() {
        if !p.is_file() {
            return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
