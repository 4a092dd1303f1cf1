//! Command-line front end: one config file, flag overrides, file handoff
//! between stages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod stages;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use propensity_core::data::HeatingSeason;
use propensity_core::gbdt::ThresholdObjective;
use propensity_core::stats::TestLevel;
use propensity_core::synth::SynthConfig;

pub use config::RunConfig;
pub use error::CliError;
use stages::{Run, StageRecord, CLASSIFIED_FILE, DATA_DIR, MODEL_FILE};

#[derive(Debug, Parser)]
#[command(name = "propensity", version, about = "Detect neighbourhood differences in complaint reporting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic city dataset.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Built-in generator settings used when the config has no [synth] section.
        #[arg(long, value_enum, default_value_t = Preset::Default)]
        preset: Preset,
        /// Override the number of buildings.
        #[arg(long)]
        buildings: Option<usize>,
    },
    /// Fit the violation model and write model.json and metrics.json.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Classify buildings into the four reporting types.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to model.json in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Heating season start year; defaults to the model's target season.
        #[arg(long)]
        season: Option<i32>,
    },
    /// Density surfaces and hotspot polygons for both mismatch directions.
    Hotspot {
        #[command(flatten)]
        common: Common,
        /// Classification file; defaults to classified.csv in the output directory.
        #[arg(long)]
        classified: Option<PathBuf>,
    },
    /// t-tests of block-group attributes between the mismatch directions.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        classified: Option<PathBuf>,
    },
    /// Run every stage in order and write manifest.json.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Default,
    PaperLike,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset directory holding buildings.csv, complaints.csv, violations.csv and blockgroups.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_objective)]
    pub threshold_objective: Option<ThresholdObjective>,
    /// Kernel bandwidth in metres.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_parser = parse_level)]
    pub test_level: Option<TestLevel>,
}

fn parse_objective(s: &str) -> Result<ThresholdObjective, String> {
    s.parse().map_err(|e: propensity_core::Error| e.to_string())
}

fn parse_level(s: &str) -> Result<TestLevel, String> {
    s.parse().map_err(|e: propensity_core::Error| e.to_string())
}

impl Common {
    /// Reads the config file, if any, and applies flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(d) = &self.data {
            cfg.input.dir = Some(d.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.threshold_objective {
            cfg.train.objective = o;
        }
        if let Some(b) = self.bandwidth {
            cfg.hotspot.bandwidth = Some(b);
        }
        if let Some(l) = self.test_level {
            cfg.compare.level = l;
        }
        cfg.apply_seed();
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth {
            common,
            preset,
            buildings,
        } => {
            let mut cfg = common.resolve()?;
            if cfg.synth.is_none() {
                cfg.synth = Some(match preset {
                    Preset::Default => SynthConfig::default(),
                    Preset::PaperLike => SynthConfig::paper_like(),
                });
            }
            let synth = cfg.synth.as_mut().expect("set above");
            if let Some(n) = buildings {
                synth.n_buildings = *n;
            }
            cfg.apply_seed();
            cfg.validate()?;
            let run = Run {
                cfg: &cfg,
                config_hash: cfg.hash(),
            };
            run.ensure_out()?;
            let rec = run.synth(cfg.synth.as_ref().expect("set above"), &cfg.out)?;
            run.write_run_record("synth", vec![rec])
        }
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let run = Run {
                cfg: &cfg,
                config_hash: cfg.hash(),
            };
            run.ensure_out()?;
            let (data, ingest) = run.ingest(&input_paths(&cfg))?;
            let (_, train) = run.train(&data)?;
            run.write_run_record("train", vec![ingest, train])
        }
        Command::Classify {
            common,
            model,
            season,
        } => {
            let cfg = common.resolve()?;
            let run = Run {
                cfg: &cfg,
                config_hash: cfg.hash(),
            };
            let model_path = model.clone().unwrap_or_else(|| cfg.out.join(MODEL_FILE));
            let m = run.load_model(&model_path)?;
            run.ensure_out()?;
            let (data, ingest) = run.ingest(&input_paths(&cfg))?;
            let (_, rec) = run.classify(&data, &m, &model_path, season.map(HeatingSeason::new))?;
            run.write_run_record("classify", vec![ingest, rec])
        }
        Command::Hotspot { common, classified } => {
            let cfg = common.resolve()?;
            let run = Run {
                cfg: &cfg,
                config_hash: cfg.hash(),
            };
            let path = classified.clone().unwrap_or_else(|| cfg.out.join(CLASSIFIED_FILE));
            let rows = run.read_classified(&path)?;
            run.ensure_out()?;
            let rec = run.hotspot(&rows, &path)?;
            run.write_run_record("hotspot", vec![rec])
        }
        Command::Compare { common, classified } => {
            let cfg = common.resolve()?;
            let run = Run {
                cfg: &cfg,
                config_hash: cfg.hash(),
            };
            let path = classified.clone().unwrap_or_else(|| cfg.out.join(CLASSIFIED_FILE));
            let rows = run.read_classified(&path)?;
            run.ensure_out()?;
            let (data, ingest) = run.ingest(&input_paths(&cfg))?;
            let rec = run.compare(&rows, &data, &path)?;
            run.write_run_record("compare", vec![ingest, rec])
        }
        Command::Pipeline { common } => pipeline(&common.resolve()?).map(|_| ()),
    }
}

/// Configured inputs, or `<out>/data` when none are configured.
fn input_paths(cfg: &RunConfig) -> config::InputPaths {
    cfg.input.paths(&cfg.out.join(DATA_DIR))
}

/// Runs synth (when the config asks for generated data), ingest, train,
/// classify, hotspot and compare, and returns the stage records written to
/// the manifest.
pub fn pipeline(cfg: &RunConfig) -> Result<Vec<StageRecord>, CliError> {
    let run = Run {
        cfg,
        config_hash: cfg.hash(),
    };
    run.ensure_out()?;
    let mut stages = Vec::with_capacity(6);
    match (&cfg.synth, cfg.input.is_set()) {
        (Some(synth), false) => stages.push(run.synth(synth, &cfg.out.join(DATA_DIR))?),
        (_, true) => stages.push(StageRecord::skipped("synth", "input files configured")),
        (None, false) => {
            return Err(CliError::Usage(
                "no input configured: set [input] or a [synth] section, or pass --data".into(),
            ))
        }
    }
    let (data, ingest) = run.ingest(&input_paths(cfg))?;
    stages.push(ingest);
    let (model, train) = run.train(&data)?;
    stages.push(train);
    let model_path = cfg.out.join(MODEL_FILE);
    let (classified, classify) = run.classify(&data, &model, &model_path, None)?;
    stages.push(classify);
    let classified_path = cfg.out.join(CLASSIFIED_FILE);
    stages.push(run.hotspot(&classified, &classified_path)?);
    stages.push(run.compare(&classified, &data, &classified_path)?);
    run.write_manifest(stages.clone())?;
    Ok(stages)
}
