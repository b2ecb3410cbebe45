//! TOML sweep configuration.
//!
//! ```toml
//! base_seed = 0
//! repetitions = 30
//! jobs = 4              # optional, defaults to available parallelism
//! advice_scale = 5      # optional
//!
//! [map]                 # either `file`, or all four generation keys
//! width = 12
//! height = 12
//! hole_ratio = 0.2
//! seed = 198
//!
//! [trainer]             # optional, every key defaults
//! alpha = 0.9
//! gamma = 1.0
//! episodes = 10000
//! max_steps = 100
//!
//! [grid]
//! agents = ["random", "unadvised", "advised"]
//! uncertainties = [0.0, 0.2, 0.4, 0.6, 0.8]
//!
//! [[grid.advice]]
//! label = "oracle100"
//! oracle_quota = 1.0
//!
//! [[grid.advice]]
//! label = "human10"
//! file = "advice_human10.txt"
//! ```
//!
//! Relative file paths are resolved against the configuration's directory.
//! Advised configurations are labelled `<advice label>_u<uncertainty>`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{AdviceMode, AdviceSource, AgentKind, ExperimentConfig, ExperimentError};
use crate::advice::{AdviceList, AdviceScale};
use crate::engine::TrainerConfig;
use crate::gridworld::GridMap;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base_seed: u64,
    repetitions: Option<usize>,
    jobs: Option<usize>,
    advice_scale: Option<u32>,
    map: MapSection,
    #[serde(default)]
    trainer: TrainerSection,
    grid: GridSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSection {
    file: Option<PathBuf>,
    width: Option<usize>,
    height: Option<usize>,
    hole_ratio: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainerSection {
    alpha: Option<f64>,
    gamma: Option<f64>,
    episodes: Option<usize>,
    max_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    agents: Vec<AgentKind>,
    #[serde(default)]
    uncertainties: Vec<f64>,
    #[serde(default)]
    advice: Vec<AdviceSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdviceSection {
    label: String,
    oracle_quota: Option<f64>,
    file: Option<PathBuf>,
}

/// A parsed sweep: the expanded configuration grid plus run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base_seed: u64,
    pub jobs: Option<usize>,
    pub map: GridMap,
    pub configs: Vec<ExperimentConfig>,
}

fn invalid(message: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidConfig(message.into())
}

fn read(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_owned(),
        source,
    })
}

fn data_error(path: &Path, message: impl ToString) -> ExperimentError {
    ExperimentError::Data {
        path: path.to_owned(),
        message: message.to_string(),
    }
}

/// Labels end up in file names, so they are kept to a portable alphabet.
pub fn check_label(label: &str) -> Result<(), ExperimentError> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "label `{label}` must be non-empty and use only letters, digits, `_`, `-` or `.`"
        )))
    }
}

pub fn advised_label(advice_label: &str, uncertainty: f64) -> String {
    format!("{advice_label}_u{uncertainty:.2}")
}

fn load_map(section: &MapSection, base_dir: &Path) -> Result<GridMap, ExperimentError> {
    let generated = [
        section.width.is_some(),
        section.height.is_some(),
        section.hole_ratio.is_some(),
        section.seed.is_some(),
    ];
    match (&section.file, generated) {
        (Some(file), [false, false, false, false]) => {
            let path = base_dir.join(file);
            GridMap::parse(&read(&path)?).map_err(|e| data_error(&path, e))
        }
        (None, [true, true, true, true]) => Ok(GridMap::generate(
            section.width.unwrap_or_default(),
            section.height.unwrap_or_default(),
            section.hole_ratio.unwrap_or_default(),
            section.seed.unwrap_or_default(),
        )?),
        _ => Err(invalid(
            "[map] needs either `file` or all of `width`, `height`, `hole_ratio`, `seed`",
        )),
    }
}

/// Parses a sweep document; `base_dir` anchors relative paths.
pub fn parse_sweep(text: &str, base_dir: &Path) -> Result<SweepPlan, ExperimentError> {
    let file: SweepFile = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    let repetitions = file.repetitions.unwrap_or(ExperimentConfig::DEFAULT_REPETITIONS);
    let scale = AdviceScale::new(file.advice_scale.unwrap_or(5))?;
    if file.jobs == Some(0) {
        return Err(invalid("jobs must be positive"));
    }
    let defaults = TrainerConfig::default();
    let trainer = TrainerConfig {
        alpha: file.trainer.alpha.unwrap_or(defaults.alpha),
        gamma: file.trainer.gamma.unwrap_or(defaults.gamma),
        episodes: file.trainer.episodes.unwrap_or(defaults.episodes),
        max_steps: file.trainer.max_steps.unwrap_or(defaults.max_steps),
        seed: file.base_seed,
    };
    trainer.validate()?;
    let map = load_map(&file.map, base_dir)?;

    let mut modes = Vec::new();
    for section in &file.grid.advice {
        check_label(&section.label)?;
        let source = match (section.oracle_quota, &section.file) {
            (Some(quota), None) => AdviceSource::Oracle { quota },
            (None, Some(path)) => {
                let path = base_dir.join(path);
                AdviceSource::List(AdviceList::parse(&read(&path)?).map_err(|e| data_error(&path, e))?)
            }
            _ => {
                return Err(invalid(format!(
                    "advice `{}` needs exactly one of `oracle_quota` or `file`",
                    section.label
                )))
            }
        };
        modes.push(AdviceMode {
            label: section.label.clone(),
            source,
            scale,
        });
    }

    let base = |label: &str, agent| ExperimentConfig {
        label: label.to_owned(),
        map: map.clone(),
        agent,
        advice: None,
        uncertainty: None,
        repetitions,
        trainer,
    };
    let mut configs = Vec::new();
    for agent in [AgentKind::Random, AgentKind::Unadvised] {
        if file.grid.agents.contains(&agent) {
            configs.push(base(agent.as_str(), agent));
        }
    }
    if file.grid.agents.contains(&AgentKind::Advised) {
        if modes.is_empty() || file.grid.uncertainties.is_empty() {
            return Err(invalid("advised agents need [[grid.advice]] entries and `uncertainties`"));
        }
        for mode in &modes {
            for &u in &file.grid.uncertainties {
                configs.push(ExperimentConfig {
                    advice: Some(mode.clone()),
                    uncertainty: Some(u),
                    ..base(&advised_label(&mode.label, u), AgentKind::Advised)
                });
            }
        }
    }
    for cfg in &configs {
        cfg.validate()?;
        if let Some(mode) = &cfg.advice {
            mode.advice_for(&cfg.map)?;
        }
    }
    Ok(SweepPlan {
        base_seed: file.base_seed,
        jobs: file.jobs,
        map,
        configs,
    })
}

pub fn load_sweep(path: &Path) -> Result<SweepPlan, ExperimentError> {
    let text = read(path)?;
    parse_sweep(&text, path.parent().unwrap_or_else(|| Path::new(".")))
}
