//! Comparative study harness: oracle advice, repeated training runs,
//! parameter sweeps, t-tests and report files.

pub mod chart;
pub mod config;
pub mod oracle;
pub mod report;
pub mod stats;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advice::{AdviceError, AdviceList, AdviceScale};
use crate::engine::{Engine, EngineError, Plan, TrainerConfig};
use crate::gridworld::{GridError, GridMap};
use crate::policy::{shape_with_advice, Policy, PolicyError, UncertaintySource};

pub use oracle::oracle_advice;
pub use stats::{student_t_sf, welch_t_test, TTestResult};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unsupported oracle quota {0}; expected 1.0 or 0.2")]
    UnsupportedQuota(f64),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("t-test needs at least 2 observations per sample, got {0}")]
    InsufficientSample(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Advice(#[from] AdviceError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Random,
    Unadvised,
    Advised,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::Unadvised => "unadvised",
            AgentKind::Advised => "advised",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(AgentKind::Random),
            "unadvised" => Ok(AgentKind::Unadvised),
            "advised" => Ok(AgentKind::Advised),
            other => Err(ExperimentError::InvalidInput(format!(
                "unknown agent `{other}`; expected random, unadvised or advised"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdviceSource {
    Oracle { quota: f64 },
    List(AdviceList),
}

/// A named advisor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdviceMode {
    pub label: String,
    pub source: AdviceSource,
    pub scale: AdviceScale,
}

impl AdviceMode {
    pub fn advice_for(&self, map: &GridMap) -> Result<AdviceList, ExperimentError> {
        match &self.source {
            AdviceSource::Oracle { quota } => oracle_advice(map, *quota),
            AdviceSource::List(list) => Ok(list.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub map: GridMap,
    pub agent: AgentKind,
    pub advice: Option<AdviceMode>,
    pub uncertainty: Option<f64>,
    pub repetitions: usize,
    /// Training settings; the seed is replaced per repetition.
    pub trainer: TrainerConfig,
}

impl ExperimentConfig {
    pub const DEFAULT_REPETITIONS: usize = 30;

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let advised = self.agent == AgentKind::Advised;
        if advised != self.advice.is_some() || advised != self.uncertainty.is_some() {
            return Err(ExperimentError::InvalidConfig(format!(
                "{}: advice and uncertainty must be given exactly for advised agents",
                self.label
            )));
        }
        if let Some(u) = self.uncertainty {
            if !(0.0..=1.0).contains(&u) {
                return Err(ExperimentError::InvalidConfig(format!(
                    "{}: uncertainty {u} is outside [0, 1]",
                    self.label
                )));
            }
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::InvalidConfig(format!("{}: repetitions must be positive", self.label)));
        }
        self.trainer.validate()?;
        Ok(())
    }

    /// Policy before training: uniform, then shaped for advised agents.
    pub fn initial_policy(&self, engine: &Engine) -> Result<Policy, ExperimentError> {
        let uniform = engine.uniform_policy()?;
        match (&self.advice, self.uncertainty) {
            (Some(mode), Some(u)) => {
                let list = mode.advice_for(&self.map)?;
                Ok(shape_with_advice(&uniform, &self.map, &list, mode.scale, &UncertaintySource::Fixed(u))?)
            }
            _ => Ok(uniform),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionResult {
    pub seed: u64,
    /// Running sum of episode rewards, one entry per episode.
    pub cumulative: Vec<f64>,
    /// Greedy rollout of the final policy.
    pub plan: Plan,
}

impl RepetitionResult {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub label: String,
    pub agent: AgentKind,
    pub advice_label: Option<String>,
    pub uncertainty: Option<f64>,
    pub repetitions: Vec<RepetitionResult>,
}

impl ExperimentReport {
    pub fn totals(&self) -> Vec<f64> {
        self.repetitions.iter().map(RepetitionResult::total).collect()
    }

    pub fn mean_total(&self) -> f64 {
        stats::mean(&self.totals())
    }

    /// Per-episode mean of the cumulative reward over repetitions.
    pub fn mean_series(&self) -> Vec<f64> {
        let len = self.repetitions.iter().map(|r| r.cumulative.len()).max().unwrap_or(0);
        let n = self.repetitions.len() as f64;
        (0..len)
            .map(|i| self.repetitions.iter().map(|r| r.cumulative[i]).sum::<f64>() / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest {
    pub label_a: String,
    pub label_b: String,
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub reports: Vec<ExperimentReport>,
    pub ttests: Vec<PairwiseTest>,
}

fn run_repetition(
    cfg: &ExperimentConfig,
    engine: &Engine,
    initial: &Policy,
    seed: u64,
) -> Result<RepetitionResult, ExperimentError> {
    let trainer = TrainerConfig { seed, ..cfg.trainer };
    let (policy, log) = match cfg.agent {
        AgentKind::Random => engine.simulate(initial.clone(), &trainer)?,
        _ => engine.train(initial.clone(), &trainer)?,
    };
    Ok(RepetitionResult {
        seed,
        cumulative: log.cumulative_series(),
        plan: engine.extract_plan(&policy, trainer.max_steps)?,
    })
}

fn report_for(cfg: &ExperimentConfig, repetitions: Vec<RepetitionResult>) -> ExperimentReport {
    ExperimentReport {
        label: cfg.label.clone(),
        agent: cfg.agent,
        advice_label: cfg.advice.as_ref().map(|m| m.label.clone()),
        uncertainty: cfg.uncertainty,
        repetitions,
    }
}

/// Runs every repetition of one configuration; repetition `i` uses seed
/// `base_seed + i`.
pub fn run_experiment(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let engine = Engine::grid_world(cfg.map.clone());
    let initial = cfg.initial_policy(&engine)?;
    let reps = (0..cfg.repetitions)
        .map(|i| run_repetition(cfg, &engine, &initial, base_seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(report_for(cfg, reps))
}

/// Welch tests between the per-repetition totals of every pair of reports.
/// Pairs where either side has fewer than two repetitions are skipped.
pub fn pairwise_tests(reports: &[ExperimentReport]) -> Result<Vec<PairwiseTest>, ExperimentError> {
    let totals: Vec<Vec<f64>> = reports.iter().map(ExperimentReport::totals).collect();
    let samples: Vec<(&str, &[f64])> = reports
        .iter()
        .zip(&totals)
        .map(|(r, t)| (r.label.as_str(), t.as_slice()))
        .collect();
    report::pairwise(&samples)
}

/// Runs all configurations on a pool of `jobs` threads. Output order and
/// content do not depend on `jobs`.
pub fn sweep(configs: &[ExperimentConfig], base_seed: u64, jobs: usize) -> Result<SweepResult, ExperimentError> {
    if configs.is_empty() {
        return Ok(SweepResult::default());
    }
    let mut labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(ExperimentError::InvalidConfig(format!("duplicate label `{}`", w[0])));
    }
    let mut prepared = Vec::with_capacity(configs.len());
    for cfg in configs {
        cfg.validate()?;
        let engine = Engine::grid_world(cfg.map.clone());
        let initial = cfg.initial_policy(&engine)?;
        prepared.push((engine, initial));
    }
    let tasks: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.repetitions).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let results: Vec<RepetitionResult> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let (engine, initial) = &prepared[c];
                run_repetition(&configs[c], engine, initial, base_seed.wrapping_add(r as u64))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut results = results.into_iter();
    let reports: Vec<ExperimentReport> = configs
        .iter()
        .map(|cfg| report_for(cfg, results.by_ref().take(cfg.repetitions).collect()))
        .collect();
    let ttests = pairwise_tests(&reports)?;
    Ok(SweepResult { reports, ttests })
}
