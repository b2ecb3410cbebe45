//! Tabular softmax policies and opinion-based policy shaping.
//!
//! A [`Policy`] stores unbounded preferences (logits); its probability view
//! is the row-wise softmax. Shaping works on the probability view: entries
//! are moved to the certainty domain, fused with advice opinions, projected
//! back, renormalized, and written back as log-probabilities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::advice::{compile_opinion, Advice, AdviceError, AdviceList, AdviceScale, DiscountSpec};
use crate::gridworld::{GridError, GridMap, Neighborhood};
use crate::opinion::{Opinion, OpinionError};
use crate::format::fmt17;

/// Lower clamp applied to probabilities before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// Row sums below this are treated as zero and replaced by a uniform row.
pub const ZERO_SUM_EPSILON: f64 = 1e-12;

const POLICY_HEADER: &str = "rl4mt-policy v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("index ({state}, {action}) out of range for a {states}x{actions} policy")]
    IndexOutOfRange {
        state: usize,
        action: usize,
        states: usize,
        actions: usize,
    },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("advice about state {0} has no neighborhood (cell outside the map)")]
    AdviceOutOfBounds(usize),
    #[error("advice at ({x}, {y}) lies outside the {width}x{height} map")]
    AdviceOffMap {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("total conflict while shaping entry ({state}, {action})")]
    TotalConflict { state: usize, action: usize },
    #[error("policy file error on line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Advice(#[from] AdviceError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    preferences: Vec<f64>,
}

impl Policy {
    /// All preferences zero, so every row is uniform.
    pub fn uniform(n_states: usize, n_actions: usize) -> Result<Self, PolicyError> {
        if n_states == 0 || n_actions == 0 {
            return Err(PolicyError::InvalidInput(format!(
                "policy dimensions must be positive, got {n_states}x{n_actions}"
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            preferences: vec![0.0; n_states * n_actions],
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn check(&self, state: usize, action: usize) -> Result<(), PolicyError> {
        if state >= self.n_states || action >= self.n_actions {
            return Err(PolicyError::IndexOutOfRange {
                state,
                action,
                states: self.n_states,
                actions: self.n_actions,
            });
        }
        Ok(())
    }

    pub fn preferences(&self, state: usize) -> &[f64] {
        let start = state * self.n_actions;
        &self.preferences[start..start + self.n_actions]
    }

    pub fn preferences_mut(&mut self, state: usize) -> &mut [f64] {
        let start = state * self.n_actions;
        &mut self.preferences[start..start + self.n_actions]
    }

    /// Softmax of the preference row.
    pub fn probabilities(&self, state: usize) -> Vec<f64> {
        softmax(self.preferences(state))
    }

    pub fn probability(&self, state: usize, action: usize) -> Result<f64, PolicyError> {
        self.check(state, action)?;
        Ok(self.probabilities(state)[action])
    }

    /// The full probability view, one row per state.
    pub fn probability_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_states).map(|s| self.probabilities(s)).collect()
    }

    /// Dogmatic opinion `(p, 1 - p, 0, p)` of the probability-view entry.
    pub fn entry_opinion(&self, state: usize, action: usize) -> Result<Opinion, PolicyError> {
        let p = self.probability(state, action)?;
        Opinion::from_probability(p)
            .map_err(|e| PolicyError::InvalidDistribution(e.to_string()))
    }

    /// Replaces a row so that its probability view reproduces `probs`.
    pub fn set_row_from_probabilities(&mut self, state: usize, probs: &[f64]) -> Result<(), PolicyError> {
        self.check(state, 0)?;
        if probs.len() != self.n_actions {
            return Err(PolicyError::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                self.n_actions,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(PolicyError::InvalidDistribution(format!(
                "probabilities {probs:?} are not all in [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PolicyError::InvalidDistribution(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        for (pref, p) in self.preferences_mut(state).iter_mut().zip(probs) {
            *pref = p.clamp(PROBABILITY_FLOOR, 1.0).ln();
        }
        Ok(())
    }

    /// Index of the most probable action, lowest index on ties.
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.preferences(state);
        let mut best = 0;
        for (i, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }

    /// Versioned text form with the probability view at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{POLICY_HEADER}");
        let _ = writeln!(out, "states {}", self.n_states);
        let _ = writeln!(out, "actions {}", self.n_actions);
        for s in 0..self.n_states {
            let row: Vec<String> = self.probabilities(s).into_iter().map(fmt17).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let last = lines.last().map_or(1, |(i, _)| *i);
        let err = |line: usize, message: String| PolicyError::Format { line, message };

        match lines.first() {
            Some((_, header)) if *header == POLICY_HEADER => {}
            Some((i, _)) => return Err(err(*i, format!("expected header '{POLICY_HEADER}'"))),
            None => return Err(err(1, "empty policy file".into())),
        }
        let dim = |idx: usize, key: &str| -> Result<usize, PolicyError> {
            let (i, line) = lines
                .get(idx)
                .ok_or_else(|| err(last, format!("missing '{key}' line")))?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next().map(str::parse::<usize>), parts.next()) {
                (Some(k), Some(Ok(v)), None) if k == key => Ok(v),
                _ => Err(err(*i, format!("expected '{key} <count>'"))),
            }
        };
        let n_states = dim(1, "states")?;
        let n_actions = dim(2, "actions")?;
        let mut policy = Policy::uniform(n_states, n_actions).map_err(|e| err(lines[2].0, e.to_string()))?;

        let rows = &lines[3..];
        if rows.len() != n_states {
            return Err(err(last, format!("expected {n_states} rows, found {}", rows.len())));
        }
        for (s, (i, line)) in rows.iter().enumerate() {
            let probs: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<_, _>>()
                .map_err(|e| err(*i, format!("bad number: {e}")))?;
            policy
                .set_row_from_probabilities(s, &probs)
                .map_err(|e| err(*i, e.to_string()))?;
        }
        Ok(policy)
    }
}

pub fn policy_uniform(n_states: usize, n_actions: usize) -> Result<Policy, PolicyError> {
    Policy::uniform(n_states, n_actions)
}

pub fn policy_entry_to_opinion(p: &Policy, state: usize, action: usize) -> Result<Opinion, PolicyError> {
    p.entry_opinion(state, action)
}

pub fn set_row_from_probabilities(p: &Policy, state: usize, probs: &[f64]) -> Result<Policy, PolicyError> {
    let mut out = p.clone();
    out.set_row_from_probabilities(state, probs)?;
    Ok(out)
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Divides every entry by the row sum; a (near) zero row becomes uniform.
pub fn normalize_row(probabilities: &[f64]) -> Vec<f64> {
    let sum: f64 = probabilities.iter().sum();
    if sum < ZERO_SUM_EPSILON {
        let n = probabilities.len().max(1) as f64;
        return vec![1.0 / n; probabilities.len()];
    }
    probabilities.iter().map(|p| p / sum).collect()
}

/// Renormalized row whose entries are all at least [`PROBABILITY_FLOOR`],
/// so that its log-preferences reproduce it exactly.
fn floored(row: Vec<f64>) -> Vec<f64> {
    if row.iter().all(|p| *p >= PROBABILITY_FLOOR) {
        return row;
    }
    normalize_row(&row.iter().map(|p| p.max(PROBABILITY_FLOOR)).collect::<Vec<_>>())
}

/// Fuses advice opinions into the policy.
///
/// `advice` is applied in order; for each advised state every entry of its
/// neighborhood is replaced by the projected probability of the BCF fusion of
/// the advice with the entry's dogmatic opinion. Rows touched this way are
/// renormalized once at the end. Rows outside all neighborhoods are left
/// bit-identical.
pub fn shape_policy(
    policy: &Policy,
    advice: &[(usize, Opinion)],
    neighborhoods: &BTreeMap<usize, Neighborhood>,
) -> Result<Policy, PolicyError> {
    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (state, opinion) in advice {
        let neighborhood = neighborhoods
            .get(state)
            .ok_or(PolicyError::AdviceOutOfBounds(*state))?;
        for &(s, a) in &neighborhood.entries {
            policy.check(s, a)?;
            let row = rows.entry(s).or_insert_with(|| policy.probabilities(s));
            // keeps the BCF denominator away from zero
            let p = row[a].clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR);
            let entry = Opinion::from_probability(p)
                .map_err(|e| PolicyError::InvalidDistribution(e.to_string()))?;
            let fused = opinion.bcf_fuse(&entry).map_err(|e| match e {
                OpinionError::TotalConflict(..) => PolicyError::TotalConflict { state: s, action: a },
                other => PolicyError::InvalidDistribution(other.to_string()),
            })?;
            row[a] = fused.projected_probability();
        }
    }

    let mut shaped = policy.clone();
    for (s, row) in rows {
        let row = floored(normalize_row(&row));
        for (pref, p) in shaped.preferences_mut(s).iter_mut().zip(&row) {
            *pref = p.ln();
        }
    }
    Ok(shaped)
}

/// How per-advice uncertainty is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UncertaintySource {
    /// One uncertainty for every advice.
    Fixed(f64),
    /// Uncertainty discounted by Manhattan distance from an advisor cell.
    Distance {
        spec: DiscountSpec,
        advisor: (usize, usize),
    },
}

impl UncertaintySource {
    pub fn uncertainty_for(&self, advice: &Advice) -> Result<f64, AdviceError> {
        match self {
            UncertaintySource::Fixed(u) => Ok(*u),
            UncertaintySource::Distance { spec, advisor } => {
                let delta = advice.x.abs_diff(advisor.0) + advice.y.abs_diff(advisor.1);
                spec.uncertainty((delta as f64).min(spec.delta_max))
            }
        }
    }
}

/// Compiles each advice against the map, in file order.
pub fn compile_advice(
    map: &GridMap,
    advice: &AdviceList,
    scale: AdviceScale,
    uncertainty: &UncertaintySource,
    action_count: usize,
) -> Result<Vec<(usize, Advice, Opinion)>, PolicyError> {
    advice
        .iter()
        .map(|adv| {
            let state = map.state_of(adv.x, adv.y).ok_or(PolicyError::AdviceOffMap {
                x: adv.x,
                y: adv.y,
                width: map.width(),
                height: map.height(),
            })?;
            let u = uncertainty.uncertainty_for(adv)?;
            Ok((state, *adv, compile_opinion(adv, scale, u, action_count)?))
        })
        .collect()
}

/// Compiles advice, computes the neighborhoods of every advised cell, and
/// shapes `policy` with the result.
pub fn shape_with_advice(
    policy: &Policy,
    map: &GridMap,
    advice: &AdviceList,
    scale: AdviceScale,
    uncertainty: &UncertaintySource,
) -> Result<Policy, PolicyError> {
    let compiled = compile_advice(map, advice, scale, uncertainty, policy.n_actions())?;
    let states: BTreeSet<usize> = compiled.iter().map(|(s, _, _)| *s).collect();
    let neighborhoods = states
        .into_iter()
        .map(|s| Ok((s, map.neighborhood(s)?)))
        .collect::<Result<BTreeMap<_, _>, GridError>>()?;
    let opinions: Vec<(usize, Opinion)> = compiled.into_iter().map(|(s, _, o)| (s, o)).collect();
    shape_policy(policy, &opinions, &neighborhoods)
}
