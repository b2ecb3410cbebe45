//! The learning lifecycle: guarded rules are matched against the current
//! state, the resulting conflict set is resolved by sampling from the policy,
//! the chosen rule is executed, and finished episodes feed a REINFORCE
//! update of the policy preferences.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with
//! [`TrainerConfig::seed`]; ChaCha8 is portable and its output stream is
//! fixed for a given seed, so traces and logs are reproducible.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gridworld::{Action, GridError, GridMap, StepOutcome, TileKind};
use crate::policy::Policy;

pub type Guard = dyn Fn(&GridMap, usize) -> bool + Send + Sync;
pub type Effect = dyn Fn(&GridMap, usize) -> Result<StepOutcome, GridError> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("a rule with action index {0} is already registered")]
    DuplicateAction(usize),
    #[error("no rule is enabled in state {0}")]
    NoEnabledRules(usize),
    #[error("policy is {policy_states}x{policy_actions}, engine needs {states}x{actions}")]
    DimensionMismatch {
        policy_states: usize,
        policy_actions: usize,
        states: usize,
        actions: usize,
    },
    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A guarded transformation: `guard` decides whether the rule matches a
/// state and `effect` performs it.
pub struct Rule {
    name: String,
    action_index: usize,
    guard: Box<Guard>,
    effect: Box<Effect>,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        action_index: usize,
        guard: impl Fn(&GridMap, usize) -> bool + Send + Sync + 'static,
        effect: impl Fn(&GridMap, usize) -> Result<StepOutcome, GridError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            action_index,
            guard: Box::new(guard),
            effect: Box::new(effect),
        }
    }

    /// Moves the agent one tile; matches any non-terminal tile.
    pub fn movement(action: Action) -> Self {
        Self::new(
            action.rule_name(),
            action.index(),
            |map, s| !map.is_terminal(s),
            move |map, s| map.step(s, action),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn action_index(&self) -> usize {
        self.action_index
    }

    pub fn matches(&self, map: &GridMap, state: usize) -> bool {
        !map.is_terminal(state) && (self.guard)(map, state)
    }

    pub fn apply(&self, map: &GridMap, state: usize) -> Result<StepOutcome, GridError> {
        (self.effect)(map, state)
    }
}

impl std::fmt::Debug for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rule")
            .field("name", &self.name)
            .field("action_index", &self.action_index)
            .finish_non_exhaustive()
    }
}

/// Action indices of the rules whose guards match a state, ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictSet {
    enabled: Vec<usize>,
}

impl ConflictSet {
    pub fn new(mut enabled: Vec<usize>) -> Self {
        enabled.sort_unstable();
        enabled.dedup();
        Self { enabled }
    }

    pub fn enabled(&self) -> &[usize] {
        &self.enabled
    }

    pub fn is_empty(&self) -> bool {
        self.enabled.is_empty()
    }

    pub fn contains(&self, action: usize) -> bool {
        self.enabled.binary_search(&action).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            gamma: 1.0,
            episodes: 10_000,
            max_steps: 100,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha.is_infinite() {
            return Err(EngineError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(EngineError::InvalidConfig(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if self.max_steps == 0 {
            return Err(EngineError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStep {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<EpisodeStep>,
    pub terminal_reached: bool,
    pub truncated: bool,
}

impl EpisodeTrace {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub total_reward: f64,
    pub steps: usize,
}

/// Per-episode outcomes of a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeSummary>,
}

impl TrainingLog {
    pub fn cumulative_reward(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_reward).sum()
    }

    /// Running sum of episode rewards.
    pub fn cumulative_series(&self) -> Vec<f64> {
        self.episodes
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e.total_reward;
                Some(*acc)
            })
            .collect()
    }

    /// `episode,total_reward,steps` with 1-based episode numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,total_reward,steps\n");
        for e in &self.episodes {
            let _ = writeln!(out, "{},{},{}", e.episode, e.total_reward, e.steps);
        }
        out
    }
}

/// Greedy rollout of a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub rules: Vec<String>,
    pub states: Vec<usize>,
    pub goal_reached: bool,
}

impl Plan {
    pub fn to_text(&self) -> String {
        let mut out = format!("goal_reached: {}\n", self.goal_reached);
        for r in &self.rules {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// Rules registered against one environment.
#[derive(Debug)]
pub struct Engine {
    map: GridMap,
    rules: Vec<Rule>,
    conflict_sets: Vec<ConflictSet>,
}

impl Engine {
    pub fn new(map: GridMap) -> Self {
        let conflict_sets = vec![ConflictSet::default(); map.n_states()];
        Self {
            map,
            rules: Vec::new(),
            conflict_sets,
        }
    }

    /// Engine with the four movement rules registered.
    pub fn grid_world(map: GridMap) -> Self {
        let mut engine = Self::new(map);
        for action in Action::ALL {
            engine
                .register_rule(Rule::movement(action))
                .expect("movement actions are distinct");
        }
        engine
    }

    pub fn register_rule(&mut self, rule: Rule) -> Result<(), EngineError> {
        if self.rules.iter().any(|r| r.action_index == rule.action_index) {
            return Err(EngineError::DuplicateAction(rule.action_index));
        }
        // guards depend only on (map, state)
        for (s, set) in self.conflict_sets.iter_mut().enumerate() {
            if rule.matches(&self.map, s) {
                set.enabled.push(rule.action_index);
                set.enabled.sort_unstable();
            }
        }
        let pos = self.rules.partition_point(|r| r.action_index < rule.action_index);
        self.rules.insert(pos, rule);
        Ok(())
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// One past the largest registered action index.
    pub fn action_count(&self) -> usize {
        self.rules.last().map_or(0, |r| r.action_index + 1)
    }

    pub fn rule(&self, action: usize) -> Option<&Rule> {
        self.rules
            .binary_search_by_key(&action, |r| r.action_index)
            .ok()
            .map(|i| &self.rules[i])
    }

    pub fn uniform_policy(&self) -> Result<Policy, EngineError> {
        Policy::uniform(self.map.n_states(), self.action_count().max(1))
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))
    }

    /// Rules matching `state`, in action-index order.
    pub fn conflict_set(&self, state: usize) -> Result<&ConflictSet, EngineError> {
        let set = self.conflict_sets.get(state).ok_or(GridError::IndexOutOfRange {
            index: state,
            states: self.map.n_states(),
        })?;
        if set.is_empty() {
            return Err(EngineError::NoEnabledRules(state));
        }
        Ok(set)
    }

    fn check_policy(&self, policy: &Policy) -> Result<(), EngineError> {
        if policy.n_states() != self.map.n_states() || policy.n_actions() < self.action_count() {
            return Err(EngineError::DimensionMismatch {
                policy_states: policy.n_states(),
                policy_actions: policy.n_actions(),
                states: self.map.n_states(),
                actions: self.action_count(),
            });
        }
        Ok(())
    }

    /// Plays one episode from Start until a terminal tile or `max_steps`.
    pub fn run_episode(
        &self,
        policy: &Policy,
        cfg: &TrainerConfig,
        rng: &mut impl Rng,
    ) -> Result<EpisodeTrace, EngineError> {
        self.check_policy(policy)?;
        let mut trace = EpisodeTrace::default();
        let mut state = self.map.start_state();
        for _ in 0..cfg.max_steps {
            let set = self.conflict_set(state)?;
            let action = next_activation(set, policy, state, rng);
            let rule = self.rule(action).ok_or(EngineError::NoEnabledRules(state))?;
            let outcome = rule.apply(&self.map, state)?;
            trace.steps.push(EpisodeStep {
                state,
                action,
                reward: outcome.reward,
            });
            if outcome.terminal {
                trace.terminal_reached = true;
                return Ok(trace);
            }
            state = outcome.next_state;
        }
        trace.truncated = true;
        Ok(trace)
    }

    /// REINFORCE update applied step by step along the trace:
    /// `pref[s_t, a] += alpha * gamma^t * G_t * (1[a = a_t] - pi(a | s_t))`
    /// for every action enabled in `s_t`, with `pi` restricted to the
    /// enabled actions.
    pub fn reinforce_update(
        &self,
        policy: &mut Policy,
        trace: &EpisodeTrace,
        cfg: &TrainerConfig,
    ) -> Result<(), EngineError> {
        self.check_policy(policy)?;
        let n = trace.steps.len();
        let mut returns = vec![0.0; n];
        let mut g = 0.0;
        for t in (0..n).rev() {
            g = trace.steps[t].reward + cfg.gamma * g;
            returns[t] = g;
        }
        let mut discount = 1.0;
        for (step, g) in trace.steps.iter().zip(returns) {
            let scale = cfg.alpha * discount * g;
            discount *= cfg.gamma;
            if scale == 0.0 {
                continue;
            }
            let set = self.conflict_set(step.state)?;
            let probs = restricted_probabilities(policy, step.state, set);
            let prefs = policy.preferences_mut(step.state);
            for (&a, p) in set.enabled().iter().zip(probs) {
                let indicator = if a == step.action { 1.0 } else { 0.0 };
                prefs[a] += scale * (indicator - p);
            }
        }
        Ok(())
    }

    /// Runs `cfg.episodes` episodes, updating the policy after each one.
    pub fn train(&self, policy: Policy, cfg: &TrainerConfig) -> Result<(Policy, TrainingLog), EngineError> {
        self.run(policy, cfg, true)
    }

    /// Runs episodes on a frozen policy; used for the random baseline.
    pub fn simulate(&self, policy: Policy, cfg: &TrainerConfig) -> Result<(Policy, TrainingLog), EngineError> {
        self.run(policy, cfg, false)
    }

    fn run(&self, mut policy: Policy, cfg: &TrainerConfig, learn: bool) -> Result<(Policy, TrainingLog), EngineError> {
        cfg.validate()?;
        self.check_policy(&policy)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut log = TrainingLog {
            episodes: Vec::with_capacity(cfg.episodes),
        };
        for episode in 1..=cfg.episodes {
            let trace = self.run_episode(&policy, cfg, &mut rng)?;
            if learn {
                self.reinforce_update(&mut policy, &trace, cfg)?;
            }
            log.episodes.push(EpisodeSummary {
                episode,
                total_reward: trace.total_reward(),
                steps: trace.steps.len(),
            });
        }
        Ok((policy, log))
    }

    /// Follows the most probable enabled rule from Start (lowest index on
    /// ties) until a terminal tile or `max_steps` moves.
    pub fn extract_plan(&self, policy: &Policy, max_steps: usize) -> Result<Plan, EngineError> {
        self.check_policy(policy)?;
        let mut plan = Plan {
            rules: Vec::new(),
            states: vec![self.map.start_state()],
            goal_reached: false,
        };
        let mut state = self.map.start_state();
        for _ in 0..max_steps {
            let set = self.conflict_set(state)?;
            let prefs = policy.preferences(state);
            let mut best = set.enabled()[0];
            for &a in &set.enabled()[1..] {
                if prefs[a] > prefs[best] {
                    best = a;
                }
            }
            let rule = self.rule(best).ok_or(EngineError::NoEnabledRules(state))?;
            let outcome = rule.apply(&self.map, state)?;
            plan.rules.push(rule.name().to_owned());
            plan.states.push(outcome.next_state);
            state = outcome.next_state;
            if outcome.terminal {
                plan.goal_reached = self.map.tile(state) == TileKind::Goal;
                break;
            }
        }
        Ok(plan)
    }
}

fn restricted_probabilities(policy: &Policy, state: usize, set: &ConflictSet) -> Vec<f64> {
    let prefs = policy.preferences(state);
    let max = set
        .enabled()
        .iter()
        .map(|&a| prefs[a])
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = set.enabled().iter().map(|&a| (prefs[a] - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Samples an enabled action from the policy row restricted to the conflict
/// set and renormalized.
pub fn next_activation(set: &ConflictSet, policy: &Policy, state: usize, rng: &mut impl Rng) -> usize {
    let enabled = set.enabled();
    let prefs = policy.preferences(state);
    let max = enabled.iter().map(|&a| prefs[a]).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = enabled.iter().map(|&a| (prefs[a] - max).exp()).sum();
    let mut threshold = rng.gen::<f64>() * total;
    for &a in enabled {
        threshold -= (prefs[a] - max).exp();
        if threshold < 0.0 {
            return a;
        }
    }
    *enabled.last().expect("conflict set is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::SMALL_LAKE;

    fn small_lake_engine() -> Engine {
        Engine::grid_world(GridMap::parse(SMALL_LAKE).unwrap())
    }

    #[test]
    fn registration() {
        let engine = small_lake_engine();
        assert_eq!(engine.action_count(), 4);
        let mut engine = Engine::new(GridMap::parse("SG").unwrap());
        engine.register_rule(Rule::movement(Action::Right)).unwrap();
        assert_eq!(
            engine.register_rule(Rule::movement(Action::Right)).unwrap_err(),
            EngineError::DuplicateAction(2)
        );
        assert_eq!(engine.action_count(), 3);
    }

    #[test]
    fn conflict_sets() {
        let engine = small_lake_engine();
        assert_eq!(engine.conflict_set(1).unwrap().enabled(), &[0, 1, 2, 3]);
        assert_eq!(engine.conflict_set(5).unwrap_err(), EngineError::NoEnabledRules(5));
        let mut engine = Engine::new(GridMap::parse(SMALL_LAKE).unwrap());
        engine.register_rule(Rule::movement(Action::Right)).unwrap();
        engine.register_rule(Rule::movement(Action::Left)).unwrap();
        assert_eq!(engine.conflict_set(0).unwrap().enabled(), &[0, 2]);
    }

    #[test]
    fn single_rule_episode() {
        let mut engine = Engine::new(GridMap::parse("SG").unwrap());
        engine.register_rule(Rule::movement(Action::Right)).unwrap();
        let policy = engine.uniform_policy().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = engine.run_episode(&policy, &TrainerConfig::default(), &mut rng).unwrap();
        assert_eq!(trace.steps, vec![EpisodeStep { state: 0, action: 2, reward: 1.0 }]);
        assert!(trace.terminal_reached && !trace.truncated);

        let plan = engine.extract_plan(&policy, 100).unwrap();
        assert_eq!(plan.rules, vec!["MoveRight"]);
        assert!(plan.goal_reached);
    }

    #[test]
    fn hole_ends_episode_without_reward() {
        let engine = small_lake_engine();
        let mut policy = engine.uniform_policy().unwrap();
        // always move down from (0,0), (0,1), (0,2) into the hole at (0,3)
        for s in [0, 4, 8] {
            policy.preferences_mut(s).copy_from_slice(&[-50.0, 50.0, -50.0, -50.0]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trace = engine.run_episode(&policy, &TrainerConfig::default(), &mut rng).unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert!(trace.terminal_reached);
        assert_eq!(trace.total_reward(), 0.0);
    }

    #[test]
    fn truncation() {
        let engine = small_lake_engine();
        let mut policy = engine.uniform_policy().unwrap();
        policy.preferences_mut(0).copy_from_slice(&[50.0, -50.0, -50.0, -50.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trace = engine.run_episode(&policy, &TrainerConfig::default(), &mut rng).unwrap();
        assert_eq!(trace.steps.len(), 100);
        assert!(trace.truncated && !trace.terminal_reached);

        let plan = engine.extract_plan(&policy, 100).unwrap();
        assert_eq!(plan.rules.len(), 100);
        assert!(!plan.goal_reached);
    }

    #[test]
    fn zero_reward_update_is_exact_no_op() {
        let engine = small_lake_engine();
        let mut policy = engine.uniform_policy().unwrap();
        policy.preferences_mut(0).copy_from_slice(&[0.3, -0.2, 0.1, 0.0]);
        let before = policy.clone();
        let trace = EpisodeTrace {
            steps: vec![
                EpisodeStep { state: 0, action: 2, reward: 0.0 },
                EpisodeStep { state: 1, action: 1, reward: 0.0 },
            ],
            terminal_reached: true,
            truncated: false,
        };
        engine.reinforce_update(&mut policy, &trace, &TrainerConfig::default()).unwrap();
        assert_eq!(policy, before);
    }

    #[test]
    fn one_step_win_update() {
        let engine = small_lake_engine();
        let mut policy = engine.uniform_policy().unwrap();
        let s = 14;
        let trace = EpisodeTrace {
            steps: vec![EpisodeStep { state: s, action: 2, reward: 1.0 }],
            terminal_reached: true,
            truncated: false,
        };
        engine.reinforce_update(&mut policy, &trace, &TrainerConfig::default()).unwrap();
        let prefs = policy.preferences(s);
        assert!((prefs[2] - 0.9 * 0.75).abs() < 1e-15);
        for a in [0, 1, 3] {
            assert!((prefs[a] + 0.9 * 0.25).abs() < 1e-15);
        }
        assert!(policy.probabilities(s)[2] > 0.25);
    }

    #[test]
    fn undiscounted_returns_are_constant_on_a_win() {
        // each step of a winning trace gets G_t = 1, so the first update on a
        // uniform row matches the one-step case exactly
        let engine = small_lake_engine();
        let mut policy = engine.uniform_policy().unwrap();
        let trace = EpisodeTrace {
            steps: vec![
                EpisodeStep { state: 13, action: 2, reward: 0.0 },
                EpisodeStep { state: 14, action: 2, reward: 1.0 },
            ],
            terminal_reached: true,
            truncated: false,
        };
        engine.reinforce_update(&mut policy, &trace, &TrainerConfig::default()).unwrap();
        assert!((policy.preferences(13)[2] - 0.675).abs() < 1e-15);
        assert!((policy.preferences(14)[2] - 0.675).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let engine = small_lake_engine();
        let policy = Policy::uniform(15, 4).unwrap();
        let trace = EpisodeTrace::default();
        let mut p = policy.clone();
        assert!(matches!(
            engine.reinforce_update(&mut p, &trace, &TrainerConfig::default()),
            Err(EngineError::DimensionMismatch { .. })
        ));
        assert!(engine.train(policy, &TrainerConfig::default()).is_err());
    }

    #[test]
    fn zero_episodes() {
        let engine = small_lake_engine();
        let policy = engine.uniform_policy().unwrap();
        let cfg = TrainerConfig { episodes: 0, ..Default::default() };
        let (out, log) = engine.train(policy.clone(), &cfg).unwrap();
        assert_eq!(out, policy);
        assert!(log.episodes.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let engine = small_lake_engine();
        let cfg = TrainerConfig { episodes: 300, seed: 11, ..Default::default() };
        let (p1, l1) = engine.train(engine.uniform_policy().unwrap(), &cfg).unwrap();
        let (p2, l2) = engine.train(engine.uniform_policy().unwrap(), &cfg).unwrap();
        assert_eq!(l1.to_csv(), l2.to_csv());
        assert_eq!(p1, p2);
        for s in 0..16 {
            assert!((p1.probabilities(s).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_agent_never_updates() {
        let engine = small_lake_engine();
        let cfg = TrainerConfig { episodes: 200, ..Default::default() };
        let uniform = engine.uniform_policy().unwrap();
        let (p, log) = engine.simulate(uniform.clone(), &cfg).unwrap();
        assert_eq!(p, uniform);
        assert_eq!(log.episodes.len(), 200);
    }

    fn draw_counts(policy: &Policy, set: &ConflictSet, draws: usize) -> [usize; 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[next_activation(set, policy, 0, &mut rng)] += 1;
        }
        counts
    }

    #[test]
    fn uniform_sampling_chi_squared() {
        let policy = Policy::uniform(1, 4).unwrap();
        let set = ConflictSet::new(vec![0, 1, 2, 3]);
        let n = 100_000;
        let counts = draw_counts(&policy, &set, n);
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 0.999 quantile of chi-squared with 3 degrees of freedom
        assert!(chi2 < 16.266, "chi2 = {chi2}");
    }

    #[test]
    fn skewed_row_frequency() {
        let mut policy = Policy::uniform(1, 4).unwrap();
        policy.set_row_from_probabilities(0, &[0.97, 0.01, 0.01, 0.01]).unwrap();
        let counts = draw_counts(&policy, &ConflictSet::new(vec![0, 1, 2, 3]), 100_000);
        let freq = counts[0] as f64 / 100_000.0;
        assert!((freq - 0.97).abs() < 0.01, "{freq}");
    }

    #[test]
    fn sampling_is_restricted_and_renormalized() {
        let mut policy = Policy::uniform(1, 4).unwrap();
        policy.set_row_from_probabilities(0, &[0.5, 0.5 - 2e-6, 1e-6, 1e-6]).unwrap();
        let counts = draw_counts(&policy, &ConflictSet::new(vec![2, 3]), 100_000);
        assert_eq!(counts[0] + counts[1], 0);
        let freq = counts[2] as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn log_csv() {
        let log = TrainingLog {
            episodes: vec![
                EpisodeSummary { episode: 1, total_reward: 0.0, steps: 4 },
                EpisodeSummary { episode: 2, total_reward: 1.0, steps: 7 },
            ],
        };
        assert_eq!(log.to_csv(), "episode,total_reward,steps\n1,0,4\n2,1,7\n");
        assert_eq!(log.cumulative_series(), vec![0.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(TrainerConfig::default().validate().is_ok());
        assert!(TrainerConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { gamma: 1.5, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { max_steps: 0, ..Default::default() }.validate().is_err());
    }
}
