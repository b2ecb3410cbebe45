//! The Frozen Lake environment.
//!
//! Coordinates are `(x = column, y = row)` with the origin at the top-left
//! tile. States are row-major indices `y * width + x`. Start is always the
//! top-left tile and Goal the bottom-right tile.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Placement attempts made by [`GridMap::generate`] before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("map parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("invalid hole ratio {0}, expected a value in [0, 1)")]
    InvalidHoleRatio(f64),
    #[error("no solvable map found after {0} placement attempts")]
    Unsatisfiable(usize),
    #[error("state {0} is terminal")]
    InvalidState(usize),
    #[error("state {index} is out of range for a map with {states} states")]
    IndexOutOfRange { index: usize, states: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TileKind {
    Start,
    Frozen,
    Hole,
    Goal,
}

impl TileKind {
    pub fn symbol(self) -> char {
        match self {
            TileKind::Start => 'S',
            TileKind::Frozen => 'F',
            TileKind::Hole => 'H',
            TileKind::Goal => 'G',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'S' => Some(TileKind::Start),
            'F' => Some(TileKind::Frozen),
            'H' => Some(TileKind::Hole),
            'G' => Some(TileKind::Goal),
            _ => None,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TileKind::Hole | TileKind::Goal)
    }

    /// Tiles an agent may stand on or pass through safely.
    pub fn is_safe(self) -> bool {
        !matches!(self, TileKind::Hole)
    }
}

/// Movement actions, in canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Left = 0,
    Down = 1,
    Right = 2,
    Up = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Left, Action::Down, Action::Right, Action::Up];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Name of the movement rule that performs this action.
    pub fn rule_name(self) -> &'static str {
        match self {
            Action::Left => "MoveLeft",
            Action::Down => "MoveDown",
            Action::Right => "MoveRight",
            Action::Up => "MoveUp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// The `(state, action)` pairs whose transition enters `target_state`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub target_state: usize,
    pub entries: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMap {
    width: usize,
    height: usize,
    tiles: Vec<TileKind>,
}

impl GridMap {
    /// Builds a map from row-major tiles, enforcing the Start/Goal layout.
    pub fn from_tiles(width: usize, height: usize, tiles: Vec<TileKind>) -> Result<Self, GridError> {
        if width == 0 || height == 0 || width * height < 2 || tiles.len() != width * height {
            return Err(GridError::InvalidDimensions { width, height });
        }
        let map = Self { width, height, tiles };
        map.check_layout().map_err(|message| GridError::Parse { line: 0, message })?;
        Ok(map)
    }

    fn check_layout(&self) -> Result<(), String> {
        let starts = self.tiles.iter().filter(|t| **t == TileKind::Start).count();
        let goals = self.tiles.iter().filter(|t| **t == TileKind::Goal).count();
        if starts != 1 || self.tiles[0] != TileKind::Start {
            return Err("expected exactly one S, at the top-left tile".into());
        }
        if goals != 1 || self.tiles[self.tiles.len() - 1] != TileKind::Goal {
            return Err("expected exactly one G, at the bottom-right tile".into());
        }
        Ok(())
    }

    /// Parses rows of `S`, `F`, `H`, `G`. Blank lines and surrounding
    /// whitespace are ignored.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut width = None;
        let mut tiles = Vec::new();
        let mut height = 0;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            last_line = line_no;
            let len = row.chars().count();
            match width {
                None => width = Some(len),
                Some(w) if w != len => {
                    return Err(GridError::Parse {
                        line: line_no,
                        message: format!("row has {len} tiles, expected {w}"),
                    })
                }
                _ => {}
            }
            for (col, c) in row.chars().enumerate() {
                let tile = TileKind::from_symbol(c).ok_or_else(|| GridError::Parse {
                    line: line_no,
                    message: format!("unknown tile '{c}' at column {}", col + 1),
                })?;
                tiles.push(tile);
            }
            height += 1;
        }
        let width = width.ok_or(GridError::Parse {
            line: 0,
            message: "empty map".into(),
        })?;
        if width * height < 2 {
            return Err(GridError::InvalidDimensions { width, height });
        }
        let map = Self { width, height, tiles };
        map.check_layout()
            .map_err(|message| GridError::Parse { line: last_line, message })?;
        Ok(map)
    }

    /// Canonical rendering: newline-terminated rows of tile symbols.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.tiles.chunks(self.width) {
            out.extend(row.iter().map(|t| t.symbol()));
            out.push('\n');
        }
        out
    }

    /// Generates a random map with exactly `round(hole_ratio * width * height)`
    /// holes and a guaranteed safe 4-connected path from Start to Goal.
    pub fn generate(width: usize, height: usize, hole_ratio: f64, seed: u64) -> Result<Self, GridError> {
        if width == 0 || height == 0 || width * height < 2 {
            return Err(GridError::InvalidDimensions { width, height });
        }
        if !(0.0..1.0).contains(&hole_ratio) {
            return Err(GridError::InvalidHoleRatio(hole_ratio));
        }
        let cells = width * height;
        let holes = (hole_ratio * cells as f64).round() as usize;
        let candidates = cells - 2;
        if holes > candidates {
            return Err(GridError::Unsatisfiable(0));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let mut tiles = vec![TileKind::Frozen; cells];
            tiles[0] = TileKind::Start;
            tiles[cells - 1] = TileKind::Goal;
            for i in index::sample(&mut rng, candidates, holes) {
                tiles[i + 1] = TileKind::Hole;
            }
            let map = Self { width, height, tiles };
            if map.safe_distances_from_start()[map.goal_state()].is_some() {
                return Ok(map);
            }
        }
        Err(GridError::Unsatisfiable(MAX_PLACEMENT_ATTEMPTS))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_states(&self) -> usize {
        self.tiles.len()
    }

    pub fn start_state(&self) -> usize {
        0
    }

    pub fn goal_state(&self) -> usize {
        self.tiles.len() - 1
    }

    pub fn state_of(&self, x: usize, y: usize) -> Option<usize> {
        (x < self.width && y < self.height).then(|| y * self.width + x)
    }

    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state % self.width, state / self.width)
    }

    pub fn tile(&self, state: usize) -> TileKind {
        self.tiles[state]
    }

    pub fn tiles(&self) -> &[TileKind] {
        &self.tiles
    }

    pub fn hole_count(&self) -> usize {
        self.tiles.iter().filter(|t| **t == TileKind::Hole).count()
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.tiles[state].is_terminal()
    }

    fn check_index(&self, state: usize) -> Result<(), GridError> {
        if state >= self.tiles.len() {
            return Err(GridError::IndexOutOfRange {
                index: state,
                states: self.tiles.len(),
            });
        }
        Ok(())
    }

    /// The cell reached by moving from `state`; moves off the grid stay put.
    pub fn destination(&self, state: usize, action: Action) -> usize {
        let (x, y) = self.coords(state);
        let (nx, ny) = match action {
            Action::Left => (x.wrapping_sub(1), y),
            Action::Down => (x, y + 1),
            Action::Right => (x + 1, y),
            Action::Up => (x, y.wrapping_sub(1)),
        };
        self.state_of(nx, ny).unwrap_or(state)
    }

    /// Deterministic transition. Reward is 1 on entering Goal and 0
    /// otherwise; Hole and Goal terminate the episode.
    pub fn step(&self, state: usize, action: Action) -> Result<StepOutcome, GridError> {
        self.check_index(state)?;
        if self.is_terminal(state) {
            return Err(GridError::InvalidState(state));
        }
        let next_state = self.destination(state, action);
        let tile = self.tiles[next_state];
        Ok(StepOutcome {
            next_state,
            reward: if tile == TileKind::Goal { 1.0 } else { 0.0 },
            terminal: tile.is_terminal(),
        })
    }

    /// All non-terminal `(state, action)` pairs that transition into `target`,
    /// including border bump-backs onto `target` itself.
    pub fn neighborhood(&self, target: usize) -> Result<Neighborhood, GridError> {
        self.check_index(target)?;
        let mut entries = BTreeSet::new();
        let (tx, ty) = self.coords(target);
        let candidates = [
            (tx.checked_add(1), Some(ty), Action::Left),
            (Some(tx), ty.checked_sub(1), Action::Down),
            (tx.checked_sub(1), Some(ty), Action::Right),
            (Some(tx), ty.checked_add(1), Action::Up),
        ];
        for (sx, sy, action) in candidates {
            if let (Some(sx), Some(sy)) = (sx, sy) {
                if let Some(source) = self.state_of(sx, sy) {
                    if !self.is_terminal(source) {
                        entries.insert((source, action.index()));
                    }
                }
            }
        }
        if !self.is_terminal(target) {
            for action in Action::ALL {
                if self.destination(target, action) == target {
                    entries.insert((target, action.index()));
                }
            }
        }
        Ok(Neighborhood {
            target_state: target,
            entries,
        })
    }

    fn safe_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.tiles.len()];
        if !self.tiles[from].is_safe() {
            return dist;
        }
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap_or(0);
            // paths do not continue through the goal
            if self.tiles[s] == TileKind::Goal && s != from {
                continue;
            }
            for action in Action::ALL {
                let n = self.destination(s, action);
                if dist[n].is_none() && self.tiles[n].is_safe() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Breadth-first distances over safe tiles from Start.
    pub fn safe_distances_from_start(&self) -> Vec<Option<usize>> {
        self.safe_distances(self.start_state())
    }

    /// Length in moves of the shortest hole-free path from Start to Goal.
    pub fn shortest_safe_path_len(&self) -> Option<usize> {
        self.safe_distances_from_start()[self.goal_state()]
    }

    /// Whether `state` lies on at least one shortest hole-free Start to Goal path.
    pub fn on_shortest_safe_paths(&self) -> Vec<bool> {
        let from_start = self.safe_distances(self.start_state());
        let from_goal = self.safe_distances(self.goal_state());
        let Some(total) = from_start[self.goal_state()] else {
            return vec![false; self.tiles.len()];
        };
        from_start
            .iter()
            .zip(&from_goal)
            .map(|(a, b)| matches!((a, b), (Some(a), Some(b)) if a + b == total))
            .collect()
    }

    /// Exact probability that an agent choosing uniformly among the four
    /// moves reaches Goal within `max_steps` moves.
    pub fn random_walk_success_probability(&self, max_steps: usize) -> f64 {
        let mut mass = vec![0.0; self.tiles.len()];
        mass[self.start_state()] = 1.0;
        let mut success = 0.0;
        for _ in 0..max_steps {
            let mut next = vec![0.0; mass.len()];
            for (s, &m) in mass.iter().enumerate() {
                if m == 0.0 || self.is_terminal(s) {
                    continue;
                }
                for action in Action::ALL {
                    let d = self.destination(s, action);
                    match self.tiles[d] {
                        TileKind::Goal => success += m / 4.0,
                        TileKind::Hole => {}
                        _ => next[d] += m / 4.0,
                    }
                }
            }
            mass = next;
        }
        success
    }
}

impl FromStr for GridMap {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A 4x4 example lake.
pub const SMALL_LAKE: &str = "SFFF\nFHFH\nFFFH\nHFFG\n";

#[cfg(test)]
mod tests {
    #[test]
    fn random_walk_success() {
        let map = GridMap::parse(SMALL_LAKE).unwrap();
        // exact value from an independent dynamic-programming evaluation
        assert!((map.random_walk_success_probability(100) - 0.013939795959171438).abs() < 1e-12);
        let sg = GridMap::parse("SG").unwrap();
        assert_eq!(sg.random_walk_success_probability(1), 0.25);
        assert_eq!(sg.random_walk_success_probability(0), 0.0);
    }

    use super::*;
    use proptest::prelude::*;

    fn small_lake() -> GridMap {
        GridMap::parse(SMALL_LAKE).unwrap()
    }

    fn brute_force_neighborhood(m: &GridMap, target: usize) -> BTreeSet<(usize, usize)> {
        let mut set = BTreeSet::new();
        for s in 0..m.n_states() {
            for a in Action::ALL {
                if let Ok(out) = m.step(s, a) {
                    if out.next_state == target {
                        set.insert((s, a.index()));
                    }
                }
            }
        }
        set
    }

    #[test]
    fn parse_small_lake() {
        let m = small_lake();
        assert_eq!((m.width(), m.height()), (4, 4));
        let holes: Vec<_> = (0..m.n_states())
            .filter(|&s| m.tile(s) == TileKind::Hole)
            .map(|s| m.coords(s))
            .collect();
        assert_eq!(holes, vec![(1, 1), (3, 1), (3, 2), (0, 3)]);
    }

    #[test]
    fn parse_smallest() {
        let m = GridMap::parse("SG").unwrap();
        assert_eq!((m.width(), m.height()), (2, 1));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            GridMap::parse("SFFF\nFHF"),
            Err(GridError::Parse { line: 2, .. })
        ));
        assert!(GridMap::parse("SX\nFG").is_err());
        assert!(GridMap::parse("FS\nFG").is_err());
        assert!(GridMap::parse("SG\nGF").is_err());
        assert!(GridMap::parse("").is_err());
        assert!(GridMap::parse("S").is_err());
    }

    #[test]
    fn generate_counts_and_determinism() {
        let m = GridMap::generate(12, 12, 0.2, 7).unwrap();
        assert_eq!(m.hole_count(), 29);
        assert!(m.shortest_safe_path_len().is_some());
        assert_eq!(m, GridMap::generate(12, 12, 0.2, 7).unwrap());
        assert_eq!(GridMap::generate(2, 1, 0.0, 3).unwrap().render(), "SG\n");
    }

    #[test]
    fn generate_errors() {
        assert!(matches!(
            GridMap::generate(1, 1, 0.0, 0),
            Err(GridError::InvalidDimensions { .. })
        ));
        assert!(GridMap::generate(4, 4, 1.0, 0).is_err());
        assert!(matches!(
            GridMap::generate(2, 1, 0.6, 0),
            Err(GridError::Unsatisfiable(_))
        ));
        // a 1-wide corridor with any hole is never solvable
        assert!(matches!(
            GridMap::generate(1, 6, 0.2, 0),
            Err(GridError::Unsatisfiable(MAX_PLACEMENT_ATTEMPTS))
        ));
    }

    #[test]
    fn step_examples() {
        let m = small_lake();
        let out = m.step(0, Action::Right).unwrap();
        assert_eq!(out, StepOutcome { next_state: 1, reward: 0.0, terminal: false });
        let out = m.step(0, Action::Up).unwrap();
        assert_eq!(out.next_state, 0);
        let s = m.state_of(2, 3).unwrap();
        let out = m.step(s, Action::Right).unwrap();
        assert_eq!(out, StepOutcome { next_state: 15, reward: 1.0, terminal: true });
        let out = m.step(m.state_of(0, 1).unwrap(), Action::Right).unwrap();
        assert!(out.terminal);
        assert_eq!(out.reward, 0.0);
        assert_eq!(m.step(5, Action::Left), Err(GridError::InvalidState(5)));
        assert!(matches!(m.step(16, Action::Left), Err(GridError::IndexOutOfRange { .. })));
    }

    #[test]
    fn neighborhood_examples() {
        let m = small_lake();
        let hole = m.state_of(1, 1).unwrap();
        let expected: BTreeSet<_> = [
            (m.state_of(0, 1).unwrap(), Action::Right.index()),
            (m.state_of(1, 0).unwrap(), Action::Down.index()),
            (m.state_of(2, 1).unwrap(), Action::Left.index()),
            (m.state_of(1, 2).unwrap(), Action::Up.index()),
        ]
        .into();
        assert_eq!(m.neighborhood(hole).unwrap().entries, expected);
        assert_eq!(brute_force_neighborhood(&m, hole), expected);

        let sg = GridMap::parse("SG").unwrap();
        assert_eq!(
            sg.neighborhood(1).unwrap().entries,
            [(0, Action::Right.index())].into()
        );

        let origin = m.neighborhood(0).unwrap().entries;
        assert!(origin.contains(&(0, Action::Left.index())));
        assert!(origin.contains(&(0, Action::Up.index())));
        assert!(m.neighborhood(99).is_err());
    }

    #[test]
    fn shortest_paths_on_small_lake() {
        let m = small_lake();
        assert_eq!(m.shortest_safe_path_len(), Some(6));
        let on = m.on_shortest_safe_paths();
        assert!(on[0] && on[15]);
        assert!(on[m.state_of(1, 2).unwrap()]);
        assert!(!on[m.state_of(1, 1).unwrap()]);
        assert!(!on[m.state_of(3, 0).unwrap()]);
    }

    proptest! {
        #[test]
        fn neighborhood_matches_brute_force(
            w in 1usize..8, h in 1usize..8, ratio in 0.0..0.3f64, seed in any::<u64>()
        ) {
            prop_assume!(w * h >= 2);
            if let Ok(m) = GridMap::generate(w, h, ratio, seed) {
                for t in 0..m.n_states() {
                    prop_assert_eq!(m.neighborhood(t).unwrap().entries, brute_force_neighborhood(&m, t));
                }
            }
        }

        #[test]
        fn render_round_trip(w in 1usize..10, h in 1usize..10, ratio in 0.0..0.4f64, seed in any::<u64>()) {
            prop_assume!(w * h >= 2);
            if let Ok(m) = GridMap::generate(w, h, ratio, seed) {
                prop_assert_eq!(GridMap::parse(&m.render()).unwrap(), m);
            }
        }

        #[test]
        fn step_stays_in_range(w in 1usize..10, h in 1usize..10, seed in any::<u64>()) {
            prop_assume!(w * h >= 2);
            let m = GridMap::generate(w, h, 0.0, seed).unwrap();
            for s in 0..m.n_states() - 1 {
                for a in Action::ALL {
                    prop_assert!(m.step(s, a).unwrap().next_state < m.n_states());
                }
            }
        }
    }
}
