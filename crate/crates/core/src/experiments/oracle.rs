//! Synthetic advisor with full knowledge of the map.

use crate::advice::{Advice, AdviceList};
use crate::gridworld::{GridMap, TileKind};

use super::ExperimentError;

/// Advice on holes and the goal only.
pub const QUOTA_TERMINALS: f64 = 0.2;
/// Advice on every tile.
pub const QUOTA_FULL: f64 = 1.0;

const QUOTA_TOLERANCE: f64 = 1e-9;

/// Advice listing produced by the oracle, in row-major tile order.
///
/// Holes get -2 and the goal +2. With the full quota every other tile is
/// also advised: +1 on a shortest safe path from Start to Goal, -1 next to a
/// hole (and on no shortest path), 0 otherwise.
pub fn oracle_advice(map: &GridMap, quota: f64) -> Result<AdviceList, ExperimentError> {
    let full = if (quota - QUOTA_FULL).abs() <= QUOTA_TOLERANCE {
        true
    } else if (quota - QUOTA_TERMINALS).abs() <= QUOTA_TOLERANCE {
        false
    } else {
        return Err(ExperimentError::UnsupportedQuota(quota));
    };
    let on_path = if full { map.on_shortest_safe_paths() } else { Vec::new() };
    let mut out = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for s in 0..map.n_states() {
        let value = match map.tile(s) {
            TileKind::Hole => -2,
            TileKind::Goal => 2,
            _ if !full => continue,
            _ if on_path[s] => 1,
            _ if touches_hole(map, s) => -1,
            _ => 0,
        };
        let (x, y) = map.coords(s);
        out.push(Advice { x, y, value });
    }
    Ok(AdviceList(out))
}

fn touches_hole(map: &GridMap, s: usize) -> bool {
    let (x, y) = map.coords(s);
    let neighbours = [
        x.checked_sub(1).map(|x| (x, y)),
        Some((x + 1, y)),
        y.checked_sub(1).map(|y| (x, y)),
        Some((x, y + 1)),
    ];
    neighbours
        .into_iter()
        .flatten()
        .filter_map(|(x, y)| map.state_of(x, y))
        .any(|n| map.tile(n) == TileKind::Hole)
}
