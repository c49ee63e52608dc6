// SPDX-License-Identifier: Apache-2.0

//! Exact maximisation of added vias under pairwise spacing conflicts.
//!
//! The 0/1 program is: maximise the number of chosen candidate sites subject
//! to `x_a + x_b <= 1` for every conflicting pair `(a, b)`. Vertical-only
//! conflicts decouple into independent columns, each a maximum independent
//! set on a path, solved by [`solve_column_dp`]. General radius conflicts go
//! through a branch-and-bound search in [`branch_bound`].

pub mod branch_bound;
mod oracle;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::design::Site;
use crate::error::Result;
use crate::grid::{CandidateGrid, ConflictMode};

pub use oracle::{brute_force, BRUTE_FORCE_MAX_SITES};

/// A set of chosen via sites.
#[derive(Clone, Debug, Default)]
pub struct Selection {
    /// Row-major sorted.
    pub chosen: Vec<Site>,
    pub objective: usize,
    /// False when a solve budget ran out before optimality was proven.
    pub proven_optimal: bool,
    pub wall_time: Duration,
}

impl Selection {
    pub fn empty() -> Self {
        Self {
            proven_optimal: true,
            ..Self::default()
        }
    }

    /// Builds a selection from arbitrary sites (sorted, objective = count).
    pub fn from_sites(sites: impl IntoIterator<Item = Site>) -> Self {
        let mut chosen: Vec<Site> = sites.into_iter().collect();
        chosen.sort_unstable();
        Self {
            objective: chosen.len(),
            chosen,
            proven_optimal: true,
            wall_time: Duration::ZERO,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SelectionRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: SelectionRecord = serde_json::from_str(text)?;
        Ok(record.into())
    }
}

/// Serialised form of a [`Selection`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionRecord {
    objective: usize,
    chosen: Vec<Site>,
    proven_optimal: bool,
    wall_time_s: f64,
}

impl From<&Selection> for SelectionRecord {
    fn from(sel: &Selection) -> Self {
        Self {
            objective: sel.objective,
            chosen: sel.chosen.clone(),
            proven_optimal: sel.proven_optimal,
            wall_time_s: sel.wall_time.as_secs_f64(),
        }
    }
}

impl From<SelectionRecord> for Selection {
    fn from(r: SelectionRecord) -> Self {
        Self {
            objective: r.objective,
            chosen: r.chosen,
            proven_optimal: r.proven_optimal,
            wall_time: Duration::from_secs_f64(r.wall_time_s.max(0.0)),
        }
    }
}

/// Limits for the branch-and-bound search. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveBudget {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl SolveBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }
}

/// Maximum-cardinality conflict-free selection of available sites.
///
/// Deterministic for a given grid. If the budget runs out the best feasible
/// selection found so far is returned with `proven_optimal == false`.
pub fn solve_exact(grid: &CandidateGrid, budget: &SolveBudget) -> Selection {
    let start = Instant::now();
    let (chosen, proven_optimal) = match grid.conflict_mode() {
        ConflictMode::VerticalOnly => (solve_by_columns(grid), true),
        ConflictMode::Radius(_) => {
            let outcome = branch_bound::solve(grid, budget);
            (outcome.chosen, outcome.proven_optimal)
        }
    };
    Selection {
        objective: chosen.len(),
        chosen,
        proven_optimal,
        wall_time: start.elapsed(),
    }
}

fn solve_by_columns(grid: &CandidateGrid) -> Vec<Site> {
    let mut chosen = Vec::new();
    for col in 1..=grid.cols() {
        let (_, rows) = solve_column_dp(&grid.column_mask(col));
        chosen.extend(rows.into_iter().map(|row| Site::new(row, col)));
    }
    chosen.sort_unstable();
    chosen
}

/// Maximum independent set on a path of available rows.
///
/// Returns the count and the chosen 1-based rows. Ties prefer taking the
/// earlier row.
pub fn solve_column_dp(column_mask: &[bool]) -> (usize, Vec<usize>) {
    let m = column_mask.len();
    // best[i] = optimum over rows i.. (0-based); two trailing sentinels.
    let mut best = vec![0usize; m + 2];
    for i in (0..m).rev() {
        let skip = best[i + 1];
        best[i] = if column_mask[i] {
            skip.max(1 + best[i + 2])
        } else {
            skip
        };
    }
    let mut rows = Vec::with_capacity(best[0]);
    let mut i = 0;
    while i < m {
        if column_mask[i] && 1 + best[i + 2] >= best[i + 1] {
            rows.push(i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    (best[0], rows)
}

/// True iff every chosen site is available, appears once, and no two chosen
/// sites conflict.
pub fn verify_feasible(grid: &CandidateGrid, sel: &Selection) -> bool {
    let mut seen = BTreeSet::new();
    for &site in &sel.chosen {
        if !grid.is_available(site) || !seen.insert(site) {
            return false;
        }
    }
    if sel.objective != sel.chosen.len() {
        return false;
    }
    sel.chosen
        .iter()
        .all(|&site| grid.neighbourhood(site).all(|n| !seen.contains(&n)))
}
