// SPDX-License-Identifier: Apache-2.0

//! Break-line decomposition.
//!
//! `k` break columns have their candidates deactivated, which splits the grid
//! into `k + 1` column ranges with no conflicts between them. Each range is
//! solved exactly and the results are merged. Each break removes at most `m`
//! sites from any optimum, so the merged objective `y'` satisfies
//! `y' >= y* - k * m`.
//!
//! Under `Radius(r)` a break is a strip of `max(1, r)` columns starting at the
//! break column, wide enough that nothing left of the strip conflicts with
//! anything right of it.

use std::ops::RangeInclusive;
use std::time::Instant;

use crate::design::Site;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::CandidateGrid;
use crate::ilp::{solve_exact, Selection, SolveBudget};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    /// Strictly increasing, 1-based.
    pub break_cols: Vec<usize>,
}

impl PartitionPlan {
    /// An explicit plan, checked against a grid width.
    pub fn explicit(break_cols: Vec<usize>, cols: usize) -> Result<Self> {
        let plan = Self { break_cols };
        plan.validate(cols)?;
        Ok(plan)
    }

    pub fn k(&self) -> usize {
        self.break_cols.len()
    }

    pub fn validate(&self, cols: usize) -> Result<()> {
        if let Some(&c) = self.break_cols.iter().find(|&&c| c == 0 || c > cols) {
            return Err(Error::InvalidPlan(format!(
                "break column {c} outside 1..={cols}"
            )));
        }
        if self.break_cols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPlan(
                "break columns must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Deactivated column strips and the column ranges left between them.
    fn layout(&self, cols: usize, strip: usize) -> (Vec<bool>, Vec<Option<RangeInclusive<usize>>>) {
        let mut dead = vec![false; cols + 1];
        for &c in &self.break_cols {
            dead[c..(c + strip).min(cols + 1)].fill(true);
        }
        // Range t runs from the end of strip t-1 to the start of strip t.
        let mut ranges = Vec::with_capacity(self.k() + 1);
        let mut lo = 1;
        let starts = self.break_cols.iter().copied().chain(std::iter::once(cols + 1));
        for start in starts {
            let hi = start.saturating_sub(1);
            let from = (lo..=hi).find(|&c| !dead[c]);
            let to = (lo..=hi).rev().find(|&c| !dead[c]);
            ranges.push(match (from, to) {
                (Some(a), Some(b)) => Some(a..=b),
                _ => None,
            });
            if start <= cols {
                lo = (start + strip).max(lo);
            }
        }
        (dead, ranges)
    }
}

/// Result of a partitioned solve.
#[derive(Clone, Debug)]
pub struct PartitionedResult {
    pub merged: Selection,
    /// One entry per partition; `None` range for an empty partition.
    pub per_partition: Vec<(Option<RangeInclusive<usize>>, Selection)>,
    pub plan: PartitionPlan,
    /// `y' - (y* - k*m)`, once the optimum has been attached.
    pub bound_slack: Option<i64>,
}

impl PartitionedResult {
    /// Records the slack against a known optimum for a grid with `rows` rows.
    pub fn attach_optimum(&mut self, y_star: usize, rows: usize) {
        self.bound_slack = Some(
            self.merged.objective as i64 - (y_star as i64 - (self.plan.k() * rows) as i64),
        );
    }
}

/// Evenly spaced break columns `floor(t * n / (k + 1))`, `t = 1..=k`.
///
/// A column that would collide with the previous break is shifted right to
/// the next free column.
pub fn make_breaks(grid: &CandidateGrid, k: usize) -> Result<PartitionPlan> {
    let n = grid.cols();
    if k >= n {
        return Err(Error::InvalidPlan(format!(
            "{k} break lines need more than {n} columns"
        )));
    }
    let mut cols = Vec::with_capacity(k);
    for t in 1..=k {
        let mut c = (t * n / (k + 1)).max(1);
        if let Some(&prev) = cols.last() {
            c = c.max(prev + 1);
        }
        if c > n {
            return Err(Error::InvalidPlan(format!(
                "cannot place {k} distinct break columns in {n} columns"
            )));
        }
        cols.push(c);
    }
    Ok(PartitionPlan { break_cols: cols })
}

/// Checks `y' >= y* - k * m`.
pub fn check_bound(y_prime: usize, y_star: usize, k: usize, m: usize) -> bool {
    y_prime as i128 >= y_star as i128 - (k as i128) * (m as i128)
}

pub fn solve_partitioned(
    grid: &CandidateGrid,
    plan: &PartitionPlan,
    budget: &SolveBudget,
) -> Result<PartitionedResult> {
    solve_partitioned_with(grid, plan, budget, Execution::default())
}

/// Solves every partition (concurrently under [`Execution::Parallel`]) and
/// merges in partition order. The output does not depend on `exec`.
pub fn solve_partitioned_with(
    grid: &CandidateGrid,
    plan: &PartitionPlan,
    budget: &SolveBudget,
    exec: Execution,
) -> Result<PartitionedResult> {
    plan.validate(grid.cols())?;
    let start = Instant::now();
    let strip = grid.conflict_mode().column_reach().max(1);
    let (_, ranges) = plan.layout(grid.cols(), strip);

    let solved = exec.map(&ranges, |range| match range {
        None => Selection::empty(),
        Some(range) => {
            let sub = grid.column_slice(range.clone());
            let mut sel = solve_exact(&sub, budget);
            let offset = range.start() - 1;
            for site in &mut sel.chosen {
                *site = Site::new(site.row, site.col + offset);
            }
            sel
        }
    });

    let mut chosen = Vec::new();
    let mut proven = true;
    for sel in &solved {
        chosen.extend_from_slice(&sel.chosen);
        proven &= sel.proven_optimal;
    }
    let mut merged = Selection::from_sites(chosen);
    merged.proven_optimal = proven;
    merged.wall_time = start.elapsed();

    Ok(PartitionedResult {
        merged,
        per_partition: ranges.into_iter().zip(solved).collect(),
        plan: plan.clone(),
        bound_slack: None,
    })
}
