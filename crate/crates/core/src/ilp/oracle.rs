// SPDX-License-Identifier: Apache-2.0

//! Exhaustive reference solver used to cross-check the exact paths.

use std::time::Instant;

use crate::design::Site;
use crate::error::{Error, Result};
use crate::grid::CandidateGrid;

use super::Selection;

pub const BRUTE_FORCE_MAX_SITES: usize = 24;

/// Enumerates every subset of available sites and keeps a largest feasible
/// one. Among equally large subsets the lexicographically smallest row-major
/// site list wins.
pub fn brute_force(grid: &CandidateGrid) -> Result<Selection> {
    if grid.site_count() > BRUTE_FORCE_MAX_SITES {
        return Err(Error::TooLarge {
            sites: grid.site_count(),
            max: BRUTE_FORCE_MAX_SITES,
        });
    }
    let start = Instant::now();
    let sites: Vec<Site> = grid.available_sites().collect();
    // conflict[i]: bitmask of available sites conflicting with site i.
    let conflict: Vec<u32> = sites
        .iter()
        .map(|&a| {
            sites
                .iter()
                .enumerate()
                .filter(|(_, &b)| grid.conflict_mode().conflicts(a, b))
                .fold(0u32, |acc, (j, _)| acc | 1 << j)
        })
        .collect();

    let mut best: u32 = 0;
    for subset in 0u32..(1u32 << sites.len()) {
        let feasible = (0..sites.len())
            .filter(|&i| subset >> i & 1 == 1)
            .all(|i| subset & conflict[i] == 0);
        if !feasible {
            continue;
        }
        let (cnt, best_cnt) = (subset.count_ones(), best.count_ones());
        // Equal size: the set owning the lowest differing bit sorts first.
        if cnt > best_cnt || (cnt == best_cnt && subset & (subset ^ best) & (subset ^ best).wrapping_neg() != 0) {
            best = subset;
        }
    }

    let mut sel = Selection::from_sites(
        sites
            .iter()
            .enumerate()
            .filter(|(i, _)| best >> i & 1 == 1)
            .map(|(_, &s)| s),
    );
    sel.wall_time = start.elapsed();
    Ok(sel)
}
