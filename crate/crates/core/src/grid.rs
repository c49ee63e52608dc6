// SPDX-License-Identifier: Apache-2.0

//! Via candidate grid and the spacing conflict relation between candidates.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::design::{DesignDescription, Site};
use crate::error::{Error, Result};

/// Which pairs of candidate sites may not both receive a via.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictMode {
    /// `(i, j)` conflicts with `(i + 1, j)` only.
    #[default]
    VerticalOnly,
    /// Sites within Chebyshev distance `r` conflict.
    Radius(u32),
}

impl ConflictMode {
    /// Row/column offsets of the conflict neighbourhood, origin excluded.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        match *self {
            ConflictMode::VerticalOnly => vec![(-1, 0), (1, 0)],
            ConflictMode::Radius(r) => {
                let r = r as isize;
                let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1) - 1) as usize);
                for dr in -r..=r {
                    for dc in -r..=r {
                        if (dr, dc) != (0, 0) {
                            out.push((dr, dc));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn conflicts(&self, a: Site, b: Site) -> bool {
        if a == b {
            return false;
        }
        let dr = a.row.abs_diff(b.row);
        let dc = a.col.abs_diff(b.col);
        match *self {
            ConflictMode::VerticalOnly => dc == 0 && dr == 1,
            ConflictMode::Radius(r) => dr.max(dc) <= r as usize,
        }
    }

    /// How many columns a conflict can reach across.
    pub fn column_reach(&self) -> usize {
        match *self {
            ConflictMode::VerticalOnly => 0,
            ConflictMode::Radius(r) => r as usize,
        }
    }
}

/// The `m x n` availability mask of via candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateGrid {
    rows: usize,
    cols: usize,
    available: Vec<bool>,
    conflict_mode: ConflictMode,
}

impl CandidateGrid {
    /// Every site available.
    pub fn new(rows: usize, cols: usize, conflict_mode: ConflictMode) -> Self {
        Self {
            rows,
            cols,
            available: vec![true; rows * cols],
            conflict_mode,
        }
    }

    /// Builds a grid from a row-major mask.
    pub fn from_mask(rows: usize, cols: usize, mask: Vec<bool>, conflict_mode: ConflictMode) -> Self {
        assert_eq!(mask.len(), rows * cols, "mask length must be rows * cols");
        Self {
            rows,
            cols,
            available: mask,
            conflict_mode,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn conflict_mode(&self) -> ConflictMode {
        self.conflict_mode
    }

    pub fn site_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, site: Site) -> bool {
        site.in_bounds(self.rows, self.cols)
    }

    /// Row-major 0-based index of an in-range site.
    pub fn index(&self, site: Site) -> usize {
        (site.row - 1) * self.cols + (site.col - 1)
    }

    pub fn site_at(&self, index: usize) -> Site {
        Site::new(index / self.cols + 1, index % self.cols + 1)
    }

    pub fn is_available(&self, site: Site) -> bool {
        self.contains(site) && self.available[self.index(site)]
    }

    pub fn set_available(&mut self, site: Site, value: bool) -> Result<()> {
        self.check(site)?;
        let idx = self.index(site);
        self.available[idx] = value;
        Ok(())
    }

    pub fn mask(&self) -> &[bool] {
        &self.available
    }

    pub fn available_count(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    /// Available sites in row-major order.
    pub fn available_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.available
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| self.site_at(i))
    }

    pub fn column_mask(&self, col: usize) -> Vec<bool> {
        (0..self.rows)
            .map(|r| self.available[r * self.cols + col - 1])
            .collect()
    }

    /// In-range sites in the conflict neighbourhood of `site`, regardless of
    /// availability.
    pub(crate) fn neighbourhood(&self, site: Site) -> impl Iterator<Item = Site> + '_ {
        let (r, c) = (site.row as isize, site.col as isize);
        self.conflict_mode
            .offsets()
            .into_iter()
            .filter_map(move |(dr, dc)| {
                let (nr, nc) = (r + dr, c + dc);
                (nr >= 1 && nc >= 1 && nr as usize <= self.rows && nc as usize <= self.cols)
                    .then(|| Site::new(nr as usize, nc as usize))
            })
    }

    /// The sub-grid spanning an inclusive, 1-based column range.
    pub fn column_slice(&self, cols: RangeInclusive<usize>) -> CandidateGrid {
        let (lo, hi) = (*cols.start(), *cols.end());
        assert!(lo >= 1 && hi <= self.cols && lo <= hi, "column range out of bounds");
        let width = hi - lo + 1;
        let mut available = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            let base = r * self.cols;
            available.extend_from_slice(&self.available[base + lo - 1..base + hi]);
        }
        CandidateGrid {
            rows: self.rows,
            cols: width,
            available,
            conflict_mode: self.conflict_mode,
        }
    }

    pub(crate) fn check(&self, site: Site) -> Result<()> {
        if self.contains(site) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                site,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

/// Extracts the candidate mask from a design.
///
/// A site is a candidate iff it is neither blocked nor an existing via and no
/// existing via lies inside its conflict neighbourhood.
pub fn build_candidate_grid(design: &DesignDescription) -> Result<CandidateGrid> {
    for &site in design.blocked_sites.iter().chain(&design.existing_vias) {
        design.check_site(site)?;
    }
    let mut grid = CandidateGrid::new(design.rows, design.cols, design.conflict_mode);
    for &site in &design.blocked_sites {
        let idx = grid.index(site);
        grid.available[idx] = false;
    }
    for &via in &design.existing_vias {
        let idx = grid.index(via);
        grid.available[idx] = false;
        let spaced: Vec<usize> = grid.neighbourhood(via).map(|s| grid.index(s)).collect();
        for idx in spaced {
            grid.available[idx] = false;
        }
    }
    Ok(grid)
}

/// Available sites that conflict with `site`, in row-major order.
pub fn conflicts_of(grid: &CandidateGrid, site: Site) -> Result<BTreeSet<Site>> {
    grid.check(site)?;
    Ok(grid
        .neighbourhood(site)
        .filter(|&s| grid.is_available(s))
        .collect())
}
