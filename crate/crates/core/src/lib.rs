// SPDX-License-Identifier: Apache-2.0

//! Post-route power grid enhancement.
//!
//! The crate models a routed design as an `m x n` grid of via sites on top of
//! a two-layer power mesh. Open sites may receive extra vias that let the
//! horizontal and vertical straps share current, but via-to-via spacing rules
//! make neighbouring candidates mutually exclusive. The pieces are:
//!
//! * [`design`] and [`grid`]: the design description, candidate extraction and
//!   the spacing conflict relation.
//! * [`ilp`]: the exact 0/1 maximisation (column dynamic program for vertical
//!   conflicts, branch-and-bound otherwise) plus a brute-force oracle.
//! * [`partition`]: break-line decomposition with its `y' >= y* - k*m` bound.
//! * [`ir`]: DC nodal analysis of the mesh to measure IR drop and EM stress.
//! * [`generate`] and [`bench`]: seeded instance generation and the comparison
//!   harness behind the `gridweld` binary.

pub mod bench;
pub mod design;
pub mod error;
pub mod exec;
pub mod generate;
pub mod grid;
pub mod ilp;
pub mod ir;
pub mod partition;
pub mod report;

pub use design::{DesignDescription, Layer, Pad, Sink, Site, Violation};
pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{build_candidate_grid, conflicts_of, CandidateGrid, ConflictMode};
pub use ilp::{brute_force, solve_column_dp, solve_exact, verify_feasible, Selection, SolveBudget};
pub use partition::{check_bound, make_breaks, solve_partitioned, PartitionPlan, PartitionedResult};
