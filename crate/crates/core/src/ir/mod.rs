// SPDX-License-Identifier: Apache-2.0

//! DC IR-drop analysis of the two-layer power mesh.
//!
//! Units are chosen so Ohm's law needs no scaling: voltages in millivolts,
//! currents in milliamperes, resistances in ohms, conductances in siemens.

pub mod metrics;
pub mod network;
pub mod solve;

pub use metrics::{analyze, compare, edge_currents, ir_metrics, ComparisonRow, EmViolation, IrReport};
pub use network::{build_network, EdgeKind, NodeRef, ResistiveNetwork};
pub use solve::{solve_dc, DcSolution, SolveMethod, DEFAULT_CG_TOLERANCE};
