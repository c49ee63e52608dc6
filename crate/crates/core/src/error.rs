// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use crate::design::{Site, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site {site} is outside the {rows}x{cols} grid")]
    OutOfRange { site: Site, rows: usize, cols: usize },

    #[error("design failed validation:\n{}", format_violations(.0))]
    InvalidDesign(Vec<Violation>),

    #[error("brute force is limited to {max} grid sites, got {sites}")]
    TooLarge { sites: usize, max: usize },

    #[error("invalid partition plan: {0}")]
    InvalidPlan(String),

    #[error("selection is infeasible for this design: {0}")]
    InfeasibleSelection(String),

    #[error("sink at {0} has no resistive path to a pad")]
    DisconnectedSink(Site),

    #[error("conductance matrix is singular: {0}")]
    SingularSystem(String),

    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("design generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("strategy `{label}`: {source}")]
    Strategy {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
