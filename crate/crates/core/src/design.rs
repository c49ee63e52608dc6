// SPDX-License-Identifier: Apache-2.0

//! Design description: grid geometry, routing blockages, existing vias, pads,
//! sinks and the electrical parameters of the two-layer mesh.
//!
//! All indices are 1-based in the external JSON format.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ConflictMode;
use crate::ir::network::pad_reachable_nodes;
use crate::ir::network::NodeIndexer;

/// A 1-based `(row, col)` grid location, serialised as `[row, col]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn in_bounds(&self, rows: usize, cols: usize) -> bool {
        (1..=rows).contains(&self.row) && (1..=cols).contains(&self.col)
    }
}

impl From<(usize, usize)> for Site {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

impl From<Site> for (usize, usize) {
    fn from(site: Site) -> Self {
        (site.row, site.col)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Metal layer. Layer A carries horizontal straps, layer B vertical straps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    A,
    B,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::A => f.write_str("A"),
            Layer::B => f.write_str("B"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pad {
    pub layer: Layer,
    pub row: usize,
    pub col: usize,
    pub voltage_mv: f64,
}

impl Pad {
    pub fn site(&self) -> Site {
        Site::new(self.row, self.col)
    }
}

/// A current sink attached to layer A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sink {
    pub row: usize,
    pub col: usize,
    pub current_ma: f64,
}

impl Sink {
    pub fn site(&self) -> Site {
        Site::new(self.row, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDescription {
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "pitch_x_um")]
    pub pitch_x: f64,
    #[serde(rename = "pitch_y_um")]
    pub pitch_y: f64,
    #[serde(rename = "blocked", default)]
    pub blocked_sites: Vec<Site>,
    #[serde(default)]
    pub existing_vias: Vec<Site>,
    pub pads: Vec<Pad>,
    #[serde(default)]
    pub sinks: Vec<Sink>,
    #[serde(rename = "strap_resistance_h_ohm")]
    pub strap_resistance_h: f64,
    #[serde(rename = "strap_resistance_v_ohm")]
    pub strap_resistance_v: f64,
    #[serde(rename = "via_resistance_ohm")]
    pub via_resistance: f64,
    #[serde(default)]
    pub conflict_mode: ConflictMode,
    #[serde(rename = "em_limit_ma", default, skip_serializing_if = "Option::is_none")]
    pub em_limit: Option<f64>,
}

impl DesignDescription {
    /// A blank design: unit pitch and resistances, no pads or sinks.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            pitch_x: 1.0,
            pitch_y: 1.0,
            blocked_sites: Vec::new(),
            existing_vias: Vec::new(),
            pads: Vec::new(),
            sinks: Vec::new(),
            strap_resistance_h: 1.0,
            strap_resistance_v: 1.0,
            via_resistance: 1.0,
            conflict_mode: ConflictMode::VerticalOnly,
            em_limit: None,
        }
    }

    pub fn supply_mv(&self) -> Option<f64> {
        self.pads.first().map(|p| p.voltage_mv)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub(crate) fn check_site(&self, site: Site) -> Result<()> {
        if site.in_bounds(self.rows, self.cols) {
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

/// One failed design invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyGrid { rows: usize, cols: usize },
    NonPositiveParameter { field: &'static str, value: f64 },
    ZeroConflictRadius,
    OutOfRange { kind: &'static str, site: Site },
    OverlapViolation(Site),
    NoPads,
    PadVoltageMismatch { site: Site, expected_mv: f64, found_mv: f64 },
    NegativeSinkCurrent { site: Site, current_ma: f64 },
    DisconnectedSink(Site),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGrid { rows, cols } => {
                write!(f, "grid must have at least one row and column, got {rows}x{cols}")
            }
            Violation::NonPositiveParameter { field, value } => {
                write!(f, "{field} must be positive and finite, got {value}")
            }
            Violation::ZeroConflictRadius => f.write_str("conflict radius must be at least 1"),
            Violation::OutOfRange { kind, site } => write!(f, "{kind} site {site} is out of range"),
            Violation::OverlapViolation(site) => {
                write!(f, "site {site} is both blocked and an existing via")
            }
            Violation::NoPads => f.write_str("design has no pads"),
            Violation::PadVoltageMismatch {
                site,
                expected_mv,
                found_mv,
            } => write!(
                f,
                "pad at {site} is at {found_mv} mV, other pads at {expected_mv} mV"
            ),
            Violation::NegativeSinkCurrent { site, current_ma } => {
                write!(f, "sink at {site} has invalid current {current_ma} mA")
            }
            Violation::DisconnectedSink(site) => {
                write!(f, "sink at {site} is not connected to any pad")
            }
        }
    }
}

/// Checks every design invariant. An empty list means the design is usable.
///
/// Connectivity is checked on the reference mesh (existing vias only), and
/// only once the structural checks pass.
pub fn validate_design(design: &DesignDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    if design.rows == 0 || design.cols == 0 {
        out.push(Violation::EmptyGrid {
            rows: design.rows,
            cols: design.cols,
        });
    }
    let positive = [
        ("pitch_x_um", Some(design.pitch_x)),
        ("pitch_y_um", Some(design.pitch_y)),
        ("strap_resistance_h_ohm", Some(design.strap_resistance_h)),
        ("strap_resistance_v_ohm", Some(design.strap_resistance_v)),
        ("via_resistance_ohm", Some(design.via_resistance)),
        ("em_limit_ma", design.em_limit),
    ];
    for (field, value) in positive {
        if let Some(value) = value {
            if !(value.is_finite() && value > 0.0) {
                out.push(Violation::NonPositiveParameter { field, value });
            }
        }
    }
    if design.conflict_mode == ConflictMode::Radius(0) {
        out.push(Violation::ZeroConflictRadius);
    }

    let (rows, cols) = (design.rows, design.cols);
    let mut range_check = |kind: &'static str, site: Site| {
        if !site.in_bounds(rows, cols) {
            out.push(Violation::OutOfRange { kind, site });
        }
    };
    design.blocked_sites.iter().for_each(|&s| range_check("blocked", s));
    design.existing_vias.iter().for_each(|&s| range_check("existing via", s));
    design.pads.iter().for_each(|p| range_check("pad", p.site()));
    design.sinks.iter().for_each(|s| range_check("sink", s.site()));

    let blocked: BTreeSet<Site> = design.blocked_sites.iter().copied().collect();
    let overlaps: BTreeSet<Site> = design
        .existing_vias
        .iter()
        .copied()
        .filter(|s| blocked.contains(s))
        .collect();
    out.extend(overlaps.into_iter().map(Violation::OverlapViolation));

    match design.pads.first() {
        None => out.push(Violation::NoPads),
        Some(first) => {
            for pad in &design.pads {
                if !pad.voltage_mv.is_finite() || pad.voltage_mv != first.voltage_mv {
                    out.push(Violation::PadVoltageMismatch {
                        site: pad.site(),
                        expected_mv: first.voltage_mv,
                        found_mv: pad.voltage_mv,
                    });
                }
            }
        }
    }
    for sink in &design.sinks {
        if !(sink.current_ma.is_finite() && sink.current_ma >= 0.0) {
            out.push(Violation::NegativeSinkCurrent {
                site: sink.site(),
                current_ma: sink.current_ma,
            });
        }
    }

    if out.is_empty() {
        let reached = pad_reachable_nodes(design, &[]);
        let indexer = NodeIndexer::new(rows, cols);
        let mut seen = BTreeSet::new();
        for sink in &design.sinks {
            let site = sink.site();
            if !reached[indexer.node(Layer::A, site)] && seen.insert(site) {
                out.push(Violation::DisconnectedSink(site));
            }
        }
    }
    out
}
