// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic designs.
//!
//! All randomness comes from SplitMix64 (Steele, Lea and Flood, 2014):
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15            (wrapping)
//! z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! Uniform floats are `(out >> 11) * 2^-53` and bounded integers are
//! `(out * n) >> 64` in 128-bit arithmetic, so any reimplementation of the
//! draw order below reproduces the same designs.
//!
//! Draw order for one attempt: a blockage draw per site, then a via draw per
//! unblocked site (both column-major, so a wider grid with the same seed and
//! row count shares the narrower grid's blockage), then a partial Fisher-Yates shuffle of the
//! pad-connected sites to pick sinks, then one current draw per sink. A
//! failed attempt keeps consuming the same stream.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{validate_design, DesignDescription, Layer, Pad, Sink, Site};
use crate::error::{Error, Result};
use crate::grid::ConflictMode;
use crate::ir::network::{pad_reachable_nodes, NodeIndexer};

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadRule {
    /// One pad at each grid corner.
    Corners,
    /// `count` evenly spaced pads along the top row and again along the
    /// bottom row.
    EdgeUniform(usize),
    /// A pad at both ends of every row.
    RowEnds,
}

fn default_pad_layer() -> Layer {
    Layer::A
}
fn default_supply() -> f64 {
    1000.0
}
fn one() -> f64 {
    1.0
}
fn default_attempts() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub block_density: f64,
    #[serde(default)]
    pub via_density: f64,
    #[serde(default)]
    pub sink_count: usize,
    /// Inclusive-exclusive `[lo, hi)` range of sink currents.
    pub current_ma: (f64, f64),
    pub pads: PadRule,
    #[serde(default = "default_pad_layer")]
    pub pad_layer: Layer,
    #[serde(default = "default_supply")]
    pub supply_mv: f64,
    #[serde(default)]
    pub conflict_mode: ConflictMode,
    #[serde(rename = "strap_resistance_h_ohm", default = "one")]
    pub strap_resistance_h: f64,
    #[serde(rename = "strap_resistance_v_ohm", default = "one")]
    pub strap_resistance_v: f64,
    #[serde(rename = "via_resistance_ohm", default = "one")]
    pub via_resistance: f64,
    #[serde(rename = "pitch_x_um", default = "one")]
    pub pitch_x: f64,
    #[serde(rename = "pitch_y_um", default = "one")]
    pub pitch_y: f64,
    #[serde(rename = "em_limit_ma", default, skip_serializing_if = "Option::is_none")]
    pub em_limit: Option<f64>,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

impl GeneratorSpec {
    /// A spec with defaults for everything but the grid size.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            block_density: 0.0,
            via_density: 0.0,
            sink_count: 0,
            current_ma: (1.0, 10.0),
            pads: PadRule::Corners,
            pad_layer: default_pad_layer(),
            supply_mv: default_supply(),
            conflict_mode: ConflictMode::VerticalOnly,
            strap_resistance_h: 1.0,
            strap_resistance_v: 1.0,
            via_resistance: 1.0,
            pitch_x: 1.0,
            pitch_y: 1.0,
            em_limit: None,
            max_attempts: default_attempts(),
        }
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

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("grid must be non-empty, got {}x{}", self.rows, self.cols));
        }
        for (name, d) in [("block_density", self.block_density), ("via_density", self.via_density)] {
            if !(0.0..1.0).contains(&d) {
                return bad(format!("{name} must lie in [0, 1), got {d}"));
            }
        }
        if self.sink_count > self.rows * self.cols {
            return bad(format!(
                "sink_count {} exceeds the {} grid sites",
                self.sink_count,
                self.rows * self.cols
            ));
        }
        let (lo, hi) = self.current_ma;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad(format!("current range [{lo}, {hi}) is invalid"));
        }
        if self.pads == PadRule::EdgeUniform(0) {
            return bad("edge_uniform pad count must be positive".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        Ok(())
    }

    fn pad_sites(&self) -> Vec<Site> {
        let (m, n) = (self.rows, self.cols);
        let mut sites = match self.pads {
            PadRule::Corners => vec![Site::new(1, 1), Site::new(1, n), Site::new(m, 1), Site::new(m, n)],
            PadRule::EdgeUniform(count) => (0..count)
                .flat_map(|t| {
                    let col = (2 * t + 1) * n / (2 * count) + 1;
                    [Site::new(1, col), Site::new(m, col)]
                })
                .collect(),
            PadRule::RowEnds => (1..=m).flat_map(|r| [Site::new(r, 1), Site::new(r, n)]).collect(),
        };
        sites.sort_unstable();
        sites.dedup();
        sites
    }
}

/// Generates a design that passes [`validate_design`].
///
/// Sinks are only placed on layer-A nodes already connected to a pad through
/// the generated straps and vias. An attempt with fewer connected sites than
/// requested sinks is redrawn, up to `max_attempts` times.
pub fn generate_design(spec: &GeneratorSpec, seed: u64) -> Result<DesignDescription> {
    spec.check()?;
    let mut rng = SplitMix64::new(seed);
    let (m, n) = (spec.rows, spec.cols);
    let indexer = NodeIndexer::new(m, n);
    let mut last_reason = String::new();

    for _ in 0..spec.max_attempts {
        let site = |i: usize| Site::new(i % m + 1, i / m + 1);
        let mut is_blocked = vec![false; m * n];
        for b in is_blocked.iter_mut() {
            *b = rng.next_f64() < spec.block_density;
        }
        let mut vias = Vec::new();
        for (i, &b) in is_blocked.iter().enumerate() {
            if !b && rng.next_f64() < spec.via_density {
                vias.push(site(i));
            }
        }
        let mut blocked: Vec<Site> = (0..m * n).filter(|&i| is_blocked[i]).map(site).collect();
        blocked.sort_unstable();
        vias.sort_unstable();

        let mut design = DesignDescription {
            rows: m,
            cols: n,
            pitch_x: spec.pitch_x,
            pitch_y: spec.pitch_y,
            blocked_sites: blocked,
            existing_vias: vias,
            pads: spec
                .pad_sites()
                .into_iter()
                .map(|s| Pad {
                    layer: spec.pad_layer,
                    row: s.row,
                    col: s.col,
                    voltage_mv: spec.supply_mv,
                })
                .collect(),
            sinks: Vec::new(),
            strap_resistance_h: spec.strap_resistance_h,
            strap_resistance_v: spec.strap_resistance_v,
            via_resistance: spec.via_resistance,
            conflict_mode: spec.conflict_mode,
            em_limit: spec.em_limit,
        };

        let reached = pad_reachable_nodes(&design, &[]);
        let mut connected: Vec<Site> = (0..m * n)
            .map(|i| Site::new(i / n + 1, i % n + 1))
            .filter(|&s| reached[indexer.node(Layer::A, s)])
            .collect();
        if connected.len() < spec.sink_count {
            last_reason = format!(
                "only {} sites connect to a pad, {} sinks requested",
                connected.len(),
                spec.sink_count
            );
            continue;
        }
        for t in 0..spec.sink_count {
            let pick = t + rng.below(connected.len() - t);
            connected.swap(t, pick);
        }
        let (lo, hi) = spec.current_ma;
        let mut sinks: Vec<Sink> = connected[..spec.sink_count]
            .iter()
            .map(|s| Sink {
                row: s.row,
                col: s.col,
                current_ma: lo + (hi - lo) * rng.next_f64(),
            })
            .collect();
        sinks.sort_by_key(|s| (s.row, s.col));
        design.sinks = sinks;

        let violations = validate_design(&design);
        if violations.is_empty() {
            return Ok(design);
        }
        last_reason = violations[0].to_string();
    }
    Err(Error::GenerationFailed {
        attempts: spec.max_attempts,
        reason: last_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 1234567, as published with the algorithm.
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
        assert_eq!(rng.next_u64(), 9817491932198370423);
    }

    #[test]
    fn uniform_ranges() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            assert!(rng.below(3) < 3);
        }
    }

    #[test]
    fn same_seed_same_design() {
        let mut spec = GeneratorSpec::new(8, 12);
        spec.block_density = 0.3;
        spec.via_density = 0.1;
        spec.sink_count = 5;
        let a = generate_design(&spec, 42).unwrap().to_json().unwrap();
        let b = generate_design(&spec, 42).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_design(&spec, 43).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bare_grid_puts_the_sink_on_a_pad_row() {
        let mut spec = GeneratorSpec::new(6, 6);
        spec.sink_count = 1;
        let d = generate_design(&spec, 3).unwrap();
        assert!(validate_design(&d).is_empty());
        assert!(d.sinks[0].row == 1 || d.sinks[0].row == 6);
    }

    #[test]
    fn unreachable_connectivity_fails() {
        let mut spec = GeneratorSpec::new(6, 6);
        spec.sink_count = 1;
        spec.pad_layer = Layer::B;
        let err = generate_design(&spec, 3).unwrap_err();
        assert!(matches!(err, Error::GenerationFailed { attempts: 32, .. }));
    }

    #[test]
    fn no_sinks_is_valid() {
        let d = generate_design(&GeneratorSpec::new(4, 4), 0).unwrap();
        assert!(d.sinks.is_empty());
        assert!(validate_design(&d).is_empty());
    }

    #[test]
    fn spec_checks() {
        let mut spec = GeneratorSpec::new(4, 4);
        spec.block_density = 1.0;
        assert!(matches!(generate_design(&spec, 0), Err(Error::InvalidSpec(_))));
        let mut spec = GeneratorSpec::new(2, 2);
        spec.sink_count = 5;
        assert!(matches!(generate_design(&spec, 0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn edge_uniform_pads() {
        let mut spec = GeneratorSpec::new(5, 10);
        spec.pads = PadRule::EdgeUniform(2);
        let cols: Vec<(usize, usize)> = spec.pad_sites().into_iter().map(Into::into).collect();
        assert_eq!(cols, vec![(1, 3), (1, 8), (5, 3), (5, 8)]);
    }

    #[test]
    fn row_end_pads() {
        let mut spec = GeneratorSpec::new(3, 4);
        spec.pads = PadRule::RowEnds;
        let sites: Vec<(usize, usize)> = spec.pad_sites().into_iter().map(Into::into).collect();
        assert_eq!(sites, vec![(1, 1), (1, 4), (2, 1), (2, 4), (3, 1), (3, 4)]);
    }

    #[test]
    fn wider_grids_share_blockage() {
        let mut spec = GeneratorSpec::new(5, 8);
        spec.block_density = 0.4;
        let narrow = generate_design(&spec, 9).unwrap();
        spec.cols = 20;
        let wide = generate_design(&spec, 9).unwrap();
        let prefix: Vec<Site> = wide.blocked_sites.iter().copied().filter(|s| s.col <= 8).collect();
        assert_eq!(prefix, narrow.blocked_sites);
    }

    #[test]
    fn spec_json() {
        let json = r#"{"rows": 4, "cols": 5, "current_ma": [1.0, 2.0],
                       "pads": {"edge_uniform": 2}, "conflict_mode": {"radius": 1}}"#;
        let spec: GeneratorSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.pads, PadRule::EdgeUniform(2));
        assert_eq!(spec.conflict_mode, ConflictMode::Radius(1));
        assert!(serde_json::from_str::<GeneratorSpec>(&json.replace("\"rows\"", "\"rowz\"")).is_err());
    }
}
