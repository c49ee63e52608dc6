// SPDX-License-Identifier: Apache-2.0

//! Two-layer resistive mesh.
//!
//! Every grid site has a layer-A node and a layer-B node. Layer A carries
//! horizontal straps between neighbouring columns, layer B vertical straps
//! between neighbouring rows, and vias join the two nodes of a site.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::design::{DesignDescription, Layer, Site};
use crate::error::{Error, Result};
use crate::grid::build_candidate_grid;
use crate::ilp::{verify_feasible, Selection};

/// Maps `(layer, site)` to node numbers.
///
/// Sites are numbered along the shorter grid dimension first so the
/// conductance matrix stays narrow-banded, and the two layers of a site are
/// adjacent numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeIndexer {
    rows: usize,
    cols: usize,
    column_major: bool,
}

impl NodeIndexer {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            column_major: cols >= rows,
        }
    }

    pub fn node_count(&self) -> usize {
        2 * self.rows * self.cols
    }

    pub fn node(&self, layer: Layer, site: Site) -> usize {
        let (r, c) = (site.row - 1, site.col - 1);
        let slot = if self.column_major {
            c * self.rows + r
        } else {
            r * self.cols + c
        };
        2 * slot + (layer == Layer::B) as usize
    }

    pub fn locate(&self, node: usize) -> NodeRef {
        let slot = node / 2;
        let (r, c) = if self.column_major {
            (slot % self.rows, slot / self.rows)
        } else {
            (slot / self.cols, slot % self.cols)
        };
        NodeRef {
            layer: if node.is_multiple_of(2) { Layer::A } else { Layer::B },
            row: r + 1,
            col: c + 1,
        }
    }
}

/// A node named by layer and site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeRef {
    pub layer: Layer,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.layer, self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    StrapH,
    StrapV,
    Via,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug)]
pub struct ResistiveNetwork {
    pub indexer: NodeIndexer,
    pub edges: Vec<Edge>,
    pub pad_nodes: Vec<usize>,
    pub pad_voltage_mv: f64,
    /// Current drawn at each node, mA.
    pub sink_currents: Vec<f64>,
}

impl ResistiveNetwork {
    pub fn node_count(&self) -> usize {
        self.indexer.node_count()
    }

    pub fn via_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Via).count()
    }

    /// Nodes with a resistive path to a pad.
    pub fn pad_reachable(&self) -> Vec<bool> {
        reachable(self.node_count(), &self.edges, &self.pad_nodes)
    }

    /// Scales every sink current by `factor`.
    pub fn scale_sinks(&mut self, factor: f64) {
        for i in &mut self.sink_currents {
            *i *= factor;
        }
    }
}

fn mesh_edges(design: &DesignDescription, vias: impl Iterator<Item = Site>) -> Vec<Edge> {
    let ix = NodeIndexer::new(design.rows, design.cols);
    let (gh, gv, gvia) = (
        1.0 / design.strap_resistance_h,
        1.0 / design.strap_resistance_v,
        1.0 / design.via_resistance,
    );
    let mut edges = Vec::new();
    for r in 1..=design.rows {
        for c in 1..design.cols {
            edges.push(Edge {
                a: ix.node(Layer::A, Site::new(r, c)),
                b: ix.node(Layer::A, Site::new(r, c + 1)),
                conductance: gh,
                kind: EdgeKind::StrapH,
            });
        }
    }
    for c in 1..=design.cols {
        for r in 1..design.rows {
            edges.push(Edge {
                a: ix.node(Layer::B, Site::new(r, c)),
                b: ix.node(Layer::B, Site::new(r + 1, c)),
                conductance: gv,
                kind: EdgeKind::StrapV,
            });
        }
    }
    for site in vias {
        edges.push(Edge {
            a: ix.node(Layer::A, site),
            b: ix.node(Layer::B, site),
            conductance: gvia,
            kind: EdgeKind::Via,
        });
    }
    edges
}

fn reachable(nodes: usize, edges: &[Edge], sources: &[usize]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); nodes];
    for e in edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut seen = vec![false; nodes];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

fn pad_node_list(design: &DesignDescription) -> Vec<usize> {
    let ix = NodeIndexer::new(design.rows, design.cols);
    let set: BTreeSet<usize> = design
        .pads
        .iter()
        .map(|p| ix.node(p.layer, p.site()))
        .collect();
    set.into_iter().collect()
}

/// Pad reachability of every node with the existing vias plus `extra_vias`.
/// All indices must already be in range.
pub(crate) fn pad_reachable_nodes(design: &DesignDescription, extra_vias: &[Site]) -> Vec<bool> {
    let vias = design.existing_vias.iter().chain(extra_vias).copied();
    let edges = mesh_edges(design, vias);
    reachable(2 * design.rows * design.cols, &edges, &pad_node_list(design))
}

/// Builds the mesh for a design with `added_vias` inserted.
///
/// Added vias get the same conductance as existing ones. The selection must
/// be feasible for the design's candidate grid.
pub fn build_network(design: &DesignDescription, added_vias: &Selection) -> Result<ResistiveNetwork> {
    let violations: Vec<_> = crate::design::validate_design(design)
        .into_iter()
        .filter(|v| !matches!(v, crate::design::Violation::DisconnectedSink(_)))
        .collect();
    if !violations.is_empty() {
        return Err(Error::InvalidDesign(violations));
    }
    if !added_vias.chosen.is_empty() {
        let grid = build_candidate_grid(design)?;
        if !verify_feasible(&grid, added_vias) {
            return Err(Error::InfeasibleSelection(
                "added vias must be available, distinct and conflict-free".into(),
            ));
        }
    }
    let indexer = NodeIndexer::new(design.rows, design.cols);
    let vias = design
        .existing_vias
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .chain(added_vias.chosen.iter().copied());
    let edges = mesh_edges(design, vias);
    let mut sink_currents = vec![0.0; indexer.node_count()];
    for sink in &design.sinks {
        sink_currents[indexer.node(Layer::A, sink.site())] += sink.current_ma;
    }
    let net = ResistiveNetwork {
        indexer,
        edges,
        pad_nodes: pad_node_list(design),
        pad_voltage_mv: design.supply_mv().unwrap_or(0.0),
        sink_currents,
    };
    let reached = net.pad_reachable();
    if let Some(sink) = design
        .sinks
        .iter()
        .find(|s| !reached[indexer.node(Layer::A, s.site())])
    {
        return Err(Error::DisconnectedSink(sink.site()));
    }
    Ok(net)
}
