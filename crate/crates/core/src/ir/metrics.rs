// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use serde::Serialize;

use crate::design::{DesignDescription, Layer};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ilp::Selection;

use super::network::{build_network, EdgeKind, NodeRef, ResistiveNetwork};
use super::solve::{solve_dc, DcSolution, SolveMethod};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmViolation {
    pub from: NodeRef,
    pub to: NodeRef,
    pub kind: EdgeKind,
    pub current_ma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrReport {
    pub pad_voltage_mv: f64,
    pub voltages: Vec<(NodeRef, Option<f64>)>,
    /// Mean drop over distinct sink nodes.
    pub drop_avg_mv: f64,
    pub drop_worst_mv: f64,
    pub em_violations: Vec<EmViolation>,
}

#[derive(Serialize)]
struct NodeVoltage {
    layer: Layer,
    row: usize,
    col: usize,
    voltage_mv: Option<f64>,
}

#[derive(Serialize)]
struct IrRecord<'a> {
    drop_avg_mv: f64,
    drop_worst_mv: f64,
    em_violations: &'a [EmViolation],
    #[serde(skip_serializing_if = "Option::is_none")]
    voltages: Option<Vec<NodeVoltage>>,
}

impl IrReport {
    /// JSON summary; `with_voltages` adds the per-node dump.
    pub fn to_json(&self, with_voltages: bool) -> Result<String> {
        let voltages = with_voltages.then(|| {
            self.voltages
                .iter()
                .map(|&(node, v)| NodeVoltage {
                    layer: node.layer,
                    row: node.row,
                    col: node.col,
                    voltage_mv: v,
                })
                .collect()
        });
        Ok(serde_json::to_string_pretty(&IrRecord {
            drop_avg_mv: self.drop_avg_mv,
            drop_worst_mv: self.drop_worst_mv,
            em_violations: &self.em_violations,
            voltages,
        })?)
    }

    pub fn min_voltage_mv(&self) -> Option<f64> {
        self.voltages
            .iter()
            .filter_map(|&(_, v)| v)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Current through each edge from `a` to `b`, mA. Zero across floating nodes.
pub fn edge_currents(net: &ResistiveNetwork, solution: &DcSolution) -> Vec<f64> {
    net.edges
        .iter()
        .map(|e| match (solution.voltages[e.a], solution.voltages[e.b]) {
            (Some(va), Some(vb)) => e.conductance * (va - vb),
            _ => 0.0,
        })
        .collect()
}

/// Drop statistics over sink nodes and edges above the EM limit.
pub fn ir_metrics(design: &DesignDescription, net: &ResistiveNetwork, solution: &DcSolution) -> IrReport {
    let ix = net.indexer;
    let mut sink_nodes: Vec<usize> = Vec::new();
    for sink in &design.sinks {
        let node = ix.node(Layer::A, sink.site());
        if !sink_nodes.contains(&node) {
            sink_nodes.push(node);
        }
    }
    let drops: Vec<f64> = sink_nodes
        .iter()
        .map(|&n| net.pad_voltage_mv - solution.voltages[n].unwrap_or(net.pad_voltage_mv))
        .collect();
    let drop_worst_mv = drops.iter().copied().fold(0.0, f64::max);
    let drop_avg_mv = if drops.is_empty() {
        0.0
    } else {
        drops.iter().sum::<f64>() / drops.len() as f64
    };

    let em_violations = match design.em_limit {
        None => Vec::new(),
        Some(limit) => net
            .edges
            .iter()
            .zip(edge_currents(net, solution))
            .filter(|(_, i)| i.abs() > limit)
            .map(|(e, i)| EmViolation {
                from: ix.locate(e.a),
                to: ix.locate(e.b),
                kind: e.kind,
                current_ma: i.abs(),
            })
            .collect(),
    };

    IrReport {
        pad_voltage_mv: net.pad_voltage_mv,
        voltages: solution
            .voltages
            .iter()
            .enumerate()
            .map(|(n, &v)| (ix.locate(n), v))
            .collect(),
        drop_avg_mv,
        drop_worst_mv,
        em_violations,
    }
}

/// Builds, solves and measures the design with `added` vias.
pub fn analyze(
    design: &DesignDescription,
    added: &Selection,
    method: SolveMethod,
    tol: f64,
) -> Result<IrReport> {
    let net = build_network(design, added)?;
    let solution = solve_dc(&net, tol, method)?;
    Ok(ir_metrics(design, &net, &solution))
}

#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub label: String,
    /// `None` for the reference row.
    pub via_count: Option<usize>,
    pub report: IrReport,
    pub wall_time: Option<Duration>,
}

pub const REFERENCE_LABEL: &str = "reference";

/// One row per selection, preceded by the unmodified reference design.
pub fn compare(
    design: &DesignDescription,
    selections: &[(String, Selection)],
    method: SolveMethod,
    tol: f64,
    exec: Execution,
) -> Result<Vec<ComparisonRow>> {
    let reference = Selection::empty();
    let mut jobs: Vec<(&str, &Selection, bool)> = vec![(REFERENCE_LABEL, &reference, true)];
    jobs.extend(selections.iter().map(|(l, s)| (l.as_str(), s, false)));

    exec.map(&jobs, |&(label, sel, is_reference)| {
        let report = analyze(design, sel, method, tol).map_err(|e| Error::Strategy {
            label: label.to_string(),
            source: Box::new(e),
        })?;
        Ok(ComparisonRow {
            label: label.to_string(),
            via_count: (!is_reference).then_some(sel.objective),
            report,
            wall_time: (!is_reference).then_some(sel.wall_time),
        })
    })
    .into_iter()
    .collect()
}
