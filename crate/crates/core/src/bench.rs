// SPDX-License-Identifier: Apache-2.0

//! Strategy runner behind `gridweld run`.
//!
//! Each strategy produces a selection of added vias; only that optimisation
//! phase is timed. The IR analysis of every selection then fills one report
//! row, with improvements measured against the reference design (worst drop)
//! and against the optimal solve (runtime).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use crate::design::{validate_design, DesignDescription};
use crate::error::Error;
use crate::exec::Execution;
use crate::generate::{generate_design, GeneratorSpec};
use crate::grid::build_candidate_grid;
use crate::ilp::{solve_exact, Selection, SolveBudget};
use crate::ir::metrics::REFERENCE_LABEL;
use crate::ir::{compare, IrReport, SolveMethod, DEFAULT_CG_TOLERANCE};
use crate::partition::{make_breaks, solve_partitioned_with, PartitionPlan};
use crate::report::{write_report, ReportFormat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Reference,
    Optimal,
    /// `k` evenly spaced break lines.
    Partition(usize),
    /// Explicit break columns.
    BreakCols(Vec<usize>),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Reference => f.write_str(REFERENCE_LABEL),
            Strategy::Optimal => f.write_str("optimal"),
            Strategy::Partition(k) => write!(f, "partition={k}"),
            Strategy::BreakCols(cols) => {
                let list: Vec<String> = cols.iter().map(ToString::to_string).collect();
                write!(f, "break-cols={}", list.join(","))
            }
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "reference" => Ok(Strategy::Reference),
            "optimal" => Ok(Strategy::Optimal),
            other => match other.strip_prefix("partition=") {
                Some(k) => k
                    .parse()
                    .map(Strategy::Partition)
                    .map_err(|_| format!("bad partition count in `{other}`")),
                None => Err(format!(
                    "unknown strategy `{other}` (expected reference, optimal or partition=<k>)"
                )),
            },
        }
    }
}

/// Parses a comma separated strategy list.
pub fn parse_strategies(list: &str) -> Result<Vec<Strategy>, String> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Debug)]
pub enum DesignSource {
    Input(PathBuf),
    Generate { spec: PathBuf, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: DesignSource,
    pub strategies: Vec<Strategy>,
    pub budget: SolveBudget,
    pub ir_method: SolveMethod,
    pub ir_tolerance: f64,
    pub report: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub dump_voltages: Option<PathBuf>,
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(source: DesignSource, strategies: Vec<Strategy>) -> Self {
        Self {
            source,
            strategies,
            budget: SolveBudget::default(),
            ir_method: SolveMethod::Direct,
            ir_tolerance: DEFAULT_CG_TOLERANCE,
            report: None,
            report_format: ReportFormat::Text,
            dump_voltages: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Usage,
    Load,
    Validate,
    Solve,
    Ir,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Usage => "usage",
            Stage::Load => "load",
            Stage::Validate => "validate",
            Stage::Solve => "solve",
            Stage::Ir => "ir",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} failed: {source}")]
pub struct RunError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl RunError {
    fn at(stage: Stage) -> impl FnOnce(Error) -> RunError {
        move |source| RunError { stage, source }
    }

    /// 1 usage, 2 validation, 3 solver, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match (self.stage, &self.source) {
            (Stage::Usage, _) => 1,
            (Stage::Load, Error::Io { .. }) | (Stage::Write, _) => 4,
            (Stage::Load | Stage::Validate, _) => 2,
            (Stage::Solve | Stage::Ir, _) => 3,
        }
    }
}

/// One row of the comparison table.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub label: String,
    /// `None` for the reference design.
    pub vias_added: Option<usize>,
    pub drop_avg_mv: f64,
    pub drop_worst_mv: f64,
    /// Optimisation wall time; `None` for the reference design.
    pub runtime: Option<Duration>,
    pub proven_optimal: Option<bool>,
    pub integrity_improvement_pct: f64,
    pub runtime_improvement_pct: Option<f64>,
    pub ir: IrReport,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// `(reference - strategy) / reference` worst drop, in percent.
pub fn integrity_improvement_pct(reference_worst_mv: f64, worst_mv: f64) -> f64 {
    if reference_worst_mv > 0.0 {
        (reference_worst_mv - worst_mv) / reference_worst_mv * 100.0
    } else {
        0.0
    }
}

/// Runtime saved relative to the optimal solve, in percent.
pub fn runtime_improvement_pct(optimal: Duration, runtime: Duration) -> Option<f64> {
    let base = optimal.as_secs_f64();
    (base > 0.0).then(|| (base - runtime.as_secs_f64()) / base * 100.0)
}

/// Runs one strategy's optimisation.
pub fn select_vias(
    design: &DesignDescription,
    strategy: &Strategy,
    budget: &SolveBudget,
    exec: Execution,
) -> crate::Result<Selection> {
    let grid = build_candidate_grid(design)?;
    match strategy {
        Strategy::Reference => Ok(Selection::empty()),
        Strategy::Optimal => Ok(solve_exact(&grid, budget)),
        Strategy::Partition(k) => {
            let plan = make_breaks(&grid, *k)?;
            Ok(solve_partitioned_with(&grid, &plan, budget, exec)?.merged)
        }
        Strategy::BreakCols(cols) => {
            let plan = PartitionPlan::explicit(cols.clone(), grid.cols())?;
            Ok(solve_partitioned_with(&grid, &plan, budget, exec)?.merged)
        }
    }
}

/// Runs every strategy on an already loaded design.
///
/// Strategies run one after another so their timings do not compete; a
/// partitioned strategy may still use several threads internally.
pub fn run_design(
    design: &DesignDescription,
    strategies: &[Strategy],
    budget: &SolveBudget,
    ir_method: SolveMethod,
    ir_tolerance: f64,
    exec: Execution,
) -> Result<ComparisonReport, RunError> {
    if strategies.is_empty() {
        return Err(RunError {
            stage: Stage::Usage,
            source: Error::InvalidPlan("at least one strategy is required".into()),
        });
    }
    let violations = validate_design(design);
    if !violations.is_empty() {
        return Err(RunError::at(Stage::Validate)(Error::InvalidDesign(violations)));
    }

    let mut selections = Vec::new();
    for strategy in strategies.iter().filter(|s| **s != Strategy::Reference) {
        let label = strategy.to_string();
        let sel = select_vias(design, strategy, budget, exec).map_err(|e| {
            RunError::at(Stage::Solve)(Error::Strategy {
                label: label.clone(),
                source: Box::new(e),
            })
        })?;
        selections.push((label, sel));
    }

    let rows = compare(design, &selections, ir_method, ir_tolerance, exec).map_err(RunError::at(Stage::Ir))?;
    let reference_worst = rows[0].report.drop_worst_mv;
    let optimal_time = selections
        .iter()
        .find(|(l, _)| l == "optimal")
        .map(|(_, s)| s.wall_time);
    let proven: Vec<Option<bool>> = std::iter::once(None)
        .chain(selections.iter().map(|(_, s)| Some(s.proven_optimal)))
        .collect();

    let rows = rows
        .into_iter()
        .zip(proven)
        .map(|(row, proven_optimal)| ReportRow {
            integrity_improvement_pct: integrity_improvement_pct(reference_worst, row.report.drop_worst_mv),
            runtime_improvement_pct: match (optimal_time, row.wall_time) {
                (Some(opt), Some(t)) => runtime_improvement_pct(opt, t),
                _ => None,
            },
            label: row.label,
            vias_added: row.via_count,
            drop_avg_mv: row.report.drop_avg_mv,
            drop_worst_mv: row.report.drop_worst_mv,
            runtime: row.wall_time,
            proven_optimal,
            ir: row.report,
        })
        .collect();
    Ok(ComparisonReport { rows })
}

pub fn load_design(source: &DesignSource) -> Result<DesignDescription, RunError> {
    match source {
        DesignSource::Input(path) => DesignDescription::load(path).map_err(RunError::at(Stage::Load)),
        DesignSource::Generate { spec, seed } => {
            let spec = GeneratorSpec::load(spec).map_err(RunError::at(Stage::Load))?;
            generate_design(&spec, *seed).map_err(RunError::at(Stage::Validate))
        }
    }
}

/// Loads or generates the design, runs the strategies and writes outputs.
pub fn run(config: &RunConfig) -> Result<ComparisonReport, RunError> {
    let design = load_design(&config.source)?;
    let report = run_design(
        &design,
        &config.strategies,
        &config.budget,
        config.ir_method,
        config.ir_tolerance,
        config.execution,
    )?;
    write_report(&report, config.report_format, config.report.as_deref())
        .map_err(RunError::at(Stage::Write))?;
    if let Some(dir) = &config.dump_voltages {
        crate::report::dump_voltages(&report, dir).map_err(RunError::at(Stage::Write))?;
    }
    Ok(report)
}
