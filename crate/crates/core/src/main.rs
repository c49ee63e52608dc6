// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use gridweld::bench::{self, parse_strategies, DesignSource, RunConfig, RunError, Stage, Strategy};
use gridweld::design::validate_design;
use gridweld::generate::{generate_design, GeneratorSpec};
use gridweld::ir::{SolveMethod, DEFAULT_CG_TOLERANCE};
use gridweld::report::ReportFormat;
use gridweld::{Error, Execution, SolveBudget};

#[derive(Parser)]
#[command(name = "gridweld", version, about = "Add current-sharing vias to a routed power grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run strategies on a design and print the comparison table.
    Run(RunArgs),
    /// Write a seeded synthetic design.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a design file and list every violated invariant.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Solve one strategy and print the selection as JSON.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "optimal")]
        strategy: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Branch-and-bound time limit per solve, seconds.
    #[arg(long)]
    budget_time: Option<f64>,
    /// Branch-and-bound node limit per solve.
    #[arg(long)]
    budget_nodes: Option<u64>,
}

impl BudgetArgs {
    fn budget(&self) -> Result<SolveBudget, String> {
        let time_limit = match self.budget_time {
            Some(t) if !(t.is_finite() && t > 0.0) => return Err(format!("--budget-time must be positive, got {t}")),
            Some(t) => Some(Duration::from_secs_f64(t)),
            None => None,
        };
        if self.budget_nodes == Some(0) {
            return Err("--budget-nodes must be positive".into());
        }
        Ok(SolveBudget {
            max_nodes: self.budget_nodes,
            time_limit,
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,
    /// Generator spec (JSON) used instead of --input.
    #[arg(long, requires = "seed")]
    generate: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "reference,optimal")]
    strategies: String,
    /// Shorthand for adding partition=<k>.
    #[arg(long, conflicts_with = "break_cols")]
    partitions: Option<usize>,
    /// Explicit break columns, replacing even placement.
    #[arg(long, value_delimiter = ',')]
    break_cols: Option<Vec<usize>>,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value = "direct")]
    ir_method: SolveMethod,
    #[arg(long, default_value_t = DEFAULT_CG_TOLERANCE)]
    ir_tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    report_format: ReportFormat,
    #[arg(long)]
    dump_voltages: Option<PathBuf>,
    /// Solve partitions on one thread.
    #[arg(long)]
    sequential: bool,
}

fn usage(msg: impl Into<String>) -> RunError {
    RunError {
        stage: Stage::Usage,
        source: Error::InvalidPlan(msg.into()),
    }
}

fn run_config(args: RunArgs) -> Result<RunConfig, RunError> {
    let source = match (args.input, args.generate, args.seed) {
        (Some(path), None, _) => DesignSource::Input(path),
        (None, Some(spec), Some(seed)) => DesignSource::Generate { spec, seed },
        _ => return Err(usage("exactly one of --input or --generate (with --seed) is required")),
    };
    let mut strategies = parse_strategies(&args.strategies).map_err(usage)?;
    if let Some(k) = args.partitions {
        strategies.push(Strategy::Partition(k));
    }
    if let Some(cols) = args.break_cols {
        if strategies.iter().any(|s| matches!(s, Strategy::Partition(_))) {
            return Err(usage("--break-cols replaces partition placement; drop partition=<k>"));
        }
        strategies.push(Strategy::BreakCols(cols));
    }
    if strategies.is_empty() {
        return Err(usage("at least one strategy is required"));
    }
    let mut config = RunConfig::new(source, strategies);
    config.budget = args.budget.budget().map_err(usage)?;
    config.ir_method = args.ir_method;
    config.ir_tolerance = args.ir_tol;
    config.report = args.report;
    config.report_format = args.report_format;
    config.dump_voltages = args.dump_voltages;
    config.execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    Ok(config)
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run(args) => {
            let config = run_config(args)?;
            bench::run(&config)?;
        }
        Command::Generate { spec, seed, out } => {
            let spec = GeneratorSpec::load(&spec).map_err(|source| RunError { stage: Stage::Load, source })?;
            let design = generate_design(&spec, seed).map_err(|source| RunError {
                stage: Stage::Validate,
                source,
            })?;
            let write = |source| RunError { stage: Stage::Write, source };
            match out {
                Some(path) => design.save(&path).map_err(write)?,
                None => println!("{}", design.to_json().map_err(write)?),
            }
        }
        Command::Validate { input } => {
            let design = bench::load_design(&DesignSource::Input(input))?;
            let violations = validate_design(&design);
            if !violations.is_empty() {
                return Err(RunError {
                    stage: Stage::Validate,
                    source: Error::InvalidDesign(violations),
                });
            }
            println!("ok");
        }
        Command::Solve { input, strategy, budget } => {
            let design = bench::load_design(&DesignSource::Input(input))?;
            let strategy: Strategy = strategy.parse().map_err(usage)?;
            let budget = budget.budget().map_err(usage)?;
            let violations = validate_design(&design);
            if !violations.is_empty() {
                return Err(RunError {
                    stage: Stage::Validate,
                    source: Error::InvalidDesign(violations),
                });
            }
            let sel = bench::select_vias(&design, &strategy, &budget, Execution::default())
                .map_err(|source| RunError { stage: Stage::Solve, source })?;
            let json = sel.to_json().map_err(|source| RunError { stage: Stage::Write, source })?;
            println!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gridweld: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
