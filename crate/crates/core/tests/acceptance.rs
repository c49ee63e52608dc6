// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, run in order on one thread so the timing checks do
//! not compete with each other. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gridweld::bench::{integrity_improvement_pct, run_design, select_vias, ComparisonReport, Strategy};
use gridweld::design::{Layer, Pad, Sink, Site};
use gridweld::generate::{generate_design, GeneratorSpec, PadRule, SplitMix64};
use gridweld::ir::{analyze, build_network, solve_dc, SolveMethod, DEFAULT_CG_TOLERANCE};
use gridweld::report::TIMING_COLUMNS;
use gridweld::{
    brute_force, build_candidate_grid, make_breaks, solve_exact, solve_partitioned, CandidateGrid, ConflictMode,
    DesignDescription, Execution, Selection, SolveBudget,
};

type Outcome = Result<String, String>;

fn random_grid(rng: &mut SplitMix64, max_sites: usize, min_cols: usize, mode: ConflictMode) -> CandidateGrid {
    let n = min_cols + rng.below(max_sites - min_cols + 1);
    let m = 1 + rng.below(max_sites / n);
    let density = rng.next_f64() * 0.6;
    let mask = (0..m * n).map(|_| rng.next_f64() >= density).collect();
    CandidateGrid::from_mask(m, n, mask, mode)
}

const MODES: [ConflictMode; 3] = [ConflictMode::VerticalOnly, ConflictMode::Radius(1), ConflictMode::Radius(2)];

fn oracle_equivalence() -> Outcome {
    let mut rng = SplitMix64::new(1);
    let mut total = 0;
    for mode in MODES {
        for _ in 0..200 {
            let grid = random_grid(&mut rng, 16, 1, mode);
            let exact = solve_exact(&grid, &SolveBudget::unlimited());
            let oracle = brute_force(&grid).map_err(|e| e.to_string())?;
            if exact.objective != oracle.objective || !exact.proven_optimal {
                return Err(format!(
                    "{}x{} {mode:?}: exact {} vs oracle {}",
                    grid.rows(),
                    grid.cols(),
                    exact.objective,
                    oracle.objective
                ));
            }
            total += 1;
        }
    }
    Ok(format!("{total} grids agree"))
}

fn closed_form() -> Outcome {
    for m in 1..=9 {
        for n in 1..=9 {
            let grid = CandidateGrid::new(m, n, ConflictMode::VerticalOnly);
            let got = solve_exact(&grid, &SolveBudget::unlimited()).objective;
            if got != n * m.div_ceil(2) {
                return Err(format!("{m}x{n}: {got} != {}", n * m.div_ceil(2)));
            }
        }
    }
    Ok("81 grids match n*ceil(m/2)".into())
}

fn partition_bound() -> Outcome {
    let mut rng = SplitMix64::new(3);
    let mut cases = 0;
    let mut tight = 0;
    for mode in MODES {
        for _ in 0..100 {
            let grid = random_grid(&mut rng, 16, 4, mode);
            let y_star = brute_force(&grid).map_err(|e| e.to_string())?.objective;
            for k in 0..=3 {
                let plan = make_breaks(&grid, k).map_err(|e| e.to_string())?;
                let mut res = solve_partitioned(&grid, &plan, &SolveBudget::unlimited()).map_err(|e| e.to_string())?;
                res.attach_optimum(y_star, grid.rows());
                let slack = res.bound_slack.unwrap_or(-1);
                if slack < 0 || (k == 0 && res.merged.objective != y_star) {
                    return Err(format!(
                        "{}x{} {mode:?} k={k}: y'={} y*={y_star}",
                        grid.rows(),
                        grid.cols(),
                        res.merged.objective
                    ));
                }
                tight += usize::from(slack == 0 && k > 0);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases hold, {tight} tight"))
}

/// The shared instance behind the speed and quality checks.
struct TrendInstance {
    report: ComparisonReport,
    design: DesignDescription,
    sizing: Duration,
}

fn trend_spec(cols: usize) -> GeneratorSpec {
    let mut spec = GeneratorSpec::new(14, cols);
    spec.block_density = 0.3;
    spec.conflict_mode = ConflictMode::Radius(1);
    spec.pads = PadRule::RowEnds;
    spec.sink_count = 14 * cols / 10;
    spec.current_ma = (0.05, 0.2);
    spec
}

/// Widens the grid 40 columns at a time until the exact solve takes 5 s.
fn trend_instance() -> Result<TrendInstance, String> {
    let start = Instant::now();
    let budget = SolveBudget {
        max_nodes: None,
        time_limit: Some(Duration::from_secs(90)),
    };
    let strategies = [
        Strategy::Reference,
        Strategy::Optimal,
        Strategy::Partition(10),
        Strategy::Partition(100),
    ];
    let mut cols = 120;
    loop {
        let design = generate_design(&trend_spec(cols), 1).map_err(|e| e.to_string())?;
        let report = run_design(&design, &strategies, &budget, SolveMethod::Direct, DEFAULT_CG_TOLERANCE, Execution::default())
            .map_err(|e| e.to_string())?;
        let t = report.row("optimal").and_then(|r| r.runtime).unwrap_or_default();
        if t >= Duration::from_secs(5) {
            return Ok(TrendInstance {
                report,
                design,
                sizing: start.elapsed(),
            });
        }
        if cols >= 2000 {
            return Err(format!("exact solve stayed under 5 s up to {cols} columns"));
        }
        cols += 40;
    }
}

fn best_of(design: &DesignDescription, strategy: &Strategy, first: Duration) -> Result<Duration, String> {
    let mut best = first;
    for _ in 0..2 {
        let sel = select_vias(design, strategy, &SolveBudget::unlimited(), Execution::default()).map_err(|e| e.to_string())?;
        best = best.min(sel.wall_time);
    }
    Ok(best)
}

fn speedup(inst: &TrendInstance) -> Outcome {
    let row = |label: &str| inst.report.row(label).ok_or(format!("missing row {label}"));
    let opt = row("optimal")?;
    let t_opt = opt.runtime.unwrap_or_default();
    let t10 = best_of(&inst.design, &Strategy::Partition(10), row("partition=10")?.runtime.unwrap_or_default())?;
    let t100 = best_of(&inst.design, &Strategy::Partition(100), row("partition=100")?.runtime.unwrap_or_default())?;
    let (s, f) = (t_opt.as_secs_f64(), |d: Duration| d.as_secs_f64());
    let detail = format!(
        "{}x{}, optimal {:.3} s (proven {}), partition=10 {:.6} s, partition=100 {:.6} s, sizing {:.1} s",
        inst.design.rows,
        inst.design.cols,
        s,
        opt.proven_optimal.unwrap_or(false),
        f(t10),
        f(t100),
        inst.sizing.as_secs_f64()
    );
    if s >= 5.0 && f(t10) * 1.5 < s && f(t100) * 1.5 < f(t10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quality(inst: &TrendInstance) -> Outcome {
    let row = |label: &str| inst.report.row(label).ok_or(format!("missing row {label}"));
    let (reference, opt, p10, p100) = (row("reference")?, row("optimal")?, row("partition=10")?, row("partition=100")?);
    let mut failures = Vec::new();
    if opt.drop_worst_mv > p10.drop_worst_mv + 1e-9 {
        failures.push("optimal worst drop exceeds partition=10".to_string());
    }
    for r in [opt, p10, p100] {
        if r.drop_worst_mv > reference.drop_worst_mv + 1e-9 {
            failures.push(format!("{} worst drop exceeds reference", r.label));
        }
    }
    let vias = |r: &gridweld::bench::ReportRow| r.vias_added.unwrap_or(0);
    if !(vias(p100) <= vias(p10) && vias(p10) <= vias(opt)) {
        failures.push("via counts out of order".into());
    }
    let detail = format!(
        "worst mV ref {:.4} / opt {:.4} / p10 {:.4} / p100 {:.4}; vias {} / {} / {}",
        reference.drop_worst_mv,
        opt.drop_worst_mv,
        p10.drop_worst_mv,
        p100.drop_worst_mv,
        vias(opt),
        vias(p10),
        vias(p100)
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}: {detail}", failures.join("; ")))
    }
}

fn pad_a(col: usize) -> Pad {
    Pad {
        layer: Layer::A,
        row: 1,
        col,
        voltage_mv: 1000.0,
    }
}

/// Largest absolute current imbalance over non-pad nodes, mA.
fn kirchhoff_residual(design: &DesignDescription, added: &Selection) -> Result<f64, String> {
    let net = build_network(design, added).map_err(|e| e.to_string())?;
    let sol = solve_dc(&net, DEFAULT_CG_TOLERANCE, SolveMethod::Direct).map_err(|e| e.to_string())?;
    let mut balance = net.sink_currents.clone();
    for e in &net.edges {
        if let (Some(va), Some(vb)) = (sol.voltages[e.a], sol.voltages[e.b]) {
            let i = (va - vb) * e.conductance;
            balance[e.a] += i;
            balance[e.b] -= i;
        }
    }
    for &p in &net.pad_nodes {
        balance[p] = 0.0;
    }
    Ok(balance.iter().fold(0.0, |acc, b| acc.max(b.abs())))
}

fn ir_correctness() -> Outcome {
    let rel = |got: f64, want: f64| (got - want).abs() / want.abs();

    let mut single = DesignDescription::empty(1, 3);
    single.pads.push(pad_a(1));
    single.sinks.push(Sink {
        row: 1,
        col: 2,
        current_ma: 100.0,
    });
    let mut double = single.clone();
    double.pads.push(pad_a(3));

    // Via then strap (2 ohm) in parallel with strap, via, strap (3 ohm).
    let mut layered = DesignDescription::empty(2, 2);
    for col in [1, 2] {
        layered.pads.push(Pad {
            layer: Layer::B,
            row: 2,
            col,
            voltage_mv: 1000.0,
        });
    }
    layered.existing_vias = vec![Site::new(1, 1), Site::new(1, 2)];
    layered.sinks.push(Sink {
        row: 1,
        col: 1,
        current_ma: 10.0,
    });

    let ir = |d: &DesignDescription, method| analyze(d, &Selection::empty(), method, DEFAULT_CG_TOLERANCE).map_err(|e| e.to_string());
    let s = ir(&single, SolveMethod::Direct)?;
    let d = ir(&double, SolveMethod::Direct)?;
    let l = ir(&layered, SolveMethod::Direct)?;
    if rel(s.drop_worst_mv, 100.0) > 1e-9 {
        return Err(format!("single chain drop {}", s.drop_worst_mv));
    }
    if rel(d.drop_worst_mv, s.drop_worst_mv / 2.0) > 1e-9 {
        return Err(format!("double path drop {} vs single {}", d.drop_worst_mv, s.drop_worst_mv));
    }
    if rel(l.drop_worst_mv, 12.0) > 1e-9 {
        return Err(format!("two-layer drop {}", l.drop_worst_mv));
    }

    let mut spec = GeneratorSpec::new(12, 16);
    spec.via_density = 0.2;
    spec.block_density = 0.1;
    spec.sink_count = 20;
    spec.pads = PadRule::EdgeUniform(3);
    spec.pad_layer = Layer::B;
    let mesh = generate_design(&spec, 11).map_err(|e| e.to_string())?;
    let mut residual: f64 = 0.0;
    for fixture in [&single, &double, &layered, &mesh] {
        residual = residual.max(kirchhoff_residual(fixture, &Selection::empty())?);
        let lowest = ir(fixture, SolveMethod::Direct)?.min_voltage_mv().unwrap_or(0.0);
        if lowest < 0.0 {
            return Err(format!("negative node voltage {lowest}"));
        }
    }
    if residual > 1e-9 {
        return Err(format!("Kirchhoff residual {residual:e}"));
    }

    let mut worst_gap: f64 = 0.0;
    for (seed, (m, n)) in [(40, 60), (50, 50), (30, 80), (20, 120)].into_iter().enumerate() {
        let mut spec = GeneratorSpec::new(m, n);
        spec.via_density = 0.05 + 0.05 * seed as f64;
        spec.block_density = 0.2;
        spec.sink_count = m * n / 8;
        spec.current_ma = (0.1, 1.0);
        spec.pads = PadRule::EdgeUniform(4);
        spec.pad_layer = Layer::B;
        spec.strap_resistance_v = 0.5;
        let design = generate_design(&spec, seed as u64).map_err(|e| e.to_string())?;
        let net = build_network(&design, &Selection::empty()).map_err(|e| e.to_string())?;
        if net.node_count() > 5000 {
            return Err(format!("mesh has {} nodes", net.node_count()));
        }
        let direct = solve_dc(&net, DEFAULT_CG_TOLERANCE, SolveMethod::Direct).map_err(|e| e.to_string())?;
        let cg = solve_dc(&net, DEFAULT_CG_TOLERANCE, SolveMethod::ConjugateGradient).map_err(|e| e.to_string())?;
        for (a, b) in direct.voltages.iter().zip(&cg.voltages) {
            match (a, b) {
                (Some(a), Some(b)) => worst_gap = worst_gap.max((a - b).abs() / a.abs()),
                (None, None) => {}
                _ => return Err("direct and CG disagree on floating nodes".into()),
            }
        }
    }
    if worst_gap > 1e-8 {
        return Err(format!("direct vs CG relative gap {worst_gap:e}"));
    }
    Ok(format!("fixtures exact, residual {residual:.1e} mA, direct vs CG {worst_gap:.1e}"))
}

fn improvement_arithmetic() -> Outcome {
    let a = format!("{:.1}", integrity_improvement_pct(66.7, 62.7));
    let b = format!("{:.1}", integrity_improvement_pct(66.7, 65.3));
    if a == "6.0" && b == "2.1" {
        Ok(format!("{a}% and {b}%"))
    } else {
        Err(format!("got {a}% and {b}%"))
    }
}

fn via_monotonicity() -> Outcome {
    let mut rng = SplitMix64::new(8);
    let mut steps = 0;
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let mut spec = GeneratorSpec::new(4 + rng.below(8), 4 + rng.below(12));
        spec.block_density = 0.2;
        spec.via_density = 0.05;
        spec.sink_count = spec.rows * spec.cols / 6 + 1;
        spec.current_ma = (0.5, 5.0);
        spec.pads = PadRule::EdgeUniform(2);
        spec.conflict_mode = MODES[seed as usize % 3];
        spec.strap_resistance_v = 0.2 + 2.0 * rng.next_f64();
        spec.via_resistance = 0.1 + 5.0 * rng.next_f64();
        let design = generate_design(&spec, seed).map_err(|e| e.to_string())?;
        let grid = build_candidate_grid(&design).map_err(|e| e.to_string())?;
        let full = solve_exact(&grid, &SolveBudget::unlimited()).chosen;

        // A random insertion order; each prefix is a feasible subset of the next.
        let mut order = full.clone();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i + 1));
        }
        let mut prev = analyze(&design, &Selection::empty(), SolveMethod::Direct, DEFAULT_CG_TOLERANCE)
            .map_err(|e| e.to_string())?;
        let mut first = None;
        for t in 1..=order.len() {
            let sel = Selection::from_sites(order[..t].iter().copied());
            let next = analyze(&design, &sel, SolveMethod::Direct, DEFAULT_CG_TOLERANCE).map_err(|e| e.to_string())?;
            let raised = next.drop_worst_mv > prev.drop_worst_mv + 1e-9 || next.drop_avg_mv > prev.drop_avg_mv + 1e-9;
            if raised && first.is_none() {
                first = Some(format!(
                    "seed {seed} adding {}: worst {:.6} -> {:.6}, avg {:.6} -> {:.6}",
                    order[t - 1],
                    prev.drop_worst_mv,
                    next.drop_worst_mv,
                    prev.drop_avg_mv,
                    next.drop_avg_mv
                ));
            }
            prev = next;
            steps += 1;
        }
        violations.extend(first);
    }
    if violations.is_empty() {
        Ok(format!("100 designs, {steps} insertions"))
    } else {
        Err(format!(
            "{} of 100 designs have an insertion that raises a drop; first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

fn strip_timing(csv_text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            Ok(rec
                .iter()
                .enumerate()
                .filter(|(i, _)| !TIMING_COLUMNS.contains(i))
                .map(|(_, f)| f.to_string())
                .collect())
        })
        .collect()
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = GeneratorSpec::new(10, 30);
    spec.block_density = 0.2;
    spec.via_density = 0.05;
    spec.sink_count = 25;
    spec.pads = PadRule::EdgeUniform(3);
    spec.pad_layer = Layer::B;
    spec.conflict_mode = ConflictMode::Radius(1);
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("report{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_gridweld"))
            .args(["run", "--generate"])
            .arg(&spec_path)
            .args(["--seed", "17", "--strategies", "reference,optimal,partition=2,partition=5"])
            .args(["--report-format", "csv", "--report"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run {run} exited with {status}"));
        }
        reports.push(std::fs::read_to_string(&out).map_err(|e| e.to_string())?);
    }
    let (a, b) = (strip_timing(&reports[0])?, strip_timing(&reports[1])?);
    if a == b && a.len() == 5 {
        Ok(format!("{} rows identical outside timing columns", a.len() - 1))
    } else {
        Err(format!("reports differ:\n{}\n{}", reports[0], reports[1]))
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome, elapsed: Duration| {
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS  {name} ({secs:.1} s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1} s): {msg}");
            }
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        (f(), start.elapsed())
    };

    let checks: [(&str, &dyn Fn() -> Outcome); 3] = [
        ("1 oracle equivalence", &oracle_equivalence),
        ("2 closed form", &closed_form),
        ("3 partition bound", &partition_bound),
    ];
    for (name, f) in checks {
        let (o, t) = timed(f);
        report(name, o, t);
    }

    let start = Instant::now();
    match trend_instance() {
        Ok(inst) => {
            let (o, t) = timed(&|| speedup(&inst));
            report("4 partition speedup", o, start.elapsed().max(t));
            let (o, t) = timed(&|| quality(&inst));
            report("5 quality trend", o, t);
        }
        Err(e) => {
            report("4 partition speedup", Err(e.clone()), start.elapsed());
            report("5 quality trend", Err(e), Duration::ZERO);
        }
    }

    let checks: [(&str, &dyn Fn() -> Outcome); 4] = [
        ("6 IR solver correctness", &ir_correctness),
        ("7 improvement arithmetic", &improvement_arithmetic),
        ("8 via monotonicity", &via_monotonicity),
        ("9 CLI determinism", &cli_determinism),
    ];
    for (name, f) in checks {
        let (o, t) = timed(f);
        report(name, o, t);
    }

    if failed == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
