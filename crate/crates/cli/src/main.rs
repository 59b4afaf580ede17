//! Command-line front end: reproduce the built-in reference points, certify
//! arbitrary parameter points, run the optimizer and feasibility scans, and
//! compute local bounds — all emitting machine-readable reports.
//!
//! Exit codes are stable: 0 success / claims verified, 1 claims failed,
//! 2 infeasible input, 3 usage or parse error.

mod expr;
mod report;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bisep::bell::{
    correlation_tensor, evaluate, local_bound, BellExpression, DeterministicStrategy,
    MeasurementAngles,
};
use bisep::family::{assemble_state, solve_omega, FamilyAngles, FamilyState};
use bisep::linalg::Tolerances;
use bisep::optimize::{maximize, scan, AxisSpec, MaximizeConfig, OptimizeError, ScanGrid};

use report::{
    csv_number, InfeasibilityReport, PointSummary, RunConfig, ToolInfo, Verdicts, ViolationReport,
};

const EXIT_CLAIMS_FAILED: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 3;

/// Margin above the local bound before a violation is declared.
const VIOLATION_MARGIN: f64 = 1e-9;
/// Tolerance for matching the published reference values.
const REFERENCE_TOL: f64 = 1e-3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn claims(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CLAIMS_FAILED,
            message: message.into(),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INFEASIBLE,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::claims(format!("i/o error: {e}"))
    }
}

fn parse_angle_arg(s: &str) -> Result<f64, String> {
    expr::parse_angle(s)
}

#[derive(Parser)]
#[command(
    name = "bisep",
    version,
    about = "Construct, certify and optimize fully biseparable 3-qubit states against a tripartite Bell expression",
    after_help = "Angle-valued flags accept radians or expressions over numbers, pi, + - * / (e.g. --alpha pi/12)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rebuild a built-in reference point and verify its published values
    Reproduce(ReproduceArgs),
    /// Certify an arbitrary parameter point and evaluate its Bell value
    Certify(CertifyArgs),
    /// Multi-start derivative-free maximization of the Bell value
    Optimize(OptimizeArgs),
    /// Map the feasibility region over a parameter grid
    Scan(ScanArgs),
    /// Local bound of a Bell expression by exhaustive strategy enumeration
    LocalBound(LocalBoundArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Main,
    Appendix,
}

#[derive(Args)]
struct ToleranceArgs {
    /// Positive-semidefiniteness tolerance: eigenvalues must stay above
    /// minus this value
    #[arg(long, value_name = "TOL")]
    tol_psd: Option<f64>,
    /// Hermiticity tolerance: max elementwise |m - m†|
    #[arg(long, value_name = "TOL")]
    tol_herm: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(p) = self.tol_psd {
            tol.psd_floor = -p.abs();
        }
        if let Some(h) = self.tol_herm {
            tol.hermiticity = h.abs();
        }
        tol
    }
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which built-in reference point to rebuild
    #[arg(value_enum)]
    which: Which,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Test hook: shift the computed Bell value before verification
    #[arg(long, hide = true, allow_hyphen_values = true, default_value_t = 0.0)]
    inject_s_offset: f64,
    #[command(flatten)]
    tolerances: ToleranceArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    gamma: f64,
    /// Mixing angle; overrides branch selection
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true, conflicts_with = "branch")]
    omega: Option<f64>,
    /// Mixing-angle branch index (0..3); default: first branch with
    /// nonnegative weights
    #[arg(long)]
    branch: Option<usize>,
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    theta1: f64,
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    theta2: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    /// RNG seed for start sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent starts
    #[arg(long, default_value_t = 100)]
    starts: usize,
    /// Iteration cap per start
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Fixed start point "alpha,beta,gamma,theta1,theta2" (expressions allowed)
    #[arg(long, value_name = "POINT", allow_hyphen_values = true)]
    init: Option<String>,
    /// Initial simplex edge length; 0 evaluates the start point only
    #[arg(long, value_name = "R")]
    radius: Option<f64>,
    /// Write per-start convergence history as CSV
    #[arg(long, value_name = "PATH")]
    history: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ScanArgs {
    /// Grid specification "a0:a1:n,b0:b1:n,c0:c1:n" (expressions allowed)
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Values per measurement-angle axis when scoring cells; 0 skips scoring
    #[arg(long, default_value_t = 0)]
    theta_steps: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Write the table here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LocalBoundArgs {
    /// Built-in expression name ("sliwa5") or path to an expression file
    expression: String,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Scan(args) => cmd_scan(args),
        Command::LocalBound(args) => cmd_local_bound(args),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{}", text.trim_end()),
    }
    Ok(())
}

fn emit_json(value: &serde_json::Value, out: &Option<PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    emit(&text, out)
}

/// One of the two built-in parameter points with its published values.
struct ReferencePoint {
    name: &'static str,
    angles: FamilyAngles,
    theta1: f64,
    theta2: f64,
    expected_omega: f64,
    expected_weights: [f64; 3],
    expected_s: f64,
}

fn reference_point(which: Which) -> ReferencePoint {
    match which {
        Which::Main => ReferencePoint {
            name: "main",
            angles: FamilyAngles::new(PI / 12.0, PI / 4.0, 5.0 * PI / 12.0),
            theta1: 2.0 * PI / 9.0,
            theta2: -4.0 * PI / 9.0,
            expected_omega: 0.5682,
            expected_weights: [0.0636, 0.2737, 0.3890],
            expected_s: 3.0069,
        },
        Which::Appendix => ReferencePoint {
            name: "appendix",
            angles: FamilyAngles::new(0.1545, 0.8460, 4.4903),
            theta1: 0.6897,
            theta2: -1.2956,
            expected_omega: 0.4808,
            expected_weights: [0.0338, 0.2433, 0.4796],
            expected_s: 3.0187,
        },
    }
}

/// Assembles the state at one resolved mixing angle and produces the full
/// report, including certification and the Bell evaluation.
fn full_report(
    run_config: RunConfig,
    angles: &FamilyAngles,
    omega: f64,
    branch: Option<usize>,
    omega_branches: Vec<f64>,
    measurement: MeasurementAngles,
    tol: &Tolerances,
) -> Result<(ViolationReport, FamilyState), bisep::family::FamilyError> {
    let state = assemble_state(angles, omega)?;
    let certification = state.certify(tol)?;
    let expr = BellExpression::sliwa5();
    let tensor = correlation_tensor(&state.rho, &measurement);
    let s_value = evaluate(&expr, &tensor);
    let bound = local_bound(&expr).bound;
    let report = ViolationReport {
        tool: ToolInfo::current(),
        run_config,
        point: PointSummary {
            alpha: angles.alpha,
            beta: angles.beta,
            gamma: angles.gamma,
            omega,
            branch,
            theta1: measurement.theta1,
            theta2: measurement.theta2,
        },
        omega_branches,
        weights: state.weights,
        certification: certification.clone(),
        correlation_tensor: tensor.labeled(),
        s_value,
        local_bound: bound,
        verdicts: Verdicts {
            biseparable_premise_passed: certification.passed,
            bell_violated: s_value > bound + VIOLATION_MARGIN,
        },
    };
    Ok((report, state))
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(), Failure> {
    let point = reference_point(args.which);
    let tol = args.tolerances.resolve();
    let run_config = RunConfig::Reproduce {
        which: point.name.to_string(),
        tol_psd: args.tolerances.tol_psd,
        tol_herm: args.tolerances.tol_herm,
    };

    let solutions = solve_omega(&point.angles).map_err(|e| {
        Failure::infeasible(format!("reference point unexpectedly infeasible: {e}"))
    })?;
    let (branch, &omega) = solutions
        .branches
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - point.expected_omega)
                .abs()
                .partial_cmp(&(*b - point.expected_omega).abs())
                .unwrap()
        })
        .expect("branches are nonempty");

    let (mut report, _) = full_report(
        run_config,
        &point.angles,
        omega,
        Some(branch),
        solutions.branches.clone(),
        MeasurementAngles::new(point.theta1, point.theta2),
        &tol,
    )
    .map_err(|e| Failure::infeasible(e.to_string()))?;
    report.s_value += args.inject_s_offset;
    report.verdicts.bell_violated = report.s_value > report.local_bound + VIOLATION_MARGIN;

    emit_json(&report.to_rounded_json(), &args.out)?;

    let w = report.weights;
    let expected = [
        ("S", report.s_value, point.expected_s),
        ("omega", report.point.omega, point.expected_omega),
        ("p1", w.p1, point.expected_weights[0]),
        ("p2", w.p2, point.expected_weights[1]),
        ("p4", w.p4, point.expected_weights[2]),
    ];
    let mut mismatches: Vec<String> = expected
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > REFERENCE_TOL)
        .map(|(name, got, want)| {
            format!("{name}: expected {want} ± {REFERENCE_TOL}, computed {got:.12}")
        })
        .collect();
    if !report.certification.passed {
        let failed: Vec<&str> = report
            .certification
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        mismatches.push(format!("certification failed: {}", failed.join(", ")));
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::claims(format!(
            "reference point '{}' not reproduced:\n  {}",
            point.name,
            mismatches.join("\n  ")
        )))
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<(), Failure> {
    let angles = FamilyAngles::new(args.alpha, args.beta, args.gamma);
    let tol = args.tolerances.resolve();
    let run_config = RunConfig::Certify {
        alpha: args.alpha,
        beta: args.beta,
        gamma: args.gamma,
        omega: args.omega,
        branch: args.branch,
        theta1: args.theta1,
        theta2: args.theta2,
        tol_psd: args.tolerances.tol_psd,
        tol_herm: args.tolerances.tol_herm,
    };

    let infeasible_exit = |run_config: RunConfig, reason: String, out: &Option<PathBuf>| {
        let report = InfeasibilityReport {
            tool: ToolInfo::current(),
            run_config,
            infeasible: reason.clone(),
        };
        let value = serde_json::to_value(&report).expect("report serializes");
        emit_json(&value, out)?;
        Err(Failure::infeasible(reason))
    };

    // resolve the mixing angle: explicit value, explicit branch, or the
    // first branch with nonnegative weights
    let (omega, branch, branches) = if let Some(omega) = args.omega {
        let branches = solve_omega(&angles).map(|s| s.branches).unwrap_or_default();
        (omega, None, branches)
    } else {
        let solutions = match solve_omega(&angles) {
            Ok(s) => s,
            Err(e) => return infeasible_exit(run_config, e.to_string(), &args.out),
        };
        match args.branch {
            Some(i) => {
                if i >= solutions.branches.len() {
                    return Err(Failure::usage(format!(
                        "branch index {i} out of range (0..{})",
                        solutions.branches.len() - 1
                    )));
                }
                (solutions.branches[i], Some(i), solutions.branches.clone())
            }
            None => {
                let first_valid = solutions
                    .branches
                    .iter()
                    .enumerate()
                    .find(|(_, &w)| bisep::family::solve_weights(&angles, w).is_ok());
                match first_valid {
                    Some((i, &w)) => (w, Some(i), solutions.branches.clone()),
                    None => {
                        return infeasible_exit(
                            run_config,
                            "no mixing-angle branch with nonnegative weights".to_string(),
                            &args.out,
                        )
                    }
                }
            }
        }
    };

    match full_report(
        run_config.clone(),
        &angles,
        omega,
        branch,
        branches,
        MeasurementAngles::new(args.theta1, args.theta2),
        &tol,
    ) {
        Ok((report, _)) => emit_json(&report.to_rounded_json(), &args.out),
        Err(e) => infeasible_exit(run_config, e.to_string(), &args.out),
    }
}

fn parse_init(text: &str) -> Result<[f64; 5], Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 5 {
        return Err(Failure::usage(format!(
            "--init needs 5 comma-separated values, got {}",
            parts.len()
        )));
    }
    let mut out = [0.0f64; 5];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = expr::parse_angle(part.trim()).map_err(Failure::usage)?;
    }
    Ok(out)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), Failure> {
    let init = args.init.as_deref().map(parse_init).transpose()?;
    let config = MaximizeConfig {
        starts: args.starts,
        max_iters: args.max_iters,
        simplex_radius: args.radius.unwrap_or(0.4),
        init,
        ..MaximizeConfig::default()
    };
    let run_config = RunConfig::Optimize {
        seed: args.seed,
        starts: args.starts,
        max_iters: args.max_iters,
        init,
        radius: args.radius,
        tol_psd: args.tolerances.tol_psd,
        tol_herm: args.tolerances.tol_herm,
    };

    let result = match maximize(&config, args.seed) {
        Ok(r) => r,
        Err(OptimizeError::NoFeasiblePoint { starts }) => {
            return Err(Failure::infeasible(format!(
                "no feasible point found in {starts} start(s)"
            )))
        }
        Err(e) => return Err(Failure::claims(e.to_string())),
    };

    if let Some(path) = &args.history {
        let mut csv = String::from("start,iteration,s_value,alpha,beta,gamma,theta1,theta2\n");
        for trace in &result.traces {
            for entry in &trace.improvements {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    trace.start,
                    entry.iteration,
                    csv_number(entry.s_value),
                    csv_number(entry.params[0]),
                    csv_number(entry.params[1]),
                    csv_number(entry.params[2]),
                    csv_number(entry.params[3]),
                    csv_number(entry.params[4]),
                ));
            }
        }
        std::fs::write(path, csv)?;
    }

    let best = &result.best;
    let branches = solve_omega(&best.angles)
        .map(|s| s.branches)
        .unwrap_or_default();
    let tol = args.tolerances.resolve();
    let (report, _) = full_report(
        run_config,
        &best.angles,
        best.omega,
        Some(best.branch),
        branches,
        MeasurementAngles::new(best.theta1, best.theta2),
        &tol,
    )
    .map_err(|e| Failure::claims(format!("best point failed to re-assemble: {e}")))?;
    emit_json(&report.to_rounded_json(), &args.out)
}

fn parse_axis(text: &str) -> Result<AxisSpec, Failure> {
    let fields: Vec<&str> = text.split(':').collect();
    if fields.len() != 3 {
        return Err(Failure::usage(format!(
            "axis '{text}' must be start:stop:steps"
        )));
    }
    let start = expr::parse_angle(fields[0].trim()).map_err(Failure::usage)?;
    let stop = expr::parse_angle(fields[1].trim()).map_err(Failure::usage)?;
    let steps: usize = fields[2]
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("invalid step count '{}'", fields[2])))?;
    if steps == 0 {
        return Err(Failure::usage("step count must be at least 1"));
    }
    Ok(AxisSpec::new(start, stop, steps))
}

fn cmd_scan(args: ScanArgs) -> Result<(), Failure> {
    let axes: Vec<&str> = args.grid.split(',').collect();
    if axes.len() != 3 {
        return Err(Failure::usage(
            "--grid must be three comma-separated axes: a0:a1:n,b0:b1:n,c0:c1:n",
        ));
    }
    let grid = ScanGrid {
        alpha: parse_axis(axes[0])?,
        beta: parse_axis(axes[1])?,
        gamma: parse_axis(axes[2])?,
        theta_steps: args.theta_steps,
    };
    let rows = scan(&grid);

    match args.format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct ScanReport<'a> {
                tool: ToolInfo,
                run_config: RunConfig,
                rows: &'a [bisep::optimize::ScanRow],
            }
            let report = ScanReport {
                tool: ToolInfo::current(),
                run_config: RunConfig::Scan {
                    grid: args.grid.clone(),
                    theta_steps: args.theta_steps,
                },
                rows: &rows,
            };
            let mut value = serde_json::to_value(&report).expect("report serializes");
            if let serde_json::Value::Object(map) = &mut value {
                if let Some(rows_value) = map.get_mut("rows") {
                    round_json_numbers(rows_value);
                }
            }
            emit_json(&value, &args.out)
        }
        OutputFormat::Csv => {
            let mut csv = String::from(
                "alpha,beta,gamma,discriminant,degenerate,branch_count,\
                 omega_1,omega_2,omega_3,omega_4,\
                 feasible_1,feasible_2,feasible_3,feasible_4,any_feasible,best_s\n",
            );
            for row in &rows {
                let omega_cell = |i: usize| {
                    row.branch_omegas
                        .get(i)
                        .map(|&w| csv_number(w))
                        .unwrap_or_default()
                };
                let feasible_cell = |i: usize| {
                    row.branch_feasible
                        .get(i)
                        .map(|f| f.to_string())
                        .unwrap_or_default()
                };
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    csv_number(row.alpha),
                    csv_number(row.beta),
                    csv_number(row.gamma),
                    csv_number(row.discriminant),
                    row.degenerate,
                    row.branch_count,
                    omega_cell(0),
                    omega_cell(1),
                    omega_cell(2),
                    omega_cell(3),
                    feasible_cell(0),
                    feasible_cell(1),
                    feasible_cell(2),
                    feasible_cell(3),
                    row.any_feasible,
                    row.best_s.map(csv_number).unwrap_or_default(),
                ));
            }
            emit(&csv, &args.out)
        }
    }
}

fn round_json_numbers(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(report::round_sig12(f)) {
                        *value = serde_json::Value::Number(r);
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json_numbers),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json_numbers),
        _ => {}
    }
}

fn cmd_local_bound(args: LocalBoundArgs) -> Result<(), Failure> {
    let expr = if args.expression == "sliwa5" {
        BellExpression::sliwa5()
    } else {
        let text = std::fs::read_to_string(&args.expression).map_err(|e| {
            Failure::usage(format!(
                "cannot read expression file '{}': {e}",
                args.expression
            ))
        })?;
        BellExpression::parse(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", args.expression)))?
    };

    let result = local_bound(&expr);

    #[derive(Serialize)]
    struct StrategyEntry {
        label: String,
        outcomes: [[i8; 2]; 3],
    }
    #[derive(Serialize)]
    struct LocalBoundReport {
        tool: ToolInfo,
        run_config: RunConfig,
        terms: BTreeMap<String, i64>,
        bound: f64,
        optimal_strategy_count: usize,
        strategies: Vec<StrategyEntry>,
    }
    let report = LocalBoundReport {
        tool: ToolInfo::current(),
        run_config: RunConfig::LocalBound {
            expression: args.expression.clone(),
        },
        terms: expr.iter().map(|(m, c)| (m.label(), c)).collect(),
        bound: result.bound,
        optimal_strategy_count: result.strategies.len(),
        strategies: result
            .strategies
            .iter()
            .map(|s: &DeterministicStrategy| StrategyEntry {
                label: s.label(),
                outcomes: s.outcomes,
            })
            .collect(),
    };
    let value = serde_json::to_value(&report).expect("report serializes");
    emit_json(&value, &args.out)
}
