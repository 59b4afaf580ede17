//! Derivative-free maximization of the Bell value over the family parameters.
//!
//! The objective maps (alpha, beta, gamma, theta1, theta2) to the largest
//! Bell value over all mixing-angle branches with nonnegative weights, or to
//! "infeasible" when no branch qualifies. It is cheap (8x8 dense algebra) and
//! smooth away from feasibility boundaries, so a multi-start Nelder-Mead
//! simplex is enough. Infeasible probes score minus infinity rather than
//! aborting, which lets the simplex slide along the feasibility boundary.
//!
//! Start points are sampled from a ChaCha8 stream cipher RNG seeded with the
//! caller's seed, so runs are reproducible bit for bit across machines. Starts
//! are processed in index order and merged by best value with lexicographic
//! tie-breaking on the parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bell::{correlation_tensor, evaluate, BellExpression, MeasurementAngles};
use crate::family::{
    abc_coefficients, assemble_state, feasible_states, solve_omega, solve_weights_any_sign,
    CertificationRecord, FamilyAngles, FamilyError, Weights,
};
use crate::linalg::{LinalgError, Tolerances};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("no feasible point found in {starts} start(s)")]
    NoFeasiblePoint { starts: usize },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A fully evaluated parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct SearchPoint {
    pub angles: FamilyAngles,
    pub theta1: f64,
    pub theta2: f64,
    /// Index of the winning mixing-angle branch.
    pub branch: usize,
    pub omega: f64,
    pub s_value: f64,
    pub weights: Weights,
}

/// Best Bell value over all feasible branches at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct EvaluatedPoint {
    pub s_value: f64,
    pub branch: usize,
    pub omega: f64,
    pub weights: Weights,
}

/// Evaluates the built-in expression at a parameter point; `None` when no
/// branch has nonnegative weights (construction errors never abort a search).
pub fn objective(angles: &FamilyAngles, theta1: f64, theta2: f64) -> Option<EvaluatedPoint> {
    objective_with(&BellExpression::sliwa5(), angles, theta1, theta2)
}

/// Same as [`objective`] with a caller-supplied expression.
pub fn objective_with(
    expr: &BellExpression,
    angles: &FamilyAngles,
    theta1: f64,
    theta2: f64,
) -> Option<EvaluatedPoint> {
    let branches = feasible_states(angles).ok()?;
    let measurement = MeasurementAngles::new(theta1, theta2);
    let mut best: Option<EvaluatedPoint> = None;
    for b in &branches {
        let s = evaluate(expr, &correlation_tensor(&b.state.rho, &measurement));
        if best.is_none_or(|cur| s > cur.s_value) {
            best = Some(EvaluatedPoint {
                s_value: s,
                branch: b.branch,
                omega: b.omega,
                weights: b.state.weights,
            });
        }
    }
    best
}

/// Multi-start settings. With `init` set and `simplex_radius` zero, every
/// start collapses to a single evaluation of `init`.
#[derive(Debug, Clone, Serialize)]
pub struct MaximizeConfig {
    pub starts: usize,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// A start stops once its simplex diameter falls below this.
    pub diameter_tol: f64,
    /// Edge length of the initial simplex around each start point.
    pub simplex_radius: f64,
    /// Fixed start point (alpha, beta, gamma, theta1, theta2); random when absent.
    pub init: Option<[f64; 5]>,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self {
            starts: 100,
            max_iters: 500,
            diameter_tol: 1e-9,
            simplex_radius: 0.4,
            init: None,
        }
    }
}

/// One accepted improvement inside a single start.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub s_value: f64,
    pub params: [f64; 5],
}

/// Convergence history of one start.
#[derive(Debug, Clone, Serialize)]
pub struct StartTrace {
    pub start: usize,
    pub origin: [f64; 5],
    pub iterations: usize,
    pub evaluations: usize,
    /// Monotone sequence of incumbent improvements.
    pub improvements: Vec<TraceEntry>,
    pub best_s: Option<f64>,
    pub best_params: Option<[f64; 5]>,
}

#[derive(Debug)]
pub struct MaximizeResult {
    pub best: SearchPoint,
    pub certification: CertificationRecord,
    pub traces: Vec<StartTrace>,
}

fn lex_less(a: &[f64; 5], b: &[f64; 5]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Maximizes the built-in expression over the five parameters.
///
/// Deterministic for a given (config, seed) pair. The returned point is
/// re-assembled and certified before it is handed back.
pub fn maximize(config: &MaximizeConfig, seed: u64) -> Result<MaximizeResult, OptimizeError> {
    let expr = BellExpression::sliwa5();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let pi = std::f64::consts::PI;

    let mut traces = Vec::with_capacity(config.starts);
    let mut best: Option<(f64, [f64; 5])> = None;

    for start in 0..config.starts {
        let origin = match config.init {
            Some(p) => p,
            None => [
                rng.gen_range(0.0..two_pi),
                rng.gen_range(0.0..two_pi),
                rng.gen_range(0.0..two_pi),
                rng.gen_range(-pi..pi),
                rng.gen_range(-pi..pi),
            ],
        };
        let trace = run_single_start(&expr, start, origin, config);
        if let (Some(s), Some(params)) = (trace.best_s, trace.best_params) {
            let better = match &best {
                None => true,
                Some((bs, bp)) => s > *bs || (s == *bs && lex_less(&params, bp)),
            };
            if better {
                best = Some((s, params));
            }
        }
        traces.push(trace);
    }

    let Some((_, params)) = best else {
        return Err(OptimizeError::NoFeasiblePoint {
            starts: config.starts,
        });
    };

    let angles = FamilyAngles::new(params[0], params[1], params[2]);
    let evaluated = objective_with(&expr, &angles, params[3], params[4])
        .expect("winning point must re-evaluate as feasible");
    let state = assemble_state(&angles, evaluated.omega)?;
    let certification = state.certify(&Tolerances::default())?;
    Ok(MaximizeResult {
        best: SearchPoint {
            angles,
            theta1: params[3],
            theta2: params[4],
            branch: evaluated.branch,
            omega: evaluated.omega,
            s_value: evaluated.s_value,
            weights: evaluated.weights,
        },
        certification,
        traces,
    })
}

/// Nelder-Mead on -S with standard coefficients (reflect 1, expand 2,
/// contract 1/2, shrink 1/2). Infeasible probes evaluate to +inf.
fn run_single_start(
    expr: &BellExpression,
    start: usize,
    origin: [f64; 5],
    config: &MaximizeConfig,
) -> StartTrace {
    let mut evaluations = 0usize;
    let mut improvements: Vec<TraceEntry> = Vec::new();
    let mut incumbent: Option<(f64, [f64; 5])> = None;

    let mut eval = |x: &[f64; 5], iteration: usize, track: &mut Vec<TraceEntry>| -> f64 {
        evaluations += 1;
        let angles = FamilyAngles::new(x[0], x[1], x[2]);
        match objective_with(expr, &angles, x[3], x[4]) {
            Some(point) => {
                let improved = incumbent.is_none_or(|(s, _)| point.s_value > s);
                if improved {
                    incumbent = Some((point.s_value, *x));
                    track.push(TraceEntry {
                        iteration,
                        s_value: point.s_value,
                        params: *x,
                    });
                }
                -point.s_value
            }
            None => f64::INFINITY,
        }
    };

    if config.simplex_radius <= 0.0 {
        eval(&origin, 0, &mut improvements);
        let (best_s, best_params) = match incumbent {
            Some((s, p)) => (Some(s), Some(p)),
            None => (None, None),
        };
        return StartTrace {
            start,
            origin,
            iterations: 0,
            evaluations,
            improvements,
            best_s,
            best_params,
        };
    }

    // initial simplex: origin plus one vertex per coordinate
    let mut points: Vec<[f64; 5]> = vec![origin];
    for i in 0..5 {
        let mut v = origin;
        v[i] += config.simplex_radius;
        points.push(v);
    }
    let mut values: Vec<f64> = points
        .iter()
        .map(|p| eval(p, 0, &mut improvements))
        .collect();

    let mut iterations = 0usize;
    while iterations < config.max_iters {
        iterations += 1;

        // ascending by value: points[order[0]] is the current best
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let best_i = order[0];
        let second_worst_i = order[order.len() - 2];
        let worst_i = order[order.len() - 1];

        let diameter = points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(points[best_i].iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < config.diameter_tol {
            break;
        }

        let mut centroid = [0.0f64; 5];
        for (i, p) in points.iter().enumerate() {
            if i == worst_i {
                continue;
            }
            for k in 0..5 {
                centroid[k] += p[k];
            }
        }
        for c in centroid.iter_mut() {
            *c /= (points.len() - 1) as f64;
        }

        let blend = |t: f64| -> [f64; 5] {
            let mut out = [0.0f64; 5];
            for k in 0..5 {
                out[k] = centroid[k] + t * (centroid[k] - points[worst_i][k]);
            }
            out
        };

        let reflected = blend(1.0);
        let f_reflected = eval(&reflected, iterations, &mut improvements);

        if f_reflected < values[best_i] {
            let expanded = blend(2.0);
            let f_expanded = eval(&expanded, iterations, &mut improvements);
            if f_expanded < f_reflected {
                points[worst_i] = expanded;
                values[worst_i] = f_expanded;
            } else {
                points[worst_i] = reflected;
                values[worst_i] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst_i] {
            points[worst_i] = reflected;
            values[worst_i] = f_reflected;
            continue;
        }

        let contracted = if f_reflected < values[worst_i] {
            blend(0.5) // outside
        } else {
            blend(-0.5) // inside
        };
        let f_contracted = eval(&contracted, iterations, &mut improvements);
        if f_contracted < values[worst_i].min(f_reflected) {
            points[worst_i] = contracted;
            values[worst_i] = f_contracted;
            continue;
        }

        // shrink toward the best vertex
        let anchor = points[best_i];
        for i in 0..points.len() {
            if i == best_i {
                continue;
            }
            for k in 0..5 {
                points[i][k] = anchor[k] + 0.5 * (points[i][k] - anchor[k]);
            }
            values[i] = eval(&points[i].clone(), iterations, &mut improvements);
        }
    }

    let (best_s, best_params) = match incumbent {
        Some((s, p)) => (Some(s), Some(p)),
        None => (None, None),
    };
    StartTrace {
        start,
        origin,
        iterations,
        evaluations,
        improvements,
        best_s,
        best_params,
    }
}

/// One axis of a scan grid: `steps` evenly spaced values from `start` to
/// `stop` inclusive (a single step collapses to `start`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanGrid {
    pub alpha: AxisSpec,
    pub beta: AxisSpec,
    pub gamma: AxisSpec,
    /// Number of values per measurement-angle axis when scoring cells;
    /// 0 skips the Bell evaluation entirely.
    pub theta_steps: usize,
}

/// One grid cell. `degenerate` flags cells where the whole mixing-angle
/// quadratic vanishes (A, B and C all zero), which the solver reports as
/// infeasible since omega is unconstrained there.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub discriminant: f64,
    pub degenerate: bool,
    pub branch_count: usize,
    pub branch_omegas: Vec<f64>,
    /// Weight nonnegativity per branch, aligned with `branch_omegas`.
    pub branch_feasible: Vec<bool>,
    pub any_feasible: bool,
    pub best_s: Option<f64>,
}

/// Maps the feasibility region over a parameter grid.
pub fn scan(grid: &ScanGrid) -> Vec<ScanRow> {
    let expr = BellExpression::sliwa5();
    let thetas: Vec<f64> = (0..grid.theta_steps)
        .map(|j| {
            -std::f64::consts::PI
                + (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / grid.theta_steps as f64
        })
        .collect();

    let mut rows = Vec::new();
    for &alpha in &grid.alpha.values() {
        for &beta in &grid.beta.values() {
            for &gamma in &grid.gamma.values() {
                let angles = FamilyAngles::new(alpha, beta, gamma);
                let (a, b, c) = abc_coefficients(&angles);
                let degenerate = a.abs().max(b.abs()).max(c.abs()) < 1e-14;
                let mut row = ScanRow {
                    alpha,
                    beta,
                    gamma,
                    discriminant: a * a - b * c,
                    degenerate,
                    branch_count: 0,
                    branch_omegas: Vec::new(),
                    branch_feasible: Vec::new(),
                    any_feasible: false,
                    best_s: None,
                };
                if let Ok(solutions) = solve_omega(&angles) {
                    row.branch_count = solutions.branches.len();
                    for &omega in &solutions.branches {
                        let feasible = solve_weights_any_sign(&angles, omega)
                            .map(|w| w.nonnegative())
                            .unwrap_or(false);
                        row.branch_omegas.push(omega);
                        row.branch_feasible.push(feasible);
                    }
                    row.any_feasible = row.branch_feasible.iter().any(|&f| f);
                    if row.any_feasible && !thetas.is_empty() {
                        let mut best = f64::NEG_INFINITY;
                        if let Ok(branches) = feasible_states(&angles) {
                            for branch in &branches {
                                for &t1 in &thetas {
                                    for &t2 in &thetas {
                                        let s = evaluate(
                                            &expr,
                                            &correlation_tensor(
                                                &branch.state.rho,
                                                &MeasurementAngles::new(t1, t2),
                                            ),
                                        );
                                        best = best.max(s);
                                    }
                                }
                            }
                        }
                        if best.is_finite() {
                            row.best_s = Some(best);
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    rows
}
