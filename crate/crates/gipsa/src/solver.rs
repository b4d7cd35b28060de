//! The inertial proximal splitting iteration and its run loop.
//!
//! One step with parameters (alpha_k, beta_k, lambda_k) maps the pair
//! (x^k, x^{k-1}) to
//!
//!   y^{k+1} = x^k + beta_k  (x^k - x^{k-1})
//!   z^{k+1} = x^k + alpha_k (x^k - x^{k-1})
//!   x^{k+1} = prox_{lambda_k g}( y^{k+1} - lambda_k grad f(z^{k+1}) )
//!
//! alpha = beta = 0 is plain forward-backward; alpha = beta recovers the
//! single-extrapolation inertial family. The loop never randomizes and never
//! reorders arithmetic, so two runs with identical inputs produce bit-identical
//! traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{all_finite, objective_value, CompositeProblem};
use crate::prox::forward_backward;
use crate::schedules::{schedule_at, ScheduleParams, ScheduleSpec};

/// Objective blowing up past this multiple of its initial value counts as
/// divergence even while every coordinate is still finite.
const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct SolverState {
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    /// Iterate index: x_curr is the k-th iterate, 1-based; x_prev trails it.
    pub k: usize,
    /// Schedule position for the next step; rewinds to 1 on restart, so
    /// schedule_k <= k always holds.
    pub schedule_k: usize,
    pub restarts: usize,
    /// F(x_curr), maintained so each step evaluates the objective once.
    pub last_objective: f64,
}

impl SolverState {
    pub fn initial<P: CompositeProblem + ?Sized>(problem: &P, x0: &[f64]) -> Result<Self> {
        if x0.len() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: x0.len(),
            });
        }
        if !all_finite(x0) {
            return Err(Error::NonFinite { what: "x0" });
        }
        let f0 = objective_value(problem, x0);
        if !f0.is_finite() {
            return Err(Error::NonFinite {
                what: "objective at x0",
            });
        }
        Ok(Self {
            x_curr: x0.to_vec(),
            x_prev: x0.to_vec(),
            k: 1,
            schedule_k: 1,
            restarts: 0,
            last_objective: f0,
        })
    }

    pub fn increment_norm_sq(&self) -> f64 {
        self.x_curr
            .iter()
            .zip(&self.x_prev)
            .map(|(c, p)| (c - p) * (c - p))
            .sum()
    }
}

/// What one step computed, before the run loop decides what to keep.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub grad_z: Vec<f64>,
    pub x_next: Vec<f64>,
}

/// One inertial step from `state` with `params`. Pure: the state is not
/// advanced. Fails if the produced iterate has a non-finite coordinate.
pub fn gipsa_step<P: CompositeProblem + ?Sized>(
    problem: &P,
    state: &SolverState,
    params: ScheduleParams,
) -> Result<StepOutput> {
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: params.lambda,
            constraint: "lambda > 0",
        });
    }
    let n = state.x_curr.len();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for (&c, &p) in state.x_curr.iter().zip(&state.x_prev) {
        let d = c - p;
        y.push(c + params.beta * d);
        z.push(c + params.alpha * d);
    }
    let grad_z = problem.grad_f(&z);
    let inner: Vec<f64> = y
        .iter()
        .zip(&grad_z)
        .map(|(yi, gi)| yi - params.lambda * gi)
        .collect();
    let x_next = problem.prox_g(&inner, params.lambda);
    if !all_finite(&x_next) {
        return Err(Error::NumericalDivergence {
            iteration: state.k,
            detail: "non-finite coordinate in iterate".into(),
        });
    }
    Ok(StepOutput {
        y,
        z,
        grad_z,
        x_next,
    })
}

/// E_k = F(x^k) + (beta_k / (2 lambda_k)) ||x^k - x^{k-1}||^2, the energy
/// that is nonincreasing along trajectories of validated schedules.
pub fn lyapunov_energy<P: CompositeProblem + ?Sized>(
    problem: &P,
    state: &SolverState,
    params: ScheduleParams,
) -> f64 {
    objective_value(problem, &state.x_curr)
        + params.beta / (2.0 * params.lambda) * state.increment_norm_sq()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Step index, 1-based; the step produced iterate k + 1.
    pub k: usize,
    /// F at the iterate this step settled on (the retained point for
    /// restart steps).
    pub objective: f64,
    /// Squared norm of the accepted increment; 0 for restart steps.
    pub increment_norm_sq: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Energy E_k evaluated before the step, with this step's parameters.
    pub lyapunov_energy: f64,
    pub restarted: bool,
}

/// Stopping rules compose any-of: the run halts when the first one fires.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingRule {
    /// ||x - T(x)||_inf <= tol, with T evaluated at step size 1/L regardless
    /// of the schedule, so the residual is comparable across algorithms.
    FixedPointResidual { tol: f64 },
    /// (F(x) - f_star) / f_star <= tol.
    RelativeObjectiveGap { f_star: f64, tol: f64 },
    /// Step budget; exhausting it is a normal outcome, not an error.
    MaxIterations { max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    FixedPointResidual {
        residual: f64,
    },
    RelativeObjectiveGap {
        gap: f64,
    },
    IterationLimit,
    /// A restart fired while x_prev already equaled x_curr: the rejected
    /// candidate was the plain step from a just-restarted pair, so repeating
    /// it is bit-identical and the run could never move again. The iterate is
    /// at the floor this arithmetic supports.
    Stationary {
        residual: f64,
    },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

/// Everything a trace consumer may want to see about one step, borrowed from
/// the loop's buffers. Sinks must not assume anything outlives the call.
pub struct StepView<'a> {
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub grad_z: &'a [f64],
    /// The proximal output computed this step (discarded on restart steps).
    pub prox_out: &'a [f64],
    /// The iterate the run actually advanced to.
    pub next: &'a [f64],
    /// The iterate the step departed from.
    pub prev: &'a [f64],
}

/// Receives records in order; must not mutate solver state.
pub trait TraceSink {
    fn on_step(&mut self, record: &IterationRecord, view: &StepView<'_>);
}

/// A failed run still hands back what it recorded up to the failure.
#[derive(Debug)]
pub enum RunError {
    Diverged {
        iteration: usize,
        detail: String,
        records: Vec<IterationRecord>,
    },
    Config(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Diverged {
                iteration, detail, ..
            } => write!(f, "numerical divergence at iteration {iteration}: {detail}"),
            Self::Config(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Config(e)
    }
}

impl From<RunError> for Error {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Diverged {
                iteration, detail, ..
            } => Error::NumericalDivergence { iteration, detail },
            RunError::Config(e) => e,
        }
    }
}

pub type RunResult = std::result::Result<RunOutcome, RunError>;

/// Runs the iteration from x_prev = x_curr = x0 until a stopping rule fires.
///
/// The schedule is taken as given; call [`crate::schedules::validate_gipsa`]
/// beforehand if a convergence guarantee matters. Divergent parameter choices
/// are deliberately runnable so instability can be observed and tested.
pub fn run<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    spec: &ScheduleSpec,
    rules: &[StoppingRule],
    sink: Option<&mut dyn TraceSink>,
) -> RunResult {
    run_impl(problem, x0, spec, rules, sink, false, true)
}

/// Like [`run`], but wraps the fista-cd rule with an objective restart:
/// whenever a step would increase F, the candidate is discarded, the momentum
/// counter rewinds to 1, and the iteration continues from the retained point
/// with x_prev = x_curr. Restart steps are recorded with `restarted = true`
/// and the retained objective, so recorded objectives never increase.
pub fn run_with_restart<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    spec: &ScheduleSpec,
    rules: &[StoppingRule],
    sink: Option<&mut dyn TraceSink>,
) -> RunResult {
    if !spec.uses_restart_compatible_rule() {
        return Err(RunError::Config(Error::InvalidParameter {
            name: "spec",
            value: f64::NAN,
            constraint: "restart applies to the fista-cd rule",
        }));
    }
    run_impl(problem, x0, spec, rules, sink, true, true)
}

/// Record-free variant for long auxiliary solves (reference solutions) where
/// the trace would only burn memory.
pub(crate) fn run_quiet<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    spec: &ScheduleSpec,
    rules: &[StoppingRule],
    restart: bool,
) -> RunResult {
    run_impl(problem, x0, spec, rules, None, restart, false)
}

fn run_impl<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    spec: &ScheduleSpec,
    rules: &[StoppingRule],
    mut sink: Option<&mut dyn TraceSink>,
    restart: bool,
    keep_records: bool,
) -> RunResult {
    spec.check()?;
    let mut state = SolverState::initial(problem, x0)?;
    let f0 = state.last_objective;
    let blowup = if f0 > 0.0 {
        DIVERGENCE_FACTOR * f0
    } else {
        DIVERGENCE_FACTOR
    };
    let max_steps = rules
        .iter()
        .filter_map(|r| match r {
            StoppingRule::MaxIterations { max } => Some(*max),
            _ => None,
        })
        .min()
        .unwrap_or(usize::MAX);
    let lambda_residual = 1.0 / problem.lipschitz();

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut steps_taken = 0usize;

    let stop = loop {
        if steps_taken >= max_steps {
            break StopReason::IterationLimit;
        }
        let params = schedule_at(spec, state.schedule_k)?;
        let energy =
            state.last_objective + params.beta / (2.0 * params.lambda) * state.increment_norm_sq();
        let step_index = state.k;

        let out = match gipsa_step(problem, &state, params) {
            Ok(out) => out,
            Err(Error::NumericalDivergence { iteration, detail }) => {
                return Err(RunError::Diverged {
                    iteration,
                    detail,
                    records,
                })
            }
            Err(e) => return Err(e.into()),
        };
        let f_cand = objective_value(problem, &out.x_next);
        if !f_cand.is_finite() || f_cand > blowup {
            return Err(RunError::Diverged {
                iteration: step_index,
                detail: format!("objective {f_cand:e} exceeded {blowup:e}"),
                records,
            });
        }

        let restarting = restart && f_cand > state.last_objective;
        if restarting && state.increment_norm_sq() == 0.0 {
            // Deterministic loop: with x_prev == x_curr the next attempt
            // would recompute this exact candidate and reject it again.
            let t = forward_backward(problem, &state.x_curr, lambda_residual)?;
            let r = state
                .x_curr
                .iter()
                .zip(&t)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            break StopReason::Stationary { residual: r };
        }
        let record = if restarting {
            IterationRecord {
                k: step_index,
                objective: state.last_objective,
                increment_norm_sq: 0.0,
                alpha: params.alpha,
                beta: params.beta,
                lambda: params.lambda,
                lyapunov_energy: energy,
                restarted: true,
            }
        } else {
            let inc: f64 = out
                .x_next
                .iter()
                .zip(&state.x_curr)
                .map(|(n, c)| (n - c) * (n - c))
                .sum();
            IterationRecord {
                k: step_index,
                objective: f_cand,
                increment_norm_sq: inc,
                alpha: params.alpha,
                beta: params.beta,
                lambda: params.lambda,
                lyapunov_energy: energy,
                restarted: false,
            }
        };

        if let Some(s) = sink.as_deref_mut() {
            let view = StepView {
                y: &out.y,
                z: &out.z,
                grad_z: &out.grad_z,
                prox_out: &out.x_next,
                next: if restarting {
                    &state.x_curr
                } else {
                    &out.x_next
                },
                prev: &state.x_curr,
            };
            s.on_step(&record, &view);
        }
        if keep_records {
            records.push(record);
        }
        steps_taken += 1;

        if restarting {
            state.x_prev.copy_from_slice(&state.x_curr);
            state.schedule_k = 1;
            state.restarts += 1;
            state.k += 1;
        } else {
            state.x_prev = std::mem::replace(&mut state.x_curr, out.x_next);
            state.schedule_k += 1;
            state.k += 1;
            state.last_objective = f_cand;
        }

        let mut fired = None;
        for rule in rules {
            match *rule {
                StoppingRule::FixedPointResidual { tol } => {
                    let t = forward_backward(problem, &state.x_curr, lambda_residual)?;
                    let r = state
                        .x_curr
                        .iter()
                        .zip(&t)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    if r <= tol {
                        fired = Some(StopReason::FixedPointResidual { residual: r });
                    }
                }
                StoppingRule::RelativeObjectiveGap { f_star, tol } => {
                    let denom = if f_star > 0.0 { f_star } else { 1.0 };
                    let gap = (state.last_objective - f_star) / denom;
                    if gap <= tol {
                        fired = Some(StopReason::RelativeObjectiveGap { gap });
                    }
                }
                StoppingRule::MaxIterations { .. } => {}
            }
            if fired.is_some() {
                break;
            }
        }
        if let Some(reason) = fired {
            break reason;
        }
    };

    Ok(RunOutcome {
        state,
        records,
        stop,
    })
}

/// Fixed-point residual ||x - T_lambda(x)||_inf; fixed points of T are
/// exactly the minimizers.
pub fn fixed_point_residual<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    lambda: f64,
) -> Result<f64> {
    let t = forward_backward(problem, x, lambda)?;
    Ok(x.iter()
        .zip(&t)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Norm of the subgradient of F certified by the step that produced `next`:
/// (y - next)/lambda - grad f(z) + grad f(next) lies in the subdifferential
/// of F at next.
pub fn step_subgradient_norm<P: CompositeProblem + ?Sized>(
    problem: &P,
    view_y: &[f64],
    view_z_grad: &[f64],
    next: &[f64],
    lambda: f64,
) -> f64 {
    let grad_next = problem.grad_f(next);
    let mut sq = 0.0;
    for i in 0..next.len() {
        let v = (view_y[i] - next[i]) / lambda - view_z_grad[i] + grad_next[i];
        sq += v * v;
    }
    sq.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DenseMatrix, LassoInstance, Vector};
    use crate::prox::prox_l1;
    use crate::rng::SplitMix64;

    fn one_d_instance() -> LassoInstance {
        let a = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        LassoInstance::new(a, Vector::new(vec![1.0]).unwrap(), 0.25).unwrap()
    }

    fn random_instance(seed: u64, m: usize, n: usize, rho: f64) -> LassoInstance {
        let mut rng = SplitMix64::new(seed);
        let data: Vec<f64> = (0..m * n)
            .map(|_| 0.3 * rng.next_standard_normal())
            .collect();
        let a = DenseMatrix::new(m, n, data).unwrap();
        let b = Vector::new((0..m).map(|_| rng.next_standard_normal()).collect()).unwrap();
        LassoInstance::new(a, b, rho).unwrap()
    }

    #[test]
    fn step_one_dimensional_example() {
        // From x_prev = 0, x_curr = 0.5 with alpha = beta = 0.5, lambda = 1:
        // y = z = 0.75, grad = -0.25, inner = 1.0, soft-threshold at 0.25
        // gives 0.75.
        let inst = one_d_instance();
        let state = SolverState {
            x_curr: vec![0.5],
            x_prev: vec![0.0],
            k: 2,
            schedule_k: 2,
            restarts: 0,
            last_objective: inst.objective(&[0.5]),
        };
        let params = ScheduleParams {
            alpha: 0.5,
            beta: 0.5,
            lambda: 1.0,
        };
        let out = gipsa_step(&inst, &state, params).unwrap();
        assert_eq!(out.y, vec![0.75]);
        assert_eq!(out.z, vec![0.75]);
        assert_eq!(out.grad_z, vec![-0.25]);
        assert_eq!(out.x_next, vec![0.75]);
    }

    #[test]
    fn step_rejects_nonpositive_lambda() {
        let inst = one_d_instance();
        let state = SolverState::initial(&inst, &[0.0]).unwrap();
        let params = ScheduleParams {
            alpha: 0.0,
            beta: 0.0,
            lambda: 0.0,
        };
        assert!(gipsa_step(&inst, &state, params).is_err());
    }

    #[test]
    fn lyapunov_energy_example() {
        // A = [[1]], b = (2), rho = 1, x_curr = (2): F = 2. With beta = 0.5,
        // lambda = 0.25 and increment 1, E = 2 + (0.5 / 0.5) * 1 = 3.
        let a = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let inst = LassoInstance::new(a, Vector::new(vec![2.0]).unwrap(), 1.0).unwrap();
        let state = SolverState {
            x_curr: vec![2.0],
            x_prev: vec![1.0],
            k: 2,
            schedule_k: 2,
            restarts: 0,
            last_objective: inst.objective(&[2.0]),
        };
        let params = ScheduleParams {
            alpha: 0.5,
            beta: 0.5,
            lambda: 0.25,
        };
        assert!((lyapunov_energy(&inst, &state, params) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn fbs_schedule_matches_forward_backward() {
        let inst = random_instance(3, 6, 10, 0.1);
        let lambda = 1.0 / inst.lipschitz();
        let spec = ScheduleSpec::fbs(lambda).unwrap();
        let out = run(
            &inst,
            &[0.0; 10],
            &spec,
            &[StoppingRule::MaxIterations { max: 25 }],
            None,
        )
        .unwrap();
        let mut x = vec![0.0; 10];
        for _ in 0..25 {
            x = forward_backward(&inst, &x, lambda).unwrap();
        }
        assert_eq!(out.state.x_curr, x);
        assert_eq!(out.records.len(), 25);
        assert_eq!(out.stop, StopReason::IterationLimit);
    }

    #[test]
    fn runs_are_bit_deterministic() {
        let inst = random_instance(11, 8, 14, 0.2);
        let spec = ScheduleSpec::fixed_ifbs(0.6, 1.0 / inst.lipschitz()).unwrap();
        let rules = [StoppingRule::MaxIterations { max: 200 }];
        let a = run(&inst, &[0.0; 14], &spec, &rules, None).unwrap();
        let b = run(&inst, &[0.0; 14], &spec, &rules, None).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.state.x_curr, b.state.x_curr);
    }

    #[test]
    fn energy_is_monotone_for_validated_schedule() {
        let inst = random_instance(5, 10, 16, 0.15);
        let spec = ScheduleSpec::fixed_ifbs(0.5, 1.0 / inst.lipschitz()).unwrap();
        let out = run(
            &inst,
            &[0.0; 16],
            &spec,
            &[StoppingRule::MaxIterations { max: 500 }],
            None,
        )
        .unwrap();
        let e1 = out.records[0].lyapunov_energy;
        let slack = 1e-10 * (1.0 + e1.abs());
        for w in out.records.windows(2) {
            assert!(
                w[1].lyapunov_energy <= w[0].lyapunov_energy + slack,
                "energy rose at k = {}",
                w[1].k
            );
        }
    }

    #[test]
    fn oversized_step_diverges() {
        let inst = random_instance(9, 10, 12, 0.05);
        let spec = ScheduleSpec::fbs(2.5 / inst.lipschitz()).unwrap();
        let res = run(
            &inst,
            &[0.0; 12],
            &spec,
            &[StoppingRule::MaxIterations { max: 10_000 }],
            None,
        );
        match res {
            Err(RunError::Diverged { iteration, .. }) => assert!(iteration > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn restart_discards_increases_and_rewinds_schedule() {
        let inst = random_instance(21, 20, 40, 0.05);
        let spec = ScheduleSpec::fista_cd(2.1, 1.0 / inst.lipschitz()).unwrap();
        let out = run_with_restart(
            &inst,
            &vec![0.0; 40],
            &spec,
            &[StoppingRule::MaxIterations { max: 4000 }],
            None,
        )
        .unwrap();
        assert!(out.state.restarts > 0, "expected at least one restart");
        assert!(out.state.schedule_k <= out.state.k);
        let mut prev = f64::INFINITY;
        for r in &out.records {
            assert!(r.objective <= prev, "objective rose at step {}", r.k);
            if r.restarted {
                assert_eq!(r.increment_norm_sq, 0.0);
            }
            prev = r.objective;
        }
        // Restart on a non-fista-cd schedule is a config error.
        let bad = ScheduleSpec::fbs(0.1).unwrap();
        assert!(matches!(
            run_with_restart(&inst, &vec![0.0; 40], &bad, &[], None),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn restart_run_stops_when_numerically_stationary() {
        // A fixed-point tolerance below the rounding floor is unreachable;
        // the run must detect the frozen restart loop and stop on its own
        // instead of spinning to the step budget.
        let inst = random_instance(21, 20, 40, 0.05);
        let spec = ScheduleSpec::fista_cd(2.1, 1.0 / inst.lipschitz()).unwrap();
        let out = run_with_restart(
            &inst,
            &vec![0.0; 40],
            &spec,
            &[
                StoppingRule::FixedPointResidual { tol: 1e-17 },
                StoppingRule::MaxIterations { max: 200_000 },
            ],
            None,
        )
        .unwrap();
        match out.stop {
            StopReason::Stationary { residual } => {
                assert!(residual < 1e-6, "stopped far from the floor: {residual}");
            }
            other => panic!("expected stationary stop, got {other:?}"),
        }
        assert!(
            out.records.len() < 200_000,
            "burned the whole budget: {}",
            out.records.len()
        );
        // The trace still ends monotone.
        let mut prev = f64::INFINITY;
        for r in &out.records {
            assert!(r.objective <= prev);
            prev = r.objective;
        }
    }

    #[test]
    fn fixed_point_residual_example() {
        // A = I, b = (2, 0), rho = 1, lambda = 1: T(0) = soft(b, 1) = (1, 0).
        let a = DenseMatrix::identity(2);
        let inst = LassoInstance::new(a, Vector::new(vec![2.0, 0.0]).unwrap(), 1.0).unwrap();
        let r = fixed_point_residual(&inst, &[0.0, 0.0], 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_stopping_rule_fires() {
        let inst = random_instance(31, 12, 20, 0.3);
        let spec = ScheduleSpec::fixed_ifbs(0.7, 1.0 / inst.lipschitz()).unwrap();
        let out = run(
            &inst,
            &[0.0; 20],
            &spec,
            &[
                StoppingRule::FixedPointResidual { tol: 1e-9 },
                StoppingRule::MaxIterations { max: 50_000 },
            ],
            None,
        )
        .unwrap();
        match out.stop {
            StopReason::FixedPointResidual { residual } => assert!(residual <= 1e-9),
            other => panic!("expected residual stop, got {other:?}"),
        }
    }

    #[test]
    fn objective_gap_stopping_rule_fires() {
        // Identity design: x* = soft(b, rho) in closed form.
        let b = vec![2.0, -0.4, 1.3, 0.0, -2.2];
        let inst = LassoInstance::new(
            DenseMatrix::identity(5),
            Vector::new(b.clone()).unwrap(),
            0.5,
        )
        .unwrap();
        let x_star = prox_l1(&b, 0.5);
        let f_star = inst.objective(&x_star);
        let spec = ScheduleSpec::fbs(1.0 / inst.lipschitz()).unwrap();
        let out = run(
            &inst,
            &[0.0; 5],
            &spec,
            &[
                StoppingRule::RelativeObjectiveGap { f_star, tol: 1e-10 },
                StoppingRule::MaxIterations { max: 10_000 },
            ],
            None,
        )
        .unwrap();
        match out.stop {
            StopReason::RelativeObjectiveGap { gap } => assert!(gap <= 1e-10),
            other => panic!("expected gap stop, got {other:?}"),
        }
    }

    #[test]
    fn subgradient_residual_shrinks_at_convergence() {
        struct LastView {
            y: Vec<f64>,
            grad_z: Vec<f64>,
            next: Vec<f64>,
            lambda: f64,
        }
        struct Capture(Option<LastView>);
        impl TraceSink for Capture {
            fn on_step(&mut self, record: &IterationRecord, view: &StepView<'_>) {
                self.0 = Some(LastView {
                    y: view.y.to_vec(),
                    grad_z: view.grad_z.to_vec(),
                    next: view.next.to_vec(),
                    lambda: record.lambda,
                });
            }
        }
        let inst = random_instance(41, 15, 24, 0.2);
        let spec = ScheduleSpec::fixed_ifbs(0.5, 1.0 / inst.lipschitz()).unwrap();
        let mut cap = Capture(None);
        run(
            &inst,
            &[0.0; 24],
            &spec,
            &[
                StoppingRule::FixedPointResidual { tol: 1e-8 },
                StoppingRule::MaxIterations { max: 100_000 },
            ],
            Some(&mut cap),
        )
        .unwrap();
        let v = cap.0.expect("at least one step");
        let norm = step_subgradient_norm(&inst, &v.y, &v.grad_z, &v.next, v.lambda);
        assert!(norm <= 1e-6, "subgradient residual {norm}");
    }

    #[test]
    fn record_json_round_trip() {
        let rec = IterationRecord {
            k: 17,
            objective: 1.25,
            increment_norm_sq: 3.5e-9,
            alpha: 0.4,
            beta: 0.4,
            lambda: 0.17,
            lyapunov_energy: 1.2500000301,
            restarted: false,
        };
        let json = serde_json::to_string(&rec).unwrap();
        let back: IterationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
