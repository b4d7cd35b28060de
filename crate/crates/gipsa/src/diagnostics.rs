//! Solution-structure diagnostics: the active set at the minimizer, the sign
//! pattern the iterates must eventually adopt, finite-time identification
//! tracking, the smooth reduced problem on the active manifold, and
//! empirical linear-rate estimation.
//!
//! Everything here is phrased in terms of h* = grad f(x*), which is shared by
//! every minimizer. The active set E collects the coordinates where the dual
//! bound is tight, |h*_i| = rho, and the iterates of a convergent run end up
//! with support inside E and signs matching -sgn(h*) after finitely many
//! steps. Past that point the iteration coincides with an unconstrained
//! inertial gradient method on the reduced function, which is what makes
//! local linear rates with the reduced curvature meaningful.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{all_finite, norm2, objective_value, CompositeProblem, LassoInstance};
use crate::prox::{forward_backward, project_orthant, sgn, SignPattern};
use crate::solver::{fixed_point_residual, IterationRecord, StepView, TraceSink};

/// Coordinates with rho - |h*_i| at most this are counted active.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-4;
/// A point must pass this fixed-point residual (at step 1/L) before its
/// structure is read off.
pub const SOLUTION_RESIDUAL_TOL: f64 = 1e-8;
/// Eigenvalues below this fraction of the largest one count as rank
/// deficiency when computing the effective reduced curvature.
pub const RANK_REVEAL_TOL: f64 = 1e-10;
/// The full prox step and the projected reduced step must agree to this
/// accuracy once the iterate sits on the manifold.
pub const REDUCED_UPDATE_TOL: f64 = 1e-10;
/// Fewest points a rate fit will accept.
pub const MIN_RATE_WINDOW: usize = 20;

/// The solution structure read off a converged point.
#[derive(Clone, Debug)]
pub struct ActiveSetEstimate {
    /// grad f(x*), the vector shared by all minimizers.
    pub h_star: Vec<f64>,
    /// Active coordinates, ascending.
    pub e: Vec<usize>,
    /// -sgn(h*) restricted to E: the sign each active coordinate settles on.
    pub pattern: SignPattern,
    /// min over inactive coordinates of rho - |h*_i|; infinite when every
    /// coordinate is active.
    pub omega: f64,
    /// Smallest eigenvalue of A_E^T A_E (clamped at 0).
    pub l_e: f64,
    /// Smallest eigenvalue above the rank-reveal cutoff: the curvature that
    /// actually drives the local rate when A_E is column-rank-deficient.
    pub l_e_hat: f64,
    /// Threshold that defined E.
    pub tol_e: f64,
}

impl ActiveSetEstimate {
    pub fn contains(&self, i: usize) -> bool {
        self.e.binary_search(&i).is_ok()
    }

    pub fn summary(&self) -> ActiveSetSummary {
        ActiveSetSummary {
            active_size: self.e.len(),
            omega: self.omega,
            l_e: self.l_e,
            l_e_hat: self.l_e_hat,
            tol_e: self.tol_e,
        }
    }
}

/// Compact serializable view of an [`ActiveSetEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetSummary {
    pub active_size: usize,
    pub omega: f64,
    pub l_e: f64,
    pub l_e_hat: f64,
    pub tol_e: f64,
}

/// Reads the active set, sign pattern, separation margin, and reduced
/// curvature off a converged point.
///
/// `x_star` must actually be a minimizer to working accuracy: the fixed-point
/// residual at step 1/L is checked against [`SOLUTION_RESIDUAL_TOL`], and any
/// coordinate of meaningful size outside the detected active set also fails
/// the point, both as [`Error::StaleSolution`].
pub fn estimate_active_set(
    inst: &LassoInstance,
    x_star: &[f64],
    tol_e: Option<f64>,
) -> Result<ActiveSetEstimate> {
    let tol_e = tol_e.unwrap_or(DEFAULT_ACTIVE_TOL);
    let rho = inst.rho();
    if !(tol_e > 0.0 && tol_e < rho) {
        return Err(Error::InvalidParameter {
            name: "tol_e",
            value: tol_e,
            constraint: "0 < tol_e < rho",
        });
    }
    if x_star.len() != inst.num_cols() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_cols(),
            got: x_star.len(),
        });
    }
    let residual = fixed_point_residual(inst, x_star, 1.0 / inst.lipschitz())?;
    if !(residual <= SOLUTION_RESIDUAL_TOL) {
        return Err(Error::StaleSolution {
            residual,
            threshold: SOLUTION_RESIDUAL_TOL,
        });
    }

    let h_star = inst.gradient(x_star);
    let mut e = Vec::new();
    let mut signs = Vec::new();
    let mut omega = f64::INFINITY;
    for (i, &h) in h_star.iter().enumerate() {
        let margin = rho - h.abs();
        if margin <= tol_e {
            e.push(i);
            signs.push(if -sgn(h) >= 0.0 { 1i8 } else { -1i8 });
        } else {
            omega = omega.min(margin);
            // A visibly nonzero coordinate off the active set means the
            // point and the threshold disagree about the structure.
            if x_star[i].abs() > SOLUTION_RESIDUAL_TOL {
                return Err(Error::StaleSolution {
                    residual: x_star[i].abs(),
                    threshold: SOLUTION_RESIDUAL_TOL,
                });
            }
        }
    }

    let (l_e, l_e_hat) = reduced_curvature(inst, &e)?;
    Ok(ActiveSetEstimate {
        h_star,
        e,
        pattern: SignPattern::new(signs)?,
        omega,
        l_e,
        l_e_hat,
        tol_e,
    })
}

/// Smallest and smallest-significant eigenvalues of A_E^T A_E.
fn reduced_curvature(inst: &LassoInstance, e: &[usize]) -> Result<(f64, f64)> {
    if e.is_empty() {
        // The reduced problem is the trivial one on {0}; every rate bound
        // holds vacuously. Infinite curvature encodes that honestly.
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let gram = inst.a().select_columns(e).gram();
    let k = e.len();
    let g = DMatrix::<f64>::from_row_slice(k, k, gram.data());
    let eig = g.symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, &v| m.max(v));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let cutoff = RANK_REVEAL_TOL * max;
    let min_significant = eig
        .iter()
        .filter(|&&v| v > cutoff)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let l_e_hat = if min_significant.is_finite() {
        min_significant
    } else {
        0.0
    };
    Ok((min.max(0.0), l_e_hat))
}

/// Violation counts for one iterate against the target structure:
/// `support_outside` counts nonzero coordinates off E in `x`, and
/// `sign_mismatches` counts active coordinates where the forward point the
/// prox saw, u = y - lambda grad, has the wrong sign.
pub fn signature_from_parts(
    est: &ActiveSetEstimate,
    x: &[f64],
    y: &[f64],
    grad: &[f64],
    lambda: f64,
) -> (usize, usize) {
    let mut sign_mismatches = 0usize;
    for (slot, &j) in est.e.iter().enumerate() {
        let u = y[j] - lambda * grad[j];
        if sgn(u) != est.pattern.sign(slot) {
            sign_mismatches += 1;
        }
    }
    let mut support_outside = 0usize;
    let mut slot = 0usize;
    for (i, &xi) in x.iter().enumerate() {
        if slot < est.e.len() && est.e[slot] == i {
            slot += 1;
        } else if xi != 0.0 {
            support_outside += 1;
        }
    }
    (sign_mismatches, support_outside)
}

/// [`signature_from_parts`] with the gradient at `y` computed here.
pub fn signature(
    inst: &LassoInstance,
    est: &ActiveSetEstimate,
    x: &[f64],
    y: &[f64],
    lambda: f64,
) -> (usize, usize) {
    let grad = inst.gradient(y);
    signature_from_parts(est, x, y, &grad, lambda)
}

/// Per-iterate manifold violations, aligned with the solver trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldRecord {
    /// Iterate index (the step's output), 1-based.
    pub k: usize,
    pub support_outside_e: usize,
    pub sign_mismatches_on_e: usize,
}

impl ManifoldRecord {
    pub fn violates(&self) -> bool {
        self.support_outside_e > 0 || self.sign_mismatches_on_e > 0
    }
}

#[derive(Clone, Debug, Default)]
pub struct ManifoldTrace {
    pub records: Vec<ManifoldRecord>,
}

impl ManifoldTrace {
    /// Earliest recorded iterate from which no later record violates the
    /// structure; `None` while the final record still violates (or nothing
    /// was recorded).
    pub fn identification_iteration(&self) -> Option<usize> {
        let last_violation = self.records.iter().rev().find(|r| r.violates());
        match last_violation {
            None => self.records.first().map(|r| r.k),
            Some(v) => {
                if self.records.last().is_some_and(|l| l.k == v.k) {
                    None
                } else {
                    Some(v.k + 1)
                }
            }
        }
    }

    pub fn total_violations(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.support_outside_e + r.sign_mismatches_on_e)
            .sum()
    }
}

/// Trace sink that scores every accepted iterate against an active-set
/// estimate as the run goes.
pub struct ManifoldSink<'a> {
    est: &'a ActiveSetEstimate,
    pub trace: ManifoldTrace,
}

impl<'a> ManifoldSink<'a> {
    pub fn new(est: &'a ActiveSetEstimate) -> Self {
        Self {
            est,
            trace: ManifoldTrace::default(),
        }
    }
}

impl TraceSink for ManifoldSink<'_> {
    fn on_step(&mut self, record: &IterationRecord, view: &StepView<'_>) {
        let (p, q) = signature_from_parts(self.est, view.next, view.y, view.grad_z, record.lambda);
        self.trace.records.push(ManifoldRecord {
            k: record.k + 1,
            support_outside_e: q,
            sign_mismatches_on_e: p,
        });
    }
}

/// Trace sink recording the Euclidean distance of each accepted iterate to a
/// reference point.
pub struct ErrorTraceSink<'a> {
    x_star: &'a [f64],
    pub errors: Vec<f64>,
}

impl<'a> ErrorTraceSink<'a> {
    pub fn new(x_star: &'a [f64]) -> Self {
        Self {
            x_star,
            errors: Vec::new(),
        }
    }
}

impl TraceSink for ErrorTraceSink<'_> {
    fn on_step(&mut self, _record: &IterationRecord, view: &StepView<'_>) {
        let d: f64 = view
            .next
            .iter()
            .zip(self.x_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.errors.push(d.sqrt());
    }
}

fn embed(n: usize, e: &[usize], u: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (slot, &j) in e.iter().enumerate() {
        x[j] = u[slot];
    }
    x
}

/// Gradient of the reduced function phi(u) = f(embed(u)) - h*_E . u, which is
/// the smooth function the iteration minimizes once it sits on the manifold.
pub fn reduced_gradient(inst: &LassoInstance, est: &ActiveSetEstimate, u: &[f64]) -> Vec<f64> {
    let x = embed(inst.num_cols(), &est.e, u);
    let g = inst.gradient(&x);
    est.e.iter().map(|&j| g[j] - est.h_star[j]).collect()
}

/// Value of the reduced function phi at reduced coordinates `u`.
pub fn reduced_objective(inst: &LassoInstance, est: &ActiveSetEstimate, u: &[f64]) -> f64 {
    let x = embed(inst.num_cols(), &est.e, u);
    let linear: f64 = est
        .e
        .iter()
        .zip(u)
        .map(|(&j, &uj)| est.h_star[j] * uj)
        .sum();
    inst.eval_f(&x) - linear
}

/// How far one full prox step from the embedded point `u_y` is from the
/// projected gradient step of the reduced problem (sup-norm over all
/// coordinates). Near zero exactly when the step stays on the manifold.
pub fn reduced_update_deviation(
    inst: &LassoInstance,
    est: &ActiveSetEstimate,
    u_y: &[f64],
    lambda: f64,
) -> Result<f64> {
    if u_y.len() != est.e.len() {
        return Err(Error::DimensionMismatch {
            expected: est.e.len(),
            got: u_y.len(),
        });
    }
    let y = embed(inst.num_cols(), &est.e, u_y);
    let full = forward_backward(inst, &y, lambda)?;
    let gphi = reduced_gradient(inst, est, u_y);
    let trial: Vec<f64> = u_y
        .iter()
        .zip(&gphi)
        .map(|(&uj, &gj)| uj - lambda * gj)
        .collect();
    let reduced_next = project_orthant(&trial, &est.pattern)?;
    let reduced_embedded = embed(inst.num_cols(), &est.e, &reduced_next);
    Ok(full
        .iter()
        .zip(&reduced_embedded)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// True when the full and reduced updates from `u_y` agree to
/// [`REDUCED_UPDATE_TOL`].
pub fn verify_reduced_update(
    inst: &LassoInstance,
    est: &ActiveSetEstimate,
    u_y: &[f64],
    lambda: f64,
) -> Result<bool> {
    Ok(reduced_update_deviation(inst, est, u_y, lambda)? <= REDUCED_UPDATE_TOL)
}

/// For a point on the manifold (exact zeros off E, signs compatible with the
/// pattern), returns |F(x) - phi(x_E)|; fails if `x` is not on the manifold.
pub fn check_objective_equals_phi(
    inst: &LassoInstance,
    est: &ActiveSetEstimate,
    x: &[f64],
) -> Result<f64> {
    if x.len() != inst.num_cols() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_cols(),
            got: x.len(),
        });
    }
    if !all_finite(x) {
        return Err(Error::NonFinite { what: "x" });
    }
    let mut slot = 0usize;
    for (i, &xi) in x.iter().enumerate() {
        if slot < est.e.len() && est.e[slot] == i {
            if est.pattern.sign(slot) * xi < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "x",
                    value: xi,
                    constraint: "sign compatible with the active pattern",
                });
            }
            slot += 1;
        } else if xi != 0.0 {
            return Err(Error::InvalidParameter {
                name: "x",
                value: xi,
                constraint: "zero outside the active set",
            });
        }
    }
    let u: Vec<f64> = est.e.iter().map(|&j| x[j]).collect();
    let full = objective_value(inst, x);
    let reduced = reduced_objective(inst, est, &u);
    Ok((full - reduced).abs())
}

/// Least-squares fit of log e_k over `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Fitted per-iteration contraction factor of the supplied sequence.
    pub q_hat: f64,
    pub window: (usize, usize),
    /// Root-mean-square residual of the log-linear fit.
    pub fit_residual: f64,
    /// Theoretical factor the fit is compared against, when one applies.
    pub predicted_q: Option<f64>,
}

/// Fits e_k ~ C q^k on `errors[window]` by least squares in log space.
/// Every entry in the window must be positive and finite, and the window must
/// hold at least [`MIN_RATE_WINDOW`] points.
pub fn estimate_rate(
    errors: &[f64],
    window: Range<usize>,
    predicted_q: Option<f64>,
) -> Result<RateEstimate> {
    if window.end > errors.len() || window.start >= window.end {
        return Err(Error::InvalidParameter {
            name: "window",
            value: window.end as f64,
            constraint: "within the error sequence",
        });
    }
    let n = window.end - window.start;
    if n < MIN_RATE_WINDOW {
        return Err(Error::InvalidParameter {
            name: "window",
            value: n as f64,
            constraint: "at least MIN_RATE_WINDOW points",
        });
    }
    let slice = &errors[window.clone()];
    if !slice.iter().all(|&v| v.is_finite() && v > 0.0) {
        return Err(Error::NonFinite {
            what: "error sequence in the fit window",
        });
    }
    let logs: Vec<f64> = slice.iter().map(|&v| v.ln()).collect();
    let nf = n as f64;
    let mean_k = (n - 1) as f64 / 2.0;
    let mean_y = logs.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (i, &y) in logs.iter().enumerate() {
        let dk = i as f64 - mean_k;
        cov += dk * (y - mean_y);
        var += dk * dk;
    }
    let slope = cov / var;
    let intercept = mean_y - slope * mean_k;
    let mut ss = 0.0;
    for (i, &y) in logs.iter().enumerate() {
        let r = y - (intercept + slope * i as f64);
        ss += r * r;
    }
    Ok(RateEstimate {
        q_hat: slope.exp(),
        window: (window.start, window.end),
        fit_residual: (ss / nf).sqrt(),
        predicted_q,
    })
}

/// Picks a fit window inside `errors`: starts a quarter of the way into the
/// post-identification tail (skipping the transient), ends where the sequence
/// sinks below the numerical floor `100 eps * scale`. `None` when fewer than
/// [`MIN_RATE_WINDOW`] usable points remain.
pub fn select_rate_window(
    errors: &[f64],
    identified_at: usize,
    scale: f64,
) -> Option<Range<usize>> {
    if identified_at >= errors.len() {
        return None;
    }
    let floor = 100.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut end = errors.len();
    while end > identified_at && !(errors[end - 1] > floor) {
        end -= 1;
    }
    let span = end.saturating_sub(identified_at);
    if span < MIN_RATE_WINDOW {
        return None;
    }
    let start = identified_at + span / 4;
    if end - start >= MIN_RATE_WINDOW {
        Some(start..end)
    } else {
        Some(identified_at..end)
    }
}

/// Convenience: Euclidean distance sequence from a trace of iterates.
pub fn distance_sequence(iterates: &[Vec<f64>], x_star: &[f64]) -> Vec<f64> {
    iterates
        .iter()
        .map(|x| {
            let d: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
            norm2(&d)
        })
        .collect()
}
