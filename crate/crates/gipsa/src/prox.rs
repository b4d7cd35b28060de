//! Proximal maps and related projections.
//!
//! Sign convention, fixed globally: sgn(0) = +1. The soft threshold returns
//! an exact 0.0 whenever |v| <= nu, which the manifold diagnostics rely on
//! (zeros stay bit-exact once a coordinate leaves the support).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::CompositeProblem;

/// sgn with sgn(0) = +1.
pub fn sgn(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// S_nu(v) = sgn(v) * max(|v| - nu, 0), the prox of nu * |.|.
pub fn soft_threshold_scalar(v: f64, nu: f64) -> f64 {
    debug_assert!(nu >= 0.0);
    let d = v.abs() - nu;
    if d > 0.0 {
        sgn(v) * d
    } else {
        0.0
    }
}

/// Elementwise soft threshold; prox of nu * ||.||_1.
pub fn prox_l1(v: &[f64], nu: f64) -> Vec<f64> {
    v.iter().map(|&vi| soft_threshold_scalar(vi, nu)).collect()
}

/// Orthant sign pattern: one entry in {-1, +1} per tracked coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(&s) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter {
                name: "sign",
                value: s as f64,
                constraint: "each entry must be +1 or -1",
            });
        }
        Ok(Self(signs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sign(&self, j: usize) -> f64 {
        self.0[j] as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

/// One forward-backward step T_lambda(x) = prox_g(x - lambda grad f(x)).
///
/// Fixed points of T_lambda are exactly the minimizers of f + g, which makes
/// ||x - T_lambda(x)|| a usable optimality residual. Requires 0 < lambda < 2/L.
pub fn forward_backward<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let l = problem.lipschitz();
    if !(lambda > 0.0 && lambda < 2.0 / l) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            constraint: "0 < lambda < 2/L",
        });
    }
    let g = problem.grad_f(x);
    let inner: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - lambda * gi).collect();
    Ok(problem.prox_g(&inner, lambda))
}

/// Euclidean projection onto the orthant {v : pattern_j * v_j >= 0}:
/// coordinates with the wrong sign are clamped to 0.
pub fn project_orthant(v: &[f64], pattern: &SignPattern) -> Result<Vec<f64>> {
    if v.len() != pattern.len() {
        return Err(Error::DimensionMismatch {
            expected: pattern.len(),
            got: v.len(),
        });
    }
    Ok(v.iter()
        .enumerate()
        .map(|(j, &vj)| if pattern.sign(j) * vj >= 0.0 { vj } else { 0.0 })
        .collect())
}
