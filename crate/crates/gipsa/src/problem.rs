//! Problem data for composite minimization F(x) = f(x) + g(x).
//!
//! The concrete instance family is l1-regularized least squares,
//!     F(x) = 0.5 * ||A x - b||^2 + rho * ||x||_1,
//! with a dense row-major A. Everything downstream (solvers, diagnostics,
//! the benchmark harness) only sees the [`CompositeProblem`] surface plus
//! the lasso-specific accessors it needs.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm2(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Dense vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if !all_finite(&entries) {
            return Err(Error::NonFinite { what: "vector" });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Dense row-major matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite { what: "matrix" });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// y = A^T r, accumulated row-wise so access stays sequential.
    pub fn matvec_t(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri != 0.0 {
                for (o, &aij) in out.iter_mut().zip(self.row(i)) {
                    *o += ri * aij;
                }
            }
        }
        out
    }

    /// Columns `idx` gathered into a new dense matrix (same row count).
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// The Gram matrix A^T A (cols x cols, row-major, symmetric).
    pub fn gram(&self) -> DenseMatrix {
        let k = self.cols;
        let mut data = vec![0.0; k * k];
        for i in 0..self.rows {
            let row = self.row(i);
            for s in 0..k {
                let ris = row[s];
                if ris != 0.0 {
                    for t in s..k {
                        data[s * k + t] += ris * row[t];
                    }
                }
            }
        }
        for s in 0..k {
            for t in 0..s {
                data[s * k + t] = data[t * k + s];
            }
        }
        DenseMatrix {
            rows: k,
            cols: k,
            data,
        }
    }
}

/// Composite objective F = f + g with smooth f (L-Lipschitz gradient) and
/// proximable g.
pub trait CompositeProblem {
    fn dim(&self) -> usize;
    fn eval_f(&self, x: &[f64]) -> f64;
    fn grad_f(&self, x: &[f64]) -> Vec<f64>;
    /// Upper bound on the gradient Lipschitz constant of f.
    fn lipschitz(&self) -> f64;
    fn eval_g(&self, x: &[f64]) -> f64;
    fn prox_g(&self, v: &[f64], lambda: f64) -> Vec<f64>;
}

pub fn objective_value<P: CompositeProblem + ?Sized>(problem: &P, x: &[f64]) -> f64 {
    problem.eval_f(x) + problem.eval_g(x)
}

/// l1-regularized least-squares instance.
///
/// The Lipschitz bound for grad f, the top eigenvalue of A^T A, is estimated
/// once at construction and cached; see [`estimate_lipschitz`].
#[derive(Clone, Debug)]
pub struct LassoInstance {
    a: DenseMatrix,
    b: Vector,
    rho: f64,
    cached_l: f64,
}

impl LassoInstance {
    pub fn new(a: DenseMatrix, b: Vector, rho: f64) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                constraint: "rho > 0",
            });
        }
        let cached_l = estimate_lipschitz(&a)?;
        Ok(Self {
            a,
            b,
            rho,
            cached_l,
        })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn num_rows(&self) -> usize {
        self.a.rows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.cols()
    }

    /// grad f(x) = A^T (A x - b).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        for (ri, bi) in r.iter_mut().zip(self.b.iter()) {
            *ri -= bi;
        }
        self.a.matvec_t(&r)
    }

    /// F(x) = 0.5 ||A x - b||^2 + rho ||x||_1.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.eval_f(x) + self.eval_g(x)
    }
}

impl CompositeProblem for LassoInstance {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        let ax = self.a.matvec(x);
        0.5 * ax
            .iter()
            .zip(self.b.iter())
            .map(|(axi, bi)| (axi - bi) * (axi - bi))
            .sum::<f64>()
    }

    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        self.gradient(x)
    }

    fn lipschitz(&self) -> f64 {
        self.cached_l
    }

    fn eval_g(&self, x: &[f64]) -> f64 {
        self.rho * x.iter().map(|xi| xi.abs()).sum::<f64>()
    }

    fn prox_g(&self, v: &[f64], lambda: f64) -> Vec<f64> {
        crate::prox::prox_l1(v, lambda * self.rho)
    }
}

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 10_000;
/// Rayleigh quotients underestimate the top eigenvalue; this nudge makes the
/// cached constant a true upper bound without hurting step sizes.
const LIPSCHITZ_INFLATION: f64 = 1e-8;

/// Largest eigenvalue of A^T A by power iteration on v -> A^T (A v).
///
/// Stops when the residual ||A^T A v - theta v|| drops below 1e-10 * theta
/// (or after 10,000 iterations) and returns theta * (1 + 1e-8). The start
/// vector is a fixed pseudo-random draw, so results are reproducible.
pub fn estimate_lipschitz(a: &DenseMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::DegenerateMatrix);
    }
    let n = a.cols();
    let mut rng = SplitMix64::new(0x4c69_7073_6368_6974);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
    let vn = norm2(&v);
    for vi in v.iter_mut() {
        *vi /= vn;
    }
    let mut theta = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = a.matvec_t(&a.matvec(&v));
        theta = dot(&v, &w);
        if theta <= 0.0 {
            return Err(Error::DegenerateMatrix);
        }
        let resid_sq: f64 = w
            .iter()
            .zip(v.iter())
            .map(|(wi, vi)| (wi - theta * vi) * (wi - theta * vi))
            .sum();
        if resid_sq.sqrt() <= POWER_ITER_TOL * theta {
            break;
        }
        let wn = norm2(&w);
        if wn == 0.0 {
            return Err(Error::DegenerateMatrix);
        }
        v = w;
        for vi in v.iter_mut() {
            *vi /= wn;
        }
    }
    if theta <= 0.0 {
        return Err(Error::DegenerateMatrix);
    }
    Ok(theta * (1.0 + LIPSCHITZ_INFLATION))
}

/// Worst-coordinate central-difference error of grad f at x.
///
/// Only the smooth part is probed, so any step h small against the local
/// curvature scale works; 1e-6 is a good default for O(1) data.
pub fn gradient_finite_difference_check<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "h > 0",
        });
    }
    let grad = problem.grad_f(x);
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = problem.eval_f(&xp);
        xp[i] = xi - h;
        let fm = problem.eval_f(&xp);
        xp[i] = xi;
        worst = worst.max(((fp - fm) / (2.0 * h) - grad[i]).abs());
    }
    Ok(worst)
}
