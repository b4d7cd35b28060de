//! C interface to the gipsa solvers.
//!
//! Conventions, which every function below follows:
//!
//! - Every fallible call returns a [`GipsaStatus`]; `GIPSA_STATUS_OK` is 0.
//!   Results travel through out-pointers, written only on success unless a
//!   function documents otherwise.
//! - On any non-zero status the calling thread's error message is updated;
//!   fetch it with [`gipsa_last_error`].
//! - Instances are opaque handles created by the `gipsa_instance_*`
//!   constructors and released with [`gipsa_instance_free`]. A handle is never
//!   mutated after construction, so one instance may be shared across threads
//!   as long as it outlives them.
//! - Strings are NUL-terminated UTF-8. Matrices are row-major.
//! - Panics never unwind across the boundary; they surface as
//!   `GIPSA_STATUS_INTERNAL`.

use std::ffi::{c_char, CStr};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use gipsa::bench::{
    generate_instance, parse_algorithm, read_instance_file, write_instance_file, GenSpec,
    InstanceMeta,
};
use gipsa::diagnostics::estimate_active_set;
use gipsa::error::Error;
use gipsa::oracle::high_accuracy_solve;
use gipsa::problem::{objective_value, CompositeProblem, DenseMatrix, LassoInstance, Vector};
use gipsa::prox::forward_backward;
use gipsa::schedules::{validate_gipsa, DEFAULT_VALIDATION_HORIZON};
use gipsa::solver::{run, run_with_restart, RunError, StopReason, StoppingRule};

/// Result of a call into this library.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GipsaStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A value argument was rejected; the error message names it.
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    Utf8 = 3,
    /// An array length did not match the instance dimensions.
    DimensionMismatch = 4,
    /// The instance matrix has no positive curvature to work with.
    Degenerate = 5,
    /// The iteration blew up numerically; diverging schedules do this.
    Diverged = 6,
    /// The computation finished but did not reach its accuracy target.
    NotConverged = 7,
    /// File could not be read or written.
    Io = 8,
    /// A bug: an internal panic was caught at the boundary.
    Internal = 9,
}

/// Why a solve stopped.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GipsaStopCause {
    /// The fixed-point residual fell below the requested tolerance.
    Residual = 0,
    /// A relative objective-gap rule fired (not used by `gipsa_solve`).
    ObjectiveGap = 1,
    /// The step budget ran out; inspect the residual before trusting x.
    IterationLimit = 2,
    /// A restarting run reached the numerical floor: repeating the step
    /// would reproduce the iterate bit for bit, so no further progress is
    /// possible at this precision.
    Stationary = 3,
}

/// Counters and final measurements of one `gipsa_solve` call.
#[repr(C)]
pub struct GipsaSolveStats {
    /// Steps taken.
    pub iterations: usize,
    /// Objective-restart events (only `fista-cd-re` produces any).
    pub restarts: usize,
    /// Objective value at the returned iterate.
    pub objective: f64,
    /// Sup-norm fixed-point residual at the returned iterate, step 1/L.
    pub fixed_point_residual: f64,
    pub stopped_on: GipsaStopCause,
}

/// Opaque problem instance: a least-squares term plus a weighted l1 term.
pub struct GipsaInstance {
    inst: LassoInstance,
    meta: InstanceMeta,
}

thread_local! {
    static LAST_ERROR: std::cell::RefCell<String> =
        const { std::cell::RefCell::new(String::new()) };
}

fn set_error(msg: impl Display) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn fail(status: GipsaStatus, msg: impl Display) -> GipsaStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> GipsaStatus {
    match e {
        Error::DimensionMismatch { .. } => GipsaStatus::DimensionMismatch,
        Error::DegenerateMatrix => GipsaStatus::Degenerate,
        Error::NumericalDivergence { .. } => GipsaStatus::Diverged,
        Error::StaleSolution { .. } => GipsaStatus::NotConverged,
        Error::Io(_) => GipsaStatus::Io,
        Error::NonFinite { .. }
        | Error::InvalidParameter { .. }
        | Error::Format(_)
        | Error::Json(_) => GipsaStatus::InvalidArgument,
    }
}

fn raise(e: &Error) -> GipsaStatus {
    fail(status_of(e), e)
}

/// Runs a body, translating panics into `GIPSA_STATUS_INTERNAL`.
fn guard(f: impl FnOnce() -> GipsaStatus) -> GipsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(GipsaStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

/// # Safety
/// `ptr` must be valid for `len` reads or the caller gets what C callers get.
unsafe fn slice_arg<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], GipsaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(
            GipsaStatus::NullPointer,
            format!("null pointer: {name}"),
        ));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, GipsaStatus> {
    if ptr.is_null() {
        return Err(fail(
            GipsaStatus::NullPointer,
            format!("null pointer: {name}"),
        ));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(GipsaStatus::Utf8, format!("{name} is not UTF-8: {e}")))
}

unsafe fn handle_arg<'a>(
    ptr: *const GipsaInstance,
    name: &str,
) -> Result<&'a GipsaInstance, GipsaStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(GipsaStatus::NullPointer, format!("null pointer: {name}")))
}

fn give_instance(
    out: *mut *mut GipsaInstance,
    inst: LassoInstance,
    meta: InstanceMeta,
) -> GipsaStatus {
    if out.is_null() {
        return fail(GipsaStatus::NullPointer, "null pointer: out");
    }
    let handle = Box::new(GipsaInstance { inst, meta });
    unsafe { *out = Box::into_raw(handle) };
    GipsaStatus::Ok
}

/// Library version as a static NUL-terminated string; never NULL.
#[no_mangle]
pub extern "C" fn gipsa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the full
/// message length in bytes, excluding the terminator. Call with `buf == NULL`
/// or `cap == 0` to size a buffer first.
///
/// # Safety
/// `buf` must be valid for `cap` writes when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn gipsa_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds an instance from caller-owned arrays: `a` is row-major `m x n`,
/// `b` has `m` entries, and `rho > 0` weights the l1 term. The arrays are
/// copied; the caller keeps ownership of its buffers and must eventually
/// release the handle with `gipsa_instance_free`.
///
/// # Safety
/// `a` and `b` must be valid for `m * n` and `m` reads.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_new(
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    rho: f64,
    out: *mut *mut GipsaInstance,
) -> GipsaStatus {
    guard(|| {
        let a = match slice_arg(a, m.saturating_mul(n), "a") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let b = match slice_arg(b, m, "b") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let matrix = match DenseMatrix::new(m, n, a.to_vec()) {
            Ok(mx) => mx,
            Err(e) => return raise(&e),
        };
        let rhs = match Vector::new(b.to_vec()) {
            Ok(v) => v,
            Err(e) => return raise(&e),
        };
        let inst = match LassoInstance::new(matrix, rhs, rho) {
            Ok(inst) => inst,
            Err(e) => return raise(&e),
        };
        let meta = InstanceMeta {
            m,
            n,
            rho,
            seed: None,
            nnz: None,
            sigma2: None,
            generator: None,
            payload: "base64".to_string(),
        };
        give_instance(out, inst, meta)
    })
}

/// Generates a random planted-signal instance. Identical parameters produce
/// identical instances on every platform.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_generate(
    n: usize,
    m: usize,
    rho: f64,
    nnz: usize,
    sigma2: f64,
    seed: u64,
    out: *mut *mut GipsaInstance,
) -> GipsaStatus {
    guard(|| {
        let spec = GenSpec {
            n,
            m,
            rho,
            nnz,
            sigma2,
            seed,
        };
        match generate_instance(&spec) {
            Ok(generated) => {
                give_instance(out, generated.instance, InstanceMeta::from_gen_spec(&spec))
            }
            Err(e) => raise(&e),
        }
    })
}

/// Reads an instance file written by `gipsa_instance_write` or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_read(
    path: *const c_char,
    out: *mut *mut GipsaInstance,
) -> GipsaStatus {
    guard(|| {
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_instance_file(Path::new(path)) {
            Ok((inst, meta)) => give_instance(out, inst, meta),
            Err(e) => raise(&e),
        }
    })
}

/// Writes the instance to `path` in the text format the CLI reads.
///
/// # Safety
/// `inst` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_write(
    inst: *const GipsaInstance,
    path: *const c_char,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_instance_file(Path::new(path), &h.inst, &h.meta) {
            Ok(()) => GipsaStatus::Ok,
            Err(e) => raise(&e),
        }
    })
}

/// Releases a handle. NULL is tolerated; anything else must have come from a
/// `gipsa_instance_*` constructor and must not be used afterwards.
///
/// # Safety
/// See above.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_free(inst: *mut GipsaInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Writes the instance shape: `rows_out` receives m, `cols_out` receives n.
///
/// # Safety
/// `inst` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_dims(
    inst: *const GipsaInstance,
    rows_out: *mut usize,
    cols_out: *mut usize,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        if rows_out.is_null() || cols_out.is_null() {
            return fail(GipsaStatus::NullPointer, "null pointer: rows_out/cols_out");
        }
        *rows_out = h.inst.num_rows();
        *cols_out = h.inst.num_cols();
        GipsaStatus::Ok
    })
}

/// Writes the l1 weight of the instance.
///
/// # Safety
/// `inst` must be a live handle; `rho_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_rho(
    inst: *const GipsaInstance,
    rho_out: *mut f64,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        if rho_out.is_null() {
            return fail(GipsaStatus::NullPointer, "null pointer: rho_out");
        }
        *rho_out = h.inst.rho();
        GipsaStatus::Ok
    })
}

/// Writes the gradient Lipschitz constant the solvers scale their steps by.
///
/// # Safety
/// `inst` must be a live handle; `l_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_instance_lipschitz(
    inst: *const GipsaInstance,
    l_out: *mut f64,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        if l_out.is_null() {
            return fail(GipsaStatus::NullPointer, "null pointer: l_out");
        }
        *l_out = h.inst.lipschitz();
        GipsaStatus::Ok
    })
}

/// Evaluates the full objective (least squares plus weighted l1) at `x`,
/// which must have exactly n entries.
///
/// # Safety
/// `inst` must be a live handle, `x` valid for `len` reads, `f_out` writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_objective(
    inst: *const GipsaInstance,
    x: *const f64,
    len: usize,
    f_out: *mut f64,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        let x = match slice_arg(x, len, "x") {
            Ok(s) => s,
            Err(status) => return status,
        };
        if f_out.is_null() {
            return fail(GipsaStatus::NullPointer, "null pointer: f_out");
        }
        if len != h.inst.num_cols() {
            return fail(
                GipsaStatus::DimensionMismatch,
                format!("x has {len} entries, instance has {}", h.inst.num_cols()),
            );
        }
        *f_out = objective_value(&h.inst, x);
        GipsaStatus::Ok
    })
}

fn stop_cause(stop: &StopReason) -> GipsaStopCause {
    match stop {
        StopReason::FixedPointResidual { .. } => GipsaStopCause::Residual,
        StopReason::RelativeObjectiveGap { .. } => GipsaStopCause::ObjectiveGap,
        StopReason::IterationLimit => GipsaStopCause::IterationLimit,
        StopReason::Stationary { .. } => GipsaStopCause::Stationary,
    }
}

/// Runs one algorithm variant on the instance.
///
/// `descriptor` picks the variant exactly as on the CLI: `"fbs"`,
/// `"ifbs:0.4"`, `"ifbs:star"`, `"gipsa:<alpha>:<beta>"`, `"fista-cd"`,
/// `"fista-cd-re"`, each optionally suffixed `@<f>` to run at step `f / L`.
/// The run starts from `x0` (NULL means the origin) and stops when the
/// sup-norm fixed-point residual falls below `tol` or after `max_iters`
/// steps, whichever is first; check `stats->stopped_on` to tell which.
/// `"ifbs:star"` tunes its momentum to the instance's active-set curvature,
/// which requires an internal high-accuracy reference solve first — expect it
/// to cost more than the run itself.
///
/// `x_out` (n entries) and `stats` each may be NULL if not wanted; both are
/// written only on success.
///
/// # Safety
/// Pointers must be valid as documented; `x_out` needs room for n values.
#[no_mangle]
pub unsafe extern "C" fn gipsa_solve(
    inst: *const GipsaInstance,
    descriptor: *const c_char,
    tol: f64,
    max_iters: usize,
    x0: *const f64,
    x_out: *mut f64,
    stats: *mut GipsaSolveStats,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        let descriptor = match str_arg(descriptor, "descriptor") {
            Ok(d) => d,
            Err(status) => return status,
        };
        if !(tol >= 0.0 && tol.is_finite()) {
            return fail(
                GipsaStatus::InvalidArgument,
                format!("tol = {tol} rejected: requires a finite value >= 0"),
            );
        }
        if max_iters == 0 {
            return fail(
                GipsaStatus::InvalidArgument,
                "max_iters = 0 rejected: requires at least one step",
            );
        }
        let n = h.inst.num_cols();
        let start = if x0.is_null() {
            vec![0.0; n]
        } else {
            match slice_arg(x0, n, "x0") {
                Ok(s) => s.to_vec(),
                Err(status) => return status,
            }
        };

        let alg = match parse_algorithm(descriptor) {
            Ok(alg) => alg,
            Err(e) => return raise(&e),
        };
        let est = if alg.requires_structure() {
            let reference = match high_accuracy_solve(&h.inst) {
                Ok(r) => r,
                Err(e) => return raise(&e),
            };
            match estimate_active_set(&h.inst, &reference.x_star, None) {
                Ok(est) => Some(est),
                Err(e) => return raise(&e),
            }
        } else {
            None
        };
        let (schedule, restart) = match alg.resolve(&h.inst, est.as_ref()) {
            Ok(pair) => pair,
            Err(e) => return raise(&e),
        };
        let rules = [
            StoppingRule::FixedPointResidual { tol },
            StoppingRule::MaxIterations { max: max_iters },
        ];
        let outcome = if restart {
            run_with_restart(&h.inst, &start, &schedule, &rules, None)
        } else {
            run(&h.inst, &start, &schedule, &rules, None)
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(RunError::Diverged {
                iteration, detail, ..
            }) => {
                return fail(
                    GipsaStatus::Diverged,
                    format!("numerical divergence at iteration {iteration}: {detail}"),
                );
            }
            Err(RunError::Config(e)) => return raise(&e),
        };

        if !x_out.is_null() {
            ptr::copy_nonoverlapping(outcome.state.x_curr.as_ptr(), x_out, n);
        }
        if !stats.is_null() {
            let fb =
                match forward_backward(&h.inst, &outcome.state.x_curr, 1.0 / h.inst.lipschitz()) {
                    Ok(fb) => fb,
                    Err(e) => return raise(&e),
                };
            let residual = outcome
                .state
                .x_curr
                .iter()
                .zip(&fb)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            *stats = GipsaSolveStats {
                iterations: outcome.records.len(),
                restarts: outcome.state.restarts,
                objective: outcome.state.last_objective,
                fixed_point_residual: residual,
                stopped_on: stop_cause(&outcome.stop),
            };
        }
        GipsaStatus::Ok
    })
}

/// Solves the instance to the numerical floor and writes the minimizer,
/// optimal value, and its fixed-point residual; each out-pointer may be NULL.
/// Returns `GIPSA_STATUS_NOT_CONVERGED` — with all outputs still written —
/// when the floor could not be certified, so callers can inspect the residual
/// and decide for themselves.
///
/// # Safety
/// `inst` must be a live handle; `x_out` needs room for n values when set.
#[no_mangle]
pub unsafe extern "C" fn gipsa_reference_solve(
    inst: *const GipsaInstance,
    x_out: *mut f64,
    f_out: *mut f64,
    residual_out: *mut f64,
) -> GipsaStatus {
    guard(|| {
        let h = match handle_arg(inst, "inst") {
            Ok(h) => h,
            Err(status) => return status,
        };
        let reference = match high_accuracy_solve(&h.inst) {
            Ok(r) => r,
            Err(e) => return raise(&e),
        };
        if !x_out.is_null() {
            ptr::copy_nonoverlapping(reference.x_star.as_ptr(), x_out, h.inst.num_cols());
        }
        if !f_out.is_null() {
            *f_out = reference.f_star;
        }
        if !residual_out.is_null() {
            *residual_out = reference.residual;
        }
        if reference.low_accuracy {
            return fail(
                GipsaStatus::NotConverged,
                format!(
                    "reference residual {:.3e} did not reach the certification floor",
                    reference.residual
                ),
            );
        }
        GipsaStatus::Ok
    })
}

/// Checks a schedule descriptor against the convergence conditions at the
/// given Lipschitz constant. `horizon` is the number of iterations swept for
/// k-dependent rules; pass 0 for the default. `valid_out` receives whether a
/// convergence guarantee covers the schedule; `margin_out` (optional)
/// receives the worst slack in the second-order coefficient condition —
/// negative means the condition fails. `"ifbs:star"` cannot be validated
/// here: its momentum depends on instance structure, not just L.
///
/// # Safety
/// `descriptor` must be a NUL-terminated string; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn gipsa_validate_schedule(
    descriptor: *const c_char,
    lipschitz: f64,
    horizon: usize,
    valid_out: *mut bool,
    margin_out: *mut f64,
) -> GipsaStatus {
    guard(|| {
        let descriptor = match str_arg(descriptor, "descriptor") {
            Ok(d) => d,
            Err(status) => return status,
        };
        if valid_out.is_null() {
            return fail(GipsaStatus::NullPointer, "null pointer: valid_out");
        }
        let alg = match parse_algorithm(descriptor) {
            Ok(alg) => alg,
            Err(e) => return raise(&e),
        };
        let (schedule, _) = match alg.resolve_with_l(lipschitz, None) {
            Ok(pair) => pair,
            Err(e) => return raise(&e),
        };
        let horizon = if horizon == 0 {
            DEFAULT_VALIDATION_HORIZON
        } else {
            horizon
        };
        let report = match validate_gipsa(&schedule, lipschitz, horizon) {
            Ok(r) => r,
            Err(e) => return raise(&e),
        };
        let lemma_covered = report
            .fista_cd_lemma
            .as_ref()
            .is_some_and(|note| note.covered);
        *valid_out = report.satisfies_global_theorem || lemma_covered;
        if !margin_out.is_null() {
            *margin_out = report.epsilon_margin;
        }
        GipsaStatus::Ok
    })
}
