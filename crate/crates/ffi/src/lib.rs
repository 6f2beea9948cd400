//! C interface to the `fhbvm` solver.
//!
//! Every function returns an [`FhbvmStatus`]; on failure the message is kept
//! per thread and read back with [`fhbvm_last_error`]. Problems and
//! trajectories are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use fhbvm::mesh::{build_mesh, Mesh};
use fhbvm::mop::{build_quadrature, MopError};
use fhbvm::problem::{registry, FdeProblem, VectorField};
use fhbvm::solver::{mescd, solve, IterationMode, SolverConfig, SolverError, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FhbvmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    QuadratureFailure = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

pub const FHBVM_MODE_AUTO: u32 = 0;
pub const FHBVM_MODE_FIXED_POINT: u32 = 1;
pub const FHBVM_MODE_BLENDED: u32 = 2;
pub const FHBVM_MODE_NEWTON: u32 = 3;

/// Solver settings. A non-positive or NaN `rho11` selects the default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FhbvmOptions {
    pub s: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub fp_max: usize,
    pub rho11: f64,
    pub mode: u32,
}

/// Right-hand side `f(t, y)` written to `out`, both of length `m`.
/// A non-zero return marks the evaluation as failed.
pub type FhbvmField =
    Option<unsafe extern "C" fn(t: f64, y: *const f64, out: *mut f64, m: usize, user_data: *mut c_void) -> c_int>;

/// Row-major Jacobian `∂f/∂y` written to `jac` (length `m*m`).
pub type FhbvmJacobian =
    Option<unsafe extern "C" fn(t: f64, y: *const f64, jac: *mut f64, m: usize, user_data: *mut c_void) -> c_int>;

pub struct FhbvmProblem {
    inner: FdeProblem,
}

pub struct FhbvmTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

struct Failure(FhbvmStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(FhbvmStatus::InvalidArgument, msg.into())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let status = match &e {
            SolverError::Config(_) | SolverError::Mesh(_) => FhbvmStatus::InvalidArgument,
            SolverError::Quadrature(MopError::Invalid(_)) => FhbvmStatus::InvalidArgument,
            SolverError::Quadrature(_) => FhbvmStatus::QuadratureFailure,
            SolverError::OutOfRange(_) => FhbvmStatus::OutOfRange,
            _ => FhbvmStatus::SolverFailure,
        };
        Failure(status, e.to_string())
    }
}

impl From<MopError> for Failure {
    fn from(e: MopError) -> Self {
        SolverError::Quadrature(e).into()
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FhbvmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FhbvmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FhbvmStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(FhbvmStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to `cap` writable values.
unsafe fn output<'a>(p: *mut f64, cap: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if cap < need {
        return Err(Failure(FhbvmStatus::BufferTooSmall, format!("{what} needs {need} entries, got {cap}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts_mut(p, need))
}

/// Message of the last failed call on this thread; valid until the next
/// failing call on the same thread. Empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn fhbvm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fhbvm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn fhbvm_options_default() -> FhbvmOptions {
    let c = SolverConfig::default();
    FhbvmOptions {
        s: c.s,
        tol_abs: c.tol_abs,
        tol_rel: c.tol_rel,
        max_iter: c.max_iter,
        fp_max: c.fp_max,
        rho11: f64::NAN,
        mode: FHBVM_MODE_AUTO,
    }
}

fn config_of(opts: &FhbvmOptions) -> Result<SolverConfig, Failure> {
    let mode = match opts.mode {
        FHBVM_MODE_AUTO => IterationMode::Auto,
        FHBVM_MODE_FIXED_POINT => IterationMode::FixedPoint,
        FHBVM_MODE_BLENDED => IterationMode::Blended,
        FHBVM_MODE_NEWTON => IterationMode::Newton,
        other => return Err(Failure::invalid(format!("unknown iteration mode {other}"))),
    };
    Ok(SolverConfig {
        s: opts.s,
        tol_abs: opts.tol_abs,
        tol_rel: opts.tol_rel,
        max_iter: opts.max_iter,
        fp_max: opts.fp_max,
        rho11: (opts.rho11 > 0.0).then_some(opts.rho11),
        mode,
    })
}

/// Built-in test problem by name (`p1` … `p6`, `p5a`, `p5b`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_problem_builtin(name: *const c_char, out: *mut *mut FhbvmProblem) -> FhbvmStatus {
    guard(|| {
        non_null(name, "name")?;
        non_null(out, "out")?;
        let name = CStr::from_ptr(name).to_str().map_err(|_| Failure::invalid("name is not UTF-8"))?;
        let inner = registry(name).map_err(|e| Failure::invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(FhbvmProblem { inner }));
        Ok(())
    })
}

struct CallbackField {
    f: unsafe extern "C" fn(f64, *const f64, *mut f64, usize, *mut c_void) -> c_int,
    jac: FhbvmJacobian,
    user_data: *mut c_void,
}

// The caller promises that the callbacks and `user_data` may be used from
// any thread.
unsafe impl Send for CallbackField {}
unsafe impl Sync for CallbackField {}

impl VectorField for CallbackField {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let rc = unsafe { (self.f)(t, y.as_ptr(), out.as_mut_ptr(), y.len(), self.user_data) };
        if rc != 0 {
            out.fill(f64::NAN);
        }
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut [f64]) -> bool {
        match self.jac {
            Some(j) => {
                let rc = unsafe { j(t, y.as_ptr(), jac.as_mut_ptr(), y.len(), self.user_data) };
                if rc != 0 {
                    jac.fill(f64::NAN);
                }
                true
            }
            None => false,
        }
    }
}

/// Problem `D^{α_e} y_e = f_e(t, y)` on `[0, t_final]` with `m` equations.
/// `initial` holds `ℓ·m` values, row `ι` being the `ι`-th derivatives at 0,
/// where `ℓ = ⌈α⌉` is shared by all orders. `jacobian` may be null, in which
/// case finite differences are used.
///
/// # Safety
/// `orders` must hold `m` values and `initial` `ell*m`; the callbacks must be
/// safe to call from any thread with `user_data` for the handle's lifetime.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_problem_new(
    m: usize,
    orders: *const f64,
    ell: usize,
    initial: *const f64,
    t_final: f64,
    field: FhbvmField,
    jacobian: FhbvmJacobian,
    user_data: *mut c_void,
    out: *mut *mut FhbvmProblem,
) -> FhbvmStatus {
    guard(|| {
        non_null(out, "out")?;
        let f = field.ok_or_else(|| Failure(FhbvmStatus::NullPointer, "field is null".into()))?;
        if m == 0 || ell == 0 {
            return Err(Failure::invalid("m and ell must be positive"));
        }
        let orders = input(orders, m, "orders")?;
        let init = input(initial, ell * m, "initial")?;
        let rows: Vec<Vec<f64>> = init.chunks(m).map(<[f64]>::to_vec).collect();
        let cb = Arc::new(CallbackField { f, jac: jacobian, user_data });
        let inner = FdeProblem::new("user", orders, rows, t_final, cb).map_err(|e| Failure::invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(FhbvmProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_problem_free(problem: *mut FhbvmProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle and `m` writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_problem_dim(problem: *const FhbvmProblem, m: *mut usize) -> FhbvmStatus {
    guard(|| {
        non_null(problem, "problem")?;
        non_null(m, "m")?;
        *m = (*problem).inner.dim();
        Ok(())
    })
}

/// Replaces the final time; drops any built-in endpoint reference.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_problem_set_t_final(problem: *mut FhbvmProblem, t_final: f64) -> FhbvmStatus {
    guard(|| {
        non_null(problem, "problem")?;
        let p = &mut (*problem).inner;
        *p = p.clone().with_t_final(t_final).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

unsafe fn run(
    problem: *const FhbvmProblem,
    mesh: impl FnOnce(f64) -> Result<Mesh, Failure>,
    opts: *const FhbvmOptions,
    out: *mut *mut FhbvmTrajectory,
) -> FhbvmStatus {
    guard(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let opts = if opts.is_null() { fhbvm_options_default() } else { *opts };
        let config = config_of(&opts)?;
        let p = &(*problem).inner;
        let mesh = mesh(p.t_final())?;
        match solve(p, &mesh, &config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FhbvmTrajectory { inner }));
                Ok(())
            }
            Err(failure) => {
                if let Some(partial) = failure.partial {
                    *out = Box::into_raw(Box::new(FhbvmTrajectory { inner: *partial }));
                }
                Err(failure.error.into())
            }
        }
    })
}

/// Solves on a mesh of `n_total` steps whose first `mu` are graded.
/// On a solver failure the completed steps are still returned in `out`.
/// `opts` may be null for defaults.
///
/// # Safety
/// `problem` must be a live handle, `opts` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_solve(
    problem: *const FhbvmProblem,
    n_total: usize,
    mu: usize,
    rho: usize,
    opts: *const FhbvmOptions,
    out: *mut *mut FhbvmTrajectory,
) -> FhbvmStatus {
    let mesh = |t| build_mesh(t, n_total, mu, rho).map_err(|e| Failure::invalid(e.to_string()));
    run(problem, mesh, opts, out)
}

/// As [`fhbvm_solve`] with the uniform step `T/divisor`, so that the mesh has
/// `divisor + mu - rho` steps.
///
/// # Safety
/// See [`fhbvm_solve`].
#[no_mangle]
pub unsafe extern "C" fn fhbvm_solve_divisor(
    problem: *const FhbvmProblem,
    divisor: usize,
    mu: usize,
    rho: usize,
    opts: *const FhbvmOptions,
    out: *mut *mut FhbvmTrajectory,
) -> FhbvmStatus {
    let mesh = |t| Mesh::from_divisor(t, divisor, mu, rho).map_err(|e| Failure::invalid(e.to_string()));
    run(problem, mesh, opts, out)
}

/// # Safety
/// `traj` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_free(traj: *mut FhbvmTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored points (completed steps plus one) and components.
///
/// # Safety
/// `traj` must be a live handle; `points` and `m` writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_shape(
    traj: *const FhbvmTrajectory,
    points: *mut usize,
    m: *mut usize,
) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        non_null(points, "points")?;
        non_null(m, "m")?;
        *points = (*traj).inner.values.len();
        *m = (*traj).inner.problem.dim();
        Ok(())
    })
}

/// Copies the mesh points reached into `times` (capacity `cap`).
///
/// # Safety
/// `traj` must be a live handle and `times` hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_times(traj: *const FhbvmTrajectory, times: *mut f64, cap: usize) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        let t = (*traj).inner.times();
        output(times, cap, t.len(), "times")?.copy_from_slice(t);
        Ok(())
    })
}

/// Copies the solution values, row-major (one row per point).
///
/// # Safety
/// `traj` must be a live handle and `values` hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_values(traj: *const FhbvmTrajectory, values: *mut f64, cap: usize) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        let tr = &(*traj).inner;
        let m = tr.problem.dim();
        let dst = output(values, cap, m * tr.values.len(), "values")?;
        for (row, y) in dst.chunks_mut(m).zip(&tr.values) {
            row.copy_from_slice(y);
        }
        Ok(())
    })
}

/// Dense output at `t` within the computed range.
///
/// # Safety
/// `traj` must be a live handle and `y` hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_eval(traj: *const FhbvmTrajectory, t: f64, y: *mut f64, cap: usize) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        let tr = &(*traj).inner;
        let dst = output(y, cap, tr.problem.dim(), "y")?;
        dst.copy_from_slice(&tr.dense_eval(t)?);
        Ok(())
    })
}

/// Iteration totals over all steps.
///
/// # Safety
/// `traj` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_iterations(
    traj: *const FhbvmTrajectory,
    fixed_point: *mut usize,
    fallback: *mut usize,
) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        non_null(fixed_point, "fixed_point")?;
        non_null(fallback, "fallback")?;
        *fixed_point = (*traj).inner.fixed_point_iterations();
        *fallback = (*traj).inner.fallback_iterations();
        Ok(())
    })
}

/// mescd against the problem's exact solution at the mesh points.
///
/// # Safety
/// `traj` must be a live handle and `digits` writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_trajectory_exact_mescd(traj: *const FhbvmTrajectory, digits: *mut f64) -> FhbvmStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        non_null(digits, "digits")?;
        let tr = &(*traj).inner;
        if !tr.problem.has_exact() {
            return Err(Failure::invalid(format!("problem {} has no exact solution", tr.problem.name())));
        }
        let exact: Vec<Vec<f64>> = tr.times().iter().map(|&t| tr.problem.exact(t).expect("exact")).collect();
        *digits = mescd(&tr.values, &exact);
        Ok(())
    })
}

/// mescd of `computed` against `reference`, both `rows × cols` row-major.
///
/// # Safety
/// Both arrays must hold `rows*cols` values and `digits` be writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_mescd(
    computed: *const f64,
    reference: *const f64,
    rows: usize,
    cols: usize,
    digits: *mut f64,
) -> FhbvmStatus {
    guard(|| {
        non_null(digits, "digits")?;
        if cols == 0 {
            return Err(Failure::invalid("cols must be positive"));
        }
        let a = input(computed, rows * cols, "computed")?;
        let b = input(reference, rows * cols, "reference")?;
        let split = |v: &[f64]| v.chunks(cols).map(<[f64]>::to_vec).collect::<Vec<_>>();
        *digits = mescd(&split(a), &split(b));
        Ok(())
    })
}

/// Number of shared abscissae `k` for the given orders and `s`.
///
/// # Safety
/// `alphas` must hold `nu` values and `k` be writable.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_quadrature_size(alphas: *const f64, nu: usize, s: usize, k: *mut usize) -> FhbvmStatus {
    guard(|| {
        non_null(k, "k")?;
        let q = build_quadrature(input(alphas, nu, "alphas")?, s)?;
        *k = q.k;
        Ok(())
    })
}

/// Shared abscissae (`k` values) and weights (`nu × k`, one row per order).
///
/// # Safety
/// `alphas` must hold `nu` values; `nodes` and `weights` hold `cap_nodes`
/// and `cap_weights` writable values.
#[no_mangle]
pub unsafe extern "C" fn fhbvm_quadrature(
    alphas: *const f64,
    nu: usize,
    s: usize,
    nodes: *mut f64,
    cap_nodes: usize,
    weights: *mut f64,
    cap_weights: usize,
) -> FhbvmStatus {
    guard(|| {
        let q = build_quadrature(input(alphas, nu, "alphas")?, s)?;
        output(nodes, cap_nodes, q.k, "nodes")?.copy_from_slice(&q.abscissae);
        let dst = output(weights, cap_weights, q.k * q.nu(), "weights")?;
        for (row, w) in dst.chunks_mut(q.k).zip(&q.weights) {
            row.copy_from_slice(w);
        }
        Ok(())
    })
}
