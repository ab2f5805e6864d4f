//! C ABI over the geo-mapf planner.
//!
//! Every fallible call returns a [`GmStatus`]. On failure a message is kept
//! per thread and read with [`gm_last_error_message`]. Handles are opaque
//! and must be released with their `_free` function. Vertex ids cross the
//! boundary as `uint64_t`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use geo_mapf::bridge::{PhiClient, DEFAULT_REQUEST_TIMEOUT};
use geo_mapf::envgen::{generate_instance, InstanceSpec, WorldSpec};
use geo_mapf::geometry::AgentRadius;
use geo_mapf::highlevel::{
    cbs_solve, focal_solve, validate_solution, ConflictCountPsi, DepthPhiPsi, SolveError, SolveOptions, Solved,
};
use geo_mapf::instance::{read_instance, write_instance, Instance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Generate = 5,
    Timeout = 6,
    NoSolution = 7,
    Heuristic = 8,
    OutOfRange = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmWorld {
    Maze = 0,
    Box = 1,
}

/// Opaque instance handle.
pub struct GmInstance {
    inner: Instance,
}

/// Opaque solution handle.
pub struct GmSolution {
    paths: Vec<Vec<u64>>,
    flowtime: u64,
    expansions: u64,
    generated: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: GmStatus, msg: impl Into<String>) -> GmStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into [`GmStatus::Panic`].
fn guard(f: impl FnOnce() -> GmStatus) -> GmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(GmStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, GmStatus> {
    if p.is_null() {
        return Err(fail(GmStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(GmStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn timeout_arg(secs: f64) -> Result<Option<Duration>, GmStatus> {
    if secs <= 0.0 {
        return Ok(None);
    }
    Duration::try_from_secs_f64(secs)
        .map(Some)
        .map_err(|e| fail(GmStatus::InvalidArgument, format!("bad timeout {secs}: {e}")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message left by the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn gm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_read(path: *const c_char, out: *mut *mut GmInstance) -> GmStatus {
    guard(|| {
        if out.is_null() {
            return fail(GmStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let path = tri!(str_arg(path, "path"));
        match read_instance(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GmInstance { inner }));
                GmStatus::Ok
            }
            Err(geo_mapf::instance::InstanceError::Io(e)) => fail(GmStatus::Io, format!("{path}: {e}")),
            Err(e) => fail(GmStatus::Parse, format!("{path}: {e}")),
        }
    })
}

/// Writes an instance file.
///
/// # Safety
/// `inst` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_write(inst: *const GmInstance, path: *const c_char) -> GmStatus {
    guard(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(GmStatus::NullArgument, "inst is null");
        };
        let path = tri!(str_arg(path, "path"));
        match write_instance(&inst.inner, path) {
            Ok(()) => GmStatus::Ok,
            Err(e) => fail(GmStatus::Io, format!("{path}: {e}")),
        }
    })
}

/// Generates an instance. `size` is the box count for box worlds and the
/// cells per side for mazes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_generate(
    world: GmWorld,
    size: usize,
    vertices: usize,
    k: usize,
    agents: usize,
    radius: f64,
    seed: u64,
    out: *mut *mut GmInstance,
) -> GmStatus {
    guard(|| {
        if out.is_null() {
            return fail(GmStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(radius) = AgentRadius::new(radius) else {
            return fail(GmStatus::InvalidArgument, "radius must be positive and finite");
        };
        let world = match world {
            GmWorld::Maze => WorldSpec::maze(size, seed),
            GmWorld::Box => WorldSpec::boxes(size, seed),
        };
        let spec = InstanceSpec {
            world,
            vertices,
            k,
            agents,
            radius,
        };
        match generate_instance(&spec) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GmInstance { inner }));
                GmStatus::Ok
            }
            Err(e) => fail(GmStatus::Generate, e.to_string()),
        }
    })
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_num_agents(inst: *const GmInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.num_agents())
}

/// Number of roadmap vertices, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_num_vertices(inst: *const GmInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.roadmap.num_vertices())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_instance_free(inst: *mut GmInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

fn finish(result: Result<Solved, SolveError>, out: *mut *mut GmSolution) -> GmStatus {
    match result {
        Ok(s) => {
            let sol = GmSolution {
                paths: s
                    .solution
                    .iter()
                    .map(|p| p.vertices().iter().map(|&v| v as u64).collect())
                    .collect(),
                flowtime: s.flowtime as u64,
                expansions: s.stats.expansions,
                generated: s.stats.generated,
            };
            // SAFETY: callers checked `out` for null
            unsafe { *out = Box::into_raw(Box::new(sol)) };
            GmStatus::Ok
        }
        Err(e @ SolveError::Timeout(_)) => fail(GmStatus::Timeout, e.to_string()),
        Err(e @ (SolveError::NoSolution(_) | SolveError::RootInfeasible { .. })) => {
            fail(GmStatus::NoSolution, e.to_string())
        }
        Err(e @ SolveError::Heuristic(_)) => fail(GmStatus::Heuristic, e.to_string()),
        Err(e @ SolveError::BadFactor(_)) => fail(GmStatus::InvalidArgument, e.to_string()),
    }
}

unsafe fn solve_prelude<'a>(
    inst: *const GmInstance,
    timeout_s: f64,
    out: *mut *mut GmSolution,
) -> Result<(&'a Instance, SolveOptions), GmStatus> {
    if out.is_null() {
        return Err(fail(GmStatus::NullArgument, "out is null"));
    }
    *out = ptr::null_mut();
    let Some(inst) = inst.as_ref() else {
        return Err(fail(GmStatus::NullArgument, "inst is null"));
    };
    let opts = SolveOptions {
        timeout: timeout_arg(timeout_s)?,
        ..SolveOptions::default()
    };
    Ok((&inst.inner, opts))
}

/// Optimal CBS. `timeout_s <= 0` means no limit.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_solve_cbs(inst: *const GmInstance, timeout_s: f64, out: *mut *mut GmSolution) -> GmStatus {
    guard(|| {
        let (inst, opts) = tri!(solve_prelude(inst, timeout_s, out));
        finish(cbs_solve(inst, &opts), out)
    })
}

/// Focal CBS ordered by conflict count. `w` may be `INFINITY`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_solve_focal(
    inst: *const GmInstance,
    w: f64,
    timeout_s: f64,
    out: *mut *mut GmSolution,
) -> GmStatus {
    guard(|| {
        let (inst, opts) = tri!(solve_prelude(inst, timeout_s, out));
        finish(focal_solve(inst, w, &mut ConflictCountPsi, &opts), out)
    })
}

/// Focal CBS ordered by depth, then φ from the evaluator at `endpoint`
/// (`host:port`, `unix:/path` or `exec:command`).
///
/// # Safety
/// `inst` must be a live handle, `endpoint` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm_solve_focal_phi(
    inst: *const GmInstance,
    w: f64,
    timeout_s: f64,
    endpoint: *const c_char,
    out: *mut *mut GmSolution,
) -> GmStatus {
    guard(|| {
        let (inst, opts) = tri!(solve_prelude(inst, timeout_s, out));
        let endpoint = tri!(str_arg(endpoint, "endpoint"));
        let client = match PhiClient::connect(endpoint, DEFAULT_REQUEST_TIMEOUT) {
            Ok(c) => c,
            Err(e) => return fail(GmStatus::Heuristic, format!("{endpoint}: {e}")),
        };
        let mut psi = DepthPhiPsi::new(client);
        finish(focal_solve(inst, w, &mut psi, &opts), out)
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_flowtime(sol: *const GmSolution) -> u64 {
    sol.as_ref().map_or(0, |s| s.flowtime)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_expansions(sol: *const GmSolution) -> u64 {
    sol.as_ref().map_or(0, |s| s.expansions)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_generated(sol: *const GmSolution) -> u64 {
    sol.as_ref().map_or(0, |s| s.generated)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_num_agents(sol: *const GmSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.paths.len())
}

/// Number of vertices in `agent`'s path, or 0 if out of range.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_path_len(sol: *const GmSolution, agent: usize) -> usize {
    sol.as_ref().and_then(|s| s.paths.get(agent)).map_or(0, Vec::len)
}

/// Copies `agent`'s path into `buf` (capacity `cap`). `written` receives
/// the path length even when the buffer is too small.
///
/// # Safety
/// `sol` must be a live handle, `buf` valid for `cap` writes, `written`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_path(
    sol: *const GmSolution,
    agent: usize,
    buf: *mut u64,
    cap: usize,
    written: *mut usize,
) -> GmStatus {
    guard(|| {
        let Some(sol) = sol.as_ref() else {
            return fail(GmStatus::NullArgument, "sol is null");
        };
        if written.is_null() {
            return fail(GmStatus::NullArgument, "written is null");
        }
        let Some(path) = sol.paths.get(agent) else {
            return fail(GmStatus::OutOfRange, format!("agent {agent} of {}", sol.paths.len()));
        };
        *written = path.len();
        if cap < path.len() {
            return fail(GmStatus::BufferTooSmall, format!("need {} slots, have {cap}", path.len()));
        }
        if buf.is_null() {
            return fail(GmStatus::NullArgument, "buf is null");
        }
        ptr::copy_nonoverlapping(path.as_ptr(), buf, path.len());
        GmStatus::Ok
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_solution_free(sol: *mut GmSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Re-checks `sol` against `inst`; `violations` receives the count. The
/// first violation, if any, becomes the last error message.
///
/// # Safety
/// Both handles must be live; `violations` writable.
#[no_mangle]
pub unsafe extern "C" fn gm_validate(
    inst: *const GmInstance,
    sol: *const GmSolution,
    violations: *mut usize,
) -> GmStatus {
    guard(|| {
        let (Some(inst), Some(sol)) = (inst.as_ref(), sol.as_ref()) else {
            return fail(GmStatus::NullArgument, "inst or sol is null");
        };
        if violations.is_null() {
            return fail(GmStatus::NullArgument, "violations is null");
        }
        let n = inst.inner.roadmap.num_vertices();
        let mut paths = Vec::with_capacity(sol.paths.len());
        for p in &sol.paths {
            // ids that do not fit are mapped past the roadmap so they are reported
            paths.push(p.iter().map(|&v| usize::try_from(v).unwrap_or(n)).collect::<Vec<usize>>());
        }
        let v = validate_solution(&inst.inner, &paths);
        *violations = v.len();
        if let Some(first) = v.first() {
            set_error(first.to_string());
        }
        GmStatus::Ok
    })
}
