//! C ABI over `kuramoto-core`.
//!
//! Graphs are opaque handles created by `kura_graph_from_*` and released with
//! `kura_graph_free`. Every fallible call returns a `KuraStatus`; on failure
//! the message is available from `kura_last_error_message` on the same thread.
//! Strings returned by the library must be released with `kura_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kuramoto_core::dynamics::{self, Direction, IntegrationOptions};
use kuramoto_core::equilibria::catalog_for;
use kuramoto_core::heteroclinic::{self, ProbeOptions};
use kuramoto_core::spectral::{self, ZeroTol};
use kuramoto_core::{generate, Configuration, Error, Graph, GraphFamily};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KuraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InvalidGraph = 4,
    LengthMismatch = 5,
    NotEquilibrium = 6,
    Numerical = 7,
    Unsupported = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Integration direction for `kura_integrate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KuraDirection {
    Forward = 0,
    Reversed = 1,
}

/// Opaque graph handle.
pub struct KuraGraph {
    graph: Graph,
    family: Option<GraphFamily>,
}

/// Spectrum summary filled by `kura_spectrum`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KuraSpectrum {
    pub zero_count: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    /// Largest eigenvalue outside the zero band; NaN if there is none.
    pub largest_nonzero: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KuraStatus {
    match e {
        Error::Parse { .. } => KuraStatus::Parse,
        Error::LengthMismatch { .. } => KuraStatus::LengthMismatch,
        Error::VertexOutOfRange { .. } | Error::SelfLoop(_) | Error::DuplicateEdge(..) => KuraStatus::InvalidGraph,
        Error::NotEquilibrium(_) => KuraStatus::NotEquilibrium,
        Error::Diverged(_) | Error::NoZeroEigenvalue | Error::Asymmetric(_) | Error::NonFinite => {
            KuraStatus::Numerical
        }
        Error::Unsupported(_) | Error::TooLarge { .. } => KuraStatus::Unsupported,
        _ => KuraStatus::InvalidArgument,
    }
}

fn guard<F>(f: F) -> KuraStatus
where
    F: FnOnce() -> Result<(), (KuraStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KuraStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KuraStatus::Panic
        }
    }
}

fn core<T>(r: kuramoto_core::Result<T>) -> Result<T, (KuraStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KuraStatus, String) {
    (KuraStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (KuraStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (KuraStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn graph_arg<'a>(g: *const KuraGraph) -> Result<&'a KuraGraph, (KuraStatus, String)> {
    g.as_ref().ok_or_else(|| null("graph"))
}

unsafe fn phases_arg(g: &KuraGraph, phases: *const f64, len: usize) -> Result<Configuration, (KuraStatus, String)> {
    if phases.is_null() {
        return Err(null("phases"));
    }
    let n = g.graph.vertex_count();
    if len != n {
        return Err((KuraStatus::LengthMismatch, format!("expected {n} phases, got {len}")));
    }
    core(Configuration::new(std::slice::from_raw_parts(phases, len).to_vec()))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], (KuraStatus, String)> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err((KuraStatus::BufferTooSmall, format!("output buffer holds {len}, need {need}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn store_graph(out: *mut *mut KuraGraph, g: KuraGraph) -> Result<(), (KuraStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(g));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kura_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kura_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a graph from a family string such as `"eye:2"` or `"complete:4"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kura_graph_from_family(spec: *const c_char, out: *mut *mut KuraGraph) -> KuraStatus {
    guard(|| {
        let family: GraphFamily = core(str_arg(spec, "spec")?.parse())?;
        let graph = core(generate(&family))?;
        store_graph(out, KuraGraph { graph, family: Some(family) })
    })
}

/// Builds a graph from edge-list text: the vertex count on the first line,
/// then one `u v` pair per line.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kura_graph_from_edge_list(text: *const c_char, out: *mut *mut KuraGraph) -> KuraStatus {
    guard(|| {
        let graph = core(Graph::from_edge_list(str_arg(text, "text")?))?;
        store_graph(out, KuraGraph { graph, family: None })
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `g` must come from `kura_graph_from_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kura_graph_free(g: *mut KuraGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kura_graph_vertex_count(g: *const KuraGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.vertex_count())
}

/// Number of edges, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kura_graph_edge_count(g: *const KuraGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// Writes the vector field at `phases` into `out` (`out_len >= n`).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn kura_rhs(
    g: *const KuraGraph,
    phases: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> KuraStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let c = phases_arg(g, phases, len)?;
        let f = core(dynamics::rhs(&g.graph, &c))?;
        out_slice(out, out_len, f.len())?.copy_from_slice(&f);
        Ok(())
    })
}

/// Energy at `phases`.
///
/// # Safety
/// Pointers must be valid; `phases` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn kura_energy(
    g: *const KuraGraph,
    phases: *const f64,
    len: usize,
    out: *mut f64,
) -> KuraStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let c = phases_arg(g, phases, len)?;
        let e = core(dynamics::energy(&g.graph, &c))?;
        *out.as_mut().ok_or_else(|| null("out"))? = e;
        Ok(())
    })
}

/// Jacobian eigenvalues at `phases`, ascending, into `eigenvalues`
/// (`eig_len >= n`). `zero_tol` is relative to the spectral radius; pass 0
/// for the default. `summary` may be NULL.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn kura_spectrum(
    g: *const KuraGraph,
    phases: *const f64,
    len: usize,
    zero_tol: f64,
    eigenvalues: *mut f64,
    eig_len: usize,
    summary: *mut KuraSpectrum,
) -> KuraStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let c = phases_arg(g, phases, len)?;
        let tol = if zero_tol > 0.0 { ZeroTol::Relative(zero_tol) } else { ZeroTol::default() };
        let j = core(spectral::jacobian(&g.graph, &c))?;
        let r = core(spectral::spectrum(&j, tol))?;
        out_slice(eigenvalues, eig_len, r.len())?.copy_from_slice(&r.eigenvalues);
        if let Some(s) = summary.as_mut() {
            *s = KuraSpectrum {
                zero_count: r.zero_count,
                positive_count: r.positive_count,
                negative_count: r.negative_count(),
                largest_nonzero: r.largest_nonzero().unwrap_or(f64::NAN),
            };
        }
        Ok(())
    })
}

/// Integrates from `phases` with fixed-step RK4 and writes the final state
/// into `out` (`out_len >= n`). `final_time` may be NULL.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn kura_integrate(
    g: *const KuraGraph,
    phases: *const f64,
    len: usize,
    direction: KuraDirection,
    dt: f64,
    t_end: f64,
    out: *mut f64,
    out_len: usize,
    final_time: *mut f64,
) -> KuraStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let c = phases_arg(g, phases, len)?;
        let dir = match direction {
            KuraDirection::Forward => Direction::Forward,
            KuraDirection::Reversed => Direction::Reversed,
        };
        let opts = IntegrationOptions { dt, t_end, record_stride: usize::MAX, ..IntegrationOptions::default() };
        let rec = core(dynamics::integrate_with(&g.graph, &c, dir, &opts))?;
        out_slice(out, out_len, len)?.copy_from_slice(rec.final_state().phases());
        if let Some(t) = final_time.as_mut() {
            *t = rec.final_time();
        }
        Ok(())
    })
}

/// Probes the heteroclinic digraph of a graph built from a family with a
/// known component catalog and returns it as DOT text in `*out`.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer. Release the string
/// with `kura_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kura_probe_dot(
    g: *const KuraGraph,
    seed: u64,
    trials: usize,
    out: *mut *mut c_char,
) -> KuraStatus {
    guard(|| {
        let g = graph_arg(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let comps = g
            .family
            .as_ref()
            .and_then(catalog_for)
            .ok_or_else(|| (KuraStatus::Unsupported, "no component catalog for this graph".to_string()))?;
        let opts = ProbeOptions { seed, trials, ..ProbeOptions::default() };
        let h = core(heteroclinic::probe(&g.graph, &comps, &opts))?;
        let dot = CString::new(heteroclinic::export_dot(&h)).expect("DOT text has no NUL");
        *out = dot.into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kura_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
