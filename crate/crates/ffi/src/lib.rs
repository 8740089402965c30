//! C ABI for the layoutedit engine.
//!
//! Designs and graphs are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an [`LeStatus`];
//! on failure, [`le_last_error_message`] describes the error for the calling
//! thread. Strings returned through `char **out` belong to the caller and
//! must be released with [`le_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use layoutedit::{
    alignment, build_relation_graph, emit_design, overlap, parse_design, parse_operation, relation_satisfaction,
    remove_node_edges, seeded_rng, serialize_content_sequence, serialize_graph, solve, Design, DesignError, Element,
    GraphError, OpError, RelationGraph, SolverConfig, SolverError,
};

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    UnknownTarget = 5,
    GrammarError = 6,
    GraphError = 7,
    SolverError = 8,
    Panic = 99,
}

/// Center-based element geometry.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeGeometry {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

/// Opaque design handle.
pub struct LeDesign {
    inner: Design,
}

/// Opaque relation graph handle.
pub struct LeGraph {
    inner: RelationGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(LeStatus, String);

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        let code = match e {
            DesignError::Parse { .. } => LeStatus::ParseError,
            DesignError::UnknownElement(_) => LeStatus::UnknownTarget,
            _ => LeStatus::ValidationError,
        };
        Failure(code, e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::UnknownNode(_) => LeStatus::UnknownTarget,
            _ => LeStatus::GraphError,
        };
        Failure(code, e.to_string())
    }
}

impl From<OpError> for Failure {
    fn from(e: OpError) -> Self {
        let code = match e {
            OpError::Grammar { .. } => LeStatus::GrammarError,
            OpError::UnknownTarget { .. } => LeStatus::UnknownTarget,
            _ => LeStatus::ValidationError,
        };
        Failure(code, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Op(op) => op.into(),
            SolverError::Design(d) => d.into(),
            other => Failure(LeStatus::SolverError, other.to_string()),
        }
    }
}

/// Run `f`, translating errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LeStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            LeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LeStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(LeStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(LeStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(LeStatus::NullPointer, format!("{name} is null")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn le_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn le_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn le_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a design document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_design_parse(json: *const c_char, out: *mut *mut LeDesign) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let d = parse_design(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(LeDesign { inner: d }));
        Ok(())
    })
}

/// # Safety
/// `d` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn le_design_free(d: *mut LeDesign) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Canonical design document.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_design_to_json(d: *const LeDesign, out: *mut *mut c_char) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = to_c_string(emit_design(&ref_arg(d, "design")?.inner));
        Ok(())
    })
}

/// The `ELEMENT CONTENT: [...]` line.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_design_content_sequence(d: *const LeDesign, out: *mut *mut c_char) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = to_c_string(serialize_content_sequence(&ref_arg(d, "design")?.inner));
        Ok(())
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_design_element_count(d: *const LeDesign, out: *mut usize) -> LeStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(d, "design")?.inner.len();
        Ok(())
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_design_element_geometry(d: *const LeDesign, id: usize, out: *mut LeGeometry) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = ref_arg(d, "design")?.inner.geometry(id)?;
        *out = LeGeometry {
            x: g.cx,
            y: g.cy,
            width: g.w,
            height: g.h,
        };
        Ok(())
    })
}

/// Build the relation graph with size tolerance `alpha`; `seed` fixes edge
/// directions.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_graph_build(d: *const LeDesign, alpha: f64, seed: u64, out: *mut *mut LeGraph) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let g = build_relation_graph(&ref_arg(d, "design")?.inner, alpha, &mut seeded_rng(seed))?;
        *out = Box::into_raw(Box::new(LeGraph { inner: g }));
        Ok(())
    })
}

/// New graph without the edges incident to element `target`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_graph_remove_node(g: *const LeGraph, target: usize, out: *mut *mut LeGraph) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let pruned = remove_node_edges(&ref_arg(g, "graph")?.inner, target)?;
        *out = Box::into_raw(Box::new(LeGraph { inner: pruned }));
        Ok(())
    })
}

/// The `SIZE RELATIONSHIP` and `POSITION RELATIONSHIP` lines.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_graph_serialize(g: *const LeGraph, out: *mut *mut c_char) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = to_c_string(serialize_graph(&ref_arg(g, "graph")?.inner));
        Ok(())
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_graph_edge_count(g: *const LeGraph, out: *mut usize) -> LeStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(g, "graph")?.inner.edges().len();
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn le_graph_free(g: *mut LeGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Parse an operation string and print it in canonical form.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_operation_canonicalize(text: *const c_char, out: *mut *mut c_char) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let op = parse_operation(str_arg(text, "text")?)?;
        *out = to_c_string(op.to_string());
        Ok(())
    })
}

/// Apply `op` to `d` with the repair solver, keeping the relations of `g`
/// (a graph pruned at the target, ids as in `d` with any added element in
/// place). `added_json` is the element document for an add, else NULL.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn le_edit_solve(
    d: *const LeDesign,
    g: *const LeGraph,
    op: *const c_char,
    added_json: *const c_char,
    seed: u64,
    out: *mut *mut LeDesign,
) -> LeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let design = &ref_arg(d, "design")?.inner;
        let graph = &ref_arg(g, "graph")?.inner;
        let op = parse_operation(str_arg(op, "op")?)?;
        let added: Option<Element> = if added_json.is_null() {
            None
        } else {
            let raw = str_arg(added_json, "added_json")?;
            Some(serde_json_element(raw)?)
        };
        let cfg = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        let sol = solve(design, graph, &op, added.as_ref(), &cfg)?;
        *out = Box::into_raw(Box::new(LeDesign { inner: sol.design }));
        Ok(())
    })
}

fn serde_json_element(raw: &str) -> Result<Element, Failure> {
    // Reuse document parsing so element errors carry the same messages.
    let doc = format!("{{\"canvas\": {{\"width\": 1, \"height\": 1}}, \"elements\": [{raw}]}}");
    let d = parse_design(&doc)?;
    Ok(d.elements()[0].clone())
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_metrics_overlap(d: *const LeDesign, out: *mut f64) -> LeStatus {
    guard(|| {
        *out_arg(out, "out")? = overlap(&ref_arg(d, "design")?.inner);
        Ok(())
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn le_metrics_alignment(d: *const LeDesign, out: *mut f64) -> LeStatus {
    guard(|| {
        *out_arg(out, "out")? = alignment(&ref_arg(d, "design")?.inner);
        Ok(())
    })
}

/// Share of size and position edges of `g` still holding in `d`. A kind
/// with no edges reports NaN.
///
/// # Safety
/// Handles must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn le_relation_satisfaction(
    g: *const LeGraph,
    d: *const LeDesign,
    alpha: f64,
    size_rel: *mut f64,
    pos_rel: *mut f64,
) -> LeStatus {
    guard(|| {
        let size_out = out_arg(size_rel, "size_rel")?;
        let pos_out = out_arg(pos_rel, "pos_rel")?;
        let s = relation_satisfaction(&ref_arg(g, "graph")?.inner, &ref_arg(d, "design")?.inner, alpha)
            .map_err(|e| Failure(LeStatus::UnknownTarget, e.to_string()))?;
        *size_out = s.size_rel().unwrap_or(f64::NAN);
        *pos_out = s.pos_rel().unwrap_or(f64::NAN);
        Ok(())
    })
}
