//! C ABI over `causal_razors`.
//!
//! Objects cross the boundary as opaque handles (`RzDag`, `RzModel`) owned by
//! the caller and released with the matching `_free`. Every fallible call
//! returns an [`RzStatus`]; on failure the message is kept per thread and can
//! be fetched with [`rz_last_error`]. Strings handed out by the library must
//! be released with [`rz_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causal_razors::catalog;
use causal_razors::multinomial::{extract_independence_model, joint_from_model, param_count};
use causal_razors::razor::classify;
use causal_razors::{Dag, Error, IndependenceModel, MultinomialModel, RangeSpec, VertexSet};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RzStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    DimensionMismatch = 5,
    Ceiling = 6,
    NotMarkovian = 7,
    UnknownExample = 8,
    MissingRanges = 9,
    Io = 10,
    /// A check ran and reported a mismatch (e.g. a failed catalog fact).
    Mismatch = 11,
    Panic = 99,
}

/// A DAG handle.
pub struct RzDag(Dag);

/// An independence model, with ranges and theta-tables when it came from them.
pub struct RzModel {
    model: IndependenceModel,
    ranges: Option<RangeSpec>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> RzStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => RzStatus::Parse,
        Error::DimensionMismatch { .. } => RzStatus::DimensionMismatch,
        Error::Ceiling { .. } => RzStatus::Ceiling,
        Error::NotMarkovian { .. } => RzStatus::NotMarkovian,
        Error::UnknownExample { .. } => RzStatus::UnknownExample,
        Error::MissingRanges(_) => RzStatus::MissingRanges,
        Error::Io(_) => RzStatus::Io,
        _ => RzStatus::InvalidInput,
    }
}

/// Failure carried to the boundary.
struct Fail(RzStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RzStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RzStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RzStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(RzStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RzStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(RzStatus::NullArgument, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(RzStatus::NullArgument, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(RzStatus::InvalidInput, "string holds a nul byte".into()))?;
    write_out(out, c.into_raw())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn rz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Free with
/// [`rz_string_free`].
#[no_mangle]
pub extern "C" fn rz_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn rz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a DAG from the multi-line `m=<m>` / `j -> k` format or the inline
/// `m:1->2,2->3` form.
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_dag_parse(text: *const c_char, out: *mut *mut RzDag) -> RzStatus {
    guard(|| {
        let t = c_str(text, "text")?;
        let dag = if t.trim_start().starts_with("m=") {
            Dag::parse_text(t)?
        } else {
            Dag::parse_inline(t.trim())?
        };
        write_out(out, Box::into_raw(Box::new(RzDag(dag))))
    })
}

/// # Safety
/// `dag` must be null or a handle from [`rz_dag_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn rz_dag_free(dag: *mut RzDag) {
    if !dag.is_null() {
        drop(Box::from_raw(dag));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `dag` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rz_dag_vertex_count(dag: *const RzDag) -> usize {
    dag.as_ref().map_or(0, |d| d.0.m())
}

/// Multi-line text form.
///
/// # Safety
/// `dag` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_dag_to_string(dag: *const RzDag, out: *mut *mut c_char) -> RzStatus {
    guard(|| write_string(out, handle(dag, "dag")?.0.to_text()))
}

/// Whether `i` and `j` are d-separated given the vertices in `given`, where
/// bit `v - 1` stands for vertex `v`.
///
/// # Safety
/// `dag` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_dag_d_separated(
    dag: *const RzDag,
    i: usize,
    j: usize,
    given: u32,
    out: *mut bool,
) -> RzStatus {
    guard(|| {
        let sep = handle(dag, "dag")?.0.d_separated(i, j, VertexSet::from_bits(given))?;
        write_out(out, sep)
    })
}

/// Reads either an independence-model JSON document or a theta-table model,
/// from which the exact independence model is extracted.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_model_from_json(json: *const c_char, out: *mut *mut RzModel) -> RzStatus {
    guard(|| {
        let t = c_str(json, "json")?;
        let model = match IndependenceModel::from_json(t) {
            Ok(model) => RzModel { model, ranges: None },
            Err(_) => {
                let mm = MultinomialModel::from_json(t)?;
                RzModel {
                    model: extract_independence_model(&joint_from_model(&mm)?)?,
                    ranges: Some(mm.ranges().clone()),
                }
            }
        };
        write_out(out, Box::into_raw(Box::new(model)))
    })
}

/// Model of a built-in catalog entry (id or alias, case-insensitive).
///
/// # Safety
/// `id` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_model_from_catalog(id: *const c_char, out: *mut *mut RzModel) -> RzStatus {
    guard(|| {
        let entry = catalog::lookup(c_str(id, "id")?)?;
        let model = RzModel {
            model: entry.independence_model()?,
            ranges: entry.ranges.clone(),
        };
        write_out(out, Box::into_raw(Box::new(model)))
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn rz_model_free(model: *mut RzModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of statements in the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rz_model_len(model: *const RzModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.len())
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_model_to_json(model: *const RzModel, out: *mut *mut c_char) -> RzStatus {
    guard(|| write_string(out, handle(model, "model")?.model.to_json()))
}

/// Verdict on all thirteen razors as JSON. Enumerative razors are decided
/// when the vertex count is at most `ceiling`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_classify_json(
    dag: *const RzDag,
    model: *const RzModel,
    ceiling: usize,
    out: *mut *mut c_char,
) -> RzStatus {
    guard(|| {
        let (g, p) = (handle(dag, "dag")?, handle(model, "model")?);
        let verdict = classify(&g.0, &p.model, p.ranges.as_ref(), ceiling)?;
        write_string(out, serde_json::to_string(&verdict).map_err(Error::from)?)
    })
}

/// Free-parameter count under comma-separated ranges such as `2,3,2`.
///
/// # Safety
/// `dag` must be a live handle, `ranges` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rz_param_count(dag: *const RzDag, ranges: *const c_char, out: *mut u64) -> RzStatus {
    guard(|| {
        let r = RangeSpec::parse_list(c_str(ranges, "ranges")?)?;
        write_out(out, param_count(&handle(dag, "dag")?.0, &r)?)
    })
}

/// Recomputes every stored fact of one catalog entry, or of all entries when
/// `id` is null. Writes the number of failed facts to `failed` and returns
/// [`RzStatus::Mismatch`] when it is nonzero.
///
/// # Safety
/// `id` must be null or a valid C string; `failed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rz_catalog_verify(id: *const c_char, ceiling: usize, failed: *mut usize) -> RzStatus {
    guard(|| {
        let entries: Vec<&catalog::CatalogEntry> = if id.is_null() {
            catalog::catalog().iter().collect()
        } else {
            vec![catalog::lookup(c_str(id, "id")?)?]
        };
        let mut bad = Vec::new();
        for entry in entries {
            for outcome in entry.verify(ceiling)? {
                if !outcome.passed {
                    bad.push(format!("{}: {outcome}", entry.id));
                }
            }
        }
        write_out(failed, bad.len())?;
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Fail(RzStatus::Mismatch, bad.join("\n")))
        }
    })
}
