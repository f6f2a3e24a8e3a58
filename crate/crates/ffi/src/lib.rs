//! C ABI over `hiersum`.
//!
//! Instances and solutions are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns an
//! [`HsStatus`]; on failure [`hs_last_error`] describes the problem for the
//! current thread. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use hiersum::cli::{build_report, Report, WeightSpec};
use hiersum::io;
use hiersum::weights::{aggregate, weights_from_aggregates, AggregateTable};
use hiersum::{solve, Error, ProductSpace, SolverConfig, WeightFunction, WeightMap};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Structural = 3,
    Input = 4,
    Config = 5,
    Capacity = 6,
    Parse = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

/// Weight function applied to aggregated facts.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsWeightKind {
    AbsDiff = 0,
    Composition = 1,
    BoxCox = 2,
}

/// Opaque problem instance: space plus node weights.
pub struct HsInstance {
    space: ProductSpace,
    weights: WeightMap,
    aggregates: Option<AggregateTable>,
    spec: WeightSpec,
}

/// Opaque solver result.
pub struct HsSolution {
    report: Report,
    indices: Vec<u64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::Structural(_) => HsStatus::Structural,
        Error::Input(_) => HsStatus::Input,
        Error::Config(_) => HsStatus::Config,
        Error::Capacity(_) => HsStatus::Capacity,
        Error::Parse { .. } => HsStatus::Parse,
        Error::Io { .. } => HsStatus::Io,
    }
}

struct Failure(HsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            HsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(HsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn str_array<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    (0..n).map(|i| str_arg(*p.add(i), what)).collect()
}

fn weight_function(kind: HsWeightKind, boxcox_m: f64) -> Result<WeightFunction, Failure> {
    let f = match kind {
        HsWeightKind::AbsDiff => WeightFunction::AbsDiff,
        HsWeightKind::Composition => WeightFunction::Composition,
        HsWeightKind::BoxCox => WeightFunction::box_cox(boxcox_m),
    };
    f.validate()?;
    Ok(f)
}

fn space_from_csv(texts: &[&str]) -> Result<ProductSpace, Failure> {
    let trees = texts
        .iter()
        .enumerate()
        .map(|(i, t)| io::parse_hierarchy(t.as_bytes(), Path::new(&format!("hierarchy[{i}]"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProductSpace::new(trees)?)
}

fn instance_from_facts(space: ProductSpace, cells: hiersum::CellTable, f: WeightFunction) -> Result<HsInstance, Failure> {
    let agg = aggregate(&cells, &space)?;
    let weights = weights_from_aggregates(&agg, &space, f)?;
    Ok(HsInstance { space, weights, aggregates: Some(agg), spec: WeightSpec::of(&f) })
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Builds an instance from in-memory CSV text: `n_dims` hierarchy documents
/// (`id,parent_id,name`) and one facts document (`dim1..dimd,metric_pre,metric_cur`).
///
/// # Safety
/// All pointers must be valid NUL-terminated strings; `hierarchies` must hold
/// `n_dims` of them. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_from_csv(
    hierarchies: *const *const c_char,
    n_dims: usize,
    facts: *const c_char,
    weight: HsWeightKind,
    boxcox_m: f64,
    out: *mut *mut HsInstance,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let texts = str_array(hierarchies, n_dims, "hierarchies")?;
        let facts = str_arg(facts, "facts")?;
        let f = weight_function(weight, boxcox_m)?;
        let space = space_from_csv(&texts)?;
        let cells = io::parse_facts(facts.as_bytes(), Path::new("facts"), &space)?;
        put(out, instance_from_facts(space, cells, f)?);
        Ok(())
    })
}

/// Like [`hs_instance_from_csv`] but with explicit node weights (`dim1..dimd,weight`).
///
/// # Safety
/// Same contract as [`hs_instance_from_csv`].
#[no_mangle]
pub unsafe extern "C" fn hs_instance_from_weights_csv(
    hierarchies: *const *const c_char,
    n_dims: usize,
    weights: *const c_char,
    out: *mut *mut HsInstance,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let texts = str_array(hierarchies, n_dims, "hierarchies")?;
        let weights = str_arg(weights, "weights")?;
        let space = space_from_csv(&texts)?;
        let weights = io::parse_weights(weights.as_bytes(), Path::new("weights"), &space)?;
        put(out, HsInstance { space, weights, aggregates: None, spec: WeightSpec::explicit() });
        Ok(())
    })
}

/// Builds an instance from hierarchy and facts files on disk.
///
/// # Safety
/// Same contract as [`hs_instance_from_csv`], with paths instead of contents.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_from_files(
    hierarchy_paths: *const *const c_char,
    n_dims: usize,
    facts_path: *const c_char,
    weight: HsWeightKind,
    boxcox_m: f64,
    out: *mut *mut HsInstance,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let paths: Vec<PathBuf> = str_array(hierarchy_paths, n_dims, "hierarchy_paths")?
            .into_iter()
            .map(PathBuf::from)
            .collect();
        let facts = PathBuf::from(str_arg(facts_path, "facts_path")?);
        let f = weight_function(weight, boxcox_m)?;
        let (space, cells) = io::ingest(&paths, &facts)?;
        put(out, instance_from_facts(space, cells, f)?);
        Ok(())
    })
}

/// Number of dimensions, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_dims(inst: *const HsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.space.dims())
}

/// Number of product nodes, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_node_count(inst: *const HsInstance) -> u64 {
    inst.as_ref().map_or(0, |i| i.space.len())
}

/// # Safety
/// `inst` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hs_instance_free(inst: *mut HsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Selects at most `k` non-overlapping segments.
///
/// # Safety
/// `inst` must be a live instance handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hs_solve(inst: *const HsInstance, k: usize, out: *mut *mut HsSolution) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let cfg = SolverConfig::new(k)?;
        let sol = solve(&inst.space, &inst.weights, &cfg)?;
        let report = build_report(&inst.space, &inst.weights, inst.aggregates.as_ref(), &sol, k, inst.spec.clone());
        let mut indices = sol.indices;
        indices.sort_by(|&a, &b| inst.weights.get(b).total_cmp(&inst.weights.get(a)).then(a.cmp(&b)));
        put(out, HsSolution { report, indices });
        Ok(())
    })
}

/// Number of segments, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn hs_solution_len(sol: *const HsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.report.entries.len())
}

/// Total weight, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn hs_solution_total_weight(sol: *const HsSolution) -> f64 {
    sol.as_ref().map_or(0.0, |s| s.report.total_weight)
}

/// Weight and linear node index of segment `i` (segments are ordered by weight, heaviest first).
///
/// # Safety
/// `sol` must be a live solution handle; `weight` and `index` may be null.
#[no_mangle]
pub unsafe extern "C" fn hs_solution_entry(sol: *const HsSolution, i: usize, weight: *mut f64, index: *mut u64) -> HsStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let entry = sol.report.entries.get(i).ok_or_else(|| {
            Failure(HsStatus::OutOfRange, format!("entry {i} out of range (len {})", sol.indices.len()))
        })?;
        if !weight.is_null() {
            *weight = entry.weight;
        }
        if !index.is_null() {
            *index = sol.indices[i];
        }
        Ok(())
    })
}

/// Full JSON report. Release the string with [`hs_string_free`].
///
/// # Safety
/// `sol` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hs_solution_to_json(sol: *const HsSolution, out: *mut *mut c_char) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let text = serde_json::to_string(&sol.report).map_err(|e| Failure(HsStatus::Panic, e.to_string()))?;
        *out = CString::new(text).map_err(|e| Failure(HsStatus::InvalidUtf8, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hs_solution_free(sol: *mut HsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn hs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
