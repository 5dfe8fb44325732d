//! C interface to the triplet-watershed library.
//!
//! Objects cross the boundary as opaque handles created by `tw_*_new` or
//! `tw_*_load` and released by the matching `tw_*_free`. Every fallible
//! call returns a [`TwStatus`]; on failure `tw_last_error_message` describes
//! the problem until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use std::slice;

use triplet_watershed::classifier::classify_single;
use triplet_watershed::data::{load_dataset, HsiDataset};
use triplet_watershed::graph::{pass_value, ClassId, Edge, Graph, SeedSet};
use triplet_watershed::nn::{Model, Tensor};
use triplet_watershed::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    Io = 4,
    Format = 5,
    Numeric = 6,
    Panic = 7,
}

/// Edge-weighted undirected graph.
pub struct TwGraph(Graph);

/// Image cube with ground-truth labels.
pub struct TwDataset(HsiDataset);

/// Trained embedding network.
pub struct TwModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> TwStatus {
    match e {
        Error::InvalidGraph(_) | Error::VertexOutOfRange { .. } => TwStatus::InvalidGraph,
        Error::Io { .. } => TwStatus::Io,
        Error::SizeMismatch { .. } | Error::ModelFormat(_) | Error::Json(_) => TwStatus::Format,
        Error::NonFinite(_) => TwStatus::Numeric,
        _ => TwStatus::InvalidArgument,
    }
}

struct Fail(TwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TwStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> TwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TwStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path_in(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TwStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn tw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from parallel edge arrays `us`, `vs`, `ws` of length
/// `n_edges`. Weights must be finite and positive.
///
/// # Safety
/// The arrays must hold `n_edges` elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_new(
    n_vertices: usize,
    us: *const usize,
    vs: *const usize,
    ws: *const f64,
    n_edges: usize,
    out: *mut *mut TwGraph,
) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (us, vs, ws) = (
            slice_in(us, n_edges, "us")?,
            slice_in(vs, n_edges, "vs")?,
            slice_in(ws, n_edges, "ws")?,
        );
        let edges: Vec<Edge> = (0..n_edges).map(|i| Edge::new(us[i], vs[i], ws[i])).collect();
        let g = Graph::new(n_vertices, &edges)?;
        *out = Box::into_raw(Box::new(TwGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from `tw_graph_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_free(g: *mut TwGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn tw_graph_n_vertices(g: *const TwGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_vertices())
}

/// # Safety
/// `g` must be a live graph handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn tw_graph_n_edges(g: *const TwGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_edges())
}

/// Replaces all edge weights, in edge order.
///
/// # Safety
/// `g` must be a live handle; `ws` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_set_weights(g: *mut TwGraph, ws: *const f64, n: usize) -> TwStatus {
    guard(|| {
        let g = g.as_mut().ok_or_else(|| null("graph"))?;
        let ws = slice_in(ws, n, "ws")?;
        g.0.set_weights(ws.to_vec())?;
        Ok(())
    })
}

/// Seeded watershed with orphan resolution. Writes one class id per vertex
/// to `out_labels` (length `tw_graph_n_vertices`), or -1 for vertices no
/// seed can reach.
///
/// # Safety
/// `g` must be live; the seed arrays must hold `n_seeds` values and
/// `out_labels` must hold one slot per vertex.
#[no_mangle]
pub unsafe extern "C" fn tw_watershed(
    g: *const TwGraph,
    seed_vertices: *const usize,
    seed_classes: *const u32,
    n_seeds: usize,
    out_labels: *mut i64,
) -> TwStatus {
    guard(|| {
        let g = &g.as_ref().ok_or_else(|| null("graph"))?.0;
        let vs = slice_in(seed_vertices, n_seeds, "seed_vertices")?;
        let cs = slice_in(seed_classes, n_seeds, "seed_classes")?;
        let out = slice_out(out_labels, g.n_vertices(), "out_labels")?;
        let seeds = SeedSet::from_pairs(vs.iter().copied().zip(cs.iter().map(|&c| c as ClassId)))?;
        let labels = classify_single(g, &seeds)?;
        for (o, l) in out.iter_mut().zip(labels.as_slice()) {
            *o = l.map_or(-1, i64::from);
        }
        Ok(())
    })
}

/// Minimax path weight between `u` and `v`. Disconnected pairs set
/// `*out_disconnected` and leave `*out_value` at `DBL_MAX`.
///
/// # Safety
/// `g` must be live and both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn tw_pass_value(
    g: *const TwGraph,
    u: usize,
    v: usize,
    out_value: *mut f64,
    out_disconnected: *mut bool,
) -> TwStatus {
    guard(|| {
        let g = &g.as_ref().ok_or_else(|| null("graph"))?.0;
        if out_value.is_null() || out_disconnected.is_null() {
            return Err(null("output"));
        }
        let pv = pass_value(g, u, v)?;
        *out_value = pv.value;
        *out_disconnected = pv.disconnected;
        Ok(())
    })
}

/// Loads a dataset directory (`cube.json`, `cube.f32`, `labels.u16`).
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_load(dir: *const c_char, out: *mut *mut TwDataset) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = load_dataset(&path_in(dir)?)?;
        *out = Box::into_raw(Box::new(TwDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from `tw_dataset_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_free(ds: *mut TwDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be live; every out pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_dims(
    ds: *const TwDataset,
    height: *mut usize,
    width: *mut usize,
    bands: *mut usize,
    classes: *mut usize,
) -> TwStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.0;
        if height.is_null() || width.is_null() || bands.is_null() || classes.is_null() {
            return Err(null("output"));
        }
        *height = ds.height();
        *width = ds.width();
        *bands = ds.bands();
        *classes = ds.classes();
        Ok(())
    })
}

/// Copies the per-pixel labels (row-major, 0 = unlabelled) into `out`.
///
/// # Safety
/// `ds` must be live and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_labels(ds: *const TwDataset, out: *mut u16, len: usize) -> TwStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.0;
        if len != ds.n_pixels() {
            return Err(Fail(
                TwStatus::InvalidArgument,
                format!("label buffer holds {len}, image has {} pixels", ds.n_pixels()),
            ));
        }
        slice_out(out, len, "out")?.copy_from_slice(ds.labels());
        Ok(())
    })
}

/// Loads a `TWNET1` model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_model_load(path: *const c_char, out: *mut *mut TwModel) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (model, _) = Model::load(&path_in(path)?)?;
        *out = Box::into_raw(Box::new(TwModel(model)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `tw_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tw_model_free(m: *mut TwModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Values per input sample (`bands * patch * patch`), 0 for null.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tw_model_input_len(m: *const TwModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.input_shape().iter().product())
}

/// Embedding width, 0 for null.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tw_model_output_dim(m: *const TwModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.output_dim())
}

/// Embeds `n_samples` channel-first patches stored back to back in
/// `input`, writing `n_samples * tw_model_output_dim` values to `out`.
///
/// # Safety
/// `m` must be live; `input` and `out` must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tw_model_embed(
    m: *const TwModel,
    input: *const f64,
    n_samples: usize,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("model"))?.0;
        let in_len: usize = m.input_shape().iter().product();
        let x = slice_in(input, n_samples * in_len, "input")?;
        let out = slice_out(out, n_samples * m.output_dim(), "out")?;
        if n_samples == 0 {
            return Ok(());
        }
        let mut shape = vec![n_samples];
        shape.extend_from_slice(m.input_shape());
        let y = m.infer(&Tensor::new(shape, x.to_vec())?)?;
        out.copy_from_slice(y.data());
        Ok(())
    })
}

