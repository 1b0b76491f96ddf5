//! C ABI for the mapping and planning library.
//!
//! All functions return an [`IppStatus`]; outputs go through out-pointers
//! and handles are opaque. On any non-Ok status the thread-local error
//! message is set and can be fetched with [`ipp_last_error`]. Handles must
//! be released with their matching `_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{CStr, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::Path;

use ipp_core::IppError;
use ipp_core::experiment::run_experiment;
use ipp_core::gp::{self, BlockRows, GpFieldMap, MaternKernel, build_prior, trace_uncertainty};
use ipp_core::grid::GridGeometry;
use ipp_core::sensor::{CameraConfig, ContinuousSensorModel, footprint_blocks, noise_variance};

/// Result codes mirrored from the library error type.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IppStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfRange = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &IppError) -> IppStatus {
    match err {
        IppError::InvalidArgument(_) => IppStatus::InvalidArgument,
        IppError::OutOfRange(_) => IppStatus::OutOfRange,
        IppError::Numerical(_) => IppStatus::Numerical,
        IppError::Config(_) => IppStatus::Config,
        IppError::Io(_) => IppStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IppStatus, String)>) -> IppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IppStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside library call");
            IppStatus::Panic
        }
    }
}

fn lib_err(e: IppError) -> (IppStatus, String) {
    (status_of(&e), e.to_string())
}

/// Copy the last error message for this thread into `buf` (NUL
/// terminated, truncated to `cap` bytes). Returns the full message length
/// in bytes, excluding the terminator.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, (IppStatus, String)> {
    if p.is_null() {
        return Err((IppStatus::NullPointer, "null string argument".into()));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (IppStatus::InvalidArgument, "string is not UTF-8".into()))
}

/// Parse a TOML experiment config and run every declared (planner, trial)
/// pair, writing CSVs and a manifest into `out_dir`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_run_experiment(
    config_toml: *const c_char,
    out_dir: *const c_char,
) -> IppStatus {
    guard(|| {
        let config = unsafe { cstr(config_toml) }?;
        let dir = unsafe { cstr(out_dir) }?;
        run_experiment(config, Path::new(dir)).map_err(lib_err)?;
        Ok(())
    })
}

/// Opaque continuous field map with the default survey camera and
/// altitude-dependent sensor model.
pub struct IppGpMap {
    map: GpFieldMap,
    camera: CameraConfig,
    model: ContinuousSensorModel,
}

fn map_ref<'a>(handle: *const IppGpMap) -> Result<&'a IppGpMap, (IppStatus, String)> {
    if handle.is_null() {
        return Err((IppStatus::NullPointer, "null map handle".into()));
    }
    Ok(unsafe { &*handle })
}

fn map_mut<'a>(handle: *mut IppGpMap) -> Result<&'a mut IppGpMap, (IppStatus, String)> {
    if handle.is_null() {
        return Err((IppStatus::NullPointer, "null map handle".into()));
    }
    Ok(unsafe { &mut *handle })
}

fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, (IppStatus, String)> {
    if p.is_null() {
        return Err((IppStatus::NullPointer, "null output pointer".into()));
    }
    Ok(unsafe { &mut *p })
}

/// Build a field map prior over a grid with the given Matern 3/2
/// hyperparameters and uniform prior mean. The handle is returned through
/// `out` and owned by the caller.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_new(
    origin_x: f64,
    origin_y: f64,
    extent_x: f64,
    extent_y: f64,
    resolution: f64,
    sigma_f2: f64,
    length_scale: f64,
    sigma_n2: f64,
    prior_mean: f64,
    out: *mut *mut IppGpMap,
) -> IppStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let geometry =
            GridGeometry::new([origin_x, origin_y], [extent_x, extent_y], resolution)
                .map_err(lib_err)?;
        let kernel = MaternKernel::new(sigma_f2, length_scale, sigma_n2).map_err(lib_err)?;
        let map = build_prior(geometry, &kernel, prior_mean).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IppGpMap {
            map,
            camera: CameraConfig::survey_default(),
            model: ContinuousSensorModel::survey_default(),
        }));
        Ok(())
    })
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_free(map: *mut IppGpMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// Number of grid cells (row-major indexing).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_cell_count(
    map: *const IppGpMap,
    out: *mut usize,
) -> IppStatus {
    guard(|| {
        let h = map_ref(map)?;
        *out_ptr(out)? = h.map.geometry.cell_count();
        Ok(())
    })
}

/// Posterior mean of one cell.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_mean(
    map: *const IppGpMap,
    cell: usize,
    out: *mut f64,
) -> IppStatus {
    guard(|| {
        let h = map_ref(map)?;
        if cell >= h.map.geometry.cell_count() {
            return Err((IppStatus::OutOfRange, format!("cell {cell} out of range")));
        }
        *out_ptr(out)? = h.map.mean[cell];
        Ok(())
    })
}

/// Posterior variance of one cell.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_variance(
    map: *const IppGpMap,
    cell: usize,
    out: *mut f64,
) -> IppStatus {
    guard(|| {
        let h = map_ref(map)?;
        if cell >= h.map.geometry.cell_count() {
            return Err((IppStatus::OutOfRange, format!("cell {cell} out of range")));
        }
        *out_ptr(out)? = h.map.cov[(cell, cell)];
        Ok(())
    })
}

/// Trace of the posterior covariance (total map uncertainty).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_trace(map: *const IppGpMap, out: *mut f64) -> IppStatus {
    guard(|| {
        let h = map_ref(map)?;
        *out_ptr(out)? = trace_uncertainty(&h.map, None);
        Ok(())
    })
}

/// Number of measurement blocks a camera frame at this pose produces;
/// `ipp_gp_map_fuse` expects exactly this many values.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_patch_size(
    map: *const IppGpMap,
    x: f64,
    y: f64,
    z: f64,
    out: *mut usize,
) -> IppStatus {
    guard(|| {
        let h = map_ref(map)?;
        let (blocks, _) =
            footprint_blocks([x, y, z], &h.camera, &h.model, &h.map.geometry).map_err(lib_err)?;
        *out_ptr(out)? = blocks.len();
        Ok(())
    })
}

/// Fuse one camera frame taken at (x, y, z): `values` holds the measured
/// block means, in row-major block order, with the noise variance implied
/// by the altitude.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_fuse(
    map: *mut IppGpMap,
    x: f64,
    y: f64,
    z: f64,
    values: *const f64,
    len: usize,
) -> IppStatus {
    guard(|| {
        let h = map_mut(map)?;
        if values.is_null() {
            return Err((IppStatus::NullPointer, "null values pointer".into()));
        }
        let (blocks, _) =
            footprint_blocks([x, y, z], &h.camera, &h.model, &h.map.geometry).map_err(lib_err)?;
        if blocks.len() != len {
            return Err((
                IppStatus::InvalidArgument,
                format!("expected {} block values, got {len}", blocks.len()),
            ));
        }
        let variance = noise_variance(z, &h.model).map_err(lib_err)?.max(1e-12);
        let values = unsafe { std::slice::from_raw_parts(values, len) };
        let rows = BlockRows {
            cells: blocks,
            values: values.to_vec(),
            variances: vec![variance; len],
        };
        gp::fuse_rows(&mut h.map, &rows).map_err(lib_err)?;
        Ok(())
    })
}

/// Covariance-only update for a hypothetical frame at (x, y, z): the mean
/// stays put while uncertainty shrinks as if the frame had been taken.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ipp_gp_map_predict_fuse(
    map: *mut IppGpMap,
    x: f64,
    y: f64,
    z: f64,
) -> IppStatus {
    guard(|| {
        let h = map_mut(map)?;
        let rows = gp::predicted_rows(&h.map, [x, y, z], &h.camera, &h.model).map_err(lib_err)?;
        gp::apply_covariance_update(&mut h.map, &rows).map_err(lib_err)?;
        Ok(())
    })
}
