//! C ABI for the ordalign library.
//!
//! Handles are opaque pointers created and destroyed by this library.
//! Every fallible call returns an [`OaStatus`]; on failure a
//! thread-local message is retrievable with [`oa_last_error_message`].
//! Slot indices in this API are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use ordalign::{
    generate, solve, AlignConfig, Dataset, Error, PaddingMode, SolveOptions, SolveResult,
    SyntheticConfig,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OaStatus {
    Ok = 0,
    /// Invalid input: bad configuration, malformed file, unknown label.
    Validation = 1,
    /// Numerical failure during optimization.
    Numerical = 2,
    /// File could not be read or written.
    Io = 3,
    /// A required pointer argument was null or an index out of range.
    NullArgument = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

fn status_of(err: &Error) -> OaStatus {
    match err.exit_code() {
        2 => OaStatus::Numerical,
        3 => OaStatus::Io,
        _ => OaStatus::Validation,
    }
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn oa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque dataset handle.
pub struct OaDataset {
    inner: Dataset,
}

/// Opaque solve-result handle: the rounded per-clip assignments together
/// with convergence information.
pub struct OaResult {
    inner: SolveResult,
}

/// Reads a dataset manifest (JSON) and its referenced feature files.
/// On success stores a new handle in `out`; free it with
/// [`oa_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_read(
    manifest_path: *const c_char,
    out: *mut *mut OaDataset,
) -> OaStatus {
    if manifest_path.is_null() || out.is_null() {
        set_error("null argument");
        return OaStatus::NullArgument;
    }
    let path = match CStr::from_ptr(manifest_path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("manifest path is not valid UTF-8");
            return OaStatus::Validation;
        }
    };
    match ordalign::io::read_dataset(Path::new(path), PaddingMode::BetweenOnly) {
        Ok(dataset) => {
            *out = Box::into_raw(Box::new(OaDataset { inner: dataset }));
            OaStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Generates a synthetic benchmark dataset with default structure
/// parameters. `n_clips` must be positive.
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_generate(
    n_clips: usize,
    seed: u64,
    out: *mut *mut OaDataset,
) -> OaStatus {
    if out.is_null() {
        set_error("null argument");
        return OaStatus::NullArgument;
    }
    let config = SyntheticConfig {
        n_clips,
        seed,
        ..SyntheticConfig::default()
    };
    match generate(&config) {
        Ok(dataset) => {
            *out = Box::into_raw(Box::new(OaDataset { inner: dataset }));
            OaStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Frees a dataset handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_free(dataset: *mut OaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of clips in the dataset.
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_num_clips(dataset: *const OaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.clips.len())
}

/// Number of labels, background included.
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_num_labels(dataset: *const OaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.label_set.len())
}

/// Number of feature intervals in one clip, or 0 for a bad index.
#[no_mangle]
pub unsafe extern "C" fn oa_dataset_clip_len(
    dataset: *const OaDataset,
    clip_index: usize,
) -> usize {
    dataset
        .as_ref()
        .and_then(|d| d.inner.clips.get(clip_index))
        .map_or(0, |c| c.features.nrows())
}

/// Runs the weakly supervised alignment over all clips of the dataset and
/// stores a result handle in `out`; free it with [`oa_result_free`].
///
/// `lambda` is the ridge regularization (must be positive), `kappa_bg`
/// the linear penalty on assigning background, `bg_weight` the squared
/// class weight of background in the clustering cost, `gap_tol` the
/// duality-gap stopping threshold, and `max_iter` the iteration cap.
#[no_mangle]
pub unsafe extern "C" fn oa_solve(
    dataset: *const OaDataset,
    lambda: f64,
    kappa_bg: f64,
    bg_weight: f64,
    gap_tol: f64,
    max_iter: usize,
    out: *mut *mut OaResult,
) -> OaStatus {
    let Some(dataset) = dataset.as_ref() else {
        set_error("null dataset");
        return OaStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return OaStatus::NullArgument;
    }
    let config = AlignConfig {
        lambda,
        kappa_bg,
        bg_weight,
        solve: SolveOptions {
            gap_tol,
            max_iter,
            ..SolveOptions::default()
        },
    };
    let run = || -> ordalign::Result<SolveResult> {
        config.solve.validate()?;
        let op = ordalign::CostOperator::diffrac(
            &dataset.inner,
            config.lambda,
            Some(config.weights(&dataset.inner.label_set)),
            Some(config.kappa(&dataset.inner.label_set)),
        )?;
        solve(&op, &dataset.inner, &config.solve)
    };
    match run() {
        Ok(result) => {
            *out = Box::into_raw(Box::new(OaResult { inner: result }));
            OaStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Frees a result handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn oa_result_free(result: *mut OaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of Frank-Wolfe iterations performed.
#[no_mangle]
pub unsafe extern "C" fn oa_result_iterations(result: *const OaResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.iterations)
}

/// Final duality gap at termination.
#[no_mangle]
pub unsafe extern "C" fn oa_result_final_gap(result: *const OaResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.final_gap)
}

/// Copies the rounded 0-based slot index of every interval of one clip
/// into `slots_out` (capacity `capacity`). Returns the number of
/// intervals, or 0 for a bad handle or index. If the clip has more
/// intervals than `capacity`, nothing is copied; call again with a larger
/// buffer (the returned length tells you how large).
#[no_mangle]
pub unsafe extern "C" fn oa_result_slots(
    result: *const OaResult,
    clip_index: usize,
    slots_out: *mut usize,
    capacity: usize,
) -> usize {
    let Some(path) = result.as_ref().and_then(|r| r.inner.paths.get(clip_index)) else {
        return 0;
    };
    let slots = path.slots();
    if !slots_out.is_null() && slots.len() <= capacity {
        ptr::copy_nonoverlapping(slots.as_ptr(), slots_out, slots.len());
    }
    slots.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn generate_solve_and_read_slots() {
        unsafe {
            let mut dataset: *mut OaDataset = ptr::null_mut();
            assert_eq!(oa_dataset_generate(4, 7, &mut dataset), OaStatus::Ok);
            assert_eq!(oa_dataset_num_clips(dataset), 4);
            assert!(oa_dataset_num_labels(dataset) >= 2);

            let mut result: *mut OaResult = ptr::null_mut();
            let status = oa_solve(dataset, 1e-2, 0.0, 1.0, 1e-4, 500, &mut result);
            assert_eq!(status, OaStatus::Ok);
            let gap = oa_result_final_gap(result);
            assert!(gap.is_finite() && gap < 5e-3, "gap {gap}");

            let len = oa_dataset_clip_len(dataset, 0);
            assert!(len > 0);
            let mut slots = vec![usize::MAX; len];
            let n = oa_result_slots(result, 0, slots.as_mut_ptr(), slots.len());
            assert_eq!(n, len);
            assert_eq!(slots[0], 0, "paths start at the first slot");
            assert!(slots.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));

            oa_result_free(result);
            oa_dataset_free(dataset);
        }
    }

    #[test]
    fn errors_set_message_and_code() {
        unsafe {
            let mut dataset: *mut OaDataset = ptr::null_mut();
            let path = CString::new("/nonexistent/manifest.json").unwrap();
            let status = oa_dataset_read(path.as_ptr(), &mut dataset);
            assert_eq!(status, OaStatus::Io);
            let msg = CStr::from_ptr(oa_last_error_message());
            assert!(msg.to_str().unwrap().contains("manifest.json"));

            // Invalid lambda is a validation error.
            assert_eq!(oa_dataset_generate(2, 0, &mut dataset), OaStatus::Ok);
            let mut result: *mut OaResult = ptr::null_mut();
            let status = oa_solve(dataset, -1.0, 0.0, 1.0, 1e-4, 10, &mut result);
            assert_eq!(status, OaStatus::Validation);
            oa_dataset_free(dataset);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            assert_eq!(
                oa_dataset_read(ptr::null(), ptr::null_mut()),
                OaStatus::NullArgument
            );
            assert_eq!(oa_dataset_num_clips(ptr::null()), 0);
            assert!(oa_result_final_gap(ptr::null()).is_nan());
            oa_result_free(ptr::null_mut());
            oa_dataset_free(ptr::null_mut());
        }
    }
}
