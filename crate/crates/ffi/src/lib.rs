//! C ABI over `fracmit`: eigenbasis handles, single- and multi-angle transforms,
//! and a per-chirp interference mitigator.
//!
//! Every function returns an [`FmStatus`]. On failure the message is available
//! from [`fm_last_error`] on the same thread. Complex buffers are interleaved
//! `(re, im)` doubles, laid out as [`FmComplex`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use fracmit::frft::{self, EigenBasis, FractionalAngle};
use fracmit::mitigator::{imfrac, Finalize, MitigationConfig, Padding};
use fracmit::Error;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The mitigator hit its iteration cap.
    NonTermination = 3,
    /// File access or a malformed cache file.
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FmComplex {
    pub re: f64,
    pub im: f64,
}

/// Opaque centered-DFT eigenbasis.
pub struct FmBasis {
    inner: Arc<EigenBasis>,
}

/// Opaque mitigator bound to one chirp length.
pub struct FmMitigator {
    config: MitigationConfig,
    n_samples: usize,
    basis: Arc<EigenBasis>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmMitigatorConfig {
    pub m_angles: usize,
    pub alpha_max_deg: f64,
    pub guard_cells: usize,
    /// CFAR window per side; 0 picks the largest window that fits.
    pub window_size: usize,
    pub threshold_db: f64,
    /// Zero-pad before the search and crop/low-pass afterwards.
    pub pad: bool,
    /// Padded length; 0 picks the default for the chirp length.
    pub padded_length: usize,
    pub gamma: f64,
    /// Iteration cap; 0 uses the working length.
    pub max_iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> FmStatus {
    match e {
        Error::InvalidArgument(_) => FmStatus::InvalidArgument,
        Error::NonTermination(_) => FmStatus::NonTermination,
        Error::Io(_) | Error::Json(_) | Error::Format(_) => FmStatus::Io,
    }
}

/// Runs `f`, recording errors and panics. Clears the last error on success.
fn guard(f: impl FnOnce() -> Result<(), (FmStatus, String)>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FmStatus::Panic
        }
    }
}

fn fail(e: Error) -> (FmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FmStatus, String) {
    (FmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn input<'a>(data: *const FmComplex, len: usize) -> Result<&'a [Complex64], (FmStatus, String)> {
    if data.is_null() {
        return Err(null("input"));
    }
    // FmComplex and Complex64 are both two packed f64s.
    Ok(std::slice::from_raw_parts(data.cast::<Complex64>(), len))
}

unsafe fn output<'a>(data: *mut FmComplex, len: usize) -> Result<&'a mut [Complex64], (FmStatus, String)> {
    if data.is_null() {
        return Err(null("output"));
    }
    Ok(std::slice::from_raw_parts_mut(data.cast::<Complex64>(), len))
}

unsafe fn path_arg(path: *const c_char) -> Result<String, (FmStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (FmStatus::InvalidArgument, "path is not UTF-8".to_owned()))
}

/// Message of the last failed call on this thread; empty after a success. Valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the eigenbasis of size `n_samples`.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with [`fm_basis_free`].
#[no_mangle]
pub unsafe extern "C" fn fm_basis_new(n_samples: usize, out: *mut *mut FmBasis) -> FmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = Arc::new(EigenBasis::new(n_samples).map_err(fail)?);
        *out = Box::into_raw(Box::new(FmBasis { inner }));
        Ok(())
    })
}

/// Loads a basis from a cache file written by [`fm_basis_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_basis_load(path: *const c_char, out: *mut *mut FmBasis) -> FmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        let inner = Arc::new(EigenBasis::read_cache(path).map_err(fail)?);
        *out = Box::into_raw(Box::new(FmBasis { inner }));
        Ok(())
    })
}

/// # Safety
/// `basis` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fm_basis_save(basis: *const FmBasis, path: *const c_char) -> FmStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let path = path_arg(path)?;
        b.inner.write_cache(path).map_err(fail)
    })
}

/// Basis size, or 0 for a null handle.
///
/// # Safety
/// `basis` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_basis_len(basis: *const FmBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.len())
}

/// # Safety
/// `basis` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_basis_free(basis: *mut FmBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Fractional transform at `angle_deg`. `input` and `output` hold `len` samples,
/// which must equal the basis size. They may not overlap.
///
/// # Safety
/// Pointers must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn fm_dfrft(
    basis: *const FmBasis,
    input: *const FmComplex,
    len: usize,
    angle_deg: f64,
    output: *mut FmComplex,
) -> FmStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let x = self::input(input, len)?;
        let y = frft::dfrft(x, FractionalAngle::from_degrees(angle_deg), &b.inner).map_err(fail)?;
        self::output(output, len)?.copy_from_slice(&y);
        Ok(())
    })
}

/// Transforms at all `m_angles` grid angles `360°·m/M`. `output` receives
/// `m_angles × len` samples, one angle per row.
///
/// # Safety
/// `input` must be valid for `len` elements and `output` for `m_angles·len`.
#[no_mangle]
pub unsafe extern "C" fn fm_multi_angle(
    basis: *const FmBasis,
    input: *const FmComplex,
    len: usize,
    m_angles: usize,
    output: *mut FmComplex,
) -> FmStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let x = self::input(input, len)?;
        let spec = frft::multi_angle(x, m_angles, &b.inner).map_err(fail)?;
        let out = self::output(output, m_angles * len)?;
        for (dst, v) in out.iter_mut().zip(spec.data.iter()) {
            *dst = *v;
        }
        Ok(())
    })
}

/// Modeled FFT cost of a multi-angle transform.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_fft_op_count(n_samples: usize, m_angles: usize, out: *mut u64) -> FmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = frft::fft_op_count(n_samples, m_angles).map_err(fail)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn fm_default_config() -> FmMitigatorConfig {
    let d = MitigationConfig::default();
    FmMitigatorConfig {
        m_angles: d.m_angles,
        alpha_max_deg: d.alpha_max_deg,
        guard_cells: d.guard_cells,
        window_size: 0,
        threshold_db: d.threshold_db,
        pad: true,
        padded_length: 0,
        gamma: d.gamma,
        max_iterations: 0,
    }
}

fn to_config(c: &FmMitigatorConfig) -> MitigationConfig {
    let base = if c.pad {
        MitigationConfig {
            padding: Padding::ZeroPad {
                padded_length: (c.padded_length > 0).then_some(c.padded_length),
            },
            finalize: Finalize::CropLowpass,
            ..MitigationConfig::default()
        }
    } else {
        MitigationConfig::unpadded()
    };
    MitigationConfig {
        m_angles: c.m_angles,
        alpha_max_deg: c.alpha_max_deg,
        guard_cells: c.guard_cells,
        window_size: (c.window_size > 0).then_some(c.window_size),
        threshold_db: c.threshold_db,
        gamma: c.gamma,
        max_iterations: (c.max_iterations > 0).then_some(c.max_iterations),
        ..base
    }
}

/// Validates `config` for chirps of `n_samples` and builds (or reuses) the basis.
///
/// # Safety
/// `config` and `out` must be valid pointers. Release with [`fm_mitigator_free`].
#[no_mangle]
pub unsafe extern "C" fn fm_mitigator_new(
    config: *const FmMitigatorConfig,
    n_samples: usize,
    out: *mut *mut FmMitigator,
) -> FmStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = to_config(c);
        let len = config.validate(n_samples).map_err(fail)?;
        let basis = frft::shared_basis(len).map_err(fail)?;
        *out = Box::into_raw(Box::new(FmMitigator {
            config,
            n_samples,
            basis,
        }));
        Ok(())
    })
}

/// Mitigates one chirp of `len` samples and writes its `len`-bin range spectrum.
/// `detections` (nullable) receives the number of zeroing steps.
///
/// # Safety
/// Pointers must be valid for `len` elements; `mitigator` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_mitigator_process(
    mitigator: *const FmMitigator,
    input: *const FmComplex,
    len: usize,
    spectrum: *mut FmComplex,
    detections: *mut usize,
) -> FmStatus {
    guard(|| {
        let m = mitigator.as_ref().ok_or_else(|| null("mitigator"))?;
        if len != m.n_samples {
            return Err((
                FmStatus::InvalidArgument,
                format!("chirp has {len} samples, mitigator expects {}", m.n_samples),
            ));
        }
        let x = self::input(input, len)?;
        let out = self::output(spectrum, len)?;
        let trace = imfrac(x, &m.config, &m.basis).map_err(fail)?;
        out.copy_from_slice(&trace.final_range_spectrum);
        if let Some(d) = detections.as_mut() {
            *d = trace.detections();
        }
        Ok(())
    })
}

/// # Safety
/// `mitigator` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_mitigator_free(mitigator: *mut FmMitigator) {
    if !mitigator.is_null() {
        drop(Box::from_raw(mitigator));
    }
}
