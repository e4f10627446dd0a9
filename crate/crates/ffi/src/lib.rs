//! C interface to `lact-core`.
//!
//! Objects are opaque handles created by `*_new`/loader functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`LactStatus`]; on failure [`lact_last_error`] describes the problem for
//! the calling thread. Output handles are written only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lact_core::io::load_linear_denoiser;
use lact_core::mrsde::{make_schedule, Schedule, ScheduleKind};
use lact_core::rectify::{self, GuidanceConfig, RectifierCoefficients, TimeTravel};
use lact_core::score_models::{LinearDenoiser, OracleDenoiser, ScoreModel};
use lact_core::tomo_ops::{self, AngleMask, FbpFilter, Image, Sinogram};
use lact_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LactStatus {
    Ok = 0,
    InvalidArgument = 1,
    ShapeMismatch = 2,
    Numeric = 3,
    Format = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LactScheduleKind {
    Constant = 0,
    Cosine = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LactFilter {
    RamLak = 0,
    Hann = 1,
    None = 2,
}

/// Per-step rectification coefficients.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LactCoefficients {
    pub lambda_t: f64,
    pub gamma_t: f64,
    pub h_t: f64,
    pub beta: f64,
    pub sigma_y: f64,
}

/// Guidance settings for [`lact_reconstruct`]; start from [`lact_guidance_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LactGuidance {
    pub beta: f64,
    pub sigma_y_est: f64,
    pub time_travel: bool,
    pub hop: usize,
    pub repeats: usize,
    pub rectify_every: usize,
    pub rectify: bool,
}

pub struct LactSinogram(Sinogram);
pub struct LactImage(Image);
pub struct LactMask(AngleMask);
pub struct LactSchedule(Schedule);
pub struct LactModel(Box<dyn ScoreModel>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> LactStatus {
    match err {
        Error::InvalidArgument(_) => LactStatus::InvalidArgument,
        Error::ShapeMismatch { .. } => LactStatus::ShapeMismatch,
        Error::Numeric(_) => LactStatus::Numeric,
        Error::Format(_) => LactStatus::Format,
        Error::Io { .. } => LactStatus::Io,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LactStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LactStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LactStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            LactStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("buffer of {}", src.len()),
            actual: len.to_string(),
        }
        .into());
    }
    if dst.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    Ok(())
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lact_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// ---- sinograms -------------------------------------------------------------

/// Copies `n_angles * n_detectors` row-major values. Angles are in degrees and
/// must be strictly increasing.
#[no_mangle]
pub unsafe extern "C" fn lact_sinogram_new(
    angles: *const f64,
    n_angles: usize,
    n_detectors: usize,
    data: *const f64,
    out: *mut *mut LactSinogram,
) -> LactStatus {
    guard(|| {
        let a = slice(angles, n_angles, "angles")?.to_vec();
        let d = slice(data, n_angles.saturating_mul(n_detectors), "data")?.to_vec();
        put(out, LactSinogram(Sinogram::new(a, n_detectors, d)?), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_sinogram_n_angles(s: *const LactSinogram) -> usize {
    s.as_ref().map_or(0, |s| s.0.n_angles())
}

#[no_mangle]
pub unsafe extern "C" fn lact_sinogram_n_detectors(s: *const LactSinogram) -> usize {
    s.as_ref().map_or(0, |s| s.0.n_detectors())
}

/// Copies the values into `dst`, which must hold exactly `len` entries.
#[no_mangle]
pub unsafe extern "C" fn lact_sinogram_copy_data(
    s: *const LactSinogram,
    dst: *mut f64,
    len: usize,
) -> LactStatus {
    guard(|| copy_out(deref(s, "sinogram")?.0.data(), dst, len))
}

#[no_mangle]
pub unsafe extern "C" fn lact_sinogram_free(s: *mut LactSinogram) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

// ---- images ----------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn lact_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut LactImage,
) -> LactStatus {
    guard(|| {
        let d = slice(data, width.saturating_mul(height), "data")?.to_vec();
        put(out, LactImage(Image::new(width, height, d)?), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_image_width(img: *const LactImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

#[no_mangle]
pub unsafe extern "C" fn lact_image_height(img: *const LactImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

#[no_mangle]
pub unsafe extern "C" fn lact_image_copy_data(
    img: *const LactImage,
    dst: *mut f64,
    len: usize,
) -> LactStatus {
    guard(|| copy_out(deref(img, "image")?.0.data(), dst, len))
}

#[no_mangle]
pub unsafe extern "C" fn lact_image_free(img: *mut LactImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

// ---- masks -----------------------------------------------------------------

/// `measured[i] != 0` marks row `i` of the full angle grid as measured.
#[no_mangle]
pub unsafe extern "C" fn lact_mask_new(
    angles: *const f64,
    measured: *const u8,
    n: usize,
    out: *mut *mut LactMask,
) -> LactStatus {
    guard(|| {
        let a = slice(angles, n, "angles")?.to_vec();
        let m = slice(measured, n, "measured")?
            .iter()
            .map(|&v| v != 0)
            .collect();
        put(out, LactMask(AngleMask::new(a, m)?), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_mask_measured_count(m: *const LactMask) -> usize {
    m.as_ref().map_or(0, |m| m.0.measured_count())
}

#[no_mangle]
pub unsafe extern "C" fn lact_mask_free(m: *mut LactMask) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---- schedules -------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn lact_schedule_new(
    steps: usize,
    lambda: f64,
    kind: LactScheduleKind,
    zeta_total: f64,
    out: *mut *mut LactSchedule,
) -> LactStatus {
    guard(|| {
        let kind = match kind {
            LactScheduleKind::Constant => ScheduleKind::Constant,
            LactScheduleKind::Cosine => ScheduleKind::Cosine,
        };
        put(
            out,
            LactSchedule(make_schedule(steps, lambda, kind, zeta_total)?),
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_schedule_steps(s: *const LactSchedule) -> usize {
    s.as_ref().map_or(0, |s| s.0.steps())
}

#[no_mangle]
pub unsafe extern "C" fn lact_schedule_free(s: *mut LactSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

// ---- models ----------------------------------------------------------------

/// Model that always returns a copy of `truth` as the clean estimate.
#[no_mangle]
pub unsafe extern "C" fn lact_model_oracle(
    truth: *const LactSinogram,
    out: *mut *mut LactModel,
) -> LactStatus {
    guard(|| {
        let t = deref(truth, "truth")?.0.clone();
        put(out, LactModel(Box::new(OracleDenoiser::new(t))), "out")
    })
}

/// Loads a linear denoiser written by `lact fit`. `path` is UTF-8.
#[no_mangle]
pub unsafe extern "C" fn lact_model_load_linear(
    path: *const c_char,
    out: *mut *mut LactModel,
) -> LactStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        let m: LinearDenoiser = load_linear_denoiser(Path::new(p))?;
        put(out, LactModel(Box::new(m)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_model_free(m: *mut LactModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---- operators -------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn lact_radon(
    img: *const LactImage,
    angles: *const f64,
    n_angles: usize,
    n_detectors: usize,
    out: *mut *mut LactSinogram,
) -> LactStatus {
    guard(|| {
        let a = slice(angles, n_angles, "angles")?;
        let s = tomo_ops::radon(&deref(img, "image")?.0, a, n_detectors)?;
        put(out, LactSinogram(s), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_fbp(
    sino: *const LactSinogram,
    filter: LactFilter,
    out_size: usize,
    out: *mut *mut LactImage,
) -> LactStatus {
    guard(|| {
        let f = match filter {
            LactFilter::RamLak => FbpFilter::RamLak,
            LactFilter::Hann => FbpFilter::Hann,
            LactFilter::None => FbpFilter::None,
        };
        let img = tomo_ops::fbp(&deref(sino, "sinogram")?.0, f, out_size)?;
        put(out, LactImage(img), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn lact_coefficients(
    sched: *const LactSchedule,
    t: usize,
    beta: f64,
    sigma_y: f64,
    out: *mut LactCoefficients,
) -> LactStatus {
    guard(|| {
        let c = rectify::coefficients(t, &deref(sched, "schedule")?.0, beta, sigma_y)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = LactCoefficients {
            lambda_t: c.lambda_t,
            gamma_t: c.gamma_t,
            h_t: c.h_t,
            beta: c.beta,
            sigma_y: c.sigma_y,
        };
        Ok(())
    })
}

/// Applies the range-space correction with the gain in `coeffs->lambda_t`.
#[no_mangle]
pub unsafe extern "C" fn lact_rnsd_plus(
    x0_hat: *const LactSinogram,
    y: *const LactSinogram,
    mask: *const LactMask,
    coeffs: *const LactCoefficients,
    out: *mut *mut LactSinogram,
) -> LactStatus {
    guard(|| {
        let c = deref(coeffs, "coefficients")?;
        if !(0.0..=1.0).contains(&c.lambda_t) {
            return Err(
                Error::InvalidArgument(format!("lambda_t {} outside [0, 1]", c.lambda_t)).into(),
            );
        }
        let rc = RectifierCoefficients {
            lambda_t: c.lambda_t,
            gamma_t: c.gamma_t,
            h_t: c.h_t,
            beta: c.beta,
            sigma_y: c.sigma_y,
        };
        let s = rectify::rnsd_plus(
            &deref(x0_hat, "x0_hat")?.0,
            &deref(y, "y")?.0,
            &deref(mask, "mask")?.0,
            &rc,
        )?;
        put(out, LactSinogram(s), "out")
    })
}

#[no_mangle]
pub extern "C" fn lact_guidance_default() -> LactGuidance {
    let g = GuidanceConfig::default();
    LactGuidance {
        beta: g.beta,
        sigma_y_est: g.sigma_y_est,
        time_travel: g.time_travel.enabled,
        hop: g.time_travel.hop,
        repeats: g.time_travel.repeats,
        rectify_every: g.rectify_every,
        rectify: g.rectify,
    }
}

/// Guided sinogram completion. `mu` may be null, in which case `y` is used.
#[no_mangle]
pub unsafe extern "C" fn lact_reconstruct(
    y: *const LactSinogram,
    mu: *const LactSinogram,
    mask: *const LactMask,
    model: *const LactModel,
    sched: *const LactSchedule,
    guidance: *const LactGuidance,
    seed: u64,
    out: *mut *mut LactSinogram,
) -> LactStatus {
    guard(|| {
        let y = &deref(y, "y")?.0;
        let mu = if mu.is_null() { y } else { &(*mu).0 };
        let g = deref(guidance, "guidance")?;
        let cfg = GuidanceConfig {
            beta: g.beta,
            sigma_y_est: g.sigma_y_est,
            time_travel: TimeTravel {
                enabled: g.time_travel,
                hop: g.hop,
                repeats: g.repeats,
            },
            rectify_every: g.rectify_every,
            rectify: g.rectify,
        };
        let s = rectify::reconstruct_with_mu(
            y,
            mu,
            &deref(mask, "mask")?.0,
            deref(model, "model")?.0.as_ref(),
            &deref(sched, "schedule")?.0,
            &cfg,
            seed,
        )?;
        put(out, LactSinogram(s), "out")
    })
}
