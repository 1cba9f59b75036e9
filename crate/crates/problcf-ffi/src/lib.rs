//! C ABI for the probabilistic fatigue-life model.
//!
//! Conventions, mirrored in `include/problcf.h`:
//!
//! * Objects cross the boundary as opaque pointers created by `*_new`-style
//!   constructors and released by the matching `*_free`; freeing null is a
//!   no-op.
//! * Every fallible function returns a [`ProblcfStatus`]; outputs go through
//!   pointer arguments that are written only on `PROBLCF_OK`.
//! * On failure, a thread-local message describing the error is available
//!   from `problcf_last_error_message` until the next failing call on the
//!   same thread.
//! * Panics never unwind across the boundary; they are caught and reported
//!   as `PROBLCF_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use problcf::calibration::{fit_mle, FitConfig};
use problcf::io::{read_campaign, StrainUnit};
use problcf::{Campaign, CmbParams, Error, MaterialModel};

/// Status code of every fallible C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblcfStatus {
    Ok = 0,
    /// A parameter violated an invariant (sign, bound, emptiness).
    InvalidArgument = 1,
    /// An evaluation argument left the function's domain.
    DomainError = 2,
    /// A strain fell outside the invertible range of the curve.
    OutOfRange = 3,
    /// An input file violated its schema.
    SchemaError = 4,
    /// An iterative routine failed to converge.
    NonConvergence = 5,
    IoError = 6,
    NullPointer = 7,
    /// A string argument was not valid UTF-8.
    Utf8Error = 8,
    /// An internal panic was caught at the boundary.
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> ProblcfStatus {
    match err {
        Error::InvalidParameter(_) => ProblcfStatus::InvalidArgument,
        Error::Domain(_) => ProblcfStatus::DomainError,
        Error::OutOfRange(_) => ProblcfStatus::OutOfRange,
        Error::Schema { .. } => ProblcfStatus::SchemaError,
        Error::NonConvergence(_) => ProblcfStatus::NonConvergence,
        Error::Io(_) => ProblcfStatus::IoError,
    }
}

/// Runs `body` with panic containment and error capture.
fn guarded(body: impl FnOnce() -> Result<(), (ProblcfStatus, String)>) -> ProblcfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ProblcfStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {message}"));
            ProblcfStatus::Panic
        }
    }
}

fn lift(err: Error) -> (ProblcfStatus, String) {
    (status_of(&err), err.to_string())
}

fn null_arg(name: &str) -> (ProblcfStatus, String) {
    (ProblcfStatus::NullPointer, format!("{name} must not be null"))
}

/// Message of the most recent failure on this thread.
///
/// # Safety
/// The pointer stays valid until the next failing call on the same thread;
/// copy the string if it must outlive that.
#[no_mangle]
pub unsafe extern "C" fn problcf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
///
/// # Safety
/// Always valid; never freed by the caller.
#[no_mangle]
pub unsafe extern "C" fn problcf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque material model handle.
pub struct ProblcfModel(MaterialModel);

/// Opaque test-campaign handle.
pub struct ProblcfCampaign(Campaign);

/// Creates a material model from the five parameters, the elastic modulus
/// and the reference area. On success writes a handle to `out`; release it
/// with `problcf_model_free`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_new(
    elastic_modulus: f64,
    sigma_f: f64,
    b: f64,
    eps_f: f64,
    c: f64,
    m: f64,
    a_ref: f64,
    out: *mut *mut ProblcfModel,
) -> ProblcfStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let cmb = CmbParams::new(elastic_modulus, sigma_f, b, eps_f, c).map_err(lift)?;
        let model = MaterialModel::new(cmb, m, a_ref).map_err(lift)?;
        unsafe { out.write(Box::into_raw(Box::new(ProblcfModel(model)))) };
        Ok(())
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_free(model: *mut ProblcfModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

unsafe fn deref_model<'a>(
    model: *const ProblcfModel,
) -> Result<&'a MaterialModel, (ProblcfStatus, String)> {
    if model.is_null() {
        return Err(null_arg("model"));
    }
    Ok(unsafe { &(*model).0 })
}

/// Copies the model parameters into `out[7]` in the order
/// `elastic_modulus, sigma_f, b, eps_f, c, m, a_ref`.
///
/// # Safety
/// `out` must point to at least 7 doubles.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_params(
    model: *const ProblcfModel,
    out: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let values = [
            m.cmb.elastic_modulus,
            m.cmb.sigma_f,
            m.cmb.b,
            m.cmb.eps_f,
            m.cmb.c,
            m.m,
            m.a_ref,
        ];
        for (i, v) in values.iter().enumerate() {
            unsafe { out.add(i).write(*v) };
        }
        Ok(())
    })
}

/// Strain amplitude sustained for `cycles` cycles on the median curve of
/// the unit specimen.
///
/// # Safety
/// `out_strain` must point to writable storage for one double.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_strain_at(
    model: *const ProblcfModel,
    cycles: f64,
    out_strain: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out_strain.is_null() {
            return Err(null_arg("out_strain"));
        }
        let strain = m.cmb.strain_amplitude(cycles).map_err(lift)?;
        unsafe { out_strain.write(strain) };
        Ok(())
    })
}

/// Deterministic life (cycles) at `strain` on the unit-specimen curve.
///
/// # Safety
/// `out_cycles` must point to writable storage for one double.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_cycles_at(
    model: *const ProblcfModel,
    strain: f64,
    out_cycles: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out_cycles.is_null() {
            return Err(null_arg("out_cycles"));
        }
        let cycles = m.cmb.cycles_for_strain(strain).map_err(lift)?;
        unsafe { out_cycles.write(cycles) };
        Ok(())
    })
}

/// Life quantile at failure probability `p` for a specimen of gauge area
/// `area_mm2` held at `strain`.
///
/// # Safety
/// `out_cycles` must point to writable storage for one double.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_life_quantile(
    model: *const ProblcfModel,
    strain: f64,
    area_mm2: f64,
    p: f64,
    out_cycles: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out_cycles.is_null() {
            return Err(null_arg("out_cycles"));
        }
        let dist = m.life_distribution(strain, area_mm2).map_err(lift)?;
        let cycles = dist.quantile(p).map_err(lift)?;
        unsafe { out_cycles.write(cycles) };
        Ok(())
    })
}

/// Probability that a specimen of gauge area `area_mm2` at `strain`
/// survives `cycles` cycles without a crack.
///
/// # Safety
/// `out_survival` must point to writable storage for one double.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_survival(
    model: *const ProblcfModel,
    strain: f64,
    area_mm2: f64,
    cycles: f64,
    out_survival: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out_survival.is_null() {
            return Err(null_arg("out_survival"));
        }
        let dist = m.life_distribution(strain, area_mm2).map_err(lift)?;
        unsafe { out_survival.write(dist.survival(cycles)) };
        Ok(())
    })
}

/// Median-curve coefficients for a gauge area: writes `sigma_f(area)` and
/// `eps_f(area)`.
///
/// # Safety
/// `out_sigma_f` and `out_eps_f` must each point to one double.
#[no_mangle]
pub unsafe extern "C" fn problcf_model_coefficients_for_area(
    model: *const ProblcfModel,
    area_mm2: f64,
    out_sigma_f: *mut f64,
    out_eps_f: *mut f64,
) -> ProblcfStatus {
    guarded(|| {
        let m = unsafe { deref_model(model) }?;
        if out_sigma_f.is_null() {
            return Err(null_arg("out_sigma_f"));
        }
        if out_eps_f.is_null() {
            return Err(null_arg("out_eps_f"));
        }
        let (sf, ef) = m.coefficients_for_area(area_mm2).map_err(lift)?;
        unsafe {
            out_sigma_f.write(sf);
            out_eps_f.write(ef);
        }
        Ok(())
    })
}

/// Reads a campaign CSV
/// (`specimen_id,strain_amplitude,cycles_to_initiation,gauge_area_mm2`).
/// `strain_is_percent` selects the unit of the strain column. Release the
/// handle with `problcf_campaign_free`.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn problcf_campaign_read_csv(
    path: *const c_char,
    strain_is_percent: c_int,
    out: *mut *mut ProblcfCampaign,
) -> ProblcfStatus {
    guarded(|| {
        if path.is_null() {
            return Err(null_arg("path"));
        }
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| (ProblcfStatus::Utf8Error, "path is not valid UTF-8".into()))?;
        let unit = if strain_is_percent != 0 {
            StrainUnit::Percent
        } else {
            StrainUnit::Fraction
        };
        let campaign = read_campaign(Path::new(path), unit).map_err(lift)?;
        unsafe { out.write(Box::into_raw(Box::new(ProblcfCampaign(campaign)))) };
        Ok(())
    })
}

/// Releases a campaign handle. Null is a no-op.
///
/// # Safety
/// `campaign` must be a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn problcf_campaign_free(campaign: *mut ProblcfCampaign) {
    if !campaign.is_null() {
        drop(unsafe { Box::from_raw(campaign) });
    }
}

/// Number of records in a campaign.
///
/// # Safety
/// `out_len` must point to writable storage for one size_t.
#[no_mangle]
pub unsafe extern "C" fn problcf_campaign_len(
    campaign: *const ProblcfCampaign,
    out_len: *mut usize,
) -> ProblcfStatus {
    guarded(|| {
        if campaign.is_null() {
            return Err(null_arg("campaign"));
        }
        if out_len.is_null() {
            return Err(null_arg("out_len"));
        }
        unsafe { out_len.write((*campaign).0.len()) };
        Ok(())
    })
}

/// Maximum-likelihood fit of the five material parameters, with the elastic
/// modulus fixed at `elastic_modulus` and coefficients referenced to
/// `a_ref`. On success writes a model handle, the attained log likelihood
/// and a convergence flag (1 converged, 0 not).
///
/// # Safety
/// `out_model`, `out_log_likelihood` and `out_converged` must each point to
/// writable storage of the matching type.
#[no_mangle]
pub unsafe extern "C" fn problcf_fit(
    campaign: *const ProblcfCampaign,
    elastic_modulus: f64,
    a_ref: f64,
    out_model: *mut *mut ProblcfModel,
    out_log_likelihood: *mut f64,
    out_converged: *mut c_int,
) -> ProblcfStatus {
    guarded(|| {
        if campaign.is_null() {
            return Err(null_arg("campaign"));
        }
        if out_model.is_null() {
            return Err(null_arg("out_model"));
        }
        if out_log_likelihood.is_null() {
            return Err(null_arg("out_log_likelihood"));
        }
        if out_converged.is_null() {
            return Err(null_arg("out_converged"));
        }
        let mut config = FitConfig::new(elastic_modulus);
        config.a_ref = a_ref;
        let fit = fit_mle(unsafe { &(*campaign).0 }, &config).map_err(lift)?;
        unsafe {
            out_model.write(Box::into_raw(Box::new(ProblcfModel(fit.model))));
            out_log_likelihood.write(fit.log_likelihood);
            out_converged.write(fit.converged as c_int);
        }
        Ok(())
    })
}
