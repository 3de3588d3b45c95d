//! C ABI for the `bicm` library.
//!
//! Every function returns a [`BicmStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`bicm_last_error`]. Constellations are opaque handles owned by the caller
//! and released with [`bicm_constellation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bicm::cli::parse_modulation;
use bicm::constellation::{Constellation, Labeling};
use bicm::convcode::{try_ber_union_bound, weight_spectrum, ConvCode};
use bicm::expurgation::{NeighborAssignment, SelectOptions, Variant};
use bicm::geometry::{verify_theorem1, GridSpec};
use bicm::pep::{f_bound, pep_exact, ChannelModel, ChannelSpec, DistanceMixture};
use bicm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BicmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedGeometry = 3,
    Numerical = 4,
    Inconclusive = 5,
    Panic = 6,
}

pub const BICM_LABELING_GRAY: u32 = 0;
pub const BICM_LABELING_SP: u32 = 1;

pub const BICM_VARIANT_ORIG: u32 = 0;
pub const BICM_VARIANT_I: u32 = 1;
pub const BICM_VARIANT_II: u32 = 2;

pub const BICM_CHANNEL_AWGN: u32 = 0;
pub const BICM_CHANNEL_RAYLEIGH: u32 = 1;

/// Opaque labeled constellation.
pub struct BicmConstellation {
    inner: Constellation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: BicmStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Argument(_) => BicmStatus::InvalidArgument,
            Error::UnsupportedGeometry(_) => BicmStatus::UnsupportedGeometry,
            Error::Domain(_) | Error::Numerical { .. } => BicmStatus::Numerical,
            Error::Inconclusive(_) => BicmStatus::Inconclusive,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: BicmStatus, message: &str) -> Failure {
    Failure {
        status,
        message: message.to_string(),
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BicmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BicmStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(_) => {
            set_last_error("internal panic");
            BicmStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    // SAFETY: non-null checked; the caller guarantees the pointer is valid and aligned.
    unsafe { p.as_mut() }.ok_or_else(|| fail(BicmStatus::NullPointer, "null output pointer"))
}

fn handle<'a>(c: *const BicmConstellation) -> Result<&'a Constellation, Failure> {
    // SAFETY: non-null checked; the caller passes a live handle.
    unsafe { c.as_ref() }
        .map(|h| &h.inner)
        .ok_or_else(|| fail(BicmStatus::NullPointer, "null constellation handle"))
}

fn labeling(code: u32) -> Result<Labeling, Failure> {
    match code {
        BICM_LABELING_GRAY => Ok(Labeling::Gray),
        BICM_LABELING_SP => Ok(Labeling::SetPartition),
        _ => Err(fail(BicmStatus::InvalidArgument, "unknown labeling code")),
    }
}

fn variant(code: u32) -> Result<Variant, Failure> {
    match code {
        BICM_VARIANT_ORIG => Ok(Variant::Orig),
        BICM_VARIANT_I => Ok(Variant::One),
        BICM_VARIANT_II => Ok(Variant::Two),
        _ => Err(fail(BicmStatus::InvalidArgument, "unknown variant code")),
    }
}

fn channel(code: u32, es_n0_db: f64) -> Result<ChannelSpec, Failure> {
    let model = match code {
        BICM_CHANNEL_AWGN => ChannelModel::Awgn,
        BICM_CHANNEL_RAYLEIGH => ChannelModel::RayleighCsi,
        _ => return Err(fail(BicmStatus::InvalidArgument, "unknown channel code")),
    };
    Ok(ChannelSpec::new(model, es_n0_db))
}

fn mixture(c: &Constellation, v: Variant) -> Result<DistanceMixture, Failure> {
    let a = NeighborAssignment::build(c, v, &SelectOptions::nonstandard())?;
    Ok(DistanceMixture::from_assignment(c, &a)?)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bicm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bicm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a constellation by name (`4PSK`, `8PSK`, `4QAM`, `16QAM`, `64QAM`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bicm_constellation_new(
    name: *const c_char,
    labeling_code: u32,
    out: *mut *mut BicmConstellation,
) -> BicmStatus {
    guard(|| {
        let out = out_ref(out)?;
        if name.is_null() {
            return Err(fail(BicmStatus::NullPointer, "null name"));
        }
        // SAFETY: non-null, NUL-terminated per the contract.
        let name = unsafe { CStr::from_ptr(name) }
            .to_str()
            .map_err(|_| fail(BicmStatus::InvalidArgument, "name is not UTF-8"))?;
        let inner = parse_modulation(name, labeling(labeling_code)?)?;
        *out = Box::into_raw(Box::new(BicmConstellation { inner }));
        Ok(())
    })
}

/// Releases a handle from [`bicm_constellation_new`]. Null is ignored.
///
/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bicm_constellation_free(c: *mut BicmConstellation) {
    if !c.is_null() {
        // SAFETY: created by Box::into_raw in bicm_constellation_new.
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Number of points and bits per label.
///
/// # Safety
/// `c` must be a live handle; `points` and `bits` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bicm_constellation_size(
    c: *const BicmConstellation,
    points: *mut usize,
    bits: *mut usize,
) -> BicmStatus {
    guard(|| {
        let c = handle(c)?;
        *out_ref(points)? = c.len();
        *out_ref(bits)? = c.bits();
        Ok(())
    })
}

/// Coordinates and label of point `idx`.
///
/// # Safety
/// `c` must be a live handle; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn bicm_constellation_point(
    c: *const BicmConstellation,
    idx: usize,
    re: *mut f64,
    im: *mut f64,
    label: *mut u32,
) -> BicmStatus {
    guard(|| {
        let c = handle(c)?;
        if idx >= c.len() {
            return Err(fail(BicmStatus::InvalidArgument, "point index out of range"));
        }
        let p = c.point(idx);
        *out_ref(re)? = p.re;
        *out_ref(im)? = p.im;
        *out_ref(label)? = c.labels()[idx];
        Ok(())
    })
}

/// Harmonic mean squared neighbor distance under a variant.
///
/// # Safety
/// `c` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bicm_harmonic_distance(
    c: *const BicmConstellation,
    variant_code: u32,
    out: *mut f64,
) -> BicmStatus {
    guard(|| {
        let c = handle(c)?;
        let a = NeighborAssignment::build(c, variant(variant_code)?, &SelectOptions::nonstandard())?;
        *out_ref(out)? = a.harmonic_distance(c);
        Ok(())
    })
}

/// Expurgated bound `f(d)` on the subset decision error for Hamming distance `d`.
///
/// # Safety
/// `c` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bicm_f_bound(
    c: *const BicmConstellation,
    variant_code: u32,
    channel_code: u32,
    es_n0_db: f64,
    d: u32,
    out: *mut f64,
) -> BicmStatus {
    guard(|| {
        let c = handle(c)?;
        let ch = channel(channel_code, es_n0_db)?;
        let out = out_ref(out)?;
        *out = f_bound(&mixture(c, variant(variant_code)?)?, &ch, d)?;
        Ok(())
    })
}

/// Pairwise error probability for the squared distances `d2[0..len]`.
///
/// # Safety
/// `d2` must point to `len` readable values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bicm_pep_exact(
    channel_code: u32,
    es_n0_db: f64,
    d2: *const f64,
    len: usize,
    out: *mut f64,
) -> BicmStatus {
    guard(|| {
        let ch = channel(channel_code, es_n0_db)?;
        let out = out_ref(out)?;
        let d2 = if len == 0 {
            &[][..]
        } else if d2.is_null() {
            return Err(fail(BicmStatus::NullPointer, "null distance array"));
        } else {
            // SAFETY: non-null with `len` elements per the contract.
            unsafe { std::slice::from_raw_parts(d2, len) }
        };
        *out = pep_exact(&ch, d2)?;
        Ok(())
    })
}

/// BER union bound for the (133, 171) code, summed up to `d_max`.
/// `truncation` receives the share of the last term.
///
/// # Safety
/// `c` must be a live handle; `out` a valid pointer; `truncation` may be null.
#[no_mangle]
pub unsafe extern "C" fn bicm_ber_bound(
    c: *const BicmConstellation,
    variant_code: u32,
    channel_code: u32,
    es_n0_db: f64,
    d_max: u32,
    out: *mut f64,
    truncation: *mut f64,
) -> BicmStatus {
    guard(|| {
        let c = handle(c)?;
        let ch = channel(channel_code, es_n0_db)?;
        let out = out_ref(out)?;
        let mix = mixture(c, variant(variant_code)?)?;
        let spec = weight_spectrum(&ConvCode::standard(), d_max)?;
        let ub = try_ber_union_bound(&spec, |d| f_bound(&mix, &ch, d))?;
        *out = ub.value;
        // SAFETY: optional output; null means not requested.
        if let Some(t) = unsafe { truncation.as_mut() } {
            *t = ub.last_term_ratio;
        }
        Ok(())
    })
}

/// Grid check of the rotated-QPSK expurgation counterexample.
///
/// # Safety
/// `confirmed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bicm_verify_theorem1(
    theta_deg: f64,
    grid_step: f64,
    confirmed: *mut bool,
) -> BicmStatus {
    guard(|| {
        let confirmed = out_ref(confirmed)?;
        *confirmed = verify_theorem1(theta_deg, &GridSpec::square(4.0, grid_step))?.confirmed();
        Ok(())
    })
}
