//! C ABI over `factorlab`.
//!
//! Objects are opaque heap handles (`FlSpectrum`, `FlLattice`) created by
//! `fl_*_new` style constructors and released with the matching `_free`.
//! Every fallible function returns an [`FlStatus`]; on failure the message
//! is available from [`fl_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use factorlab::embezzlement::embezzlement_error;
use factorlab::factor_types::kappa_max_formula;
use factorlab::lattice::{build_model, commuting_check, hamiltonian_spectrum_small, Boundary, LatticeModel};
use factorlab::spectra::{entropy, sorted_fidelity, LogBase};
use factorlab::{chains, classify_itpfi, locc, Error, FactorType, Prune, Spectrum};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Unsupported = 3,
    CapExceeded = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlTypeKind {
    IFinite = 0,
    IInfinite = 1,
    II1 = 2,
    IIInfinite = 3,
    III0 = 4,
    IIILambda = 5,
    III1 = 6,
    Undetermined = 7,
}

/// Flattened factor type. `n` is set for `IFinite`, `lambda` for `IIILambda`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlFactorType {
    pub kind: FlTypeKind,
    pub n: u64,
    pub lambda: f64,
}

/// Opaque Schmidt spectrum.
pub struct FlSpectrum(Spectrum);

/// Opaque commuting-projector lattice model.
pub struct FlLattice(LatticeModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(FlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidInput(_) | Error::Config(_) => FlStatus::InvalidInput,
            Error::Unsupported(_) => FlStatus::Unsupported,
            Error::CapExceeded { .. } => FlStatus::CapExceeded,
            _ => FlStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FlStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside factorlab");
            FlStatus::Panic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_spectrum(out: *mut *mut FlSpectrum, s: Spectrum) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(FlSpectrum(s))), "out")
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `fl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Normalized spectrum from `len` non-negative weights.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_new(weights: *const f64, len: usize, out: *mut *mut FlSpectrum) -> FlStatus {
    guard(|| {
        if weights.is_null() {
            return Err(null("weights"));
        }
        let w = std::slice::from_raw_parts(weights, len);
        put_spectrum(out, Spectrum::new(w)?)
    })
}

/// `[1, λ] / (1 + λ)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_powers(lambda: f64, out: *mut *mut FlSpectrum) -> FlStatus {
    guard(|| put_spectrum(out, Spectrum::powers(lambda)?))
}

/// # Safety
/// `s` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_free(s: *mut FlSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Exact tensor product.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_tensor(
    a: *const FlSpectrum,
    b: *const FlSpectrum,
    out: *mut *mut FlSpectrum,
) -> FlStatus {
    guard(|| {
        let (a, b) = (obj(a, "a")?, obj(b, "b")?);
        put_spectrum(out, a.0.tensor(&b.0, Prune::EXACT))
    })
}

/// `k`-fold tensor power with default pruning (tail mass up to 1e-12 per step).
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_tensor_power(s: *const FlSpectrum, k: usize, out: *mut *mut FlSpectrum) -> FlStatus {
    guard(|| put_spectrum(out, obj(s, "s")?.0.tensor_power(k, Prune::default())))
}

/// Number of distinct weights.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_num_levels(s: *const FlSpectrum, out: *mut usize) -> FlStatus {
    guard(|| put(out, obj(s, "s")?.0.num_levels(), "out"))
}

/// Entropy in nats.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_spectrum_entropy(s: *const FlSpectrum, out: *mut f64) -> FlStatus {
    guard(|| put(out, entropy(&obj(s, "s")?.0, LogBase::Nats).value, "out"))
}

/// Overlap of the two states after optimal local unitaries.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_fidelity(a: *const FlSpectrum, b: *const FlSpectrum, out: *mut f64) -> FlStatus {
    guard(|| put(out, sorted_fidelity(&obj(a, "a")?.0, &obj(b, "b")?.0).value, "out"))
}

fn flatten(t: &FactorType) -> FlFactorType {
    let (kind, n, lambda) = match *t {
        FactorType::IFinite { n } => (FlTypeKind::IFinite, n, 0.0),
        FactorType::IInfinite => (FlTypeKind::IInfinite, 0, 0.0),
        FactorType::II1 => (FlTypeKind::II1, 0, 0.0),
        FactorType::IIInfinite => (FlTypeKind::IIInfinite, 0, 0.0),
        FactorType::III0 => (FlTypeKind::III0, 0, 0.0),
        FactorType::IIILambda { lambda } => (FlTypeKind::IIILambda, 0, lambda),
        FactorType::III1 => (FlTypeKind::III1, 0, 0.0),
        FactorType::Undetermined { .. } => (FlTypeKind::Undetermined, 0, 0.0),
    };
    FlFactorType { kind, n, lambda }
}

/// Factor type of the infinite tensor product of copies of `s`. With
/// `ambient`, the result is tensored with I_∞.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_classify(s: *const FlSpectrum, ambient: bool, out: *mut FlFactorType) -> FlStatus {
    guard(|| {
        let c = classify_itpfi(&obj(s, "s")?.0, ambient)?;
        put(out, flatten(&c.factor_type), "out")
    })
}

/// Writes the type label (e.g. `III_0.5`) into `buf` with a trailing NUL.
/// `needed` receives the required size including the NUL; with a short
/// buffer the call fails with `BufferTooSmall` and writes nothing else.
///
/// # Safety
/// `s` must be a live handle; `buf` must hold `cap` writable bytes (may be
/// null when `cap` is 0); `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_classify_label(
    s: *const FlSpectrum,
    ambient: bool,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> FlStatus {
    guard(|| {
        let label = classify_itpfi(&obj(s, "s")?.0, ambient)?.factor_type.to_string();
        let bytes = label.as_bytes();
        put(needed, bytes.len() + 1, "needed")?;
        if cap < bytes.len() + 1 {
            return Err(Failure(FlStatus::BufferTooSmall, format!("label needs {} bytes", bytes.len() + 1)));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        buf.add(bytes.len()).write(0);
        Ok(())
    })
}

/// Embezzlement distances `sqrt(2 - 2F)` and `2 sqrt(1 - F^2)` of `target`
/// from `resource`.
///
/// # Safety
/// Handles must be live; `vector` and `trace` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_embezzlement_error(
    resource: *const FlSpectrum,
    target: *const FlSpectrum,
    vector: *mut f64,
    trace: *mut f64,
) -> FlStatus {
    guard(|| {
        let e = embezzlement_error(&obj(resource, "resource")?.0, &obj(target, "target")?.0);
        put(vector, e.error, "vector")?;
        put(trace, e.norm_error, "trace")
    })
}

/// Closed-form `2(1 - sqrt λ)/(1 + sqrt λ)`; NaN outside `(0, 1]`.
#[no_mangle]
pub extern "C" fn fl_kappa_max_formula(lambda: f64) -> f64 {
    if lambda > 0.0 && lambda <= 1.0 {
        kappa_max_formula(lambda)
    } else {
        f64::NAN
    }
}

/// Exact LOCC convertibility `source -> target`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_convertible(source: *const FlSpectrum, target: *const FlSpectrum, out: *mut bool) -> FlStatus {
    guard(|| put(out, locc::convertible(&obj(source, "source")?.0, &obj(target, "target")?.0)?, "out"))
}

/// Best overlap with `target` reachable from `source` by LOCC.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_max_conversion_fidelity(
    source: *const FlSpectrum,
    target: *const FlSpectrum,
    out: *mut f64,
) -> FlStatus {
    guard(|| {
        let c = locc::max_conversion_fidelity(&obj(source, "source")?.0, &obj(target, "target")?.0)?;
        put(out, c.fidelity, "out")
    })
}

/// Bell pairs distillable from `source` with overlap at least `1 - eps`.
///
/// # Safety
/// `source` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_distillable_bells(source: *const FlSpectrum, eps: f64, out: *mut u32) -> FlStatus {
    guard(|| put(out, locc::distillable_bells(&obj(source, "source")?.0, eps)?, "out"))
}

/// Lattice model on a `dimension`-dimensional box. `boundary` is 0 for
/// open, 1 for periodic; `rho` is the edge spectrum.
///
/// # Safety
/// `extent` must point to `dimension` readable values; `rho` must be live;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_lattice_new(
    dimension: usize,
    extent: *const usize,
    boundary: u32,
    m: usize,
    rho: *const FlSpectrum,
    out: *mut *mut FlLattice,
) -> FlStatus {
    guard(|| {
        if extent.is_null() {
            return Err(null("extent"));
        }
        let boundary = match boundary {
            0 => Boundary::Open,
            1 => Boundary::Periodic,
            b => return Err(Failure(FlStatus::InvalidInput, format!("unknown boundary {b}"))),
        };
        let ext = std::slice::from_raw_parts(extent, dimension);
        let model = build_model(dimension, ext, boundary, m, &obj(rho, "rho")?.0)?;
        put(out, Box::into_raw(Box::new(FlLattice(model))), "out")
    })
}

/// # Safety
/// `l` must be null or a live handle from [`fl_lattice_new`].
#[no_mangle]
pub unsafe extern "C" fn fl_lattice_free(l: *mut FlLattice) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Whether all edge projectors commute (within 1e-12).
///
/// # Safety
/// `l` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_lattice_commuting_check(l: *const FlLattice, out: *mut bool) -> FlStatus {
    guard(|| put(out, commuting_check(&obj(l, "lattice")?.0)?, "out"))
}

/// Ground energy, its degeneracy and the gap (NaN if there is one level).
///
/// # Safety
/// `l` must be live; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_lattice_ground(
    l: *const FlLattice,
    energy: *mut f64,
    degeneracy: *mut u64,
    gap: *mut f64,
) -> FlStatus {
    guard(|| {
        let h = hamiltonian_spectrum_small(&obj(l, "lattice")?.0)?;
        put(energy, h.ground_energy, "energy")?;
        put(degeneracy, h.ground_degeneracy, "degeneracy")?;
        put(gap, h.gap.unwrap_or(f64::NAN), "gap")
    })
}

/// Entropy (nats) of `ℓ` consecutive sites of the half-filled XX chain.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_xx_entropy(l: usize, out: *mut f64) -> FlStatus {
    guard(|| put(out, chains::xx_entropy(l)?, "out"))
}

/// Half-chain entropy (nats) of the `s`-colored Motzkin chain of length `l`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_motzkin_entropy(l: usize, s: u32, out: *mut f64) -> FlStatus {
    guard(|| put(out, chains::motzkin_entropy(l, s)?, "out"))
}
