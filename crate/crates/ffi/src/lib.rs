//! C ABI for the sobexlab engines.
//!
//! Domains and fields are opaque heap handles released with their `*_free`
//! function. Every entry point returns a [`SobexStatus`]; on failure the
//! message is kept per thread and read back with [`sobex_last_error`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sobexlab::config::{Config, DomainConfig};
use sobexlab::cutoffs::{eval_li, eval_lo, CollarCoords};
use sobexlab::experiments::{homog_counterexample_report, operator_norm_sweep, rate_section6, rate_section7};
use sobexlab::extension::{trace_jump, Extension, Face};
use sobexlab::field::{Plain, RegionField, ScalarField};
use sobexlab::fields::FieldDescriptor;
use sobexlab::geometry::{Domain, MushroomSpec};
use sobexlab::norms::regions::{comb_regions, cusp_regions, mushroom_regions, unit_cube, Selection};
use sobexlab::norms::{lp_norm, sobolev_seminorm, QuadratureSpec};
use sobexlab::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutsideDomain = 3,
    OnInterface = 4,
    Unsupported = 5,
    Numerical = 6,
    Degenerate = 7,
    Config = 8,
    Io = 9,
    BufferTooSmall = 10,
    /// A check of the experiment failed; the report is still returned.
    ChecksFailed = 11,
    Panic = 12,
}

/// Opaque domain handle.
pub struct SobexDomain {
    domain: Domain,
}

/// Opaque field handle, bound to the domain it was built on.
pub struct SobexField {
    field: Box<dyn ScalarField>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SobexStatus {
    match e {
        Error::InvalidParameter(_) => SobexStatus::InvalidArgument,
        Error::OutsideDomain { .. } => SobexStatus::OutsideDomain,
        Error::OnInterface(_) => SobexStatus::OnInterface,
        Error::UnsupportedRegion(_) => SobexStatus::Unsupported,
        Error::Numerical(_) => SobexStatus::Numerical,
        Error::Degenerate(_) => SobexStatus::Degenerate,
        Error::Config(_) | Error::Json(_) => SobexStatus::Config,
        Error::Io(_) | Error::Csv(_) => SobexStatus::Io,
    }
}

/// Failure inside the wrapper itself.
struct Fail(SobexStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<SobexStatus>) -> SobexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SobexStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SobexStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SobexStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(SobexStatus::InvalidArgument, "string contains a NUL byte".into()))
}

fn mushroom(d: &SobexDomain) -> FfiResult<&MushroomSpec> {
    match &d.domain {
        Domain::Mushroom(s) => Ok(s),
        _ => Err(Fail(
            SobexStatus::Unsupported,
            "operation needs a mushroom domain".into(),
        )),
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sobex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sobex_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sobex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Mushroom domain with the diagonal head placement.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sobex_mushroom_new(
    n: usize,
    p: f64,
    q: f64,
    m: usize,
    out: *mut *mut SobexDomain,
) -> SobexStatus {
    guard(|| {
        let domain = Domain::Mushroom(MushroomSpec::build(n, p, q, m)?);
        put(out, Box::into_raw(Box::new(SobexDomain { domain })), "out")?;
        Ok(SobexStatus::Ok)
    })
}

/// Domain from the `domain` block of a JSON configuration.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sobex_domain_from_config(
    config_json: *const c_char,
    out: *mut *mut SobexDomain,
) -> SobexStatus {
    guard(|| {
        let cfg = Config::from_json(as_str(config_json, "config_json")?)?;
        let domain = cfg.domain.build()?;
        put(out, Box::into_raw(Box::new(SobexDomain { domain })), "out")?;
        Ok(SobexStatus::Ok)
    })
}

/// # Safety
/// `d` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sobex_domain_free(d: *mut SobexDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sobex_domain_dim(d: *const SobexDomain) -> usize {
    d.as_ref().map_or(0, |d| d.domain.dim())
}

/// `log2` of the stem radius `r_k` and head radius of a mushroom domain.
///
/// # Safety
/// `d` must be a live handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sobex_mushroom_log2_radii(
    d: *const SobexDomain,
    k: usize,
    log2_stem: *mut f64,
    log2_head: *mut f64,
) -> SobexStatus {
    guard(|| {
        let s = mushroom(as_ref(d, "domain")?)?;
        if k == 0 || k > s.m {
            return Err(Fail(
                SobexStatus::InvalidArgument,
                format!("k = {k} outside 1..={}", s.m),
            ));
        }
        put(log2_stem, s.log2_stem_radius[k - 1], "log2_stem")?;
        put(log2_head, s.log2_head_radius[k - 1], "log2_head")?;
        Ok(SobexStatus::Ok)
    })
}

/// Writes 1 to `passed` when the head placement is admissible, 0 otherwise.
///
/// # Safety
/// `d` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sobex_mushroom_validate(d: *const SobexDomain, passed: *mut i32) -> SobexStatus {
    guard(|| {
        let s = mushroom(as_ref(d, "domain")?)?;
        put(passed, s.validate_placement().passed() as i32, "passed")?;
        Ok(SobexStatus::Ok)
    })
}

/// Region tag of a point as a NUL-terminated string in `buf`.
///
/// # Safety
/// `x` must hold `len` doubles and `buf` `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sobex_domain_classify(
    d: *const SobexDomain,
    x: *const f64,
    len: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> SobexStatus {
    guard(|| {
        let d = as_ref(d, "domain")?;
        let x = as_slice(x, len, "x")?;
        if len != d.domain.dim() {
            return Err(Fail(SobexStatus::InvalidArgument, format!("point of length {len}")));
        }
        let tag = match &d.domain {
            Domain::Mushroom(s) => s.classify(x).to_string(),
            Domain::Comb(c) => c.classify(x).to_string(),
            Domain::Cusp(c) if c.in_ball(x) => "ball".to_string(),
            Domain::Cusp(c) if c.in_cusp(x) => "cusp".to_string(),
            Domain::Cusp(_) => "outside".to_string(),
        };
        if buf.is_null() {
            return Err(null("buf"));
        }
        let bytes = tag.as_bytes();
        if bytes.len() + 1 > buf_len {
            return Err(Fail(
                SobexStatus::BufferTooSmall,
                format!("tag needs {} bytes", bytes.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
        Ok(SobexStatus::Ok)
    })
}

/// Builtin field by name (`thm53`, `sec6:k`, `sec7:k`, `poly:d`, `trig:w`, `const:c`).
///
/// # Safety
/// `d` must be a live handle, `name` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sobex_field_new(
    d: *const SobexDomain,
    name: *const c_char,
    out: *mut *mut SobexField,
) -> SobexStatus {
    guard(|| {
        let d = as_ref(d, "domain")?;
        let desc: FieldDescriptor = as_str(name, "name")?.parse()?;
        let field = desc.build(&d.domain)?;
        put(out, Box::into_raw(Box::new(SobexField { field })), "out")?;
        Ok(SobexStatus::Ok)
    })
}

/// # Safety
/// `f` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sobex_field_free(f: *mut SobexField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Value of a field.
///
/// # Safety
/// `x` must hold `len` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn sobex_field_value(
    f: *const SobexField,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> SobexStatus {
    guard(|| {
        let f = as_ref(f, "field")?;
        let x = as_slice(x, len, "x")?;
        if len != f.field.dim() {
            return Err(Fail(SobexStatus::InvalidArgument, format!("point of length {len}")));
        }
        put(out, f.field.value(x), "out")?;
        Ok(SobexStatus::Ok)
    })
}

/// `E(u)(x)` and, when `grad` is not null, `∇E(u)(x)` written to `grad[0..len]`.
///
/// # Safety
/// `x` must hold `len` doubles, `grad` room for `len` doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn sobex_extension_eval(
    d: *const SobexDomain,
    f: *const SobexField,
    x: *const f64,
    len: usize,
    value: *mut f64,
    grad: *mut f64,
) -> SobexStatus {
    guard(|| {
        let s = mushroom(as_ref(d, "domain")?)?;
        let f = as_ref(f, "field")?;
        let x = as_slice(x, len, "x")?;
        let ext = Extension::new(s, f.field.as_ref())?;
        put(value, ext.value_at(x)?, "value")?;
        if !grad.is_null() {
            let g = ext.gradient_at(x)?;
            ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
        }
        Ok(SobexStatus::Ok)
    })
}

/// Supremum of the extrapolated jump of `E(u)` across a face such as `head_bottom:1`.
///
/// # Safety
/// Handles must be live, `face` NUL-terminated and `sup` valid.
#[no_mangle]
pub unsafe extern "C" fn sobex_trace_jump(
    d: *const SobexDomain,
    f: *const SobexField,
    face: *const c_char,
    q: f64,
    sup: *mut f64,
) -> SobexStatus {
    guard(|| {
        let s = mushroom(as_ref(d, "domain")?)?;
        let f = as_ref(f, "field")?;
        let face: Face = as_str(face, "face")?.parse()?;
        put(sup, trace_jump(s, f.field.as_ref(), face, q)?.sup, "sup")?;
        Ok(SobexStatus::Ok)
    })
}

/// Inner and outer cut-off at offset `s - r/2` and axial coordinate `xn` of a
/// collar with outer radius `r`.
///
/// # Safety
/// `li` and `lo` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sobex_cutoffs(offset: f64, xn: f64, r: f64, li: *mut f64, lo: *mut f64) -> SobexStatus {
    guard(|| {
        let c = CollarCoords::from_offset(offset, xn, r)?;
        put(li, eval_li(&c), "li")?;
        put(lo, eval_lo(&c), "lo")?;
        Ok(SobexStatus::Ok)
    })
}

/// `∫|f|^p` (`integrand` 0) or `∫|∇f|^p` (`integrand` 1) over a region
/// selection, as `log2` of the total with its relative error. With `extend`
/// set the field is replaced by its extension (mushroom only).
/// `quadrature_json` may be null for the default rule.
///
/// # Safety
/// Handles must be live, strings NUL-terminated or null where allowed,
/// outputs valid.
#[no_mangle]
pub unsafe extern "C" fn sobex_norm(
    d: *const SobexDomain,
    f: *const SobexField,
    integrand: i32,
    p: f64,
    regions: *const c_char,
    extend: i32,
    quadrature_json: *const c_char,
    log2_total: *mut f64,
    rel_err: *mut f64,
) -> SobexStatus {
    guard(|| {
        let d = as_ref(d, "domain")?;
        let f = as_ref(f, "field")?;
        let sel: Selection = as_str(regions, "regions")?.parse()?;
        let quad: QuadratureSpec = if quadrature_json.is_null() {
            QuadratureSpec::default()
        } else {
            serde_json::from_str(as_str(quadrature_json, "quadrature_json")?)
                .map_err(|e| Fail(SobexStatus::Config, e.to_string()))?
        };
        quad.validate().map_err(|e| Fail(SobexStatus::Config, e.to_string()))?;
        let regs = match (&d.domain, sel) {
            (Domain::Mushroom(_), Selection::Cube) => unit_cube(d.domain.dim()),
            (Domain::Mushroom(s), sel) => mushroom_regions(s, sel)?,
            (Domain::Comb(c), Selection::All | Selection::Omega) => comb_regions(c, None)?,
            (Domain::Comb(c), Selection::Index(k)) => comb_regions(c, Some(k))?,
            (Domain::Cusp(c), Selection::All | Selection::Omega) => cusp_regions(c),
            (_, sel) => {
                return Err(Fail(
                    SobexStatus::Unsupported,
                    format!("regions '{sel}' on this domain"),
                ))
            }
        };
        let ext;
        let plain = Plain(f.field.as_ref());
        let rf: &dyn RegionField = if extend != 0 {
            ext = Extension::new(mushroom(d)?, f.field.as_ref())?;
            &ext
        } else {
            &plain
        };
        let report = match integrand {
            0 => lp_norm(rf, &regs, p, &quad)?,
            1 => sobolev_seminorm(rf, &regs, p, &quad)?,
            other => return Err(Fail(SobexStatus::InvalidArgument, format!("integrand {other}"))),
        };
        put(log2_total, report.log2_total, "log2_total")?;
        put(rel_err, report.rel_err, "rel_err")?;
        Ok(SobexStatus::Ok)
    })
}

/// Runs experiment `name` (`homog`, `opnorm`, `rate6`, `rate7`) from a JSON
/// configuration and returns the report as JSON in `out_json`, to be released
/// with [`sobex_string_free`]. Returns `ChecksFailed` with the report still set
/// when a check fails.
///
/// # Safety
/// Strings must be NUL-terminated and `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn sobex_experiment_run(
    config_json: *const c_char,
    name: *const c_char,
    out_json: *mut *mut c_char,
) -> SobexStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let cfg = Config::from_json(as_str(config_json, "config_json")?)?;
        let name = as_str(name, "name")?;
        let domain = cfg.domain.build()?;
        let quad = &cfg.quadrature;
        let exp = &cfg.experiment;
        let need = |d: &Domain| -> FfiResult<MushroomSpec> {
            match d {
                Domain::Mushroom(s) => Ok(s.clone()),
                _ => Err(Fail(SobexStatus::Config, format!("{name} needs a mushroom domain"))),
            }
        };
        let table = match name {
            "homog" => homog_counterexample_report(&need(&domain)?, &exp.mlist, quad)?,
            "opnorm" => operator_norm_sweep(&need(&domain)?, &exp.family()?, &exp.mlist, quad)?,
            "rate7" => rate_section7(&need(&domain)?, exp.kmax, exp.window(), quad)?,
            "rate6" => match (&domain, &cfg.domain) {
                (Domain::Comb(c), DomainConfig::Comb { p, q, .. }) => {
                    rate_section6(c, exp.kmax, *p, *q, exp.window(), quad)?
                }
                _ => return Err(Fail(SobexStatus::Config, "rate6 needs a comb domain".into())),
            },
            other => {
                return Err(Fail(
                    SobexStatus::InvalidArgument,
                    format!("unknown experiment '{other}'"),
                ))
            }
        };
        let text = serde_json::to_string(&table).map_err(|e| Fail(SobexStatus::Io, e.to_string()))?;
        out_json.write(to_c_string(text)?);
        if table.passed() {
            Ok(SobexStatus::Ok)
        } else {
            set_error(format!("{name}: a check failed"));
            Ok(SobexStatus::ChecksFailed)
        }
    })
}
