//! C interface to the actstate solvers.
//!
//! Every call returns an [`ActStatus`]. On failure a message is kept per
//! thread and can be read with [`act_last_error`]. Objects cross the
//! boundary as opaque handles that must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use actstate::bc::{self, BcError, BcOptions, RegionBoundary};
use actstate::cdc::{self, CdcError, CdcOptions};
use actstate::channel::ConstraintPair;
use actstate::config::{self, ConfigError, SpecConfig};
use actstate::gaussian::{self, GaussMode, GaussOptions, GaussPowers};
use actstate::probing::{self, ProbingError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Infeasible = 4,
    Numerical = 5,
    WrongKind = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActSpecKind {
    Ptp = 0,
    Bc = 1,
    Probing = 2,
    Gaussian = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActGaussMode {
    Joint = 0,
    MessageOnly = 1,
    ActionIndependent = 2,
}

/// A parsed model configuration.
pub struct ActSpec {
    inner: SpecConfig,
}

/// Points and upper hull of a rate region.
pub struct ActRegion {
    inner: RegionBoundary,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActCdcPoint {
    pub rate: f64,
    pub distortion: f64,
    pub cost: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActGaussPoint {
    pub rate: f64,
    pub distortion: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub g: f64,
    pub feasible: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Fail(ActStatus, String);

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail(ActStatus::Config, e.to_string())
    }
}

impl From<CdcError> for Fail {
    fn from(e: CdcError) -> Self {
        let code = match e {
            CdcError::Infeasible { .. } => ActStatus::Infeasible,
            CdcError::InvalidOptions(_) => ActStatus::InvalidArgument,
            _ => ActStatus::Numerical,
        };
        Fail(code, e.to_string())
    }
}

impl From<BcError> for Fail {
    fn from(e: BcError) -> Self {
        let code = match e {
            BcError::Infeasible { .. } => ActStatus::Infeasible,
            BcError::InvalidOptions(_) | BcError::Model(_) => ActStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

impl From<ProbingError> for Fail {
    fn from(e: ProbingError) -> Self {
        match e {
            ProbingError::Region(r) => r.into(),
            other => Fail(ActStatus::InvalidArgument, other.to_string()),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ActStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ActStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            ActStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(ActStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ActStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn act_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn act_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `spec_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_spec_load(path: *const c_char, spec_out: *mut *mut ActSpec) -> ActStatus {
    guard(|| {
        let slot = out(spec_out)?;
        let l = config::parse_config(Path::new(str_arg(path)?))?;
        *slot = Box::into_raw(Box::new(ActSpec { inner: l.value }));
        Ok(())
    })
}

/// Parses configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `spec_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_spec_parse(text: *const c_char, spec_out: *mut *mut ActSpec) -> ActStatus {
    guard(|| {
        let slot = out(spec_out)?;
        let l = config::parse_config_str(str_arg(text)?)?;
        *slot = Box::into_raw(Box::new(ActSpec { inner: l.value }));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from a load/parse call or be NULL. `kind_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn act_spec_kind(spec: *const ActSpec, kind_out: *mut ActSpecKind) -> ActStatus {
    guard(|| {
        let s = spec.as_ref().ok_or_else(null)?;
        *out(kind_out)? = match s.inner {
            SpecConfig::Ptp(_) => ActSpecKind::Ptp,
            SpecConfig::Bc(_) => ActSpecKind::Bc,
            SpecConfig::Probing(_) => ActSpecKind::Probing,
            SpecConfig::Gaussian(_) => ActSpecKind::Gaussian,
        };
        Ok(())
    })
}

/// # Safety
/// `spec` must come from a load/parse call or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn act_spec_free(spec: *mut ActSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Capacity-distortion-cost value of a `ptp` spec. `u_size` 0 picks the
/// default auxiliary size.
///
/// # Safety
/// `spec` must be a live handle and `point_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_cdc_solve(
    spec: *const ActSpec,
    distortion: f64,
    cost: f64,
    u_size: usize,
    restarts: usize,
    seed: u64,
    point_out: *mut ActCdcPoint,
) -> ActStatus {
    guard(|| {
        let s = spec.as_ref().ok_or_else(null)?;
        let slot = out(point_out)?;
        let SpecConfig::Ptp(p) = &s.inner else {
            return Err(Fail(ActStatus::WrongKind, format!("expected a ptp spec, got {}", s.inner.kind())));
        };
        let c = ConstraintPair::new(distortion, cost).map_err(|e| invalid(e.to_string()))?;
        let opts = CdcOptions { u_size: (u_size > 0).then_some(u_size), restarts, seed, ..Default::default() };
        let r = cdc::solve_cdc(p, &c, &opts)?;
        *slot = ActCdcPoint { rate: r.rate, distortion: r.achieved_distortion, cost: r.achieved_cost };
        Ok(())
    })
}

/// Rate region of a `bc` or `probing` spec at cost budget `cost`. Sizes of 0
/// pick the defaults.
///
/// # Safety
/// `spec` must be a live handle and `region_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_bc_region(
    spec: *const ActSpec,
    cost: f64,
    u1_size: usize,
    u2_size: usize,
    mu_grid: usize,
    seed: u64,
    region_out: *mut *mut ActRegion,
) -> ActStatus {
    guard(|| {
        let s = spec.as_ref().ok_or_else(null)?;
        let slot = out(region_out)?;
        let opts = BcOptions {
            u1_size: (u1_size > 0).then_some(u1_size),
            u2_size: (u2_size > 0).then_some(u2_size),
            mu_grid,
            seed,
            ..Default::default()
        };
        let region = match &s.inner {
            SpecConfig::Bc(b) => bc::solve_bc_region(b, cost, &opts)?,
            SpecConfig::Probing(p) => probing::probing_region(p, cost, &opts)?,
            other => return Err(Fail(ActStatus::WrongKind, format!("expected a bc or probing spec, got {}", other.kind()))),
        };
        *slot = Box::into_raw(Box::new(ActRegion { inner: region }));
        Ok(())
    })
}

/// Closed-form region of the binary example on `n_alpha` equally spaced
/// values of α in [0, 1/2].
///
/// # Safety
/// `region_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_binary_example_region(
    n1: f64,
    n2_tilde: f64,
    n_alpha: usize,
    region_out: *mut *mut ActRegion,
) -> ActStatus {
    guard(|| {
        let slot = out(region_out)?;
        if n_alpha == 0 {
            return Err(invalid("n_alpha must be positive"));
        }
        let alphas: Vec<f64> =
            (0..n_alpha).map(|i| if n_alpha == 1 { 0.0 } else { 0.5 * i as f64 / (n_alpha - 1) as f64 }).collect();
        let region = bc::binary_example_region(n1, n2_tilde, &alphas)?;
        *slot = Box::into_raw(Box::new(ActRegion { inner: region }));
        Ok(())
    })
}

/// # Safety
/// `region` must be a live handle and `len_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_region_hull_len(region: *const ActRegion, len_out: *mut usize) -> ActStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(null)?;
        *out(len_out)? = r.inner.hull.len();
        Ok(())
    })
}

/// Hull vertex `index`, ordered by increasing `R1`.
///
/// # Safety
/// `region` must be a live handle; `r1_out` and `r2_out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn act_region_hull_point(
    region: *const ActRegion,
    index: usize,
    r1_out: *mut f64,
    r2_out: *mut f64,
) -> ActStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(null)?;
        let (a, b) = (out(r1_out)?, out(r2_out)?);
        let p = r.inner.hull.get(index).ok_or_else(|| invalid(format!("hull has {} points", r.inner.hull.len())))?;
        *a = p.r1;
        *b = p.r2;
        Ok(())
    })
}

/// Largest `μ R1 + (1 − μ) R2` over the region.
///
/// # Safety
/// `region` must be a live handle and `value_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn act_region_support(region: *const ActRegion, mu: f64, value_out: *mut f64) -> ActStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(null)?;
        if !(0.0..=1.0).contains(&mu) {
            return Err(invalid("mu must lie in [0, 1]"));
        }
        *out(value_out)? = r.inner.support(mu);
        Ok(())
    })
}

/// # Safety
/// `region` must come from a region call or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn act_region_free(region: *mut ActRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// Best rate of the scalar Gaussian example at distortion budget `d`.
///
/// # Safety
/// `point_out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn act_gauss_optimize(
    p_a: f64,
    p_x: f64,
    var_w: f64,
    var_z: f64,
    d: f64,
    mode: ActGaussMode,
    starts: usize,
    seed: u64,
    point_out: *mut ActGaussPoint,
) -> ActStatus {
    guard(|| {
        let slot = out(point_out)?;
        let powers = GaussPowers::new(p_a, p_x, var_w, var_z).map_err(|e| invalid(e.to_string()))?;
        let mode = match mode {
            ActGaussMode::Joint => GaussMode::Joint,
            ActGaussMode::MessageOnly => GaussMode::MessageOnly,
            ActGaussMode::ActionIndependent => GaussMode::ActionIndependent,
        };
        let opts = GaussOptions { starts: starts.max(1), seed, ..Default::default() };
        let p = gaussian::optimize_gauss(&powers, d, mode, &opts).map_err(|e| invalid(e.to_string()))?;
        *slot = ActGaussPoint {
            rate: p.rate,
            distortion: p.distortion,
            alpha: p.params.alpha,
            beta: p.params.beta,
            delta: p.params.delta,
            g: p.params.g,
            feasible: p.feasible,
        };
        Ok(())
    })
}
