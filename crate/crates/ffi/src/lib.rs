//! C ABI over the tmirs core: opaque scenario handles, integer status codes,
//! and flat-array evaluation entry points so other languages can bind the
//! link model without touching Rust types.
//!
//! The companion header lives at `include/tmirs.h` and is maintained in
//! lockstep with this file; `tests/capi.rs` checks that every exported
//! symbol appears in the header.
//!
//! Conventions: every fallible function returns a `TmirsStatus` code and
//! writes results through out-pointers; pointers must be non-null and arrays
//! must have the documented length; panics are caught at the boundary and
//! reported as `TMIRS_INTERNAL`.

use std::ffi::{CStr, CString, c_char, c_int};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::Path;
use tmirs::harness::ScenarioConfig;
use tmirs::signal::{
    Direction, TmIrsConfig, default_phase_profile, effective_sum_rate, secrecy_rate,
    ser_monte_carlo, switching_coeff,
};

/// Status codes returned by every fallible entry point.
pub const TMIRS_OK: c_int = 0;
pub const TMIRS_NULL_ARG: c_int = 1;
pub const TMIRS_INVALID_ARG: c_int = 2;
pub const TMIRS_CONFIG_ERROR: c_int = 3;
pub const TMIRS_IO_ERROR: c_int = 4;
pub const TMIRS_INTERNAL: c_int = 5;

/// Opaque scenario handle: a fully resolved configuration plus the derived
/// geometry, link parameters and phase profile anchor.
pub struct TmirsScenario {
    cfg: ScenarioConfig,
}

fn scenario_into_handle(cfg: ScenarioConfig) -> *mut TmirsScenario {
    Box::into_raw(Box::new(TmirsScenario { cfg }))
}

/// Scenario with the published experiment constants.
#[unsafe(no_mangle)]
pub extern "C" fn tmirs_scenario_paper() -> *mut TmirsScenario {
    scenario_into_handle(ScenarioConfig::paper())
}

/// Scenario with the laptop-scale preset.
#[unsafe(no_mangle)]
pub extern "C" fn tmirs_scenario_desk() -> *mut TmirsScenario {
    scenario_into_handle(ScenarioConfig::desk())
}

/// Load a config file over the paper defaults. On success writes the new
/// handle through `out` and returns `TMIRS_OK`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_scenario_load(
    path: *const c_char,
    out: *mut *mut TmirsScenario,
) -> c_int {
    if path.is_null() || out.is_null() {
        return TMIRS_NULL_ARG;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return TMIRS_INVALID_ARG;
        };
        let mut cfg = ScenarioConfig::paper();
        match cfg.apply_file(Path::new(path)) {
            Ok(()) => {
                unsafe { *out = scenario_into_handle(cfg) };
                TMIRS_OK
            }
            Err(tmirs::Error::Io(_)) => TMIRS_IO_ERROR,
            Err(_) => TMIRS_CONFIG_ERROR,
        }
    }));
    result.unwrap_or(TMIRS_INTERNAL)
}

/// Release a scenario handle. Passing NULL is a no-op.
///
/// # Safety
/// `scenario` must be a handle returned by this library, not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_scenario_free(scenario: *mut TmirsScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Number of reflecting elements in the scenario (the required length of the
/// tau_on/delta_tau arrays). Returns 0 for NULL.
///
/// # Safety
/// `scenario` must be a live handle from this library.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_scenario_elements(scenario: *const TmirsScenario) -> usize {
    if scenario.is_null() {
        return 0;
    }
    let s = unsafe { &*scenario };
    s.cfg.m_x * s.cfg.m_z
}

/// Fourier coefficient of the on/off switching waveform at harmonic `l`.
///
/// # Safety
/// `re` and `im` must be valid pointers.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_switching_coeff(
    l: i64,
    tau_on: f64,
    delta_tau: f64,
    re: *mut f64,
    im: *mut f64,
) -> c_int {
    if re.is_null() || im.is_null() {
        return TMIRS_NULL_ARG;
    }
    if !(0.0..1.0).contains(&tau_on) || !(0.0..=1.0).contains(&delta_tau) {
        return TMIRS_INVALID_ARG;
    }
    let c = switching_coeff(l, tau_on, delta_tau);
    unsafe {
        *re = c.re;
        *im = c.im;
    }
    TMIRS_OK
}

unsafe fn build_config(
    scenario: &TmirsScenario,
    tau_on: *const f64,
    delta_tau: *const f64,
    len: usize,
) -> Result<TmIrsConfig, c_int> {
    let n = scenario.cfg.m_x * scenario.cfg.m_z;
    if len != n {
        return Err(TMIRS_INVALID_ARG);
    }
    let tau_on = unsafe { std::slice::from_raw_parts(tau_on, len) };
    let delta_tau = unsafe { std::slice::from_raw_parts(delta_tau, len) };
    if tau_on.iter().any(|t| !(0.0..1.0).contains(t))
        || delta_tau.iter().any(|d| !(0.0..=1.0).contains(d))
    {
        return Err(TMIRS_INVALID_ARG);
    }
    let geom = scenario.cfg.geometry();
    Ok(TmIrsConfig {
        tau_on: tau_on.to_vec(),
        delta_tau: delta_tau.to_vec(),
        phase: default_phase_profile(&geom, scenario.cfg.cu()),
    })
}

/// Effective sum rate of the configuration observed from (theta, phi),
/// with the phase profile anchored at the scenario's user direction.
///
/// # Safety
/// `scenario` must be a live handle; `tau_on`/`delta_tau` must point to
/// `len` readable doubles; `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_effective_sum_rate(
    scenario: *const TmirsScenario,
    tau_on: *const f64,
    delta_tau: *const f64,
    len: usize,
    theta: f64,
    phi: f64,
    out: *mut f64,
) -> c_int {
    if scenario.is_null() || tau_on.is_null() || delta_tau.is_null() || out.is_null() {
        return TMIRS_NULL_ARG;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let s = unsafe { &*scenario };
        let cfg = match unsafe { build_config(s, tau_on, delta_tau, len) } {
            Ok(cfg) => cfg,
            Err(code) => return code,
        };
        let rate = effective_sum_rate(
            &cfg,
            &s.cfg.geometry(),
            &s.cfg.ofdm(),
            Direction::new(theta, phi),
        );
        unsafe { *out = rate };
        TMIRS_OK
    }));
    result.unwrap_or(TMIRS_INTERNAL)
}

/// Secrecy rate of the configuration: effective rate at (cu_theta, cu_phi)
/// minus the rate at the scenario's eavesdropper direction.
///
/// # Safety
/// Same contract as [`tmirs_effective_sum_rate`].
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_secrecy_rate(
    scenario: *const TmirsScenario,
    tau_on: *const f64,
    delta_tau: *const f64,
    len: usize,
    cu_theta: f64,
    cu_phi: f64,
    out: *mut f64,
) -> c_int {
    if scenario.is_null() || tau_on.is_null() || delta_tau.is_null() || out.is_null() {
        return TMIRS_NULL_ARG;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let s = unsafe { &*scenario };
        let cfg = match unsafe { build_config(s, tau_on, delta_tau, len) } {
            Ok(cfg) => cfg,
            Err(code) => return code,
        };
        let rate = secrecy_rate(
            &cfg,
            &s.cfg.geometry(),
            &s.cfg.ofdm(),
            Direction::new(cu_theta, cu_phi),
            s.cfg.eve(),
        );
        unsafe { *out = rate };
        TMIRS_OK
    }));
    result.unwrap_or(TMIRS_INTERNAL)
}

/// Monte-Carlo symbol error rate of the configuration observed from
/// (theta, phi) over `n_frames` OFDM frames, deterministic per `seed`.
/// `degenerate` (may be NULL) receives 1 when the estimate fell back to
/// chance level because the equalizer gain was numerically zero.
///
/// # Safety
/// Same pointer contract as [`tmirs_effective_sum_rate`]; `degenerate` may
/// be NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn tmirs_ser(
    scenario: *const TmirsScenario,
    tau_on: *const f64,
    delta_tau: *const f64,
    len: usize,
    theta: f64,
    phi: f64,
    n_frames: u64,
    seed: u64,
    out_ser: *mut f64,
    degenerate: *mut c_int,
) -> c_int {
    if scenario.is_null() || tau_on.is_null() || delta_tau.is_null() || out_ser.is_null() {
        return TMIRS_NULL_ARG;
    }
    if n_frames == 0 {
        return TMIRS_INVALID_ARG;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let s = unsafe { &*scenario };
        let cfg = match unsafe { build_config(s, tau_on, delta_tau, len) } {
            Ok(cfg) => cfg,
            Err(code) => return code,
        };
        let est = ser_monte_carlo(
            &cfg,
            &s.cfg.geometry(),
            &s.cfg.ofdm(),
            Direction::new(theta, phi),
            n_frames as usize,
            seed,
        );
        unsafe {
            *out_ser = est.ser;
            if !degenerate.is_null() {
                *degenerate = est.degenerate_equalization as c_int;
            }
        }
        TMIRS_OK
    }));
    result.unwrap_or(TMIRS_INTERNAL)
}

/// Static description of a status code.
#[unsafe(no_mangle)]
pub extern "C" fn tmirs_status_message(status: c_int) -> *const c_char {
    let msg: &'static [u8] = match status {
        TMIRS_OK => b"ok\0",
        TMIRS_NULL_ARG => b"null argument\0",
        TMIRS_INVALID_ARG => b"invalid argument\0",
        TMIRS_CONFIG_ERROR => b"configuration error\0",
        TMIRS_IO_ERROR => b"i/o error\0",
        TMIRS_INTERNAL => b"internal error\0",
        _ => b"unknown status\0",
    };
    msg.as_ptr() as *const c_char
}

/// Library version as a NUL-terminated string owned by the library.
#[unsafe(no_mangle)]
pub extern "C" fn tmirs_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap())
        .as_ptr()
}
