//! C ABI for the link toolkit: opaque handles, integer status codes, and
//! heap-allocated UTF-8 CSV strings.
//!
//! Conventions: every function returns [`McpmStatus`]; outputs go through
//! pointer parameters that are written only on `Ok`. A failing call stores
//! a message retrievable with [`mcpm_last_error_message`] (thread-local,
//! valid until the same thread's next failing call). All entry points
//! catch panics and surface them as a status instead of unwinding across
//! the boundary. Strings returned by the library are freed with
//! [`mcpm_string_free`], handles with their `_free` functions; every
//! `_free` accepts null.

use mcpm::channel::{channel_coefficients, window_hit_probability, ChannelParams, SlotGrid};
use mcpm::config::RunConfig;
use mcpm::runner::csv_for_command;
use mcpm::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every API function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McpmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// A parameter violated a documented precondition.
    InvalidParameter = 3,
    /// An argument left an operation's mathematical domain.
    Domain = 4,
    /// A combinatorial guard tripped (state space too large).
    Guard = 5,
    /// The run configuration is malformed or inconsistent.
    Config = 6,
    /// A numeric routine failed to converge or left its valid regime.
    Numerical = 7,
    Io = 8,
    Csv = 9,
    /// An internal panic was caught at the boundary.
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> McpmStatus {
    match err {
        Error::InvalidParameter(_) => McpmStatus::InvalidParameter,
        Error::Domain(_) => McpmStatus::Domain,
        Error::Guard(_) => McpmStatus::Guard,
        Error::Config(_) => McpmStatus::Config,
        Error::Numerical(_) => McpmStatus::Numerical,
        Error::Io(_) => McpmStatus::Io,
        Error::Csv(_) => McpmStatus::Csv,
    }
}

/// Run a fallible body, translating errors and panics into statuses.
fn guarded(body: impl FnOnce() -> Result<McpmStatus, Error>) -> McpmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            McpmStatus::Panic
        }
    }
}

fn null_error(what: &str) -> McpmStatus {
    set_error(&format!("{what} must not be null"));
    McpmStatus::NullPointer
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, McpmStatus> {
    if ptr.is_null() {
        return Err(null_error(what));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(&format!("{what} must be valid UTF-8"));
        McpmStatus::Utf8
    })
}

/// Message from this thread's most recent failing call; empty when no
/// failure has occurred. The pointer stays valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn mcpm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcpm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free a string returned by this library. Accepts null.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn mcpm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Diffusion channel: point transmitter and absorbing spherical receiver.
pub struct McpmChannel {
    params: ChannelParams,
}

/// Create a channel from the transmitter distance (micrometers, center to
/// center), receiver radius (micrometers), and diffusion coefficient
/// (square micrometers per second).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_new(
    r0_um: f64,
    rr_um: f64,
    d_um2_s: f64,
    out: *mut *mut McpmChannel,
) -> McpmStatus {
    guarded(|| {
        if out.is_null() {
            return Ok(null_error("out"));
        }
        let params = ChannelParams::new(r0_um, rr_um, d_um2_s)?;
        unsafe { *out = Box::into_raw(Box::new(McpmChannel { params })) };
        Ok(McpmStatus::Ok)
    })
}

/// Destroy a channel handle. Accepts null.
///
/// # Safety
/// `ch` must have come from `mcpm_channel_new` and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_free(ch: *mut McpmChannel) {
    if !ch.is_null() {
        drop(unsafe { Box::from_raw(ch) });
    }
}

/// Time of the first-hit density peak, seconds.
///
/// # Safety
/// `ch` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_peak_time_s(
    ch: *const McpmChannel,
    out: *mut f64,
) -> McpmStatus {
    guarded(|| {
        let (Some(ch), false) = (unsafe { ch.as_ref() }, out.is_null()) else {
            return Ok(null_error("ch/out"));
        };
        unsafe { *out = ch.params.peak_time_s() };
        Ok(McpmStatus::Ok)
    })
}

/// Probability that a molecule is ever captured.
///
/// # Safety
/// `ch` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_capture_probability(
    ch: *const McpmChannel,
    out: *mut f64,
) -> McpmStatus {
    guarded(|| {
        let (Some(ch), false) = (unsafe { ch.as_ref() }, out.is_null()) else {
            return Ok(null_error("ch/out"));
        };
        unsafe { *out = ch.params.capture_probability() };
        Ok(McpmStatus::Ok)
    })
}

/// Probability that the first hit lands in `[a_s, b_s]` seconds.
///
/// # Safety
/// `ch` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_hit_probability(
    ch: *const McpmChannel,
    a_s: f64,
    b_s: f64,
    out: *mut f64,
) -> McpmStatus {
    guarded(|| {
        let (Some(ch), false) = (unsafe { ch.as_ref() }, out.is_null()) else {
            return Ok(null_error("ch/out"));
        };
        let p = window_hit_probability(a_s, b_s, &ch.params)?;
        unsafe { *out = p };
        Ok(McpmStatus::Ok)
    })
}

/// Fill `out[0..l]` with the channel coefficients of an `l`-slot grid with
/// slot length `ts_s` and reception offset `tau_s`.
///
/// # Safety
/// `ch` must be valid and `out` must point to at least `l` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcpm_channel_coefficients(
    ch: *const McpmChannel,
    ts_s: f64,
    tau_s: f64,
    l: usize,
    out: *mut f64,
) -> McpmStatus {
    guarded(|| {
        let (Some(ch), false) = (unsafe { ch.as_ref() }, out.is_null()) else {
            return Ok(null_error("ch/out"));
        };
        if l == 0 {
            return Err(Error::invalid("need at least one slot"));
        }
        let grid = SlotGrid::new(ts_s, ts_s * l as f64, tau_s)?;
        let h = channel_coefficients(&ch.params, &grid)?;
        let taps = h.taps();
        unsafe { std::ptr::copy_nonoverlapping(taps.as_ptr(), out, taps.len().min(l)) };
        Ok(McpmStatus::Ok)
    })
}

/// Parsed run configuration; the TOML grammar is documented in the
/// repository's README.
pub struct McpmRunConfig {
    cfg: RunConfig,
}

/// Parse a TOML run configuration from a NUL-terminated string.
///
/// # Safety
/// `toml_text` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcpm_config_parse(
    toml_text: *const c_char,
    out: *mut *mut McpmRunConfig,
) -> McpmStatus {
    guarded(|| {
        if out.is_null() {
            return Ok(null_error("out"));
        }
        let text = match unsafe { utf8_arg(toml_text, "toml_text") } {
            Ok(t) => t,
            Err(status) => return Ok(status),
        };
        let cfg = RunConfig::from_str(text)?;
        unsafe { *out = Box::into_raw(Box::new(McpmRunConfig { cfg })) };
        Ok(McpmStatus::Ok)
    })
}

/// Destroy a configuration handle. Accepts null.
///
/// # Safety
/// `cfg` must have come from `mcpm_config_parse` and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn mcpm_config_free(cfg: *mut McpmRunConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Override the experiment's master seed.
///
/// # Safety
/// `cfg` must be a valid configuration handle.
#[no_mangle]
pub unsafe extern "C" fn mcpm_config_set_seed(
    cfg: *mut McpmRunConfig,
    seed: u64,
) -> McpmStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_mut() }) else {
            return Ok(null_error("cfg"));
        };
        cfg.cfg.experiment.seed = seed;
        Ok(McpmStatus::Ok)
    })
}

/// Run one command against a configuration and return its CSV text.
/// `command` is one of `coeffs`, `design`, `simulate`, `sweep`,
/// `analytic` — the same tokens as the command line tool. On success
/// `*csv_out` receives a NUL-terminated UTF-8 string owned by the caller;
/// free it with `mcpm_string_free`.
///
/// # Safety
/// `cfg` must be valid; `command` must be NUL-terminated; `csv_out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcpm_run_csv(
    cfg: *const McpmRunConfig,
    command: *const c_char,
    csv_out: *mut *mut c_char,
) -> McpmStatus {
    guarded(|| {
        let (Some(cfg), false) = (unsafe { cfg.as_ref() }, csv_out.is_null()) else {
            return Ok(null_error("cfg/csv_out"));
        };
        let command = match unsafe { utf8_arg(command, "command") } {
            Ok(c) => c,
            Err(status) => return Ok(status),
        };
        let text = csv_for_command(&cfg.cfg, command)?;
        let c = CString::new(text)
            .map_err(|_| Error::invalid("CSV text unexpectedly contained NUL"))?;
        unsafe { *csv_out = c.into_raw() };
        Ok(McpmStatus::Ok)
    })
}
