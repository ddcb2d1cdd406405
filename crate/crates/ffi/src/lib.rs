//! C ABI for `ringcav`.
//!
//! Configurations and Bloch traces are opaque handles owned by the library
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`RingcavStatus`]; on failure the message is available through
//! [`ringcav_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ringcav::bloch::{self, BlochTrace};
use ringcav::cavity::CavityCharacter;
use ringcav::config::{load_config, ExperimentConfig};
use ringcav::physics::KB;
use ringcav::report;
use ringcav::rir::{self, RirSpectrum};
use ringcav::thermal::{fit_temperature_tof, TofSeries};
use ringcav::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingcavStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    UnsupportedRegime = 4,
    Fit = 5,
    Integration = 6,
    InsufficientRinging = 7,
    Bracket = 8,
    Config = 9,
    Schema = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for RingcavStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => RingcavStatus::Domain,
            Error::UnsupportedRegime(_) => RingcavStatus::UnsupportedRegime,
            Error::Fit(_) => RingcavStatus::Fit,
            Error::Integration { .. } => RingcavStatus::Integration,
            Error::InsufficientRinging { .. } => RingcavStatus::InsufficientRinging,
            Error::Bracket(_) => RingcavStatus::Bracket,
            Error::Config { .. } => RingcavStatus::Config,
            Error::Schema(_) => RingcavStatus::Schema,
            Error::Io { .. } => RingcavStatus::Io,
        }
    }
}

/// Opaque experiment configuration.
pub struct RingcavConfig(ExperimentConfig);

/// Opaque Bloch-sweep trace.
pub struct RingcavTrace(BlochTrace);

/// Column selector for [`ringcav_trace_column`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingcavTraceColumn {
    /// s
    Time = 0,
    /// rad/s
    Detuning = 1,
    U = 2,
    V = 3,
    W = 4,
    ImRho12 = 5,
}

impl RingcavTraceColumn {
    fn from_raw(v: i32) -> Result<Self, Failure> {
        use RingcavTraceColumn::*;
        [Time, Detuning, U, V, W, ImRho12]
            .into_iter()
            .find(|c| *c as i32 == v)
            .ok_or_else(|| Failure(RingcavStatus::Domain, format!("unknown trace column {v}")))
    }
}

/// Derived cavity parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RingcavCavity {
    pub finesse: f64,
    pub fsr_hz: f64,
    pub fwhm_hz: f64,
    pub buildup: f64,
    pub mode_volume_m3: f64,
}

/// Derived trap parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RingcavTrap {
    pub depth_k: f64,
    pub axial_hz: f64,
    pub radial_v_hz: f64,
    pub radial_h_hz: f64,
    pub axial_to_radial: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RingcavStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(RingcavStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RingcavStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RingcavStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            RingcavStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RingcavStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RingcavStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_boxed<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ringcav_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`.
///
/// Returns the buffer size needed including the terminating NUL, or 0 when
/// there is no pending error. Truncates when `len` is too small.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ringcav_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Built-in defaults. Never returns null.
#[no_mangle]
pub extern "C" fn ringcav_config_default() -> *mut RingcavConfig {
    Box::into_raw(Box::new(RingcavConfig(ExperimentConfig::default())))
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_config_from_json(json: *const c_char, out: *mut *mut RingcavConfig) -> RingcavStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(as_str(json, "json")?)?;
        write_boxed(out, RingcavConfig(cfg))
    })
}

/// Loads a JSON configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_config_load(path: *const c_char, out: *mut *mut RingcavConfig) -> RingcavStatus {
    guard(|| {
        let cfg = load_config(Path::new(as_str(path, "path")?))?;
        write_boxed(out, RingcavConfig(cfg))
    })
}

/// Serialises a configuration; free the result with [`ringcav_string_free`].
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_config_to_json(config: *const RingcavConfig, out: *mut *mut c_char) -> RingcavStatus {
    guard(|| {
        let json = as_ref(config, "config")?.0.to_json();
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(CString::new(json).expect("JSON has no NUL").into_raw());
        Ok(())
    })
}

/// # Safety
/// `config` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ringcav_config_free(config: *mut RingcavConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ringcav_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_cavity(config: *const RingcavConfig, out: *mut RingcavCavity) -> RingcavStatus {
    guard(|| {
        let cfg = &as_ref(config, "config")?.0;
        let geometry = cfg.geometry()?;
        let ch = match cfg.cavity.finesse {
            Some(f) => CavityCharacter::with_finesse(&geometry, f)?,
            None => CavityCharacter::from_geometry(&geometry)?,
        };
        let value = RingcavCavity {
            finesse: ch.finesse,
            fsr_hz: ch.fsr,
            fwhm_hz: ch.linewidth_fwhm,
            buildup: ch.buildup,
            mode_volume_m3: ch.mode_volume,
        };
        write(out, value, "out")
    })
}

/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_trap(config: *const RingcavConfig, out: *mut RingcavTrap) -> RingcavStatus {
    guard(|| {
        let trap = as_ref(config, "config")?.0.trap_state()?;
        let hz = 1.0 / (2.0 * std::f64::consts::PI);
        let value = RingcavTrap {
            depth_k: trap.depth / KB,
            axial_hz: trap.secular.axial * hz,
            radial_v_hz: trap.secular.radial_v * hz,
            radial_h_hz: trap.secular.radial_h * hz,
            axial_to_radial: trap.secular.axial_to_radial_ratio(),
        };
        write(out, value, "out")
    })
}

/// RIR signal at `n` two-photon detunings (rad/s) for `temperature` (K).
///
/// # Safety
/// `delta_omega` and `signal` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringcav_rir_spectrum(
    config: *const RingcavConfig,
    temperature: f64,
    delta_omega: *const f64,
    n: usize,
    signal: *mut f64,
) -> RingcavStatus {
    guard(|| {
        let cfg = &as_ref(config, "config")?.0;
        let grid = as_slice(delta_omega, n, "delta_omega")?;
        let s = rir::rir_spectrum(
            grid,
            temperature,
            &cfg.probe(),
            cfg.thermal.atom_count as f64,
            &cfg.species(),
            &cfg.rir_options(),
        )?;
        if n > 0 {
            if signal.is_null() {
                return Err(null("signal"));
            }
            ptr::copy_nonoverlapping(s.signal.as_ptr(), signal, n);
        }
        Ok(())
    })
}

/// Temperature (K) fitted to a measured RIR spectrum.
///
/// # Safety
/// `delta_omega` and `signal` must each hold `n` doubles; `temperature` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_rir_fit(
    config: *const RingcavConfig,
    delta_omega: *const f64,
    signal: *const f64,
    n: usize,
    temperature: *mut f64,
) -> RingcavStatus {
    guard(|| {
        let cfg = &as_ref(config, "config")?.0;
        let spectrum = RirSpectrum {
            delta_omega: as_slice(delta_omega, n, "delta_omega")?.to_vec(),
            signal: as_slice(signal, n, "signal")?.to_vec(),
            temperature_used: f64::NAN,
            q: rir::effective_q(&cfg.probe(), cfg.probe.motion)?,
        };
        let fit = rir::fit_temperature_rir(&spectrum, &cfg.species())?;
        write(temperature, fit.temperature, "temperature")
    })
}

/// Temperature (K) from cloud widths (m) measured at release times (s).
///
/// # Safety
/// `times` and `widths` must each hold `n` doubles; `temperature` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_tof_fit(
    config: *const RingcavConfig,
    times: *const f64,
    widths: *const f64,
    n: usize,
    temperature: *mut f64,
) -> RingcavStatus {
    guard(|| {
        let cfg = &as_ref(config, "config")?.0;
        let series = TofSeries::new(
            as_slice(times, n, "times")?.to_vec(),
            as_slice(widths, n, "widths")?.to_vec(),
        )?;
        let fit = fit_temperature_tof(&series, &cfg.species())?;
        write(temperature, fit.temperature, "temperature")
    })
}

/// Integrates the configured Bloch sweep; free the trace with [`ringcav_trace_free`].
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_bloch_sweep(
    config: *const RingcavConfig,
    out: *mut *mut RingcavTrace,
) -> RingcavStatus {
    guard(|| {
        let (trace, _) = report::bloch_sweep_table(&as_ref(config, "config")?.0)?;
        write_boxed(out, RingcavTrace(trace))
    })
}

/// Number of samples in `trace`; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ringcav_trace_len(trace: *const RingcavTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Copies one column of `trace` into `buf`, which must hold the full trace.
/// `column` is one of `RingcavTraceColumn`.
///
/// # Safety
/// `trace` must come from this library; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringcav_trace_column(
    trace: *const RingcavTrace,
    column: i32,
    buf: *mut f64,
    len: usize,
) -> RingcavStatus {
    guard(|| {
        let t = &as_ref(trace, "trace")?.0;
        let column = RingcavTraceColumn::from_raw(column)?;
        if len < t.len() {
            return Err(Failure(
                RingcavStatus::BufferTooSmall,
                format!("buffer holds {len} values, trace has {}", t.len()),
            ));
        }
        if t.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let im;
        let src: &[f64] = match column {
            RingcavTraceColumn::Time => &t.t,
            RingcavTraceColumn::Detuning => &t.delta,
            RingcavTraceColumn::U => &t.u,
            RingcavTraceColumn::V => &t.v,
            RingcavTraceColumn::W => &t.w,
            RingcavTraceColumn::ImRho12 => {
                im = t.im_rho12();
                &im
            }
        };
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ringcav_trace_free(trace: *mut RingcavTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Smallest scan rate (Hz/s) whose relative overshoot reaches `threshold`.
///
/// # Safety
/// `config` must come from this library; `rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringcav_bloch_critical_rate(
    config: *const RingcavConfig,
    threshold: f64,
    rate: *mut f64,
) -> RingcavStatus {
    guard(|| {
        let r = bloch::critical_rate_scan(&as_ref(config, "config")?.0.sweep(), threshold)?;
        write(rate, r, "rate")
    })
}
