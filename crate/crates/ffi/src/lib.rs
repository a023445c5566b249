//! C ABI for `snspd-sim`.
//!
//! Every function returns an [`SnspdStatus`]. On failure the message is kept
//! per thread and read with [`snspd_last_error`]. Handles are opaque, owned by
//! the caller and released with the matching `_free` function. Pointers
//! returned by accessors borrow from their handle and stay valid until it is
//! freed. Output pointers are written only on success.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use snspd_sim::circuit::{edge_metrics, readout_chain, run_trace};
use snspd_sim::config::{self, ConfigError, ConfigErrorKind};
use snspd_sim::fitkit::{self, FitError, SweepData};
use snspd_sim::modulator::transmission;
use snspd_sim::params::ParamBundle;
use snspd_sim::photodiode::{max_power_point, solve_operating_point};
use snspd_sim::presets;
use snspd_sim::scenario::{histogram_experiment, HistogramRun};
use snspd_sim::snspd::{detection_efficiency, equilibrium_point, EquilibriumOutcome};
use snspd_sim::stats::peak_stats;
use snspd_sim::SimError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnspdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Numerical = 3,
    Io = 4,
    InvalidUtf8 = 5,
    /// The computation succeeded but has no value (no latch, no pulse, no peak).
    NoResult = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub struct SnspdParams(ParamBundle);

pub struct SnspdTrace {
    trace: snspd_sim::circuit::TimeTrace,
    click_times: Vec<f64>,
}

pub struct SnspdHistogram(HistogramRun);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnspdHistogramKind {
    Signal = 0,
    Background = 1,
    Subtracted = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdOperatingPoint {
    /// V
    pub voltage: f64,
    /// A
    pub current: f64,
    /// W
    pub electrical_power: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdMaxPowerPoint {
    /// Ω
    pub resistance: f64,
    pub point: SnspdOperatingPoint,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdEquilibrium {
    /// V
    pub voltage: f64,
    /// A
    pub source_current: f64,
    /// A
    pub wire_current: f64,
    /// A
    pub leak_current: f64,
    /// Ω
    pub wire_resistance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdEdgeMetrics {
    /// s
    pub rise_time_90: f64,
    /// s
    pub fall_time_90: f64,
    /// Hz
    pub repetition_rate: f64,
    pub pulses: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdPeak {
    /// s
    pub peak_time: f64,
    /// s
    pub fwhm: f64,
    pub peak_counts: i64,
    pub area: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnspdSineFit {
    /// V
    pub vpi: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// rad
    pub phase: f64,
    pub residual_rms: f64,
}

struct Failure {
    status: SnspdStatus,
    message: String,
}

impl Failure {
    fn new(status: SnspdStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

fn sim_status(e: &SimError) -> SnspdStatus {
    match e {
        SimError::Domain(_) => SnspdStatus::InvalidInput,
        SimError::Numerical(_) | SimError::Contract(_) => SnspdStatus::Numerical,
        SimError::AtIndex { source, .. } => sim_status(source),
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::new(sim_status(&e), e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        let status = match e {
            FitError::Io(_) => SnspdStatus::Io,
            FitError::Domain(_) => SnspdStatus::InvalidInput,
            _ => SnspdStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<ConfigErrorKind> for Failure {
    fn from(e: ConfigErrorKind) -> Self {
        Failure::new(SnspdStatus::InvalidInput, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        e.kind.into()
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnspdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnspdStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.message);
            e.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            SnspdStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(SnspdStatus::NullArgument, format!("`{what}` is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(SnspdStatus::NullArgument, format!("`{what}` is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            SnspdStatus::NullArgument,
            format!("`{what}` is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(SnspdStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(
            SnspdStatus::NullArgument,
            format!("`{what}` is null"),
        ));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            SnspdStatus::NullArgument,
            format!("`{what}` is null"),
        ))
    } else {
        Ok(())
    }
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the most recent failing call on this thread, or null. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn snspd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snspd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a named preset into a new handle.
#[no_mangle]
pub unsafe extern "C" fn snspd_params_preset(
    name: *const c_char,
    out: *mut *mut SnspdParams,
) -> SnspdStatus {
    guard(|| {
        let name = text(name, "name")?;
        check_out(out, "out")?;
        let bundle = presets::load(name).ok_or(ConfigErrorKind::UnknownPreset(name.to_string()))?;
        *out = into_handle(SnspdParams(bundle));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_params_clone(
    params: *const SnspdParams,
    out: *mut *mut SnspdParams,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        *out = into_handle(SnspdParams(p.0.clone()));
        Ok(())
    })
}

/// Applies one `section.key[_unit] = value` assignment. The handle is left
/// unchanged when the value is rejected or makes the bundle inconsistent.
#[no_mangle]
pub unsafe extern "C" fn snspd_params_set(
    params: *mut SnspdParams,
    assignment: *const c_char,
) -> SnspdStatus {
    guard(|| {
        let p = handle_mut(params, "params")?;
        let a = config::parse_override(text(assignment, "assignment")?, 0)?;
        let mut next = p.0.clone();
        config::apply(&mut next, &a)?;
        next.validate()?;
        p.0 = next;
        Ok(())
    })
}

/// Writes the bundle as config text into `buf` (NUL-terminated). `needed`
/// receives the buffer size required including the NUL, also when `buf` is
/// too small.
#[no_mangle]
pub unsafe extern "C" fn snspd_params_render(
    params: *const SnspdParams,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let s = config::render(&p.0);
        let size = s.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if capacity < size {
            return Err(Failure::new(
                SnspdStatus::BufferTooSmall,
                format!("buffer holds {capacity} bytes, {size} needed"),
            ));
        }
        check_out(buf, "buf")?;
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_params_free(params: *mut SnspdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Photodiode operating point on a resistive load.
#[no_mangle]
pub unsafe extern "C" fn snspd_operating_point(
    params: *const SnspdParams,
    optical_power_w: f64,
    load_ohm: f64,
    out: *mut SnspdOperatingPoint,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        let op = solve_operating_point(optical_power_w, load_ohm, &p.0.photodiode)?;
        *out = SnspdOperatingPoint {
            voltage: op.voltage,
            current: op.current,
            electrical_power: op.electrical_power,
        };
        Ok(())
    })
}

/// Load within `[r_min_ohm, r_max_ohm]` maximising delivered power.
#[no_mangle]
pub unsafe extern "C" fn snspd_max_power_point(
    params: *const SnspdParams,
    optical_power_w: f64,
    r_min_ohm: f64,
    r_max_ohm: f64,
    out: *mut SnspdMaxPowerPoint,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        let m = max_power_point(optical_power_w, &p.0.photodiode, (r_min_ohm, r_max_ohm))?;
        *out = SnspdMaxPowerPoint {
            resistance: m.resistance,
            point: SnspdOperatingPoint {
                voltage: m.point.voltage,
                current: m.point.current,
                electrical_power: m.point.electrical_power,
            },
        };
        Ok(())
    })
}

/// Latched steady state under constant bias light. Returns
/// `SNSPD_STATUS_NO_RESULT` when the source cannot sustain the hotspot.
#[no_mangle]
pub unsafe extern "C" fn snspd_equilibrium(
    params: *const SnspdParams,
    optical_power_w: f64,
    out: *mut SnspdEquilibrium,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        match equilibrium_point(optical_power_w, &p.0.photodiode, &p.0.nanowire)? {
            EquilibriumOutcome::Latched(eq) => {
                *out = SnspdEquilibrium {
                    voltage: eq.voltage,
                    source_current: eq.source_current,
                    wire_current: eq.wire_current,
                    leak_current: eq.leak_current,
                    wire_resistance: eq.hotspot.resistance,
                };
                Ok(())
            }
            EquilibriumOutcome::NoLatch => Err(Failure::new(
                SnspdStatus::NoResult,
                "no latched equilibrium",
            )),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_detection_efficiency(
    params: *const SnspdParams,
    bias_current_a: f64,
    out: *mut f64,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        *out = detection_efficiency(bias_current_a, &p.0.nanowire)?;
        Ok(())
    })
}

/// Modulator fibre-to-fibre transmission at the configured temperature.
#[no_mangle]
pub unsafe extern "C" fn snspd_transmission(
    params: *const SnspdParams,
    voltage_v: f64,
    out: *mut f64,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        *out = transmission(voltage_v, p.0.modulator.temperature, &p.0.modulator)?;
        Ok(())
    })
}

/// Simulates `sim.trace_periods` periods of the trace drive and applies the
/// readout chain.
#[no_mangle]
pub unsafe extern "C" fn snspd_trace_run(
    params: *const SnspdParams,
    seed: u64,
    out: *mut *mut SnspdTrace,
) -> SnspdStatus {
    guard(|| {
        let p = &handle(params, "params")?.0;
        check_out(out, "out")?;
        let drive = p.trace_drive();
        let duration = drive.period * p.sim.trace_periods.max(1) as f64;
        let raw = run_trace(&drive, &p.device(), duration, p.integration(), seed)?;
        let result = readout_chain(&raw, &p.readout)?;
        *out = into_handle(SnspdTrace {
            click_times: result.clicks.iter().map(|c| c.time).collect(),
            trace: result.trace,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_trace_len(trace: *const SnspdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Borrows a channel by name: `time_s`, `v_node_V`, `r_wire_ohm`, `p_out_W`,
/// `v_readout_mV` or `click`.
#[no_mangle]
pub unsafe extern "C" fn snspd_trace_channel(
    trace: *const SnspdTrace,
    name: *const c_char,
    data: *mut *const f64,
    len: *mut usize,
) -> SnspdStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let name = text(name, "name")?;
        check_out(data, "data")?;
        check_out(len, "len")?;
        let ch = t.trace.channel(name).ok_or_else(|| {
            Failure::new(SnspdStatus::InvalidInput, format!("no channel `{name}`"))
        })?;
        *data = ch.as_ptr();
        *len = ch.len();
        Ok(())
    })
}

/// Borrows the discriminator click times in seconds.
#[no_mangle]
pub unsafe extern "C" fn snspd_trace_clicks(
    trace: *const SnspdTrace,
    times: *mut *const f64,
    count: *mut usize,
) -> SnspdStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        check_out(times, "times")?;
        check_out(count, "count")?;
        *times = t.click_times.as_ptr();
        *count = t.click_times.len();
        Ok(())
    })
}

/// Edge timing of the optical output. Returns `SNSPD_STATUS_NO_RESULT` when
/// the trace holds no complete pulse.
#[no_mangle]
pub unsafe extern "C" fn snspd_trace_edges(
    trace: *const SnspdTrace,
    out: *mut SnspdEdgeMetrics,
) -> SnspdStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        check_out(out, "out")?;
        let m = edge_metrics(&t.trace, "p_out_W")?
            .pulse()
            .ok_or_else(|| Failure::new(SnspdStatus::NoResult, "no complete pulse in the trace"))?;
        *out = SnspdEdgeMetrics {
            rise_time_90: m.rise_time_90,
            fall_time_90: m.fall_time_90,
            repetition_rate: m.repetition_rate,
            pulses: m.pulses,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_trace_free(trace: *mut SnspdTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Runs the signal and background counting experiments over `n_periods`
/// each and subtracts them.
#[no_mangle]
pub unsafe extern "C" fn snspd_histogram_run(
    params: *const SnspdParams,
    n_periods: u64,
    seed: u64,
    out: *mut *mut SnspdHistogram,
) -> SnspdStatus {
    guard(|| {
        let p = handle(params, "params")?;
        check_out(out, "out")?;
        *out = into_handle(SnspdHistogram(histogram_experiment(&p.0, n_periods, seed)?));
        Ok(())
    })
}

/// Borrows one histogram: `n_bins + 1` edges in seconds, `n_bins` counts and
/// `n_bins` Poisson errors. `kind` is an `SnspdHistogramKind` value. Any of
/// the three array outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn snspd_histogram_bins(
    histogram: *const SnspdHistogram,
    kind: u32,
    edges: *mut *const f64,
    counts: *mut *const i64,
    errors: *mut *const f64,
    n_bins: *mut usize,
) -> SnspdStatus {
    guard(|| {
        let run = &handle(histogram, "histogram")?.0;
        check_out(n_bins, "n_bins")?;
        let h = match kind {
            k if k == SnspdHistogramKind::Signal as u32 => &run.signal,
            k if k == SnspdHistogramKind::Background as u32 => &run.background,
            k if k == SnspdHistogramKind::Subtracted as u32 => &run.subtracted,
            k => {
                return Err(Failure::new(
                    SnspdStatus::InvalidInput,
                    format!("unknown histogram kind {k}"),
                ))
            }
        };
        if let Some(e) = edges.as_mut() {
            *e = h.bin_edges.as_ptr();
        }
        if let Some(c) = counts.as_mut() {
            *c = h.counts.as_ptr();
        }
        if let Some(e) = errors.as_mut() {
            *e = h.errors.as_ptr();
        }
        *n_bins = h.n_bins();
        Ok(())
    })
}

/// Peak of the background-subtracted histogram. Returns
/// `SNSPD_STATUS_NO_RESULT` when no bin is positive.
#[no_mangle]
pub unsafe extern "C" fn snspd_histogram_peak(
    histogram: *const SnspdHistogram,
    out: *mut SnspdPeak,
) -> SnspdStatus {
    guard(|| {
        let run = &handle(histogram, "histogram")?.0;
        check_out(out, "out")?;
        let peak = peak_stats(&run.subtracted).peak().ok_or_else(|| {
            Failure::new(SnspdStatus::NoResult, "subtracted histogram has no peak")
        })?;
        *out = SnspdPeak {
            peak_time: peak.peak_time,
            fwhm: peak.fwhm,
            peak_counts: peak.peak_counts,
            area: peak.area,
        };
        Ok(())
    })
}

/// Click delay of a single photon arriving at the pulse time. Returns
/// `SNSPD_STATUS_NO_RESULT` when such a photon produces no click.
#[no_mangle]
pub unsafe extern "C" fn snspd_histogram_expected_delay(
    histogram: *const SnspdHistogram,
    out: *mut f64,
) -> SnspdStatus {
    guard(|| {
        let run = &handle(histogram, "histogram")?.0;
        check_out(out, "out")?;
        *out = run.expected_delay.ok_or_else(|| {
            Failure::new(
                SnspdStatus::NoResult,
                "a photon at the pulse time does not click",
            )
        })?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snspd_histogram_free(histogram: *mut SnspdHistogram) {
    if !histogram.is_null() {
        drop(Box::from_raw(histogram));
    }
}

/// Fits `y = offset + amplitude cos(pi x / vpi + phase)`. A non-positive
/// `vpi_hint` selects the built-in start grid.
#[no_mangle]
pub unsafe extern "C" fn snspd_fit_sine_vpi(
    x: *const f64,
    y: *const f64,
    n: usize,
    vpi_hint: f64,
    out: *mut SnspdSineFit,
) -> SnspdStatus {
    guard(|| {
        let data = SweepData::new(slice(x, n, "x")?.to_vec(), slice(y, n, "y")?.to_vec())?;
        check_out(out, "out")?;
        let hint = (vpi_hint > 0.0).then_some(vpi_hint);
        let f = fitkit::fit_sine_vpi(&data, hint)?;
        *out = SnspdSineFit {
            vpi: f.vpi,
            amplitude: f.amplitude,
            offset: f.offset,
            phase: f.phase,
            residual_rms: f.residual_rms,
        };
        Ok(())
    })
}

/// Propagation loss in dB/cm from Fabry-Pérot fringe contrast.
#[no_mangle]
pub unsafe extern "C" fn snspd_fabry_perot_loss(
    contrast: f64,
    facet_reflectivity: f64,
    length_cm: f64,
    out: *mut f64,
) -> SnspdStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = fitkit::fabry_perot_loss(contrast, facet_reflectivity, length_cm)?;
        Ok(())
    })
}
