//! C ABI for the vreflex engine.
//!
//! Every fallible function returns a [`VrStatus`]. On failure a
//! human-readable message is available from [`vr_last_error_message`] on the
//! same thread until the next failing call. Handles are opaque and owned by
//! the caller, who releases them with the matching `*_free` function.
//! Strings returned through `*mut *mut c_char` out-parameters must be
//! released with [`vr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vreflex::{
    compare_csv, parse_scenario, run, torso_pitch_command, Engine, Error, LiveInput, PadState,
    Scenario, SensorSnapshot, TorsoReflexParams, TraceRow,
};

/// A parsed scenario.
pub struct VrScenario(Scenario);

/// A running engine instance.
pub struct VrEngine(Engine);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Config = 5,
    Scenario = 6,
    Trace = 7,
    Io = 8,
    Panic = 9,
}

/// One trace row. `phase` is not included; see [`vr_engine_phase`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VrTraceRow {
    pub tick: u64,
    pub distance: f64,
    pub pleasure: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub sd_target: f64,
    pub c_sd: f64,
    pub torso_pitch_command: f64,
    pub deviation: f64,
    pub lean: f64,
    pub forward_velocity: f64,
    pub blocked: bool,
}

impl From<&TraceRow> for VrTraceRow {
    fn from(r: &TraceRow) -> Self {
        Self {
            tick: r.tick,
            distance: r.distance,
            pleasure: r.pleasure,
            arousal: r.arousal,
            dominance: r.dominance,
            sd_target: r.sd_target,
            c_sd: r.c_sd,
            torso_pitch_command: r.torso_pitch_command,
            deviation: r.deviation,
            lean: r.lean,
            forward_velocity: r.forward_velocity,
            blocked: r.blocked,
        }
    }
}

/// Live trainee input for one closed-loop tick. Fields whose `has_` flag is
/// false are taken from the scenario script.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VrLiveInput {
    pub has_move: bool,
    pub trainee_move: f64,
    pub has_calmness: bool,
    pub calmness: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(VrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain { .. } => VrStatus::Domain,
            Error::Config(_) => VrStatus::Config,
            Error::Parse(_) => VrStatus::Parse,
            Error::Scenario { .. } => VrStatus::Scenario,
            Error::Trace(_) => VrStatus::Trace,
            Error::Io(_) => VrStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(VrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            VrStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(VrStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(VrStatus::InvalidUtf8, e.to_string()))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses scenario text (UTF-8, NUL-terminated).
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_scenario_parse(
    text: *const c_char,
    out: *mut *mut VrScenario,
) -> VrStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let s = parse_scenario(text).map_err(Error::from)?;
        write_out(out, Box::into_raw(Box::new(VrScenario(s))), "out")
    })
}

/// # Safety
/// `scenario` must come from [`vr_scenario_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn vr_scenario_free(scenario: *mut VrScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_scenario_duration(
    scenario: *const VrScenario,
    out: *mut u64,
) -> VrStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        write_out(out, s.0.duration, "out")
    })
}

/// Creates an engine at tick 0. The scenario handle may be freed afterwards.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_new(
    scenario: *const VrScenario,
    out: *mut *mut VrEngine,
) -> VrStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let engine = Engine::new(&s.0)?;
        write_out(out, Box::into_raw(Box::new(VrEngine(engine))), "out")
    })
}

/// # Safety
/// `engine` must come from [`vr_engine_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_free(engine: *mut VrEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Advances one tick. `input` may be null to run the script alone.
///
/// # Safety
/// `engine` must be a live handle; `input` null or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_tick(
    engine: *mut VrEngine,
    input: *const VrLiveInput,
    out: *mut VrTraceRow,
) -> VrStatus {
    guard(|| {
        let e = engine.as_mut().ok_or_else(|| null("engine"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let live = input.as_ref().map(|i| LiveInput {
            trainee_move: i.has_move.then_some(i.trainee_move),
            calmness: i.has_calmness.then_some(i.calmness),
        });
        let row = e.0.step(live)?;
        write_out(out, VrTraceRow::from(&row), "out")
    })
}

/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_reset(engine: *mut VrEngine) -> VrStatus {
    guard(|| {
        engine.as_mut().ok_or_else(|| null("engine"))?.0.reset();
        Ok(())
    })
}

/// Whether the engine has run its scenario's full duration.
///
/// # Safety
/// `engine` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_is_finished(
    engine: *const VrEngine,
    out: *mut bool,
) -> VrStatus {
    guard(|| {
        let e = engine.as_ref().ok_or_else(|| null("engine"))?;
        write_out(out, e.0.is_finished(), "out")
    })
}

/// Current scenario phase as a new string.
///
/// # Safety
/// `engine` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_engine_phase(
    engine: *const VrEngine,
    out: *mut *mut c_char,
) -> VrStatus {
    guard(|| {
        let e = engine.as_ref().ok_or_else(|| null("engine"))?;
        let s = to_c_string(e.0.world().phase.clone())?;
        write_out(out, s, "out")
    })
}

/// Runs a scenario to completion and returns its trace as CSV.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_run_to_csv(
    scenario: *const VrScenario,
    out: *mut *mut c_char,
) -> VrStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let csv = to_c_string(run(&s.0)?.to_csv())?;
        write_out(out, csv, "out")
    })
}

/// Compares two CSV traces; `out` receives the number of mismatching cells.
///
/// # Safety
/// `got` and `want` must be valid C strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_compare_csv(
    got: *const c_char,
    want: *const c_char,
    tol: f64,
    out: *mut usize,
) -> VrStatus {
    guard(|| {
        let n = compare_csv(read_str(got, "got")?, read_str(want, "want")?, tol)?.len();
        write_out(out, n, "out")
    })
}

/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn vr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stateless torso-pitch command for one sensor reading.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_torso_pitch_command(
    distance: f64,
    pleasure: f64,
    arousal: f64,
    dominance: f64,
    sd_default: f64,
    cultural_distance: f64,
    out: *mut f64,
) -> VrStatus {
    guard(|| {
        let pad = PadState::new(pleasure, arousal, dominance)?;
        let params = TorsoReflexParams::new(sd_default, cultural_distance)?;
        let cmd = torso_pitch_command(&SensorSnapshot::at_distance(distance), &pad, &params)?;
        write_out(out, cmd.value, "out")
    })
}
