use std::ffi::{CStr, CString};
use std::ptr;

use vreflex_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = vr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn parse(text: &str) -> *mut VrScenario {
    let mut s = ptr::null_mut();
    let status = unsafe { vr_scenario_parse(c(text).as_ptr(), &mut s) };
    assert_eq!(status, VrStatus::Ok, "{}", last_error());
    s
}

fn shipped(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/");
    std::fs::read_to_string(format!("{path}{name}")).unwrap()
}

#[test]
fn torso_pitch_matches_reference_values() {
    let mut out = 0.0;
    let cases = [
        (4.0, [-1.0, 1.0, 1.0], -3.8),
        (1.5, [0.0, 0.0, -0.5], 0.1),
        (1.7, [0.0, 0.0, -0.5], 0.0),
    ];
    for (d, [p, a, dom], want) in cases {
        let st = unsafe { vr_torso_pitch_command(d, p, a, dom, 1.0, 0.2, &mut out) };
        assert_eq!(st, VrStatus::Ok);
        assert!((out - want).abs() < 1e-12, "{out} vs {want}");
    }
}

#[test]
fn domain_errors_map_to_status_and_message() {
    let mut out = 0.0;
    let st = unsafe { vr_torso_pitch_command(1.0, 0.0, 1.5, 0.0, 1.0, 0.2, &mut out) };
    assert_eq!(st, VrStatus::Domain);
    assert!(last_error().contains("arousal"));
    let st = unsafe { vr_torso_pitch_command(1.0, 0.0, 0.0, 0.0, 1.0, 0.2, ptr::null_mut()) };
    assert_eq!(st, VrStatus::NullPointer);
}

#[test]
fn parse_errors_and_bad_input() {
    let mut s = ptr::null_mut();
    let st =
        unsafe { vr_scenario_parse(c("scenario x\nmode replay\nduration x\n").as_ptr(), &mut s) };
    assert_eq!(st, VrStatus::Parse);
    assert!(s.is_null());
    assert!(last_error().starts_with("line 3"), "{}", last_error());

    let st = unsafe { vr_scenario_parse(ptr::null(), &mut s) };
    assert_eq!(st, VrStatus::NullPointer);

    let bytes = [0xffu8, 0xfe, 0];
    let st = unsafe { vr_scenario_parse(bytes.as_ptr().cast(), &mut s) };
    assert_eq!(st, VrStatus::InvalidUtf8);
}

#[test]
fn engine_ticks_match_batch_csv() {
    let s = parse(&shipped("deescalation.scn"));
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { vr_engine_new(s, &mut e) }, VrStatus::Ok);

    let mut duration = 0;
    assert_eq!(
        unsafe { vr_scenario_duration(s, &mut duration) },
        VrStatus::Ok
    );
    let mut rows = Vec::new();
    let mut done = false;
    while !done {
        let mut row = VrTraceRow::default();
        assert_eq!(
            unsafe { vr_engine_tick(e, ptr::null(), &mut row) },
            VrStatus::Ok
        );
        rows.push(row);
        assert_eq!(unsafe { vr_engine_is_finished(e, &mut done) }, VrStatus::Ok);
    }
    assert_eq!(rows.len() as u64, duration);
    let pitch: Vec<f64> = rows.iter().map(|r| r.torso_pitch_command).collect();
    let want = [-3.8, -1.8, -2.3, -1.3, -1.3, 0.1, 0.0];
    for (g, w) in pitch.iter().zip(want) {
        assert!((g - w).abs() < 1e-9);
    }
    assert!(rows[3].blocked);

    let mut phase = ptr::null_mut();
    assert_eq!(unsafe { vr_engine_phase(e, &mut phase) }, VrStatus::Ok);
    assert_eq!(
        unsafe { CStr::from_ptr(phase) }.to_str().unwrap(),
        "equilibrium"
    );
    unsafe { vr_string_free(phase) };

    // Replay scenarios have no script past their duration.
    let mut row = VrTraceRow::default();
    assert_eq!(
        unsafe { vr_engine_tick(e, ptr::null(), &mut row) },
        VrStatus::Scenario
    );

    assert_eq!(unsafe { vr_engine_reset(e) }, VrStatus::Ok);
    assert_eq!(
        unsafe { vr_engine_tick(e, ptr::null(), &mut row) },
        VrStatus::Ok
    );
    assert_eq!(row, rows[0]);

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { vr_run_to_csv(s, &mut csv) }, VrStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_string();
    let golden = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/golden/deescalation.csv"
    );
    let golden = c(&std::fs::read_to_string(golden).unwrap());
    let mut n = usize::MAX;
    assert_eq!(
        unsafe { vr_compare_csv(csv, golden.as_ptr(), 1e-9, &mut n) },
        VrStatus::Ok
    );
    assert_eq!(n, 0);
    unsafe { vr_string_free(csv) };
    assert!(text.starts_with("tick,distance,"));

    unsafe {
        vr_engine_free(e);
        vr_scenario_free(s);
    }
}

#[test]
fn live_input_overrides_script() {
    let s = parse(&shipped("calm_closed_loop.scn"));
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(vr_engine_new(s, &mut a), VrStatus::Ok);
        assert_eq!(vr_engine_new(s, &mut b), VrStatus::Ok);
        vr_scenario_free(s);
    }
    let push = VrLiveInput {
        has_move: true,
        trainee_move: 0.5,
        ..Default::default()
    };
    let (mut ra, mut rb) = (VrTraceRow::default(), VrTraceRow::default());
    for _ in 0..2 {
        unsafe {
            assert_eq!(vr_engine_tick(a, ptr::null(), &mut ra), VrStatus::Ok);
            assert_eq!(vr_engine_tick(b, &push, &mut rb), VrStatus::Ok);
        }
    }
    // A positive move is the trainee stepping away.
    assert!(
        rb.distance > ra.distance,
        "{} vs {}",
        rb.distance,
        ra.distance
    );

    let bad = VrLiveInput {
        has_calmness: true,
        calmness: 2.0,
        ..Default::default()
    };
    assert_ne!(unsafe { vr_engine_tick(a, &bad, &mut ra) }, VrStatus::Ok);
    unsafe {
        vr_engine_free(a);
        vr_engine_free(b);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        vr_scenario_free(ptr::null_mut());
        vr_engine_free(ptr::null_mut());
        vr_string_free(ptr::null_mut());
    }
    assert_eq!(
        unsafe { vr_engine_reset(ptr::null_mut()) },
        VrStatus::NullPointer
    );
}
