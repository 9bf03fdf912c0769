//! Exercises the C entry points from Rust exactly as a foreign caller would:
//! through raw pointers and status codes.

use std::ffi::{CStr, c_int};
use tmirs_ffi::*;

#[test]
fn scenario_lifecycle_and_element_count() {
    unsafe {
        let paper = tmirs_scenario_paper();
        assert!(!paper.is_null());
        assert_eq!(tmirs_scenario_elements(paper), 36);
        tmirs_scenario_free(paper);
        let desk = tmirs_scenario_desk();
        assert_eq!(tmirs_scenario_elements(desk), 9);
        tmirs_scenario_free(desk);
        assert_eq!(tmirs_scenario_elements(std::ptr::null()), 0);
        tmirs_scenario_free(std::ptr::null_mut());
    }
}

#[test]
fn scenario_load_reports_errors_by_class() {
    unsafe {
        let mut out = std::ptr::null_mut();
        let missing = c"/no/such/file.cfg";
        assert_eq!(tmirs_scenario_load(missing.as_ptr(), &mut out), TMIRS_IO_ERROR);
        let dir = tempdir();
        let bad = dir.join("bad.cfg");
        std::fs::write(&bad, "nonsense_key = 1\n").unwrap();
        let bad_c = std::ffi::CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(
            tmirs_scenario_load(bad_c.as_ptr(), &mut out),
            TMIRS_CONFIG_ERROR
        );
        let good = dir.join("good.cfg");
        std::fs::write(&good, "m_x = 2\nm_z = 2\nq_levels = 4\n").unwrap();
        let good_c = std::ffi::CString::new(good.to_str().unwrap()).unwrap();
        assert_eq!(tmirs_scenario_load(good_c.as_ptr(), &mut out), TMIRS_OK);
        assert_eq!(tmirs_scenario_elements(out), 4);
        tmirs_scenario_free(out);
        assert_eq!(
            tmirs_scenario_load(std::ptr::null(), &mut out),
            TMIRS_NULL_ARG
        );
        std::fs::remove_dir_all(dir).unwrap();
    }
}

#[test]
fn switching_coeff_values_and_validation() {
    unsafe {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        assert_eq!(tmirs_switching_coeff(0, 0.25, 0.5, &mut re, &mut im), TMIRS_OK);
        assert_eq!((re, im), (0.5, 0.0));
        assert_eq!(tmirs_switching_coeff(1, 0.0, 0.5, &mut re, &mut im), TMIRS_OK);
        assert!(re.abs() < 1e-15);
        assert!((im + 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(
            tmirs_switching_coeff(0, -0.1, 0.5, &mut re, &mut im),
            TMIRS_INVALID_ARG
        );
        assert_eq!(
            tmirs_switching_coeff(0, 0.0, 0.5, std::ptr::null_mut(), &mut im),
            TMIRS_NULL_ARG
        );
    }
}

#[test]
fn rate_and_ser_evaluation_roundtrip() {
    unsafe {
        let s = tmirs_scenario_desk();
        let n = tmirs_scenario_elements(s);
        let tau_on = vec![0.0f64; n];
        let delta_tau = vec![1.0f64; n];
        let mut rate = 0.0f64;
        // Matched full-on configuration at the user direction: the phase
        // profile compensates everything, the rate is strictly positive.
        let status = tmirs_effective_sum_rate(
            s,
            tau_on.as_ptr(),
            delta_tau.as_ptr(),
            n,
            40.0,
            30.0,
            &mut rate,
        );
        assert_eq!(status, TMIRS_OK);
        assert!(rate > 0.0);
        let mut secrecy = 0.0f64;
        assert_eq!(
            tmirs_secrecy_rate(
                s,
                tau_on.as_ptr(),
                delta_tau.as_ptr(),
                n,
                40.0,
                30.0,
                &mut secrecy
            ),
            TMIRS_OK
        );
        assert!(secrecy <= rate + 1e-12);
        let mut ser = 0.0f64;
        let mut degenerate: c_int = -1;
        assert_eq!(
            tmirs_ser(
                s,
                tau_on.as_ptr(),
                delta_tau.as_ptr(),
                n,
                40.0,
                30.0,
                200,
                7,
                &mut ser,
                &mut degenerate
            ),
            TMIRS_OK
        );
        assert_eq!(degenerate, 0);
        assert!((0.0..=1.0).contains(&ser));
        // Deterministic per seed.
        let mut ser2 = 0.0f64;
        tmirs_ser(
            s,
            tau_on.as_ptr(),
            delta_tau.as_ptr(),
            n,
            40.0,
            30.0,
            200,
            7,
            &mut ser2,
            std::ptr::null_mut(),
        );
        assert_eq!(ser.to_bits(), ser2.to_bits());
        // Wrong array length is rejected.
        assert_eq!(
            tmirs_effective_sum_rate(
                s,
                tau_on.as_ptr(),
                delta_tau.as_ptr(),
                n - 1,
                40.0,
                30.0,
                &mut rate
            ),
            TMIRS_INVALID_ARG
        );
        assert_eq!(
            tmirs_ser(
                s,
                tau_on.as_ptr(),
                delta_tau.as_ptr(),
                n,
                40.0,
                30.0,
                0,
                7,
                &mut ser,
                std::ptr::null_mut()
            ),
            TMIRS_INVALID_ARG
        );
        tmirs_scenario_free(s);
    }
}

#[test]
fn status_messages_and_version() {
    unsafe {
        for code in 0..=6 {
            let msg = tmirs_status_message(code);
            assert!(!msg.is_null());
            assert!(!CStr::from_ptr(msg).to_str().unwrap().is_empty());
        }
        let version = CStr::from_ptr(tmirs_version()).to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_every_exported_symbol() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/tmirs.h"
    ))
    .unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let mut exported = Vec::new();
    for (i, line) in source.lines().enumerate() {
        if line.contains("no_mangle") {
            // The exported fn name appears within the next few lines.
            let tail: String = source
                .lines()
                .skip(i + 1)
                .take(3)
                .collect::<Vec<_>>()
                .join(" ");
            if let Some(pos) = tail.find("fn ") {
                let rest = &tail[pos + 3..];
                let name: String = rest
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .collect();
                exported.push(name);
            }
        }
    }
    assert!(!exported.is_empty());
    for name in exported {
        assert!(
            header.contains(&name),
            "exported symbol {name} missing from include/tmirs.h"
        );
    }
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("tmirs-ffi-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
