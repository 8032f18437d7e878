use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use polariton_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        polariton_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn spectrum_handle_round_trip() {
    unsafe {
        let mut params = std::mem::zeroed::<PolaritonParameters>();
        assert_eq!(polariton_default_parameters(8, &mut params), PolaritonStatus::Ok);
        let mut spec = ptr::null_mut();
        assert_eq!(polariton_spectrum_new(&params, 2, 1, &mut spec), PolaritonStatus::Ok);
        assert_eq!(polariton_spectrum_len(spec), 10);
        let mut rec = std::mem::zeroed::<PolaritonEigenstate>();
        let mut dark = 0;
        let mut energies = Vec::new();
        for i in 0..polariton_spectrum_len(spec) {
            assert_eq!(polariton_spectrum_get(spec, i, &mut rec), PolaritonStatus::Ok);
            if rec.group == PolaritonGroup::Dark {
                dark += 1;
                assert_eq!(rec.s_doubled, 6);
            }
            if rec.n_exc == 1 {
                energies.push(rec.eigenvalue);
            }
        }
        assert_eq!(dark, 7);
        let gap = energies.iter().cloned().fold(f64::MIN, f64::max)
            - energies.iter().cloned().fold(f64::MAX, f64::min);
        assert!((gap - 1.0).abs() < 1e-9);
        assert_eq!(polariton_spectrum_get(spec, 99, &mut rec), PolaritonStatus::OutOfRange);
        assert!(last_error().contains("99"));
        polariton_spectrum_free(spec);
    }
}

#[test]
fn invalid_input_reports_codes() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(
            polariton_spectrum_new(ptr::null(), 2, 1, &mut spec),
            PolaritonStatus::NullPointer
        );
        assert!(last_error().contains("params"));
        let mut params = std::mem::zeroed::<PolaritonParameters>();
        polariton_default_parameters(4, &mut params);
        assert_eq!(
            polariton_spectrum_new(&params, 5, 1, &mut spec),
            PolaritonStatus::InvalidArgument
        );
        assert!(spec.is_null());
        let mut x = 0.0;
        assert_eq!(polariton_relative_rabi(0.7, &mut x), PolaritonStatus::InvalidArgument);
        let mut big = 0u64;
        assert_eq!(polariton_dark_state_count(400, 200, &mut big), PolaritonStatus::Overflow);
        polariton_spectrum_free(ptr::null_mut());
        polariton_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn counting_functions() {
    unsafe {
        let mut n = 0u64;
        assert_eq!(polariton_dark_state_count(8, 3, &mut n), PolaritonStatus::Ok);
        assert_eq!(n, 28);
        let mut r = 0.0;
        assert_eq!(polariton_dark_polariton_ratio(8, 2, 6, &mut r), PolaritonStatus::Ok);
        assert!((r - 7.0 / 20.0).abs() < 1e-15);
        assert_eq!(polariton_rabi_splitting(0.5 / 8f64.sqrt(), 8, 0.0, &mut r), PolaritonStatus::Ok);
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(polariton_relative_rabi(0.01, &mut r), PolaritonStatus::Ok);
        assert!((r - 0.98f64.sqrt()).abs() < 1e-15);
        assert!(!CStr::from_ptr(polariton_version()).to_bytes().is_empty());
    }
}

#[test]
fn trajectory_from_toml() {
    let config = CString::new(
        "model = \"two_level\"\nn_molecules = 3\nn_exc_initial = 1\n[dynamics]\nt_end = 50.0\n",
    )
    .unwrap();
    unsafe {
        let mut traj = ptr::null_mut();
        assert_eq!(polariton_trajectory_run(config.as_ptr(), &mut traj), PolaritonStatus::Ok);
        let n = polariton_trajectory_samples(traj);
        assert_eq!(n, 11);
        let mut buf = vec![0.0; n];
        let time = PolaritonSeries::Time as u32;
        assert_eq!(polariton_trajectory_series(traj, time, 0, buf.as_mut_ptr(), n), PolaritonStatus::Ok);
        assert_eq!(buf[10], 50.0);
        let groups = polariton_trajectory_groups(traj);
        let mut total = vec![0.0; n];
        for g in 0..groups {
            let name = CStr::from_ptr(polariton_trajectory_group_name(traj, g));
            assert!(name.to_str().unwrap().starts_with('N'));
            let kind = PolaritonSeries::Group as u32;
            assert_eq!(polariton_trajectory_series(traj, kind, g, buf.as_mut_ptr(), n), PolaritonStatus::Ok);
            total.iter_mut().zip(&buf).for_each(|(t, b)| *t += b);
        }
        assert!(total.iter().all(|t| (t - 1.0).abs() < 1e-9));
        assert!(polariton_trajectory_group_name(traj, groups).is_null());
        assert_eq!(
            polariton_trajectory_series(traj, 42, 0, buf.as_mut_ptr(), n),
            PolaritonStatus::InvalidArgument
        );
        assert_eq!(
            polariton_trajectory_series(traj, time, 0, buf.as_mut_ptr(), 2),
            PolaritonStatus::OutOfRange
        );
        polariton_trajectory_free(traj);

        let bad = CString::new("n_molecules = \"eight\"\n").unwrap();
        let mut traj = ptr::null_mut();
        assert_eq!(polariton_trajectory_run(bad.as_ptr(), &mut traj), PolaritonStatus::Config);
        assert!(last_error().contains("n_molecules"));
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/polariton.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(text.contains("typedef struct PolaritonSpectrum PolaritonSpectrum;"));
    assert!(text.contains("POLARITON_STATUS_NUMERICAL = 4"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(header())
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
