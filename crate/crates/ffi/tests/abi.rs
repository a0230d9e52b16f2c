//! Exercises the C ABI from Rust, plus a compile check of the header.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use h2cavity_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(h2c_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    h2c_string_free(s);
    out
}

unsafe fn short_assoc() -> *mut H2Scenario {
    let mut sc = ptr::null_mut();
    assert_eq!(h2c_scenario_builtin(c("assoc-quantum").as_ptr(), &mut sc), H2Status::Ok);
    assert_eq!(h2c_scenario_set(sc, c("horizon.t_end").as_ptr(), c("2e-8").as_ptr()), H2Status::Ok);
    assert_eq!(h2c_scenario_set(sc, c("horizon.stride").as_ptr(), c("20").as_ptr()), H2Status::Ok);
    sc
}

#[test]
fn run_and_read_back() {
    unsafe {
        let sc = short_assoc();
        let mut run = ptr::null_mut();
        assert_eq!(h2c_run(sc, &mut run), H2Status::Ok, "{}", last_error());
        let rows = h2c_run_rows(run);
        assert_eq!(rows, 200 / 20 + 1);
        let cols = h2c_run_columns(run);
        assert!(cols >= 4);
        let names: Vec<String> = (0..cols)
            .map(|i| CStr::from_ptr(h2c_run_column_name(run, i)).to_string_lossy().into_owned())
            .collect();
        assert_eq!(names[0], "pop_h2");
        assert!(h2c_run_column_name(run, cols).is_null());

        let mut times = vec![0.0; rows];
        assert_eq!(h2c_run_times(run, times.as_mut_ptr(), rows), H2Status::Ok);
        assert_eq!(times[0], 0.0);
        assert!((times[rows - 1] - 2e-8).abs() < 1e-20);

        let mut h2 = vec![0.0; rows];
        assert_eq!(h2c_run_column(run, 0, h2.as_mut_ptr(), rows), H2Status::Ok);
        assert_eq!(h2[0], 0.0);
        assert_eq!(h2c_run_column(run, 0, h2.as_mut_ptr(), rows - 1), H2Status::BufferTooSmall);
        assert!(last_error().contains("need"));
        assert_eq!(h2c_run_column(run, cols, h2.as_mut_ptr(), rows), H2Status::BadArgument);

        let mut pops = [0.0; 4];
        assert_eq!(h2c_run_final_populations(run, pops.as_mut_ptr()), H2Status::Ok);
        assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(pops[0], h2[rows - 1]);
        // Fixed horizons do not test for a plateau.
        assert_eq!(h2c_run_plateau(run), -1);

        h2c_run_free(run);
        h2c_scenario_free(sc);
    }
}

#[test]
fn run_to_dir_writes_outputs() {
    unsafe {
        let sc = short_assoc();
        let dir = tempfile::tempdir().unwrap();
        let path = c(dir.path().to_str().unwrap());
        let mut manifest = ptr::null_mut();
        assert_eq!(h2c_run_to_dir(sc, path.as_ptr(), &mut manifest), H2Status::Ok, "{}", last_error());
        let json: serde_json::Value = serde_json::from_str(&take(manifest)).unwrap();
        assert_eq!(json["scenario"], "assoc-quantum");
        for f in ["trajectory.csv", "scenario.cfg", "manifest.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        // NULL manifest pointer is allowed.
        assert_eq!(h2c_run_to_dir(sc, path.as_ptr(), ptr::null_mut()), H2Status::Ok);
        h2c_scenario_free(sc);
    }
}

#[test]
fn config_roundtrip_and_validate() {
    unsafe {
        let sc = short_assoc();
        let mut text = ptr::null_mut();
        assert_eq!(h2c_scenario_to_config(sc, &mut text), H2Status::Ok);
        let text = take(text);
        assert!(text.contains("t_end"));

        let mut again = ptr::null_mut();
        assert_eq!(h2c_scenario_from_config(c(&text).as_ptr(), &mut again), H2Status::Ok);
        let mut text2 = ptr::null_mut();
        assert_eq!(h2c_scenario_to_config(again, &mut text2), H2Status::Ok);
        assert_eq!(take(text2), text);

        let mut report = ptr::null_mut();
        assert_eq!(h2c_scenario_validate(sc, &mut report), H2Status::Ok);
        let json: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(json["eta"]["eta"], 0.01);
        assert_eq!(json["eta"]["sc_ok"], true);

        h2c_scenario_free(again);
        h2c_scenario_free(sc);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(h2c_scenario_builtin(c("nope").as_ptr(), &mut sc), H2Status::Invalid);
        assert!(sc.is_null());
        assert!(last_error().contains("nope"));

        assert_eq!(h2c_scenario_builtin(ptr::null(), &mut sc), H2Status::BadArgument);
        assert_eq!(h2c_scenario_builtin(c("assoc-quantum").as_ptr(), ptr::null_mut()), H2Status::BadArgument);

        assert_eq!(h2c_scenario_builtin(c("assoc-quantum").as_ptr(), &mut sc), H2Status::Ok);
        assert_eq!(h2c_scenario_set(sc, c("params.bogus").as_ptr(), c("1").as_ptr()), H2Status::Invalid);
        // Values are parsed on set but the scenario is checked as a whole
        // before it runs.
        assert_eq!(h2c_scenario_set(sc, c("integrator.dt").as_ptr(), c("-1").as_ptr()), H2Status::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(h2c_run(sc, &mut run), H2Status::Invalid);
        assert!(run.is_null());
        assert!(last_error().contains("dt"));
        h2c_scenario_free(sc);
        let mut sc = ptr::null_mut();
        assert_eq!(h2c_scenario_from_config(c("[scenario]\nprocess = sideways\n").as_ptr(), &mut sc), H2Status::Invalid);
        assert!(sc.is_null());

        let bytes = [0xffu8, 0];
        assert_eq!(h2c_scenario_builtin(bytes.as_ptr() as *const c_char, &mut sc), H2Status::BadArgument);

        // NULL handles are harmless.
        h2c_scenario_free(ptr::null_mut());
        h2c_run_free(ptr::null_mut());
        h2c_string_free(ptr::null_mut());
        assert_eq!(h2c_run_rows(ptr::null()), 0);
        assert_eq!(h2c_run_plateau(ptr::null()), -1);
    }
}

#[test]
fn expm_rotation() {
    // A = [[0, -1], [1, 0]] → exp(A t) is a rotation by t.
    let (re, im) = ([0.0, -1.0, 1.0, 0.0], [0.0; 4]);
    let (mut ore, mut oim) = ([0.0; 4], [0.0; 4]);
    let t = 0.3f64;
    let s = unsafe { h2c_expm(2, re.as_ptr(), im.as_ptr(), t, 20, ore.as_mut_ptr(), oim.as_mut_ptr()) };
    assert_eq!(s, H2Status::Ok);
    let want = [t.cos(), -t.sin(), t.sin(), t.cos()];
    for k in 0..4 {
        assert!((ore[k] - want[k]).abs() < 1e-12 && oim[k].abs() < 1e-15);
    }
    let s = unsafe { h2c_expm(2, ptr::null(), im.as_ptr(), t, 20, ore.as_mut_ptr(), oim.as_mut_ptr()) };
    assert_eq!(s, H2Status::BadArgument);
    let s = unsafe { h2c_expm(2, re.as_ptr(), im.as_ptr(), t, 99, ore.as_mut_ptr(), oim.as_mut_ptr()) };
    assert_eq!(s, H2Status::Invalid);
}

#[test]
fn version_matches_engine() {
    let v = unsafe { CStr::from_ptr(h2c_version()) }.to_str().unwrap();
    assert_eq!(v, h2cavity::ENGINE_VERSION);
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/h2cavity.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["h2c_run", "h2c_expm", "H2_STATUS_INVARIANT_BREACH", "typedef struct H2Scenario H2Scenario"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ return H2_STATUS_OK; }}\n")).unwrap();
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        match std::process::Command::new(cc).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&src).output() {
            Ok(o) => assert!(o.status.success(), "{cc}: {}", String::from_utf8_lossy(&o.stderr)),
            Err(_) => eprintln!("{cc} not found; skipping compile check"),
        }
    }
}
