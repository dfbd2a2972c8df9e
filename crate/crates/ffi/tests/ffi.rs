use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use weightcond_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(wc_last_error()) }.to_string_lossy().into_owned()
}

fn new_matrix(rows: usize, cols: usize, data: &[f64]) -> *mut WcMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wc_matrix_new(rows, cols, data.as_ptr(), &mut m) }, WcStatus::Ok);
    m
}

#[test]
fn matrix_round_trip_and_kappa() {
    let m = new_matrix(2, 2, &[3.0, 4.0, 0.0, 5.0]);
    unsafe {
        assert_eq!((wc_matrix_rows(m), wc_matrix_cols(m)), (2, 2));
        let mut buf = [0.0; 4];
        assert_eq!(wc_matrix_copy_data(m, buf.as_mut_ptr(), 4), WcStatus::Ok);
        assert_eq!(buf, [3.0, 4.0, 0.0, 5.0]);
        let mut k = 0.0;
        assert_eq!(wc_condition_number(m, 1e-12, &mut k), WcStatus::Ok);
        assert!((k - 3.0).abs() < 1e-10);
        let mut s = [0.0; 2];
        assert_eq!(wc_singular_values(m, s.as_mut_ptr(), 2), WcStatus::Ok);
        assert!((s[0] / s[1] - 3.0).abs() < 1e-10);
        let (mut before, mut after) = (0.0, 0.0);
        assert_eq!(
            wc_conditioning_report(m, WcPreconditioner::RowEquilibration, &mut before, &mut after),
            WcStatus::Ok
        );
        assert!((before - 3.0).abs() < 1e-10 && (after - 3.0).abs() < 1e-10);
        wc_matrix_free(m);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(wc_matrix_new(2, 2, ptr::null(), &mut out), WcStatus::NullPointer);
        assert!(out.is_null());
        assert!(last_error().contains("null"));

        let z = new_matrix(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(
            wc_precondition(z, WcPreconditioner::RowEquilibration, &mut out),
            WcStatus::ZeroRowOrColumn
        );
        assert!(out.is_null());
        let mut k = -1.0;
        assert_eq!(wc_condition_number(z, 1e-12, &mut k), WcStatus::RankDeficient);
        assert_eq!(k, -1.0, "outputs untouched on failure");

        let mut buf = [0.0; 3];
        assert_eq!(wc_matrix_copy_data(z, buf.as_mut_ptr(), 3), WcStatus::InvalidArgument);
        let r = new_matrix(2, 3, &[1.0; 6]);
        assert_eq!(wc_precondition(r, WcPreconditioner::Jacobi, &mut out), WcStatus::InvalidArgument);
        assert_eq!(wc_matrix_rows(ptr::null()), 0);
        wc_matrix_free(ptr::null_mut());
        wc_matrix_free(z);
        wc_matrix_free(r);
    }
}

#[test]
fn network_forward_and_kappas() {
    unsafe {
        let widths = [3usize, 5, 2];
        let mut net = ptr::null_mut();
        assert_eq!(
            wc_network_new_mlp(
                widths.as_ptr(),
                3,
                WcActivation::Tanh,
                WcConditioning::EquilibrateStatic,
                1,
                &mut net
            ),
            WcStatus::Ok
        );
        assert_eq!(wc_network_param_count(net), 3 * 5 + 5 + 5 * 2 + 2);
        let x = [0.1, 0.2, 0.3, -1.0, 0.5, 2.0];
        let mut y = [0.0; 4];
        assert_eq!(wc_network_forward(net, x.as_ptr(), 2, 6, y.as_mut_ptr(), 4), WcStatus::Ok);
        assert!(y.iter().all(|v| v.is_finite()));
        assert_eq!(wc_network_forward(net, x.as_ptr(), 2, 5, y.as_mut_ptr(), 4), WcStatus::InvalidArgument);
        let mut k = [0.0; 4];
        assert_eq!(wc_network_weight_kappas(net, k.as_mut_ptr(), 4), WcStatus::Ok);
        // static conditioning leaves unit rows, so stored and equilibrated agree
        assert!((k[0] - k[1]).abs() <= 1e-9 * k[0]);
        wc_network_free(net);

        assert_eq!(
            wc_network_new_mlp(widths.as_ptr(), 1, WcActivation::Relu, WcConditioning::None, 1, &mut net),
            WcStatus::InvalidArgument
        );
    }
}

#[test]
fn last_error_is_per_thread() {
    unsafe {
        let mut out = ptr::null_mut();
        wc_matrix_new(1, 1, ptr::null(), &mut out);
    }
    assert!(!last_error().is_empty());
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = header_dir().join("weightcond.h");
    assert!(header.is_file(), "build script writes the header");
    if !have_cc() {
        eprintln!("cc not found; skipping header compile check");
        return;
    }
    for lang in ["c", "c++"] {
        let st = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Wextra", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap();
        assert!(st.success(), "header does not compile as {lang}");
    }
}

/// Builds and runs a C program against the static library when it is
/// present next to this test binary.
#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libweightcond_ffi.a");
    if !have_cc() || !lib.is_file() {
        eprintln!("cc or {} missing; skipping link check", lib.display());
        return;
    }
    let tmp = std::env::temp_dir().join(format!("wc_smoke_{}", std::process::id()));
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let st = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&tmp)
        .status()
        .unwrap();
    assert!(st.success(), "smoke program failed to build");
    let out = Command::new(&tmp).output().unwrap();
    let _ = std::fs::remove_file(&tmp);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
