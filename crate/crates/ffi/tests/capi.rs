//! The C ABI called from Rust, plus a C program compiled against the
//! generated header and the static library.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nmrl_ffi::*;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs")
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = nmrl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn models_load_and_report_dimensions() {
    let path = cstr(configs().join("models/chain2.toml").to_str().unwrap());
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(nmrl_model_load(path.as_ptr(), &mut model), NmrlStatus::Ok);
        let (mut nx, mut ny, mut nu, mut n) = (0, 0, 0, 0);
        assert_eq!(
            nmrl_model_dims(model, &mut nx, &mut ny, &mut nu, &mut n),
            NmrlStatus::Ok
        );
        assert_eq!((nx, ny, nu, n), (2, 2, 2, 1));
        nmrl_model_free(model);
    }
    assert!(nmrl_last_error().is_null());
}

#[test]
fn invalid_models_name_their_line() {
    let text = cstr("num_states = 1\nnum_obs = 1\nnum_actions = 1\nprior = [1.0]\ntransition = [[0.4]]\nobservation = [[1.0]]\ncost = [[0.0]]\n");
    let origin = cstr("inline.toml");
    let mut model = ptr::null_mut();
    let status = unsafe { nmrl_model_parse(text.as_ptr(), origin.as_ptr(), &mut model) };
    assert_eq!(status, NmrlStatus::Validation);
    assert!(model.is_null());
    assert!(last_error().contains("inline.toml:5"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { nmrl_model_load(ptr::null(), &mut model) },
        NmrlStatus::NullArgument
    );
    assert!(last_error().contains("path"));
    let mut n = 0;
    assert_eq!(
        unsafe { nmrl_model_dims(ptr::null(), &mut n, &mut n, &mut n, &mut n) },
        NmrlStatus::NullArgument
    );
    unsafe {
        nmrl_model_free(ptr::null_mut());
        nmrl_oracle_free(ptr::null_mut());
        nmrl_experiment_free(ptr::null_mut());
    }
}

#[test]
fn missing_files_are_io_errors() {
    let path = cstr("/nonexistent/model.toml");
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { nmrl_model_load(path.as_ptr(), &mut model) },
        NmrlStatus::Io
    );
}

#[test]
fn oracle_targets_and_bounds_cross_the_boundary() {
    let path = cstr(configs().join("chain2_td0.toml").to_str().unwrap());
    unsafe {
        let mut exp = ptr::null_mut();
        assert_eq!(
            nmrl_experiment_load(path.as_ptr(), &mut exp),
            NmrlStatus::Ok
        );
        let mut len = 0;
        assert_eq!(nmrl_experiment_iterate_len(exp, &mut len), NmrlStatus::Ok);
        assert_eq!(len, 4);
        let mut oracle = ptr::null_mut();
        assert_eq!(nmrl_oracle_compute(exp, &mut oracle), NmrlStatus::Ok);

        let mut short = [0.0; 2];
        let mut got = 0;
        assert_eq!(
            nmrl_oracle_target(oracle, short.as_mut_ptr(), short.len(), &mut got),
            NmrlStatus::BufferTooSmall
        );
        assert_eq!(got, 4);
        let mut theta = [0.0; 4];
        assert_eq!(
            nmrl_oracle_target(oracle, theta.as_mut_ptr(), 4, &mut got),
            NmrlStatus::Ok
        );
        assert!(theta.iter().all(|t| (t - 2.5).abs() < 1e-10), "{theta:?}");

        let mut count = 0;
        assert_eq!(nmrl_oracle_bound_count(oracle, &mut count), NmrlStatus::Ok);
        assert_eq!(count, 3);
        for i in 0..count {
            let (mut lhs, mut rhs, mut slack) = (0.0, 0.0, 0.0);
            assert_eq!(
                nmrl_oracle_bound(oracle, i, &mut lhs, &mut rhs, &mut slack),
                NmrlStatus::Ok
            );
            assert_eq!(slack, rhs - lhs);
        }
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        assert_eq!(
            nmrl_oracle_bound(oracle, count, &mut a, &mut b, &mut c),
            NmrlStatus::Validation
        );
        let mut violated = true;
        assert_eq!(
            nmrl_oracle_bound_violated(oracle, &mut violated),
            NmrlStatus::Ok
        );
        assert!(!violated);

        let dir = tempfile::tempdir().unwrap();
        let out = cstr(dir.path().to_str().unwrap());
        assert_eq!(nmrl_oracle_write(exp, oracle, out.as_ptr()), NmrlStatus::Ok);
        assert!(dir.path().join("bounds.json").is_file());
        nmrl_oracle_free(oracle);
        nmrl_experiment_free(exp);
    }
}

#[test]
fn runs_report_the_cli_exit_code() {
    let path = cstr(
        configs()
            .join("adversarial_linear_q.toml")
            .to_str()
            .unwrap(),
    );
    let dir = tempfile::tempdir().unwrap();
    let out = cstr(dir.path().to_str().unwrap());
    unsafe {
        let mut exp = ptr::null_mut();
        assert_eq!(
            nmrl_experiment_load(path.as_ptr(), &mut exp),
            NmrlStatus::Ok
        );
        let mut code = -1;
        assert_eq!(
            nmrl_experiment_run(exp, out.as_ptr(), &mut code),
            NmrlStatus::Ok
        );
        assert_eq!(code, 2);
        nmrl_experiment_free(exp);
    }
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nmrl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "nmrl.h"

int main(int argc, char **argv) {
    NmrlModel *model = NULL;
    if (nmrl_model_load(argv[1], &model) != NMRL_STATUS_OK) {
        fprintf(stderr, "%s\n", nmrl_last_error());
        return 1;
    }
    size_t nx, ny, nu, n;
    nmrl_model_dims(model, &nx, &ny, &nu, &n);
    nmrl_model_free(model);
    NmrlStatus s = nmrl_model_load("/nonexistent.toml", &model);
    printf("%zu %zu %zu %zu %d\n", nx, ny, nu, n, (int)s);
    return 0;
}
"#;

#[test]
fn a_c_program_links_against_the_static_library() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler on PATH; C link check not run");
        return;
    };
    assert!(cc.status.success());
    // target/<profile>/deps/<test binary> -> target/<profile>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libnmrl_ffi.a");
    assert!(lib.is_file(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let build = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe)
        .arg(configs().join("models/chain2.toml"))
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "2 2 2 1 3");
}
