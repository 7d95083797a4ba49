use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use semcom_ffi::*;

const EVENT_USER: &str = "e1\tu1\ne1\tu2\ne2\tu1\ne2\tu2\ne3\tu3\ne3\tu4\ne4\tu3\ne4\tu4\ne4\tu1\n";
const EVENT_TAG: &str = "e1\trock\ne2\trock\ne3\tjazz\ne4\tjazz\ne1\tpop\ne3\tpop\n";
const TAG_TOPIC: &str = "rock\tR\npop\tR\njazz\tJ\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = semcom_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn small_dataset() -> *mut SemcomDataset {
    let (eu, et, tt) = (c(EVENT_USER), c(EVENT_TAG), c(TAG_TOPIC));
    let mut ds = ptr::null_mut();
    let st = unsafe {
        semcom_dataset_from_tsv(
            eu.as_ptr(),
            et.as_ptr(),
            tt.as_ptr(),
            ptr::null(),
            ptr::null(),
            &mut ds,
        )
    };
    assert_eq!(st, SemcomStatus::Ok);
    ds
}

fn small_config() -> *mut SemcomConfig {
    let cfg = semcom_config_new();
    unsafe {
        assert_eq!(semcom_config_set_min_tag_freq(cfg, 0), SemcomStatus::Ok);
        assert_eq!(semcom_config_set_svd_k(cfg, 1), SemcomStatus::Ok);
    }
    cfg
}

#[test]
fn detect_round_trip() {
    let ds = small_dataset();
    assert_eq!(unsafe { semcom_dataset_event_count(ds) }, 4);
    assert_eq!(unsafe { semcom_dataset_user_count(ds) }, 4);
    let cfg = small_config();
    let mut res = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_detect(ds, cfg, &mut res) },
        SemcomStatus::Ok
    );
    let n = unsafe { semcom_result_community_count(res) };
    assert!(n >= 1);
    let mut size = 0usize;
    assert_eq!(
        unsafe { semcom_result_community_size(res, 0, &mut size) },
        SemcomStatus::Ok
    );
    assert!(size >= 1);
    assert_eq!(
        unsafe { semcom_result_community_size(res, n, &mut size) },
        SemcomStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let (mut p, mut q, mut pq) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(semcom_result_purity(res, &mut p), SemcomStatus::Ok);
        assert_eq!(semcom_result_modularity(res, &mut q), SemcomStatus::Ok);
        assert_eq!(semcom_result_purq(res, 1.0, &mut pq), SemcomStatus::Ok);
        assert_eq!(
            semcom_result_purq(res, 0.0, &mut pq),
            SemcomStatus::InvalidArgument
        );
    }
    assert!((0.0..=1.0).contains(&p));

    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_result_communities_json(res, &mut json) },
        SemcomStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { semcom_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["communities"].as_array().unwrap().len(), n);

    let mut report: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_result_report_json(res, &mut report) },
        SemcomStatus::Ok
    );
    let r: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(report) }.to_str().unwrap()).unwrap();
    unsafe { semcom_string_free(report) };
    assert_eq!(r["config"]["svd_k"], 1);

    unsafe {
        semcom_result_free(res);
        semcom_config_free(cfg);
        semcom_dataset_free(ds);
    }
}

#[test]
fn invalid_config_is_rejected_and_kept() {
    let cfg = semcom_config_new();
    assert_eq!(
        unsafe { semcom_config_set_alpha(cfg, 1.5) },
        SemcomStatus::InvalidConfig
    );
    assert!(last_error().contains("alpha"));
    let betas = [0.5, -1.0];
    assert_eq!(
        unsafe { semcom_config_set_betas(cfg, betas.as_ptr(), betas.len()) },
        SemcomStatus::InvalidConfig
    );
    assert_eq!(
        unsafe { semcom_config_set_alpha(cfg, 1.0) },
        SemcomStatus::Ok
    );
    assert!(semcom_last_error_message().is_null());
    unsafe { semcom_config_free(cfg) };
}

#[test]
fn null_and_bad_inputs() {
    let mut ds = ptr::null_mut();
    let st = unsafe { semcom_dataset_load_dir(ptr::null(), &mut ds) };
    assert_eq!(st, SemcomStatus::NullPointer);
    let dir = c("/nonexistent/semcom");
    assert_eq!(
        unsafe { semcom_dataset_load_dir(dir.as_ptr(), &mut ds) },
        SemcomStatus::Io
    );
    assert!(last_error().contains("event_user.tsv"));

    let bad = c("e1\tu1\textra\n");
    let et = c(EVENT_TAG);
    let tt = c(TAG_TOPIC);
    let st = unsafe {
        semcom_dataset_from_tsv(
            bad.as_ptr(),
            et.as_ptr(),
            tt.as_ptr(),
            ptr::null(),
            ptr::null(),
            &mut ds,
        )
    };
    assert_eq!(st, SemcomStatus::Parse);
    assert!(last_error().contains(":1:"));

    let mut res = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_detect(ptr::null(), ptr::null(), &mut res) },
        SemcomStatus::NullPointer
    );
    assert_eq!(unsafe { semcom_result_community_count(ptr::null()) }, 0);
    unsafe {
        semcom_result_free(ptr::null_mut());
        semcom_dataset_free(ptr::null_mut());
        semcom_config_free(ptr::null_mut());
        semcom_string_free(ptr::null_mut());
    }
}

#[test]
fn pruning_everything_reports_empty_dataset() {
    let ds = small_dataset();
    let mut res = ptr::null_mut();
    // default min_tag_freq of 5 removes every tag of the toy data
    assert_eq!(
        unsafe { semcom_detect(ds, ptr::null(), &mut res) },
        SemcomStatus::EmptyDataset
    );
    assert!(res.is_null());
    unsafe { semcom_dataset_free(ds) };
}

#[test]
fn planted_files_load_and_write() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = c(tmp.path().to_str().unwrap());
    assert_eq!(
        unsafe { semcom_generate_planted(7, dir.as_ptr()) },
        SemcomStatus::Ok
    );
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_dataset_load_dir(dir.as_ptr(), &mut ds) },
        SemcomStatus::Ok
    );
    let mut res = ptr::null_mut();
    assert_eq!(
        unsafe { semcom_detect(ds, ptr::null(), &mut res) },
        SemcomStatus::Ok
    );
    assert_eq!(
        unsafe { semcom_result_write(res, dir.as_ptr()) },
        SemcomStatus::Ok
    );
    assert!(tmp.path().join("communities.json").exists());
    assert!(tmp.path().join("report.json").exists());
    unsafe {
        semcom_result_free(res);
        semcom_dataset_free(ds);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(semcom_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "semcom.h"

int main(void) {
    const char *eu = "e1\tu1\ne1\tu2\ne2\tu1\ne2\tu2\ne3\tu3\ne3\tu4\ne4\tu3\ne4\tu4\ne4\tu1\n";
    const char *et = "e1\trock\ne2\trock\ne3\tjazz\ne4\tjazz\n";
    const char *tt = "rock\tR\njazz\tJ\n";
    SemcomDataset *ds = NULL;
    SemcomResult *res = NULL;
    SemcomConfig *cfg = semcom_config_new();
    if (semcom_config_set_min_tag_freq(cfg, 0) != SEMCOM_STATUS_OK) return 1;
    if (semcom_config_set_svd_k(cfg, 1) != SEMCOM_STATUS_OK) return 1;
    if (semcom_config_set_alpha(cfg, 2.0) != SEMCOM_STATUS_INVALID_CONFIG) return 2;
    if (semcom_dataset_from_tsv(eu, et, tt, NULL, NULL, &ds) != SEMCOM_STATUS_OK) return 3;
    if (semcom_detect(ds, cfg, &res) != SEMCOM_STATUS_OK) {
        fprintf(stderr, "%s\n", semcom_last_error_message());
        return 4;
    }
    double purity = -1.0;
    semcom_result_purity(res, &purity);
    printf("%zu %.3f\n", semcom_result_community_count(res), purity);
    semcom_result_free(res);
    semcom_dataset_free(ds);
    semcom_config_free(cfg);
    return 0;
}
"#;

/// The static library built alongside this test binary. `deps/` holds the
/// copy from the current build; the uplifted one in the profile directory
/// can be stale.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [
        deps.join("libsemcom_ffi.a"),
        deps.parent()?.join("libsemcom_ffi.a"),
    ]
    .into_iter()
    .find(|p| p.exists())
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(lib) = static_lib() else {
        eprintln!("skipping: libsemcom_ffi.a not found next to the test binary");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let bin = tmp.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), "2 1.000");
}
