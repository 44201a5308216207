use std::ffi::{CStr, CString};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use corrkit_ffi::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn fixture_c(name: &str) -> CString {
    CString::new(fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ck_last_error()) }.to_str().unwrap().to_owned()
}

#[test]
fn ex1_falsifiers_through_the_abi() {
    let json = fixture_c("ex1.json");
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(ck_correspondence_from_json(json.as_ptr(), &mut h), CkStatus::Ok);
        assert_eq!(ck_correspondence_dim(h), 1);

        let mut inside = false;
        assert_eq!(ck_correspondence_contains(h, [2.0].as_ptr(), 1, 0.0, &mut inside), CkStatus::Ok);
        assert!(inside);

        let (mut found, mut loc) = (false, [f64::NAN]);
        assert_eq!(ck_check_usc(h, 401, &mut found, loc.as_mut_ptr(), 1), CkStatus::Ok);
        assert!(found);
        assert!((loc[0] - 2.0).abs() <= 1e-9);

        assert_eq!(ck_check_lsc(h, 401, &mut found, loc.as_mut_ptr(), 1), CkStatus::Ok);
        assert!(found);
        assert!((loc[0] - 2.0).abs() <= 1e-9);

        // a location that does not fit is reported, not truncated
        assert_eq!(ck_check_usc(h, 401, &mut found, loc.as_mut_ptr(), 0), CkStatus::BufferTooSmall);
        assert!(!last_error().is_empty());
        ck_correspondence_free(h);
    }
}

#[test]
fn load_errors_map_to_status_codes() {
    let mut h = ptr::null_mut();
    unsafe {
        let bad = CString::new("{ not json").unwrap();
        assert_eq!(ck_correspondence_from_json(bad.as_ptr(), &mut h), CkStatus::ParseError);
        assert!(h.is_null());

        let econ = fixture_c("econ1.json");
        assert_eq!(ck_correspondence_from_json(econ.as_ptr(), &mut h), CkStatus::SchemaError);
        assert!(h.is_null());

        assert_eq!(ck_correspondence_from_json(ptr::null(), &mut h), CkStatus::NullPointer);
        assert_eq!(last_error(), "json is null");

        let utf = [0xffu8, 0];
        assert_eq!(ck_correspondence_from_json(utf.as_ptr().cast(), &mut h), CkStatus::InvalidUtf8);

        // freeing null is a no-op
        ck_correspondence_free(ptr::null_mut());
        ck_simplex_free(ptr::null_mut());
        ck_economy_free(ptr::null_mut());
        ck_string_free(ptr::null_mut());
    }
}

#[test]
fn simplex_weights_reproduce_the_point() {
    let verts = [0.0, 0.0, 2.0, 0.0, 0.0, 4.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ck_simplex_new(verts.as_ptr(), 3, 2, &mut s), CkStatus::Ok);
        let mut w = [0.0; 3];
        assert_eq!(ck_simplex_barycentric(s, [0.5, 1.0].as_ptr(), 2, w.as_mut_ptr(), 3), CkStatus::Ok);
        for (got, want) in w.iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() <= 1e-12, "{w:?}");
        }
        ck_simplex_free(s);

        let flat = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        assert_eq!(ck_simplex_new(flat.as_ptr(), 3, 2, &mut s), CkStatus::InvalidArgument);
    }
}

#[test]
fn econ1_equilibrium_through_the_abi() {
    let json = fixture_c("econ1.json");
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(ck_economy_from_json(json.as_ptr(), &mut e), CkStatus::Ok);
        for m in [CkMethod::Selection, CkMethod::Approximation] {
            let (mut x, mut len) = ([f64::NAN], 0usize);
            assert_eq!(ck_economy_equilibrium(e, m, 1e-6, x.as_mut_ptr(), 1, &mut len), CkStatus::Ok, "{}", last_error());
            assert_eq!(len, 1);
            assert!(x[0] > 0.4 && x[0] <= 0.6, "{m:?}: {}", x[0]);
        }
        assert_eq!(
            ck_economy_equilibrium(e, CkMethod::Selection, -1.0, ptr::null_mut(), 0, ptr::null_mut()),
            CkStatus::InvalidArgument
        );
        ck_economy_free(e);

        let full = fixture_c("econ1_full.json");
        assert_eq!(ck_economy_from_json(full.as_ptr(), &mut e), CkStatus::Ok);
        let mut x = [0.0];
        assert_eq!(
            ck_economy_equilibrium(e, CkMethod::Selection, 1e-6, x.as_mut_ptr(), 1, ptr::null_mut()),
            CkStatus::NoSolution
        );
        ck_economy_free(e);
    }
}

#[test]
fn run_matches_the_library_report() {
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixture("ex1.json")).unwrap()).unwrap();
    let inputs = CString::new(serde_json::json!([doc]).to_string()).unwrap();
    let cmd = CString::new("check-usc").unwrap();
    let (mut report, mut code) = (ptr::null_mut(), -1);
    unsafe {
        assert_eq!(ck_run(cmd.as_ptr(), inputs.as_ptr(), ptr::null(), &mut report, &mut code), CkStatus::Ok);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        ck_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(code, 1);
        assert_eq!(v["exit_code"], 1);
        assert_eq!(v["command"], "check-usc");
        assert_eq!(v["result"]["counterexample"]["location"], serde_json::json!([2.0]));

        let bogus = CString::new("launch").unwrap();
        assert_eq!(
            ck_run(bogus.as_ptr(), inputs.as_ptr(), ptr::null(), &mut report, &mut code),
            CkStatus::InvalidArgument
        );
    }
}

#[test]
fn header_declares_every_export() {
    let header = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/corrkit.h")).unwrap();
    let src = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f} missing");
    }
    for t in ["typedef struct CkCorrespondence", "typedef struct CkSimplex", "typedef struct CkEconomy", "CK_STATUS_OK = 0"] {
        assert!(header.contains(t), "{t}");
    }
}

/// Compiles `tests/c/smoke.c` against the header and static library and
/// runs it. Skipped when no C compiler is on the path.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in <target>/<profile>/deps
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libcorrkit_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).arg(fixture("ex1.json")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("usc violation at 2"), "{stdout}");
    assert!(stdout.contains("weights 0.5 0.25 0.25"), "{stdout}");
}
