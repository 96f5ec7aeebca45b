//! The generated header compiles as C and C++, and a C program linked against
//! the static library runs. Skipped when no C compiler is on the path.

use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn have(tool: &str) -> bool {
    Command::new(tool).arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(manifest().join("include/oracle_lab.h")).unwrap();
    let source = std::fs::read_to_string(manifest().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = manifest().join("include");
    for (tool, flags) in [("cc", &["-std=c99", "-x", "c"][..]), ("c++", &["-std=c++17", "-x", "c++"][..])] {
        if !have(tool) {
            eprintln!("{tool} not found, skipping");
            continue;
        }
        let out = Command::new(tool)
            .args(flags)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(manifest().join("tests/c/smoke.c"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{tool}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_and_runs() {
    if !have("cc") {
        eprintln!("cc not found, skipping");
        return;
    }
    // the test binary lives in <target>/<profile>/deps, next to the static library
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = [deps.join("liboracle_lab_ffi.a"), deps.parent().unwrap().join("liboracle_lab_ffi.a")]
        .into_iter()
        .find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("static library not built in {}, skipping", deps.display());
        return;
    };
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let out = Command::new("cc")
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(manifest().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "link: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("inputs 2"));
}

fn tempfile_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-smoke");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
