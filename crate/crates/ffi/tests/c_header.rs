//! The generated header compiles as C99 and as C++, and a C program
//! linked against the static library runs.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "rpost.h"

int main(void) {
    RpostFamily *family = NULL;
    RpostPrior *prior = NULL;
    double kl = 0.0;
    if (rpost_family_normal_location(1.0, &family) != RPOST_STATUS_OK) return 1;
    if (rpost_prior_uniform(&prior) != RPOST_STATUS_OK) return 2;
    if (rpost_family_param_dim(family) != 1) return 3;
    if (rpost_kld_normal_closed(0.0, 1.0, 1.0, 1.0, &kl) != RPOST_STATUS_OK) return 4;
    if (fabs(kl - 0.5) > 1e-12) return 5;
    if (rpost_family_normal_location(1.0, NULL) != RPOST_STATUS_NULL_POINTER) return 6;
    if (rpost_family_normal_location(-1.0, &family) != RPOST_STATUS_INVALID_ARGUMENT) return 7;
    if (rpost_last_error_message() == NULL) return 8;
    rpost_prior_free(prior);
    rpost_family_free(family);
    printf("ok\n");
    return 0;
}
"#;

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn compiler(name: &str) -> Option<String> {
    Command::new(name).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| name.to_string())
}

#[test]
fn header_compiles() {
    let Some(cc) = compiler("cc") else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = tempfile_dir("syntax");
    let src = dir.join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let inc = include_dir();
    let c = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
        .arg(&inc)
        .arg(&src)
        .output()
        .unwrap();
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    if let Some(cxx) = compiler("c++") {
        let c = Command::new(cxx)
            .args(["-x", "c++", "-Wall", "-Werror", "-fsyntax-only", "-I"])
            .arg(&inc)
            .arg(&src)
            .output()
            .unwrap();
        assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    }
}

fn tempfile_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("c_header_{name}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn linked_program_runs() {
    let Some(cc) = compiler("cc") else {
        eprintln!("no C compiler; skipped");
        return;
    };
    // target/tmp -> target/<profile>/librpost_ffi.a
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let lib = ["debug", "release"].iter().map(|p| target.join(p).join("librpost_ffi.a")).find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("static library not found under {}; skipped", target.display());
        return;
    };
    let dir = tempfile_dir("link");
    let src = dir.join("smoke.c");
    let exe = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let c = Command::new(cc)
        .args(["-std=c99", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
