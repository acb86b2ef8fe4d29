//! Compile and run a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const CLIENT: &str = r#"
#include <math.h>
#include <stdio.h>
#include "geophase.h"

int main(void) {
    GpComplex s;
    if (gp_exact_s(0.3, M_PI / 3.0, 2.0 * M_PI / 0.3, &s) != GP_STATUS_OK) return 1;
    if (fabs(s.re - 0.915952943767723) > 1e-12) return 2;

    GpTrajectory *traj = NULL;
    if (gp_trajectory_evolve(0.3, M_PI / 3.0, 10.0, 1e-10, &traj) != GP_STATUS_OK) return 3;
    GpAmplitudes amp;
    if (gp_trajectory_amplitudes(traj, 10.0, &amp) != GP_STATUS_OK) return 4;
    gp_trajectory_free(traj);

    GpRotatingFrame rf;
    if (gp_rotating_frame(1.0, 0.0, &rf) != GP_STATUS_NUMERICAL) return 5;
    char msg[128];
    size_t len = gp_last_error_message(msg, sizeof msg);
    if (len == 0) return 6;
    printf("%.12f %s\n", amp.a, msg);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libgeophase_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, CLIENT).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-D_DEFAULT_SOURCE", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("degenerate"), "{text}");
}
