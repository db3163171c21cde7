//! Compiles and runs the C example against the generated header and the
//! static library, proving the header parses as C and every symbol links.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_example_compiles_links_and_runs() {
    let compiler = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(compiler) = compiler else {
        eprintln!("no C compiler found, skipping");
        return;
    };

    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in target/<profile>/deps; the staticlib one
    // level up, built alongside this test by the same cargo invocation.
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let staticlib = profile_dir.join("liblcnet_ffi.a");
    assert!(
        staticlib.exists(),
        "{} missing; build the lcnet-ffi lib target first",
        staticlib.display()
    );

    let out_dir = tempfile::tempdir().unwrap();
    let binary = out_dir.path().join("quickstart");
    let compile = Command::new(compiler)
        .arg(crate_dir.join("examples").join("quickstart.c"))
        .arg(&staticlib)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&binary)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "C compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "example exited with {:?}:\n{}\n{}",
        run.status.code(),
        stdout,
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(
        stdout.contains("object "),
        "missing probabilities: {stdout}"
    );
    assert!(stdout.contains("\"accuracy\""), "missing report: {stdout}");
    assert!(
        stdout.trim_end().ends_with("ok"),
        "missing final ok: {stdout}"
    );
}
