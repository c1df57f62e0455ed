#![allow(dead_code)]

pub mod oracle;

use std::path::Path;
use std::process::{Command, Output};

use crs_core::ReportDocument;

pub fn crs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crs"))
        .args(args)
        .env_remove("CRS_PLATFORM_TOKEN")
        .output()
        .expect("spawn crs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("crs exited by signal")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Runs `crs rate --format json` and parses the report from stdout.
pub fn rate_json(root: &Path, extra: &[&str]) -> ReportDocument {
    let mut args = vec!["rate", p(root), "--format", "json"];
    args.extend_from_slice(extra);
    let out = crs(&args);
    assert_eq!(code(&out), 0, "rate failed: {}", stderr(&out));
    ReportDocument::from_json(&out.stdout).expect("report json")
}
