mod common;

use std::fs;

use serde_json::Value;
use tempfile::TempDir;

use common::*;

const NO_CHECKS: &str = "--no-compile-checks";

fn json(path: impl AsRef<std::path::Path>) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn scan_writes_sorted_graph_and_is_repeatable() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "scan"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first = read(dir.path().join("o/graph.json"));
    let graph: Value = serde_json::from_str(&first).unwrap();
    let paths: Vec<&str> = graph["nodes"].as_array().unwrap().iter().map(|n| n["path"].as_str().unwrap()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert!(paths.contains(&"sys/vector"));

    run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "scan"]);
    assert_eq!(read(dir.path().join("o/graph.json")), first);
}

#[test]
fn missing_interface_dir_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    write_files(
        dir.path(),
        &[("manifest.json", r#"{"libraries": [{"name": "L", "interface_dir": "nope"}]}"#)],
    );
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "scan"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope"), "{}", stderr(&out));
}

#[test]
fn manifest_is_required() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["scan"])), 2);
    assert_eq!(code(&run(dir.path(), &["--jobs", "0", "overlay", "--mount", "/a/b=/c"])), 2);
}

#[test]
fn check_of_clean_library_passes() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check", "--check-cmd", "true {header}"]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let report = json(dir.path().join("o/headers.json"));
    assert_eq!(report["summary"]["standalone"], 3);
    assert!(report["headers"].as_array().unwrap().iter().all(|h| h["unchecked"] == false));
}

#[test]
fn check_reports_include_cycle() {
    let dir = TempDir::new().unwrap();
    two_header_cycle(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check", NO_CHECKS]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("include cycle: inc/A.h -> inc/B.h"), "{}", stdout(&out));
    let report = json(dir.path().join("o/headers.json"));
    assert_eq!(report["cycles"][0]["members"], serde_json::json!(["inc/A.h", "inc/B.h"]));
    assert_eq!(report["cycles"][0]["breaks"].as_array().unwrap().len(), 1);
    assert_eq!(report["summary"]["cyclic"], 2);
}

#[test]
fn check_reports_never_included_header() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    write_files(
        dir.path(),
        &[("src/DataFormats/TrackerCommon/interface/Unused.h", "#pragma once\nint unused();\n")],
    );
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check", NO_CHECKS]);
    assert_eq!(code(&out), 1);
    let report = json(dir.path().join("o/headers.json"));
    let unused = report["headers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|h| h["path"].as_str().unwrap().ends_with("Unused.h"))
        .unwrap();
    assert_eq!(unused["classification"], "broken");
}

#[test]
fn compiler_diagnostics_mark_headers_incomplete() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let cmd = r#"sh -c 'case "$1" in *TrackerDetSide.h) echo "$1:1:10: fatal error: '"'"'Geom.h'"'"' file not found" >&2; exit 1;; esac' check {header}"#;
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check", "--check-cmd", cmd]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let report = json(dir.path().join("o/headers.json"));
    let side = report["headers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|h| h["path"].as_str().unwrap().ends_with("TrackerDetSide.h"))
        .unwrap();
    assert_eq!(side["classification"], "incomplete");
    assert!(side["evidence"].to_string().contains("Geom.h"));
}

#[test]
fn check_command_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let out = modmig()
        .current_dir(dir.path())
        .env("MODMIG_CHECK_CMD", "true {header}")
        .args(["--manifest", "manifest.json", "--out", "o", "check"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn check_without_command_or_executor_is_a_tool_error() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check"]);
    assert_eq!(code(&out), 2);
    let out = run(
        dir.path(),
        &["--manifest", "manifest.json", "--out", "o", "check", "--check-cmd", "/nonexistent/cc {header}"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("could not be started"), "{}", stderr(&out));
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "check", "--check-cmd", "cc -c"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn classification_is_cached_until_inputs_change() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let log = dir.path().join("calls.log");
    let cmd = format!("sh -c 'echo \"$1\" >> {}' check {{header}}", log.display());
    let args = ["--manifest", "manifest.json", "--out", "o", "check", "--check-cmd", cmd.as_str()];
    let calls = || read(&log).lines().count();

    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(calls(), 3);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(calls(), 3);

    let mut forced = args.to_vec();
    forced.push("--no-cache");
    assert_eq!(code(&run(dir.path(), &forced)), 0);
    assert_eq!(calls(), 6);

    write_files(
        dir.path(),
        &[("src/DataFormats/TrackerCommon/interface/TrackerDetSide.h", "#pragma once\nenum class TrackerDetSide {};\n")],
    );
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(calls(), 9);
}

#[test]
fn genmap_renders_tracker_library() {
    let dir = TempDir::new().unwrap();
    listing_one(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "genmap", NO_CHECKS]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = read(dir.path().join("o/module.modulemap"));
    assert!(text.starts_with("module DataFormatsTrackerCommon_xr {\n"));
    for name in LISTING_ONE_HEADERS {
        let line = format!(
            "  module \"{name}\" {{header \"DataFormats/TrackerCommon/interface/{name}.h\" export *}}\n"
        );
        assert!(text.contains(&line), "{text}");
    }
    assert_eq!(read(dir.path().join("o/omitted.json")), "[]\n");
}

#[test]
fn genmap_suffix_and_library_filter() {
    let dir = TempDir::new().unwrap();
    chain(dir.path());
    let out = run(
        dir.path(),
        &["--manifest", "manifest.json", "--out", "o", "genmap", NO_CHECKS, "--suffix", "_pcm", "--only-libs", "ROOT"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = read(dir.path().join("o/module.modulemap"));
    assert!(text.starts_with("module ROOT_pcm {\n"), "{text}");
    assert!(!text.contains("CMSSW"));
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "genmap", NO_CHECKS, "--only-libs", "Nope"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn genmap_with_no_libraries_writes_empty_file() {
    let dir = TempDir::new().unwrap();
    write_files(dir.path(), &[("manifest.json", "{}")]);
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "genmap", NO_CHECKS]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(dir.path().join("o/module.modulemap")), "");
}

#[test]
fn genmap_rejects_cross_library_cycle() {
    let dir = TempDir::new().unwrap();
    write_files(
        dir.path(),
        &[
            ("a/A.h", "#include \"../b/B.h\"\n"),
            ("b/B.h", "#include \"../a/A.h\"\n"),
            ("main.cc", "#include \"a/A.h\"\n"),
            (
                "manifest.json",
                r#"{"libraries": [{"name": "LibA", "interface_dir": "a"}, {"name": "LibB", "interface_dir": "b"}],
                    "tu_roots": ["main.cc"]}"#,
            ),
        ],
    );
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "genmap", NO_CHECKS]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("layering violation"), "{}", stderr(&out));
    assert!(!dir.path().join("o/module.modulemap").exists());
}

const LISTING_TWO_MOUNTS: [&str; 4] = [
    "--mount",
    "/usr/include/c++/module.modulemap=/builddir/include/stl.modulemap",
    "--mount",
    "/usr/include/module.modulemap=/builddir/include/libc.modulemap",
];

#[test]
fn overlay_for_system_modulemaps() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["--out", "o", "overlay"];
    args.extend(LISTING_TWO_MOUNTS);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let doc = modmig_core::overlay::parse_overlay(&read(dir.path().join("o/overlay.json"))).unwrap();
    let listing = "{ 'version': 0,
  'roots': [
    { 'name': '/usr/include/c++/', 'type': 'directory',
      'contents': [
        { 'name': 'module.modulemap', 'type': 'file',
          'external-contents': '/builddir/include/stl.modulemap' }]},
    { 'name': '/usr/include/', 'type': 'directory',
      'contents': [
        { 'name': 'module.modulemap', 'type': 'file',
          'external-contents': '/builddir/include/libc.modulemap'
      }]}]}";
    assert_eq!(doc, modmig_core::overlay::parse_overlay(listing).unwrap());
}

#[test]
fn overlay_single_mount_and_relocation() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["--out", "o", "overlay", "--mount", "/usr/include/module.modulemap=/b/libc.modulemap"]);
    assert_eq!(code(&out), 0);
    let v = json(dir.path().join("o/overlay.json"));
    assert_eq!(v["roots"].as_array().unwrap().len(), 1);

    let mut args = vec!["--out", "o", "--format", "json", "overlay"];
    args.extend(LISTING_TWO_MOUNTS);
    args.extend(["--relocate", "/builddir=/opt/rel"]);
    let out = run(dir.path(), &args);
    assert_eq!(code(&out), 0);
    let doc = modmig_core::overlay::parse_overlay(&stdout(&out)).unwrap();
    use modmig_core::overlay::Resolution;
    assert_eq!(
        doc.resolve("/usr/include/c++/module.modulemap"),
        Resolution::Mapped("/opt/rel/include/stl.modulemap".into())
    );
    assert_eq!(
        doc.resolve("/usr/include/module.modulemap"),
        Resolution::Mapped("/opt/rel/include/libc.modulemap".into())
    );
}

#[test]
fn overlay_duplicate_target_is_an_error() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["--out", "o", "overlay", "--mount", "/usr/include/m=/b/one", "--mount", "/usr/include/m=/b/two"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/b/one") && stderr(&out).contains("/b/two"));
}

#[test]
fn plan_orders_externals_first() {
    let dir = TempDir::new().unwrap();
    chain(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "plan", NO_CHECKS]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = json(dir.path().join("o/plan.json"));
    assert_eq!(plan["order"], serde_json::json!(["external:sys", "ROOT_xr", "CMSSW_xr"]));
    assert_eq!(plan["external_first"], true);
    assert_eq!(plan["external_modules"]["external:sys"], serde_json::json!(["sys/vector"]));
}

#[test]
fn plan_for_single_library() {
    let dir = TempDir::new().unwrap();
    write_files(
        dir.path(),
        &[
            ("inc/A.h", "#pragma once\nint a();\n"),
            ("main.cc", "#include \"inc/A.h\"\n"),
            ("manifest.json", r#"{"libraries": [{"name": "Solo", "interface_dir": "inc"}], "tu_roots": ["main.cc"]}"#),
        ],
    );
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "plan", NO_CHECKS]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(dir.path().join("o/plan.json"))["order"], serde_json::json!(["Solo_xr"]));
}

#[test]
fn plan_reports_shared_header_duplication() {
    let dir = TempDir::new().unwrap();
    shared_header(dir.path());
    let out = run(dir.path(), &["--manifest", "manifest.json", "--out", "o", "plan", NO_CHECKS]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let table = text.split("duplicated header").nth(1).expect("offenders table");
    let first = table.lines().nth(1).unwrap();
    assert!(first.starts_with("common/C.h"), "{text}");
    assert_eq!(first.split_whitespace().nth(1), Some("2"));

    let plan = json(dir.path().join("o/plan.json"));
    let top = &plan["duplication_report"]["entries"][0];
    assert_eq!(top["path"], "common/C.h");
    assert_eq!(top["duplication_count"], 2);
}

#[test]
fn plan_accepts_explicit_assignment() {
    let dir = TempDir::new().unwrap();
    shared_header(dir.path());
    write_files(
        dir.path(),
        &[(
            "assign.json",
            r#"{"modules": {"alpha/A.h": "Alpha", "beta/B.h": "Beta", "common/C.h": "Gamma"}}"#,
        )],
    );
    let out = run(
        dir.path(),
        &["--manifest", "manifest.json", "--out", "o", "plan", NO_CHECKS, "--assignment", "assign.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = json(dir.path().join("o/plan.json"));
    let c = plan["duplication_report"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["path"] == "common/C.h")
        .unwrap()
        .clone();
    assert_eq!(c["duplication_count"], 1);
    assert_eq!(plan["order"][0], "Gamma");

    fs::write(dir.path().join("bad.json"), r#"{"modules": {"nope.h": "X"}}"#).unwrap();
    let out = run(
        dir.path(),
        &["--manifest", "manifest.json", "--out", "o", "plan", NO_CHECKS, "--assignment", "bad.json"],
    );
    assert_eq!(code(&out), 2);
}
