#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const LISTING_ONE_HEADERS: [&str; 3] = ["TrackerTopology", "TrackerDetSide", "ClusterSummary"];

pub fn modmig() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modmig"))
}

/// Runs modmig in `dir` with `args`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    modmig()
        .current_dir(dir)
        .env_remove("MODMIG_CHECK_CMD")
        .args(args)
        .output()
        .expect("modmig runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_files(root: &Path, files: &[(&str, &str)]) {
    for (path, text) in files {
        let full = root.join(path);
        fs::create_dir_all(full.parent().unwrap()).unwrap();
        fs::write(full, text).unwrap();
    }
}

pub fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn guarded(name: &str, body: &str) -> String {
    let guard = name.to_uppercase();
    format!("#ifndef {guard}_H\n#define {guard}_H\n{body}#endif\n")
}

/// One library whose three interface headers are the submodules of the
/// CMSSW TrackerCommon modulemap.
pub fn listing_one(root: &Path) -> PathBuf {
    let inc = "src/DataFormats/TrackerCommon/interface";
    let topo = guarded(
        "TrackerTopology",
        "#include \"DataFormats/TrackerCommon/interface/TrackerDetSide.h\"\n#include <vector>\nclass TrackerTopology { std::vector<int> ids; };\n",
    );
    let side = guarded("TrackerDetSide", "enum class TrackerDetSide { NegEndcap = 1, PosEndcap = 2 };\n");
    let summary = guarded("ClusterSummary", "#include <vector>\nclass ClusterSummary { std::vector<int> n; };\n");
    write_files(
        root,
        &[
            (&format!("{inc}/TrackerTopology.h"), &topo),
            (&format!("{inc}/TrackerDetSide.h"), &side),
            (&format!("{inc}/ClusterSummary.h"), &summary),
            ("sys/vector", "namespace std { template <class T> class vector {}; }\n"),
            (
                "src/DataFormats/TrackerCommon/src/TrackerTopology.cc",
                "#include \"DataFormats/TrackerCommon/interface/TrackerTopology.h\"\n#include \"DataFormats/TrackerCommon/interface/ClusterSummary.h\"\n",
            ),
            (
                "manifest.json",
                r#"{
  "libraries": [
    {"name": "DataFormats/TrackerCommon", "interface_dir": "src/DataFormats/TrackerCommon/interface"}
  ],
  "search_paths": ["src", "sys"],
  "tu_roots": ["src/DataFormats/TrackerCommon/src/TrackerTopology.cc"]
}
"#,
            ),
        ],
    );
    root.join("manifest.json")
}

/// CMSSW → ROOT → <vector>, with <vector> outside every library.
pub fn chain(root: &Path) -> PathBuf {
    write_files(
        root,
        &[
            ("cmssw/Event.h", "#pragma once\n#include \"root/TObject.h\"\nclass Event : public TObject {};\n"),
            ("root/TObject.h", "#pragma once\n#include <vector>\nclass TObject { std::vector<int> bits; };\n"),
            ("sys/vector", "namespace std { template <class T> class vector {}; }\n"),
            ("main.cc", "#include \"cmssw/Event.h\"\n"),
            (
                "manifest.json",
                r#"{
  "libraries": [
    {"name": "CMSSW", "interface_dir": "cmssw"},
    {"name": "ROOT", "interface_dir": "root"}
  ],
  "search_paths": [".", "sys"],
  "tu_roots": ["main.cc"]
}
"#,
            ),
        ],
    );
    root.join("manifest.json")
}

/// A.h in Alpha and B.h in Beta both include C.h, which no library owns.
pub fn shared_header(root: &Path) -> PathBuf {
    write_files(
        root,
        &[
            ("alpha/A.h", "#pragma once\n#include \"C.h\"\nstruct A { C c; };\n"),
            ("beta/B.h", "#pragma once\n#include \"C.h\"\nstruct B { C c; };\n"),
            ("common/C.h", "#pragma once\nstruct C {\n  int x;\n  int y;\n};\n"),
            ("a.cc", "#include \"alpha/A.h\"\n"),
            ("b.cc", "#include \"beta/B.h\"\n"),
            (
                "manifest.json",
                r#"{
  "libraries": [
    {"name": "Alpha", "interface_dir": "alpha"},
    {"name": "Beta", "interface_dir": "beta"}
  ],
  "search_paths": [".", "common"],
  "tu_roots": ["a.cc", "b.cc"]
}
"#,
            ),
        ],
    );
    root.join("manifest.json")
}

/// A.h and B.h include each other.
pub fn two_header_cycle(root: &Path) -> PathBuf {
    write_files(
        root,
        &[
            ("inc/A.h", "#pragma once\n#include \"B.h\"\nstruct A;\n"),
            ("inc/B.h", "#pragma once\n#include \"A.h\"\nstruct B;\n"),
            ("main.cc", "#include \"inc/A.h\"\n"),
            (
                "manifest.json",
                r#"{"libraries": [{"name": "Core", "interface_dir": "inc"}], "tu_roots": ["main.cc"]}"#,
            ),
        ],
    );
    root.join("manifest.json")
}
