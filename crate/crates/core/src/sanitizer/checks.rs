//! Standalone compile checks: each header is compiled on its own by an
//! external command, and the diagnostics are mined for missing includes.

use std::io;
use std::process::Command;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_ordered, Jobs};
use crate::path::CanonPath;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCommand {
    pub header: CanonPath,
    pub argv: Vec<String>,
}

impl CheckCommand {
    /// Shell-quoted form, for logs and reports.
    pub fn command_line(&self) -> String {
        shlex::try_join(self.argv.iter().map(String::as_str))
            .unwrap_or_else(|_| self.argv.join(" "))
    }
}

/// One command per header, sorted by header path. The template is split
/// with shell quoting rules before substitution, so `{header}` always
/// becomes exactly one argument. `{out}` expands to a per-header file under
/// `out_dir`.
pub fn standalone_check_plan(
    headers: &[CanonPath],
    template: &str,
    out_dir: &CanonPath,
) -> Result<Vec<CheckCommand>> {
    if !template.contains("{header}") {
        return Err(Error::TemplateMissingHeader(template.to_string()));
    }
    let words = shlex::split(template).ok_or_else(|| Error::TemplateSyntax(template.to_string()))?;
    let mut sorted = headers.to_vec();
    sorted.sort();
    sorted.dedup();
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(idx, header)| {
            let out = out_dir.join(&format!("{idx:05}-{}.pch", header.file_stem()));
            let argv = words
                .iter()
                .map(|w| w.replace("{header}", header.as_str()).replace("{out}", out.as_str()))
                .collect();
            CheckCommand { header, argv }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub success: bool,
    /// Diagnostic output (stderr, then stdout).
    pub output: String,
}

/// Runs one check command.
pub trait CommandExecutor: Sync {
    fn execute(&self, argv: &[String]) -> io::Result<ExecOutcome>;
}

/// Spawns the command as a child process.
#[derive(Debug, Default, Clone, Copy)]
pub struct ProcessExecutor;

impl CommandExecutor for ProcessExecutor {
    fn execute(&self, argv: &[String]) -> io::Result<ExecOutcome> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty command"))?;
        let output = Command::new(program).args(args).output()?;
        let mut text = String::from_utf8_lossy(&output.stderr).into_owned();
        text.push_str(&String::from_utf8_lossy(&output.stdout));
        Ok(ExecOutcome {
            success: output.status.success(),
            output: text,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileCheckResult {
    pub header: CanonPath,
    pub succeeded: bool,
    /// Include paths the compiler suggested, in order of first mention.
    pub missing_includes: Vec<String>,
    pub raw_diagnostics: String,
    /// The command could not be started at all.
    #[serde(default)]
    pub spawn_failed: bool,
}

/// Extracts missing-include suggestions from compiler output. Every
/// match contributes its first non-empty capture group.
#[derive(Debug, Clone)]
pub struct DiagnosticParser {
    pattern: Regex,
}

impl DiagnosticParser {
    /// Clang `'X.h' file not found`, GCC `X.h: No such file or directory`
    /// and include-what-you-use `#include "X.h"  // for ...` lines.
    pub const DEFAULT_PATTERN: &'static str = r#"(?m)'([^'\n]+)' file not found|([^\s:'"]+): No such file or directory|^#include [<"]([^>"\n]+)[>"]"#;

    pub fn new(pattern: &str) -> Result<Self> {
        Ok(DiagnosticParser {
            pattern: Regex::new(pattern)?,
        })
    }

    pub fn missing_includes(&self, diagnostics: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for caps in self.pattern.captures_iter(diagnostics) {
            let hit = caps
                .iter()
                .skip(1)
                .flatten()
                .map(|m| m.as_str())
                .find(|s| !s.is_empty());
            if let Some(path) = hit {
                if !out.iter().any(|p| p == path) {
                    out.push(path.to_string());
                }
            }
        }
        out
    }
}

impl Default for DiagnosticParser {
    fn default() -> Self {
        DiagnosticParser::new(Self::DEFAULT_PATTERN).expect("default pattern compiles")
    }
}

/// Executes the plan with at most `jobs` commands in flight. Results come
/// back in plan order.
pub fn run_standalone_checks(
    plan: &[CheckCommand],
    executor: &dyn CommandExecutor,
    jobs: Jobs,
    parser: &DiagnosticParser,
) -> Vec<CompileCheckResult> {
    map_ordered(plan, jobs, |cmd| match executor.execute(&cmd.argv) {
        Ok(outcome) => CompileCheckResult {
            header: cmd.header.clone(),
            succeeded: outcome.success,
            missing_includes: if outcome.success {
                Vec::new()
            } else {
                parser.missing_includes(&outcome.output)
            },
            raw_diagnostics: outcome.output,
            spawn_failed: false,
        },
        Err(err) => CompileCheckResult {
            header: cmd.header.clone(),
            succeeded: false,
            missing_includes: Vec::new(),
            raw_diagnostics: format!("spawn-failed: {err}"),
            spawn_failed: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    fn headers(names: &[&str]) -> Vec<CanonPath> {
        names.iter().map(|n| CanonPath::new(n)).collect()
    }

    fn out() -> CanonPath {
        CanonPath::new("/tmp/pch")
    }

    struct Mock {
        failures: BTreeMap<String, String>,
        delay: bool,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Mock {
        fn new(failures: &[(&str, &str)], delay: bool) -> Self {
            Mock {
                failures: failures.iter().map(|(h, d)| (h.to_string(), d.to_string())).collect(),
                delay,
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }
        }
    }

    impl CommandExecutor for Mock {
        fn execute(&self, argv: &[String]) -> io::Result<ExecOutcome> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            let header = argv.last().cloned().unwrap_or_default();
            if self.delay {
                // Deterministic pseudo-random latency per header.
                let ms = header.bytes().fold(7u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b))) % 15;
                std::thread::sleep(Duration::from_millis(ms));
            }
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            if header.contains("nospawn") {
                return Err(io::Error::new(io::ErrorKind::NotFound, "no such program"));
            }
            Ok(match self.failures.get(&header) {
                Some(diag) => ExecOutcome {
                    success: false,
                    output: diag.clone(),
                },
                None => ExecOutcome {
                    success: true,
                    output: String::new(),
                },
            })
        }
    }

    #[test]
    fn plan_is_sorted_and_substituted() {
        let plan = standalone_check_plan(
            &headers(&["/z/c.h", "/a/b.h", "/m/with space.h"]),
            "cc -fsyntax-only -x c++-header {header}",
            &out(),
        )
        .unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan[0].header.as_str(), "/a/b.h");
        assert_eq!(plan[2].header.as_str(), "/z/c.h");
        assert_eq!(plan[0].argv, vec!["cc", "-fsyntax-only", "-x", "c++-header", "/a/b.h"]);
        assert_eq!(plan[1].argv.last().unwrap(), "/m/with space.h");
        assert_eq!(plan[1].command_line(), "cc -fsyntax-only -x c++-header '/m/with space.h'");
    }

    #[test]
    fn plan_out_placeholder() {
        let plan = standalone_check_plan(&headers(&["/a/X.h"]), "cc -o {out} {header}", &out()).unwrap();
        assert_eq!(plan[0].argv[2], "/tmp/pch/00000-X.pch");
    }

    #[test]
    fn plan_edge_cases() {
        assert!(standalone_check_plan(&[], "cc {header}", &out()).unwrap().is_empty());
        assert!(matches!(
            standalone_check_plan(&headers(&["/a.h"]), "cc -c", &out()),
            Err(Error::TemplateMissingHeader(_))
        ));
        assert!(matches!(
            standalone_check_plan(&headers(&["/a.h"]), "cc '{header}", &out()),
            Err(Error::TemplateSyntax(_))
        ));
    }

    #[test]
    fn all_succeed() {
        let plan = standalone_check_plan(&headers(&["/a.h", "/b.h"]), "cc {header}", &out()).unwrap();
        let results = run_standalone_checks(&plan, &Mock::new(&[], false), Jobs::SEQUENTIAL, &DiagnosticParser::default());
        assert!(results.iter().all(|r| r.succeeded && r.missing_includes.is_empty()));
    }

    #[test]
    fn file_not_found_is_parsed() {
        let plan = standalone_check_plan(&headers(&["/a.h", "/b.h"]), "cc {header}", &out()).unwrap();
        let mock = Mock::new(
            &[("/b.h", "/b.h:3:10: fatal error: 'X.h' file not found\n#include \"X.h\"\n         ^~~~~\n")],
            false,
        );
        let results = run_standalone_checks(&plan, &mock, Jobs::SEQUENTIAL, &DiagnosticParser::default());
        assert!(results[0].succeeded);
        assert!(!results[1].succeeded);
        assert_eq!(results[1].missing_includes, vec!["X.h".to_string()]);
    }

    #[test]
    fn gcc_and_iwyu_forms() {
        let parser = DiagnosticParser::default();
        assert_eq!(
            parser.missing_includes("a.h:1:10: fatal error: vector: No such file or directory\n"),
            vec!["vector".to_string()]
        );
        let iwyu = "a.h should add these lines:\n#include <string>  // for string\n#include \"b.h\"  // for B\n\na.h should remove these lines:\n- #include <map>  // lines 3-3\n";
        assert_eq!(parser.missing_includes(iwyu), vec!["string".to_string(), "b.h".to_string()]);
        let custom = DiagnosticParser::new(r"needs <([^>]+)>").unwrap();
        assert_eq!(custom.missing_includes("needs <q.h> and needs <q.h>"), vec!["q.h".to_string()]);
        assert!(DiagnosticParser::new("(").is_err());
    }

    #[test]
    fn spawn_failure_is_a_result() {
        let plan = standalone_check_plan(&headers(&["/nospawn.h"]), "cc {header}", &out()).unwrap();
        let results = run_standalone_checks(&plan, &Mock::new(&[], false), Jobs::SEQUENTIAL, &DiagnosticParser::default());
        assert!(!results[0].succeeded);
        assert!(results[0].spawn_failed);
        assert!(results[0].raw_diagnostics.starts_with("spawn-failed"));
    }

    #[test]
    fn parallel_order_matches_sequential() {
        let names: Vec<String> = (0..8).map(|i| format!("/h{i}.h")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let plan = standalone_check_plan(&headers(&refs), "cc {header}", &out()).unwrap();
        let failures = [("/h3.h", "'Y.h' file not found"), ("/h6.h", "'Z.h' file not found")];
        let parser = DiagnosticParser::default();
        let sequential = run_standalone_checks(&plan, &Mock::new(&failures, false), Jobs::SEQUENTIAL, &parser);
        let mock = Mock::new(&failures, true);
        let parallel = run_standalone_checks(&plan, &mock, Jobs::new(4).unwrap(), &parser);
        assert_eq!(sequential, parallel);
        assert!(mock.peak.load(Ordering::SeqCst) <= 4);
    }

    #[test]
    fn process_executor_runs_real_commands() {
        let ok = ProcessExecutor.execute(&["true".to_string()]).unwrap();
        assert!(ok.success);
        let err = ProcessExecutor.execute(&["/definitely/not/here".to_string()]);
        assert!(err.is_err());
        assert!(ProcessExecutor.execute(&[]).is_err());
    }
}
