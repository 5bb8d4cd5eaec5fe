//! Header hygiene: sorts every interface header into one of six categories
//! and gathers the evidence behind each verdict.
//!
//! Precedence, strongest first: explicit exclusion, explicit textual marking,
//! include-cycle membership, unreachability from every translation unit,
//! macro-heavy content, failed standalone compile. A header that clears all
//! of them is standalone.

mod checks;
mod cycles;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use checks::{
    run_standalone_checks, standalone_check_plan, CheckCommand, CommandExecutor, CompileCheckResult,
    DiagnosticParser, ExecOutcome, ProcessExecutor,
};
pub use cycles::{suggest_cycle_breaks, CycleBreak, EXACT_EDGE_LIMIT, FORWARD_DECLARATION_RATIONALE};

use crate::graph::IncludeGraph;
use crate::manifest::LibraryManifest;
use crate::path::CanonPath;
use crate::scan::MacroStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Standalone,
    Incomplete,
    Broken,
    Cyclic,
    Macro,
    TokenGenerating,
}

impl Classification {
    pub const ALL: [Classification; 6] = [
        Classification::Standalone,
        Classification::Incomplete,
        Classification::Broken,
        Classification::Cyclic,
        Classification::Macro,
        Classification::TokenGenerating,
    ];

    /// Whether the verdict is a hygiene problem a CI gate should fail on.
    pub fn is_finding(self) -> bool {
        matches!(
            self,
            Classification::Incomplete | Classification::Broken | Classification::Cyclic
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Standalone => "standalone",
            Classification::Incomplete => "incomplete",
            Classification::Broken => "broken",
            Classification::Cyclic => "cyclic",
            Classification::Macro => "macro",
            Classification::TokenGenerating => "token-generating",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User annotations and knobs that steer classification.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOverrides {
    pub force_textual: BTreeSet<CanonPath>,
    pub force_exclude: BTreeSet<CanonPath>,
    /// Inclusive lower bound on the macro ratio for a Macro verdict.
    pub macro_ratio_threshold: f64,
}

impl ClassificationOverrides {
    pub const DEFAULT_MACRO_RATIO: f64 = 0.5;
}

impl Default for ClassificationOverrides {
    fn default() -> Self {
        ClassificationOverrides {
            force_textual: BTreeSet::new(),
            force_exclude: BTreeSet::new(),
            macro_ratio_threshold: Self::DEFAULT_MACRO_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaderRecord {
    pub path: CanonPath,
    pub has_guard: bool,
    pub macro_stats: MacroStats,
    pub classification: Classification,
    pub evidence: Vec<String>,
    /// No compile result was available when the header needed one.
    #[serde(default)]
    pub unchecked: bool,
}

impl HeaderRecord {
    /// An unclassified record seeded from scan facts.
    pub fn from_graph(graph: &IncludeGraph, path: &CanonPath) -> Option<Self> {
        let facts = graph.facts(path)?;
        Some(HeaderRecord {
            path: path.clone(),
            has_guard: facts.guard.is_present(),
            macro_stats: facts.macro_stats,
            classification: Classification::Standalone,
            evidence: Vec::new(),
            unchecked: false,
        })
    }
}

/// Headers of the graph that belong to some library, sorted.
pub fn interface_headers(graph: &IncludeGraph, manifest: &LibraryManifest) -> Vec<CanonPath> {
    graph
        .headers()
        .filter(|h| manifest.owning_library(h).is_some())
        .cloned()
        .collect()
}

/// Seeds one record per interface header.
pub fn header_records(graph: &IncludeGraph, manifest: &LibraryManifest) -> Vec<HeaderRecord> {
    interface_headers(graph, manifest)
        .iter()
        .filter_map(|h| HeaderRecord::from_graph(graph, h))
        .collect()
}

/// The candidates that no translation unit of `graph` reaches.
fn unreachable_from_tus<'a>(
    graph: &IncludeGraph,
    candidates: impl IntoIterator<Item = &'a CanonPath>,
) -> BTreeSet<CanonPath> {
    let roots: Vec<usize> = graph
        .translation_units()
        .filter_map(|tu| graph.index_of(tu))
        .collect();
    let reached = graph.digraph().reachable_from(roots.iter().copied());
    candidates
        .into_iter()
        .filter(|h| match graph.index_of(h) {
            Some(idx) => !reached[idx] && !roots.contains(&idx),
            None => true,
        })
        .cloned()
        .collect()
}

/// Interface headers never reached from any translation unit (and not
/// themselves translation units).
pub fn detect_broken(graph: &IncludeGraph, manifest: &LibraryManifest) -> BTreeSet<CanonPath> {
    let headers = interface_headers(graph, manifest);
    let mut broken = unreachable_from_tus(graph, &headers);
    broken.retain(|h| !manifest.tu_roots.contains(h));
    broken
}

fn macro_ratio_hit(stats: &MacroStats, threshold: f64) -> bool {
    stats.macro_defs > 0 && stats.macro_ratio() >= threshold
}

/// Headers that are predominantly macro definitions, or marked textual.
pub fn detect_macro_headers(
    records: &[HeaderRecord],
    overrides: &ClassificationOverrides,
) -> BTreeSet<CanonPath> {
    records
        .iter()
        .filter(|r| {
            overrides.force_textual.contains(&r.path)
                || macro_ratio_hit(&r.macro_stats, overrides.macro_ratio_threshold)
        })
        .map(|r| r.path.clone())
        .collect()
}

/// Fills in the classification and evidence of every record.
pub fn classify_headers(
    graph: &IncludeGraph,
    records: &[HeaderRecord],
    sccs: &[Vec<CanonPath>],
    compile_results: &BTreeMap<CanonPath, CompileCheckResult>,
    overrides: &ClassificationOverrides,
) -> Vec<HeaderRecord> {
    let scc_of: BTreeMap<&CanonPath, &Vec<CanonPath>> = sccs
        .iter()
        .flat_map(|scc| scc.iter().map(move |m| (m, scc)))
        .collect();
    let unreachable = unreachable_from_tus(graph, records.iter().map(|r| &r.path));
    let threshold = overrides.macro_ratio_threshold;

    records
        .iter()
        .map(|record| {
            let mut out = record.clone();
            out.evidence.clear();
            out.unchecked = false;
            let path = &record.path;
            let stats = &record.macro_stats;
            out.classification = if overrides.force_exclude.contains(path) {
                out.evidence.push("listed in force_exclude".into());
                Classification::TokenGenerating
            } else if overrides.force_textual.contains(path) {
                out.evidence.push("listed in force_textual".into());
                Classification::Macro
            } else if let Some(scc) = scc_of.get(path) {
                let others: Vec<&str> = scc.iter().filter(|m| *m != path).map(CanonPath::as_str).collect();
                out.evidence.push(if others.is_empty() {
                    "includes itself".to_string()
                } else {
                    format!("include cycle with {}", others.join(", "))
                });
                Classification::Cyclic
            } else if unreachable.contains(path) {
                out.evidence.push("not reachable from any translation unit".into());
                Classification::Broken
            } else if macro_ratio_hit(stats, threshold) {
                out.evidence.push(format!(
                    "macro ratio {:.3} ({} defines, {} declaration lines) at or above {threshold}",
                    stats.macro_ratio(),
                    stats.macro_defs,
                    stats.decl_lines
                ));
                Classification::Macro
            } else {
                match compile_results.get(path) {
                    Some(result) if !result.succeeded => {
                        if result.spawn_failed {
                            out.evidence.push("spawn-failed".into());
                        } else {
                            out.evidence.push("standalone compile failed".into());
                        }
                        out.evidence.extend(
                            result.missing_includes.iter().map(|m| format!("missing include {m}")),
                        );
                        Classification::Incomplete
                    }
                    Some(_) => Classification::Standalone,
                    None => {
                        out.unchecked = true;
                        out.evidence.push("unchecked".into());
                        Classification::Standalone
                    }
                }
            };
            out
        })
        .collect()
}

/// A header that looks like it is meant to be expanded repeatedly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenGeneratingHint {
    pub header: CanonPath,
    pub included_by: CanonPath,
    pub times: usize,
}

/// Headers without a guard that define macros and are included more than
/// once by a single file. Such headers usually need `force_exclude`.
pub fn token_generating_hints(graph: &IncludeGraph) -> Vec<TokenGeneratingHint> {
    let mut counts: BTreeMap<(&CanonPath, &CanonPath), usize> = BTreeMap::new();
    for edge in graph.edges() {
        *counts.entry((&edge.to, &edge.from)).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, times)| times > 1)
        .filter_map(|((header, from), times)| {
            let facts = graph.facts(header)?;
            (!facts.guard.is_present() && facts.macro_stats.macro_defs > 0).then(|| TokenGeneratingHint {
                header: header.clone(),
                included_by: from.clone(),
                times,
            })
        })
        .collect()
}
