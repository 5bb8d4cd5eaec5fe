//! Steps shared by several subcommands: manifest loading, scanning and
//! header classification (cached in `headers.json`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use modmig_core::graph::{build_graph, IncludeGraph, ScanOptions};
use modmig_core::manifest::LibraryManifest;
use modmig_core::par::Jobs;
use modmig_core::sanitizer::{
    classify_headers, header_records, run_standalone_checks, standalone_check_plan, suggest_cycle_breaks,
    token_generating_hints, Classification, CompileCheckResult, CycleBreak, DiagnosticParser, HeaderRecord,
    ProcessExecutor, FORWARD_DECLARATION_RATIONALE,
};
use modmig_core::tree::{DiskTree, SourceTree};
use modmig_core::CanonPath;

use crate::args::{AnalysisArgs, CheckOptions, Format};
use crate::output::write_json;

pub const HEADERS_FILE: &str = "headers.json";

pub struct Context {
    pub manifest: LibraryManifest,
    manifest_bytes: Vec<u8>,
    pub out: PathBuf,
    pub jobs: Jobs,
    pub format: Format,
}

impl Context {
    pub fn load(manifest: Option<&Path>, out: &Path, jobs: Jobs, format: Format, analysis: &AnalysisArgs) -> Result<Self> {
        let path = manifest.context("--manifest is required for this command")?;
        let manifest_bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let mut manifest = LibraryManifest::load(path)?;
        if !analysis.only_libs.is_empty() {
            manifest.retain_libraries(&analysis.only_libs)?;
        }
        Ok(Context {
            manifest,
            manifest_bytes,
            out: out.to_path_buf(),
            jobs,
            format,
        })
    }

    pub fn display(&self, path: &CanonPath) -> String {
        self.manifest.display_path(path)
    }

    pub fn scan(&self, analysis: &AnalysisArgs) -> Result<IncludeGraph> {
        let options = ScanOptions {
            ignore_conditional: analysis.ignore_conditional_includes,
            jobs: self.jobs,
        };
        Ok(build_graph(&self.manifest, &DiskTree, options)?)
    }

    /// Library owning `path`, or empty.
    pub fn library_of(&self, path: &CanonPath) -> String {
        self.manifest
            .owning_library(path)
            .map(|i| self.manifest.libraries[i].name.clone())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeaderRow {
    pub library: String,
    #[serde(flatten)]
    pub record: HeaderRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleRow {
    pub members: Vec<String>,
    pub breaks: Vec<CycleBreak>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HintRow {
    pub header: String,
    pub included_by: String,
    pub times: usize,
}

/// Contents of `headers.json`. Paths are shown relative to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadersReport {
    pub fingerprint: String,
    pub compile_checks: bool,
    pub summary: BTreeMap<Classification, usize>,
    pub headers: Vec<HeaderRow>,
    pub cycles: Vec<CycleRow>,
    pub token_generating_hints: Vec<HintRow>,
}

impl HeadersReport {
    pub fn has_findings(&self) -> bool {
        self.headers.iter().any(|h| h.record.classification.is_finding())
    }
}

/// Classified headers with absolute paths, ready for generation.
pub struct Classified {
    pub report: HeadersReport,
    pub records: Vec<HeaderRecord>,
    pub sccs: Vec<Vec<CanonPath>>,
}

fn fingerprint(ctx: &Context, graph: &IncludeGraph, analysis: &AnalysisArgs, checks: &CheckOptions) -> Result<String> {
    let mut hash = Sha256::new();
    let mut field = |bytes: &[u8]| {
        hash.update((bytes.len() as u64).to_le_bytes());
        hash.update(bytes);
    };
    field(env!("CARGO_PKG_VERSION").as_bytes());
    field(&ctx.manifest_bytes);
    field(analysis.only_libs.join(",").as_bytes());
    field(&[analysis.ignore_conditional_includes as u8, checks.no_compile_checks as u8]);
    field(checks.check_cmd.as_deref().unwrap_or("").as_bytes());
    field(checks.missing_include_pattern.as_deref().unwrap_or("").as_bytes());
    for path in graph.nodes().keys() {
        field(path.as_str().as_bytes());
        field(DiskTree.read_text(path).map_err(|e| anyhow::anyhow!(e))?.as_bytes());
    }
    Ok(hash.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn compile_results(
    ctx: &Context,
    records: &[HeaderRecord],
    checks: &CheckOptions,
) -> Result<BTreeMap<CanonPath, CompileCheckResult>> {
    if checks.no_compile_checks {
        return Ok(BTreeMap::new());
    }
    let Some(template) = &checks.check_cmd else {
        bail!("a standalone check command is needed: pass --check-cmd, set MODMIG_CHECK_CMD, or use --no-compile-checks");
    };
    let overrides = &ctx.manifest.overrides;
    let headers: Vec<CanonPath> = records
        .iter()
        .map(|r| r.path.clone())
        .filter(|p| !overrides.force_exclude.contains(p) && !overrides.force_textual.contains(p))
        .collect();
    let scratch = ctx.out.join("checks");
    fs::create_dir_all(&scratch).with_context(|| format!("creating {}", scratch.display()))?;
    let scratch = CanonPath::from_path(&std::path::absolute(&scratch)?);
    let plan = standalone_check_plan(&headers, template, &scratch)?;
    let parser = match &checks.missing_include_pattern {
        Some(p) => DiagnosticParser::new(p)?,
        None => DiagnosticParser::default(),
    };
    let results = run_standalone_checks(&plan, &ProcessExecutor, ctx.jobs, &parser);
    if let Some(failed) = results.iter().find(|r| r.spawn_failed) {
        bail!(
            "check command could not be started for {}: {}",
            ctx.display(&failed.header),
            failed.raw_diagnostics
        );
    }
    Ok(results.into_iter().map(|r| (r.header.clone(), r)).collect())
}

fn cycle_rows(ctx: &Context, graph: &IncludeGraph, sccs: &[Vec<CanonPath>]) -> Result<Vec<CycleRow>> {
    sccs.iter()
        .map(|scc| {
            let breaks = if scc.len() == 1 {
                vec![CycleBreak {
                    from: scc[0].clone(),
                    to: scc[0].clone(),
                    rationale: FORWARD_DECLARATION_RATIONALE.to_string(),
                }]
            } else {
                suggest_cycle_breaks(graph, scc)?
            };
            Ok(CycleRow {
                members: scc.iter().map(|m| ctx.display(m)).collect(),
                breaks: breaks
                    .into_iter()
                    .map(|b| CycleBreak {
                        from: CanonPath::new(&ctx.display(&b.from)),
                        to: CanonPath::new(&ctx.display(&b.to)),
                        rationale: b.rationale,
                    })
                    .collect(),
            })
        })
        .collect()
}

fn load_cached(path: &Path, fingerprint: &str) -> Option<HeadersReport> {
    let text = fs::read_to_string(path).ok()?;
    let report: HeadersReport = serde_json::from_str(&text).ok()?;
    (report.fingerprint == fingerprint).then_some(report)
}

/// Classifies every interface header, reusing `headers.json` when nothing
/// that affects the result has changed. Writes `headers.json`.
pub fn classify(
    ctx: &Context,
    graph: &IncludeGraph,
    analysis: &AnalysisArgs,
    checks: &CheckOptions,
) -> Result<Classified> {
    let sccs = graph.find_cycles();
    let fp = fingerprint(ctx, graph, analysis, checks)?;
    let cache_path = ctx.out.join(HEADERS_FILE);
    let cached = if checks.no_cache { None } else { load_cached(&cache_path, &fp) };

    let report = match cached {
        Some(report) => report,
        None => {
            let seeds = header_records(graph, &ctx.manifest);
            let results = compile_results(ctx, &seeds, checks)?;
            let records = classify_headers(graph, &seeds, &sccs, &results, &ctx.manifest.overrides);
            let mut summary: BTreeMap<Classification, usize> =
                Classification::ALL.iter().map(|&c| (c, 0)).collect();
            for r in &records {
                *summary.entry(r.classification).or_default() += 1;
            }
            let headers = records
                .into_iter()
                .map(|mut record| {
                    let library = ctx.library_of(&record.path);
                    record.path = CanonPath::new(&ctx.display(&record.path));
                    HeaderRow { library, record }
                })
                .collect();
            let token_generating_hints = token_generating_hints(graph)
                .into_iter()
                .map(|h| HintRow {
                    header: ctx.display(&h.header),
                    included_by: ctx.display(&h.included_by),
                    times: h.times,
                })
                .collect();
            let report = HeadersReport {
                fingerprint: fp,
                compile_checks: !checks.no_compile_checks,
                summary,
                headers,
                cycles: cycle_rows(ctx, graph, &sccs)?,
                token_generating_hints,
            };
            write_json(&cache_path, &report)?;
            report
        }
    };

    let records = report
        .headers
        .iter()
        .map(|row| {
            let mut record = row.record.clone();
            record.path = ctx.manifest.resolve_display(row.record.path.as_str());
            record
        })
        .collect();
    Ok(Classified { report, records, sccs })
}
