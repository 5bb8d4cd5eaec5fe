use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::Serialize;

use modmig_core::graph::IncludeGraph;
use modmig_core::modulemap::{generate_modulemap, parse_modulemap, render_modulemap, GeneratedModulemap};
use modmig_core::overlay::{build_overlay, render_overlay, MountSpec};
use modmig_core::planner::{
    bottom_up_order, detect_external_candidates, duplication_report, line_counts, module_dependency_graph,
    parse_cost_estimate, CostEstimate, ModuleAssignment,
};
use modmig_core::sanitizer::Classification;
use modmig_core::{CanonPath, Error as CoreError};

use crate::args::{AnalysisArgs, CheckOptions, Format, GenmapArgs, OverlayArgs, PlanArgs};
use crate::output::{to_json, write_json, write_text, Table};
use crate::pipeline::{classify, Classified, Context};

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Findings,
}

pub const GRAPH_FILE: &str = "graph.json";
pub const MODULEMAP_FILE: &str = "module.modulemap";
pub const OMITTED_FILE: &str = "omitted.json";
pub const OVERLAY_FILE: &str = "overlay.json";
pub const PLAN_FILE: &str = "plan.json";

pub fn scan(ctx: &Context, analysis: &AnalysisArgs) -> Result<Status> {
    let graph = ctx.scan(analysis)?;
    let export = graph.export(&ctx.manifest);
    let json = to_json(&export)?;
    write_text(&ctx.out.join(GRAPH_FILE), &json)?;
    match ctx.format {
        Format::Json => print!("{json}"),
        Format::Text => {
            println!(
                "{} files ({} headers), {} includes, {} unresolved, {} diagnostics",
                export.nodes.len(),
                graph.headers().count(),
                export.edges.len(),
                export.unresolved.len(),
                export.diagnostics.len()
            );
            for d in &export.diagnostics {
                println!("{}:{}: {:?}: {}", d.file, d.diagnostic.line, d.diagnostic.kind, d.diagnostic.text);
            }
        }
    }
    Ok(Status::Clean)
}

fn classified(ctx: &Context, analysis: &AnalysisArgs, checks: &CheckOptions) -> Result<(IncludeGraph, Classified)> {
    let graph = ctx.scan(analysis)?;
    let classified = classify(ctx, &graph, analysis, checks)?;
    Ok((graph, classified))
}

pub fn check(ctx: &Context, analysis: &AnalysisArgs, checks: &CheckOptions) -> Result<Status> {
    let (_, classified) = classified(ctx, analysis, checks)?;
    let report = &classified.report;
    match ctx.format {
        Format::Json => print!("{}", to_json(report)?),
        Format::Text => {
            let mut summary = Table::new(&["classification", "headers"]);
            for (class, n) in &report.summary {
                summary.row(vec![class.to_string(), n.to_string()]);
            }
            print!("{}", summary.render());
            let mut details = Table::new(&["header", "classification", "evidence"]);
            for row in &report.headers {
                let r = &row.record;
                if r.classification != Classification::Standalone {
                    details.row(vec![r.path.to_string(), r.classification.to_string(), r.evidence.join("; ")]);
                }
            }
            if !details.is_empty() {
                println!();
                print!("{}", details.render());
            }
            let unchecked = report.headers.iter().filter(|h| h.record.unchecked).count();
            if unchecked > 0 {
                println!("{unchecked} header(s) classified without a standalone compile");
            }
            for cycle in &report.cycles {
                println!();
                println!("include cycle: {}", cycle.members.join(" -> "));
                for b in &cycle.breaks {
                    println!("  {} -> {}: {}", b.from, b.to, b.rationale);
                }
            }
            for hint in &report.token_generating_hints {
                println!(
                    "note: {} has no guard, defines macros and is included {} times by {}; consider force_exclude",
                    hint.header, hint.times, hint.included_by
                );
            }
        }
    }
    Ok(if report.has_findings() { Status::Findings } else { Status::Clean })
}

/// Runs generation, reporting a cross-library cycle as a finding.
fn generate(ctx: &Context, classified: &Classified, suffix: &str) -> Result<Option<GeneratedModulemap>> {
    match generate_modulemap(&ctx.manifest, &classified.records, &classified.sccs, suffix) {
        Ok(generated) => Ok(Some(generated)),
        Err(err @ CoreError::LayeringViolation { .. }) => {
            eprintln!("error: {err}");
            Ok(None)
        }
        Err(err) => Err(err.into()),
    }
}

pub fn genmap(ctx: &Context, args: &GenmapArgs) -> Result<Status> {
    let (_, classified) = classified(ctx, &args.analysis, &args.checks)?;
    let Some(generated) = generate(ctx, &classified, &args.suffix)? else {
        return Ok(Status::Findings);
    };
    let text = render_modulemap(&generated.document);
    write_text(&ctx.out.join(MODULEMAP_FILE), &text)?;
    write_json(&ctx.out.join(OMITTED_FILE), &generated.omitted)?;
    match ctx.format {
        Format::Json => print!("{}", to_json(&generated)?),
        Format::Text => {
            let mut table = Table::new(&["module", "headers", "textual"]);
            for m in &generated.document.modules {
                let textual = m
                    .entries
                    .iter()
                    .filter(|e| e.kind == modmig_core::modulemap::EntryKind::Textual)
                    .count();
                table.row(vec![m.name.clone(), (m.entries.len() - textual).to_string(), textual.to_string()]);
            }
            print!("{}", table.render());
            for o in &generated.omitted {
                println!("omitted {} ({}): {}", o.header, o.classification, o.reason);
            }
        }
    }
    Ok(Status::Clean)
}

pub fn overlay(out: &Path, format: Format, args: &OverlayArgs) -> Result<Status> {
    let mounts = args
        .mounts
        .iter()
        .map(|m| MountSpec::parse(m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut doc = build_overlay(&mounts)?;
    for spec in &args.relocations {
        let (old, new) = spec
            .split_once('=')
            .with_context(|| format!("relocation {spec:?} is not of the form OLD=NEW"))?;
        anyhow::ensure!(
            old.starts_with('/') && new.starts_with('/'),
            "relocation {spec:?} needs absolute prefixes"
        );
        doc = doc.relocate(old, new).document;
    }
    let json = render_overlay(&doc);
    write_text(&out.join(OVERLAY_FILE), &json)?;
    match format {
        Format::Json => print!("{json}"),
        Format::Text => {
            let mut table = Table::new(&["virtual", "physical"]);
            for root in &doc.roots {
                for e in &root.contents {
                    table.row(vec![
                        format!("{}/{}", root.name.trim_end_matches('/'), e.name),
                        e.external_contents.clone(),
                    ]);
                }
            }
            print!("{}", table.render());
        }
    }
    Ok(Status::Clean)
}

fn load_assignment(ctx: &Context, graph: &IncludeGraph, path: &Path) -> Result<ModuleAssignment> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let raw: ModuleAssignment =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(ModuleAssignment {
            modules: raw
                .modules
                .into_iter()
                .map(|(h, m)| (ctx.manifest.resolve_display(h.as_str()), m))
                .collect(),
            external: raw.external,
        })
    } else {
        let doc = parse_modulemap(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(ModuleAssignment::from_modulemap(&doc, graph, &ctx.manifest)?)
    }
}

#[derive(Serialize)]
struct ModuleEdgeRow {
    from: String,
    to: String,
    includes: usize,
}

#[derive(Serialize)]
struct DuplicationRow {
    path: String,
    module: Option<String>,
    duplication_count: usize,
    lines: u64,
    duplicated_lines: u64,
}

#[derive(Serialize)]
struct DuplicationSection {
    total_duplicated_lines: u64,
    entries: Vec<DuplicationRow>,
}

#[derive(Serialize)]
struct PlanFile {
    order: Vec<String>,
    cycle_groups: Vec<Vec<String>>,
    external_first: bool,
    ranks: BTreeMap<String, usize>,
    external_modules: BTreeMap<String, Vec<String>>,
    module_edges: Vec<ModuleEdgeRow>,
    duplication_report: DuplicationSection,
    cost_estimate: CostEstimate,
}

pub fn plan(ctx: &Context, args: &PlanArgs) -> Result<Status> {
    let (graph, classified) = classified(ctx, &args.analysis, &args.checks)?;
    let assignment = match &args.assignment {
        Some(path) => load_assignment(ctx, &graph, path)?,
        None => match generate(ctx, &classified, &args.suffix)? {
            Some(generated) => ModuleAssignment::from_modulemap(&generated.document, &graph, &ctx.manifest)?,
            None => return Ok(Status::Findings),
        },
    };

    let groups = detect_external_candidates(&graph, &ctx.manifest, &assignment);
    let external_name = |root: &CanonPath| format!("external:{}", ctx.display(root));
    let mut full = assignment.clone();
    full.add_external_groups(&groups, external_name);
    let dep = module_dependency_graph(&graph, &full)?;
    let migration = bottom_up_order(&dep);

    let counts = line_counts(&graph);
    let report = duplication_report(&graph, &assignment, &counts, ctx.jobs);
    let cost = parse_cost_estimate(&graph, &assignment, &counts, ctx.jobs);

    let file = PlanFile {
        order: migration.order.clone(),
        cycle_groups: migration.cycle_groups.clone(),
        external_first: migration.external_first,
        ranks: migration.ranks.clone(),
        external_modules: groups
            .iter()
            .map(|(root, hs)| (external_name(root), hs.iter().map(|h| ctx.display(h)).collect()))
            .collect(),
        module_edges: dep
            .edges
            .iter()
            .map(|((from, to), n)| ModuleEdgeRow {
                from: from.clone(),
                to: to.clone(),
                includes: *n,
            })
            .collect(),
        duplication_report: DuplicationSection {
            total_duplicated_lines: report.total_duplicated_lines,
            entries: report
                .entries
                .iter()
                .map(|e| DuplicationRow {
                    path: ctx.display(&e.path),
                    module: e.module.clone(),
                    duplication_count: e.duplication_count,
                    lines: e.lines,
                    duplicated_lines: e.duplicated_lines,
                })
                .collect(),
        },
        cost_estimate: cost,
    };
    let json = to_json(&file)?;
    write_text(&ctx.out.join(PLAN_FILE), &json)?;

    match ctx.format {
        Format::Json => print!("{json}"),
        Format::Text => {
            let mut order = Table::new(&["step", "module", "rank", "kind"]);
            for (i, m) in migration.order.iter().enumerate() {
                let kind = if dep.is_external(m) { "external" } else { "internal" };
                order.row(vec![(i + 1).to_string(), m.clone(), migration.ranks[m].to_string(), kind.into()]);
            }
            print!("{}", order.render());
            for group in &migration.cycle_groups {
                println!("migrate together: {}", group.join(", "));
            }
            let mut offenders = Table::new(&["duplicated header", "modules", "lines", "duplicated lines"]);
            for e in report.offenders() {
                offenders.row(vec![
                    ctx.display(&e.path),
                    e.duplication_count.to_string(),
                    e.lines.to_string(),
                    e.duplicated_lines.to_string(),
                ]);
            }
            if !offenders.is_empty() {
                println!();
                print!("{}", offenders.render());
            }
            println!();
            println!(
                "parse cost: {} lines textual, {} lines with modules",
                cost.textual_lines, cost.modular_lines
            );
        }
    }
    Ok(Status::Clean)
}
