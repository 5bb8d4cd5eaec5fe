//! The include graph of a codebase.
//!
//! Files are scanned wave by wave starting from the translation units and
//! the library interface headers. Each wave is scanned and resolved in
//! parallel; the graph itself is assembled into sorted maps, so the result
//! does not depend on the number of workers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::algo::Digraph;
use crate::error::{Error, Result};
use crate::manifest::LibraryManifest;
use crate::par::{map_ordered, Jobs};
use crate::path::CanonPath;
use crate::scan::{scan_source, Guard, IncludeDirective, MacroStats, ScanDiagnostic};
use crate::tree::SourceTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Header,
    TranslationUnit,
}

/// Per-file facts collected while scanning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileFacts {
    pub kind: NodeKind,
    pub line_count: u32,
    pub guard: Guard,
    pub macro_stats: MacroStats,
}

impl FileFacts {
    pub fn header(line_count: u32) -> Self {
        FileFacts {
            kind: NodeKind::Header,
            line_count,
            guard: Guard::None,
            macro_stats: MacroStats::default(),
        }
    }

    pub fn translation_unit(line_count: u32) -> Self {
        FileFacts {
            kind: NodeKind::TranslationUnit,
            ..FileFacts::header(line_count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: CanonPath,
    pub to: CanonPath,
    pub directive: IncludeDirective,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnresolvedInclude {
    pub from: CanonPath,
    pub directive: IncludeDirective,
}

/// Directed graph of files and the includes between them. Immutable once
/// built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncludeGraph {
    nodes: BTreeMap<CanonPath, FileFacts>,
    edges: BTreeSet<Edge>,
    unresolved: BTreeSet<UnresolvedInclude>,
    diagnostics: BTreeMap<CanonPath, Vec<ScanDiagnostic>>,
    index: HashMap<CanonPath, usize>,
    order: Vec<CanonPath>,
    digraph: Digraph,
}

impl IncludeGraph {
    pub fn nodes(&self) -> &BTreeMap<CanonPath, FileFacts> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn unresolved(&self) -> &BTreeSet<UnresolvedInclude> {
        &self.unresolved
    }

    pub fn diagnostics(&self) -> &BTreeMap<CanonPath, Vec<ScanDiagnostic>> {
        &self.diagnostics
    }

    pub fn contains(&self, path: &CanonPath) -> bool {
        self.nodes.contains_key(path)
    }

    pub fn facts(&self, path: &CanonPath) -> Option<&FileFacts> {
        self.nodes.get(path)
    }

    pub fn headers(&self) -> impl Iterator<Item = &CanonPath> {
        self.nodes
            .iter()
            .filter(|(_, f)| f.kind == NodeKind::Header)
            .map(|(p, _)| p)
    }

    pub fn translation_units(&self) -> impl Iterator<Item = &CanonPath> {
        self.nodes
            .iter()
            .filter(|(_, f)| f.kind == NodeKind::TranslationUnit)
            .map(|(p, _)| p)
    }

    /// Dense index of a node; indices follow sorted path order.
    pub fn index_of(&self, path: &CanonPath) -> Option<usize> {
        self.index.get(path).copied()
    }

    pub fn path_at(&self, idx: usize) -> &CanonPath {
        &self.order[idx]
    }

    /// Deduplicated adjacency over node indices.
    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    /// Distinct direct include targets of `path`.
    pub fn direct_includes(&self, path: &CanonPath) -> Vec<&CanonPath> {
        match self.index_of(path) {
            Some(idx) => self
                .digraph
                .successors(idx)
                .iter()
                .map(|&t| &self.order[t])
                .collect(),
            None => Vec::new(),
        }
    }

    /// Everything reachable from `start` through at least one include,
    /// excluding `start` itself.
    pub fn transitive_includes(&self, start: &CanonPath) -> Result<BTreeSet<CanonPath>> {
        let idx = self
            .index_of(start)
            .ok_or_else(|| Error::UnknownNode(start.clone()))?;
        let seen = self.digraph.reachable_from([idx]);
        Ok(seen
            .iter()
            .enumerate()
            .filter(|&(i, &hit)| hit && i != idx)
            .map(|(i, _)| self.order[i].clone())
            .collect())
    }

    /// Strongly connected components that contain a cycle, each sorted, the
    /// list ordered by smallest member.
    pub fn find_cycles(&self) -> Vec<Vec<CanonPath>> {
        let mut out: Vec<Vec<CanonPath>> = self
            .digraph
            .cyclic_components()
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.order[i].clone()).collect())
            .collect();
        out.sort();
        out
    }

    /// Stable JSON form with paths shown relative to the manifest directory.
    pub fn export(&self, manifest: &LibraryManifest) -> GraphExport {
        let show = |p: &CanonPath| manifest.display_path(p);
        let mut nodes: Vec<ExportNode> = self
            .nodes
            .iter()
            .map(|(path, facts)| ExportNode {
                path: show(path),
                kind: facts.kind,
                lines: facts.line_count,
                guarded: facts.guard.is_present(),
            })
            .collect();
        nodes.sort_by(|a, b| a.path.cmp(&b.path));
        let mut edges: Vec<ExportEdge> = self
            .edges
            .iter()
            .map(|e| ExportEdge {
                from: show(&e.from),
                to: Some(show(&e.to)),
                directive: e.directive.clone(),
            })
            .collect();
        edges.sort();
        let mut unresolved: Vec<ExportEdge> = self
            .unresolved
            .iter()
            .map(|u| ExportEdge {
                from: show(&u.from),
                to: None,
                directive: u.directive.clone(),
            })
            .collect();
        unresolved.sort();
        let mut diagnostics: Vec<ExportDiagnostic> = self
            .diagnostics
            .iter()
            .flat_map(|(file, list)| {
                list.iter().map(|d| ExportDiagnostic {
                    file: show(file),
                    diagnostic: d.clone(),
                })
            })
            .collect();
        diagnostics.sort();
        GraphExport {
            nodes,
            edges,
            unresolved,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<ExportNode>,
    pub edges: Vec<ExportEdge>,
    pub unresolved: Vec<ExportEdge>,
    pub diagnostics: Vec<ExportDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportNode {
    pub path: String,
    pub kind: NodeKind,
    pub lines: u32,
    pub guarded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExportEdge {
    pub from: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(flatten)]
    pub directive: IncludeDirective,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExportDiagnostic {
    pub file: String,
    #[serde(flatten)]
    pub diagnostic: ScanDiagnostic,
}

/// Assembles an [`IncludeGraph`] from parts, checking that every edge
/// endpoint is a node.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: BTreeMap<CanonPath, FileFacts>,
    edges: BTreeSet<Edge>,
    unresolved: BTreeSet<UnresolvedInclude>,
    diagnostics: BTreeMap<CanonPath, Vec<ScanDiagnostic>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, path: impl Into<CanonPath>, facts: FileFacts) -> &mut Self {
        self.nodes.insert(path.into(), facts);
        self
    }

    pub fn header(&mut self, path: &str) -> &mut Self {
        self.node(path, FileFacts::header(1))
    }

    pub fn translation_unit(&mut self, path: &str) -> &mut Self {
        self.node(path, FileFacts::translation_unit(1))
    }

    /// Adds an unconditional quoted include from `from` to `to`.
    pub fn include(&mut self, from: &str, to: &str) -> &mut Self {
        let line = u32::try_from(self.edges.len() + 1).unwrap_or(u32::MAX);
        let to_path = CanonPath::new(to);
        let directive = IncludeDirective {
            spelled_path: to_path.file_name().to_string(),
            angle_form: false,
            line,
            conditional: false,
        };
        self.edge(from.into(), to_path, directive)
    }

    pub fn edge(&mut self, from: CanonPath, to: CanonPath, directive: IncludeDirective) -> &mut Self {
        self.edges.insert(Edge { from, to, directive });
        self
    }

    pub fn unresolved(&mut self, from: CanonPath, directive: IncludeDirective) -> &mut Self {
        self.unresolved.insert(UnresolvedInclude { from, directive });
        self
    }

    pub fn diagnostics(&mut self, file: CanonPath, list: Vec<ScanDiagnostic>) -> &mut Self {
        if !list.is_empty() {
            self.diagnostics.insert(file, list);
        }
        self
    }

    pub fn build(&self) -> Result<IncludeGraph> {
        for edge in &self.edges {
            for end in [&edge.from, &edge.to] {
                if !self.nodes.contains_key(end) {
                    return Err(Error::UnknownNode(end.clone()));
                }
            }
        }
        let order: Vec<CanonPath> = self.nodes.keys().cloned().collect();
        let index: HashMap<CanonPath, usize> =
            order.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let digraph = Digraph::from_edges(
            order.len(),
            self.edges.iter().map(|e| (index[&e.from], index[&e.to])),
        );
        Ok(IncludeGraph {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            unresolved: self.unresolved.clone(),
            diagnostics: self.diagnostics.clone(),
            index,
            order,
            digraph,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    /// Drop includes that sit inside `#if` regions.
    pub ignore_conditional: bool,
    pub jobs: Jobs,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            ignore_conditional: false,
            jobs: Jobs::SEQUENTIAL,
        }
    }
}

/// Resolves an include directive the way a compiler would, minus the
/// implicit system directories: quoted includes try the including file's
/// directory first, then every search path in order. First existing file
/// wins.
pub fn resolve_include(
    from: &CanonPath,
    directive: &IncludeDirective,
    manifest: &LibraryManifest,
    tree: &dyn SourceTree,
) -> Option<CanonPath> {
    let spelled = directive.spelled_path.as_str();
    if spelled.starts_with('/') {
        let candidate = CanonPath::new(spelled);
        return tree.is_file(&candidate).then_some(candidate);
    }
    let local = (!directive.angle_form)
        .then(|| from.parent())
        .flatten();
    local
        .iter()
        .chain(manifest.search_paths.iter())
        .map(|dir| dir.join(spelled))
        .find(|candidate| tree.is_file(candidate))
}

struct Scanned {
    facts: FileFacts,
    resolved: Vec<(IncludeDirective, Option<CanonPath>)>,
    diagnostics: Vec<ScanDiagnostic>,
}

/// Scans the codebase described by `manifest` into an include graph.
///
/// Nodes are the translation units, every interface header (referenced or
/// not) and everything reachable from them through resolved includes.
pub fn build_graph(
    manifest: &LibraryManifest,
    tree: &dyn SourceTree,
    options: ScanOptions,
) -> Result<IncludeGraph> {
    manifest.validate(tree)?;
    let mut kinds: BTreeMap<CanonPath, NodeKind> = BTreeMap::new();
    for (_, header) in manifest.interface_headers(tree)? {
        kinds.insert(header, NodeKind::Header);
    }
    for tu in &manifest.tu_roots {
        kinds.insert(tu.clone(), NodeKind::TranslationUnit);
    }

    let mut builder = GraphBuilder::new();
    let mut frontier: Vec<CanonPath> = kinds.keys().cloned().collect();
    let mut visited: BTreeSet<CanonPath> = frontier.iter().cloned().collect();

    while !frontier.is_empty() {
        let scanned = map_ordered(&frontier, options.jobs, |path| -> Result<Scanned> {
            let text = tree.read_text(path).map_err(|e| Error::io(path, e))?;
            let scan = scan_source(&text);
            let resolved = scan
                .includes
                .into_iter()
                .filter(|d| !(options.ignore_conditional && d.conditional))
                .map(|d| {
                    let target = resolve_include(path, &d, manifest, tree);
                    (d, target)
                })
                .collect();
            Ok(Scanned {
                facts: FileFacts {
                    kind: kinds.get(path).copied().unwrap_or(NodeKind::Header),
                    line_count: scan.line_count,
                    guard: scan.guard,
                    macro_stats: scan.macro_stats,
                },
                resolved,
                diagnostics: scan.diagnostics,
            })
        });

        let mut next = BTreeSet::new();
        for (path, result) in frontier.iter().zip(scanned) {
            let scanned = result?;
            builder.node(path.clone(), scanned.facts);
            builder.diagnostics(path.clone(), scanned.diagnostics);
            for (directive, target) in scanned.resolved {
                match target {
                    Some(to) => {
                        if visited.insert(to.clone()) {
                            next.insert(to.clone());
                        }
                        builder.edge(path.clone(), to, directive);
                    }
                    None => {
                        builder.unresolved(path.clone(), directive);
                    }
                }
            }
        }
        frontier = next.into_iter().collect();
    }
    builder.build()
}
