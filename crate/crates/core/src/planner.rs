//! Migration planning: module-level dependencies, the duplication cost of
//! headers left outside modules, and a bottom-up migration order.
//!
//! Costs are counted in source lines. A header owned by a module is parsed
//! once; a header owned by no module is parsed again inside every module
//! whose headers reach it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algo::Digraph;
use crate::error::{Error, Result};
use crate::graph::IncludeGraph;
use crate::manifest::LibraryManifest;
use crate::modulemap::{EntryKind, ModulemapDocument};
use crate::par::{map_ordered, Jobs};
use crate::path::CanonPath;

/// Which module, if any, each header belongs to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleAssignment {
    pub modules: BTreeMap<CanonPath, String>,
    /// Module names that stand for external dependencies.
    #[serde(default)]
    pub external: BTreeSet<String>,
}

impl ModuleAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, header: impl Into<CanonPath>, module: &str) -> &mut Self {
        self.modules.insert(header.into(), module.to_string());
        self
    }

    pub fn module_of(&self, header: &CanonPath) -> Option<&str> {
        self.modules.get(header).map(String::as_str)
    }

    /// Distinct module names, externals included even when empty.
    pub fn module_names(&self) -> BTreeSet<String> {
        self.modules.values().cloned().chain(self.external.iter().cloned()).collect()
    }

    /// Headers of every module, by module name.
    pub fn members(&self) -> BTreeMap<&str, Vec<&CanonPath>> {
        let mut out: BTreeMap<&str, Vec<&CanonPath>> = BTreeMap::new();
        for (header, module) in &self.modules {
            out.entry(module.as_str()).or_default().push(header);
        }
        out
    }

    /// Adds one external pseudo-module per root. Headers that already
    /// belong to a module keep their assignment.
    pub fn add_external_groups(
        &mut self,
        groups: &BTreeMap<CanonPath, BTreeSet<CanonPath>>,
        mut name_of: impl FnMut(&CanonPath) -> String,
    ) {
        for (root, headers) in groups {
            let name = name_of(root);
            for header in headers {
                self.modules.entry(header.clone()).or_insert_with(|| name.clone());
            }
            self.external.insert(name);
        }
    }

    /// Reads the normal (non-textual) entries of a modulemap. Entry paths
    /// are resolved against each search path, then against the manifest
    /// directory, and must name a header in `graph`.
    pub fn from_modulemap(
        doc: &ModulemapDocument,
        graph: &IncludeGraph,
        manifest: &LibraryManifest,
    ) -> Result<Self> {
        let mut out = ModuleAssignment::new();
        for module in &doc.modules {
            for entry in module.entries.iter().filter(|e| e.kind == EntryKind::Normal) {
                let spelled = &entry.header_path;
                let header = manifest
                    .search_paths
                    .iter()
                    .map(|dir| dir.join(spelled))
                    .chain(std::iter::once(manifest.resolve_display(spelled)))
                    .find(|p| graph.contains(p))
                    .ok_or_else(|| Error::UnknownAssignment(manifest.resolve_display(spelled)))?;
                out.assign(header, &module.name);
            }
        }
        Ok(out)
    }

    fn check_against(&self, graph: &IncludeGraph) -> Result<()> {
        match self.modules.keys().find(|h| !graph.contains(h)) {
            Some(h) => Err(Error::UnknownAssignment(h.clone())),
            None => Ok(()),
        }
    }
}

/// Module-level view of the include graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDepGraph {
    pub modules: BTreeSet<String>,
    pub external: BTreeSet<String>,
    /// `(from, to)` → number of distinct header pairs `from` → `to`.
    pub edges: BTreeMap<(String, String), usize>,
}

impl ModuleDepGraph {
    pub fn new() -> Self {
        ModuleDepGraph {
            modules: BTreeSet::new(),
            external: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_module(&mut self, name: &str, external: bool) -> &mut Self {
        self.modules.insert(name.to_string());
        if external {
            self.external.insert(name.to_string());
        }
        self
    }

    /// Adds one header pair from `from` to `to`. Self edges are ignored.
    pub fn add_edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.modules.insert(from.to_string());
        self.modules.insert(to.to_string());
        if from != to {
            *self.edges.entry((from.to_string(), to.to_string())).or_insert(0) += 1;
        }
        self
    }

    pub fn is_external(&self, module: &str) -> bool {
        self.external.contains(module)
    }
}

impl Default for ModuleDepGraph {
    fn default() -> Self {
        Self::new()
    }
}

pub fn module_dependency_graph(graph: &IncludeGraph, assignment: &ModuleAssignment) -> Result<ModuleDepGraph> {
    assignment.check_against(graph)?;
    let mut dep = ModuleDepGraph::new();
    for name in assignment.module_names() {
        let external = assignment.external.contains(&name);
        dep.add_module(&name, external);
    }
    for (from, to) in graph.digraph().edges() {
        let (Some(a), Some(b)) = (
            assignment.module_of(graph.path_at(from)),
            assignment.module_of(graph.path_at(to)),
        ) else {
            continue;
        };
        if a != b {
            dep.add_edge(a, b);
        }
    }
    Ok(dep)
}

/// Line count of every node, as recorded while scanning.
pub fn line_counts(graph: &IncludeGraph) -> BTreeMap<CanonPath, u64> {
    graph
        .nodes()
        .iter()
        .map(|(p, f)| (p.clone(), u64::from(f.line_count)))
        .collect()
}

fn lines_of(line_counts: &BTreeMap<CanonPath, u64>, graph: &IncludeGraph, path: &CanonPath) -> u64 {
    line_counts
        .get(path)
        .copied()
        .or_else(|| graph.facts(path).map(|f| u64::from(f.line_count)))
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicationEntry {
    pub path: CanonPath,
    pub module: Option<String>,
    pub duplication_count: usize,
    pub lines: u64,
    pub duplicated_lines: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicationReport {
    /// Every header, by `duplicated_lines` descending, then path.
    pub entries: Vec<DuplicationEntry>,
    pub total_duplicated_lines: u64,
}

impl DuplicationReport {
    pub fn entry(&self, path: &CanonPath) -> Option<&DuplicationEntry> {
        self.entries.iter().find(|e| &e.path == path)
    }

    /// Unmapped headers parsed by more than one module.
    pub fn offenders(&self) -> impl Iterator<Item = &DuplicationEntry> {
        self.entries
            .iter()
            .filter(|e| e.module.is_none() && e.duplication_count >= 2)
    }
}

/// For every module, which graph nodes its headers reach.
fn module_reach(graph: &IncludeGraph, assignment: &ModuleAssignment, jobs: Jobs) -> Vec<Vec<bool>> {
    let members: Vec<Vec<usize>> = assignment
        .members()
        .into_values()
        .map(|hs| hs.iter().filter_map(|h| graph.index_of(h)).collect())
        .collect();
    let digraph = graph.digraph();
    map_ordered(&members, jobs, |starts| digraph.reachable_from(starts.iter().copied()))
}

pub fn duplication_report(
    graph: &IncludeGraph,
    assignment: &ModuleAssignment,
    line_counts: &BTreeMap<CanonPath, u64>,
    jobs: Jobs,
) -> DuplicationReport {
    let reach = module_reach(graph, assignment, jobs);
    let mut entries: Vec<DuplicationEntry> = graph
        .headers()
        .map(|h| {
            let module = assignment.module_of(h).map(str::to_string);
            let duplication_count = match module {
                Some(_) => 1,
                None => {
                    let idx = graph.index_of(h).expect("header is a node");
                    reach.iter().filter(|r| r[idx]).count()
                }
            };
            let lines = lines_of(line_counts, graph, h);
            DuplicationEntry {
                path: h.clone(),
                module,
                duplication_count,
                lines,
                duplicated_lines: duplication_count as u64 * lines,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.duplicated_lines.cmp(&a.duplicated_lines).then_with(|| a.path.cmp(&b.path)));
    let total_duplicated_lines = entries.iter().map(|e| e.duplicated_lines).sum();
    DuplicationReport {
        entries,
        total_duplicated_lines,
    }
}

/// Headers outside every library that some module header reaches, grouped
/// by the innermost search path containing them (or their directory when no
/// search path does).
pub fn detect_external_candidates(
    graph: &IncludeGraph,
    manifest: &LibraryManifest,
    assignment: &ModuleAssignment,
) -> BTreeMap<CanonPath, BTreeSet<CanonPath>> {
    let starts: Vec<usize> = assignment.modules.keys().filter_map(|h| graph.index_of(h)).collect();
    let reach = graph.digraph().reachable_from(starts);
    let mut groups: BTreeMap<CanonPath, BTreeSet<CanonPath>> = BTreeMap::new();
    for h in graph.headers() {
        let idx = graph.index_of(h).expect("header is a node");
        if !reach[idx] || manifest.owning_library(h).is_some() || assignment.module_of(h).is_some() {
            continue;
        }
        let root = manifest
            .search_root_of(h)
            .cloned()
            .unwrap_or_else(|| h.parent().unwrap_or_else(|| h.clone()));
        groups.entry(root).or_default().insert(h.clone());
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MigrationPlan {
    /// Dependencies before dependents.
    pub order: Vec<String>,
    /// Mutually dependent modules; each group is contiguous in `order`.
    pub cycle_groups: Vec<Vec<String>>,
    /// Whether every external module precedes every internal one.
    pub external_first: bool,
    /// Longest dependency chain below each module.
    pub ranks: BTreeMap<String, usize>,
}

pub fn bottom_up_order(dep: &ModuleDepGraph) -> MigrationPlan {
    let names: Vec<&String> = dep.modules.iter().collect();
    let index = |n: &str| names.binary_search_by(|x| x.as_str().cmp(n)).expect("edge endpoint is a module");
    let digraph = Digraph::from_edges(
        names.len(),
        dep.edges.keys().map(|(a, b)| (index(a), index(b))),
    );

    // Tarjan emits dependencies before dependents, so ranks fill in one pass.
    let components = digraph.strongly_connected_components();
    let mut comp_of = vec![0; names.len()];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut comp_rank = vec![0usize; components.len()];
    for (c, comp) in components.iter().enumerate() {
        comp_rank[c] = comp
            .iter()
            .flat_map(|&v| digraph.successors(v))
            .map(|&w| comp_of[w])
            .filter(|&d| d != c)
            .map(|d| comp_rank[d] + 1)
            .max()
            .unwrap_or(0);
    }

    let is_ext = |v: usize| dep.is_external(names[v]);
    let mut comps: Vec<(usize, bool, Vec<usize>)> = components
        .iter()
        .enumerate()
        .map(|(c, comp)| {
            let mut members = comp.clone();
            members.sort_by_key(|&v| (!is_ext(v), names[v]));
            let internal = !comp.iter().all(|&v| is_ext(v));
            (comp_rank[c], internal, members)
        })
        .collect();
    comps.sort_by(|a, b| (a.0, a.1, names[a.2[0]]).cmp(&(b.0, b.1, names[b.2[0]])));

    let order: Vec<String> = comps
        .iter()
        .flat_map(|(_, _, m)| m.iter().map(|&v| names[v].clone()))
        .collect();
    let cycle_groups = comps
        .iter()
        .filter(|(_, _, m)| m.len() >= 2)
        .map(|(_, _, m)| {
            let mut g: Vec<String> = m.iter().map(|&v| names[v].clone()).collect();
            g.sort();
            g
        })
        .collect();
    let first_internal = order.iter().position(|n| !dep.is_external(n)).unwrap_or(order.len());
    let external_first = order[first_internal..].iter().all(|n| !dep.is_external(n));
    let ranks = (0..names.len())
        .map(|v| (names[v].clone(), comp_rank[comp_of[v]]))
        .collect();
    MigrationPlan {
        order,
        cycle_groups,
        external_first,
        ranks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostEstimate {
    /// Every translation unit parses its whole include closure.
    pub textual_lines: u64,
    /// Module headers parsed once, other headers once per module reaching
    /// them, plus the translation units themselves.
    pub modular_lines: u64,
}

pub fn parse_cost_estimate(
    graph: &IncludeGraph,
    assignment: &ModuleAssignment,
    line_counts: &BTreeMap<CanonPath, u64>,
    jobs: Jobs,
) -> CostEstimate {
    let lines = |p: &CanonPath| lines_of(line_counts, graph, p);
    let tus: Vec<&CanonPath> = graph.translation_units().collect();
    let own: u64 = tus.iter().map(|t| lines(t)).sum();

    let digraph = graph.digraph();
    let per_tu = map_ordered(&tus, jobs, |tu| {
        let start = graph.index_of(tu).expect("translation unit is a node");
        let reach = digraph.reachable_from([start]);
        (0..reach.len())
            .filter(|&v| reach[v] && v != start)
            .map(|v| lines(graph.path_at(v)))
            .sum::<u64>()
    });
    let textual_lines = own + per_tu.iter().sum::<u64>();

    let report = duplication_report(graph, assignment, line_counts, jobs);
    let modular_lines = own + report.entries.iter().map(|e| e.duplicated_lines).sum::<u64>();
    CostEstimate {
        textual_lines,
        modular_lines,
    }
}
