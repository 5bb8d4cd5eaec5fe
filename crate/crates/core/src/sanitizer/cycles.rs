//! Cycle breaking: which includes to replace with forward declarations so a
//! mutually-including group of headers becomes acyclic.
//!
//! Small components are solved exactly (minimum feedback arc set by
//! exhaustive search in lexicographic order). Larger ones fall back to a
//! greedy heuristic that repeatedly drops the edge on the most simple
//! cycles, then re-adds any dropped edge that turns out to be unnecessary.

use serde::{Deserialize, Serialize};

use crate::algo::Digraph;
use crate::error::{Error, Result};
use crate::graph::IncludeGraph;
use crate::path::CanonPath;

/// Components with at most this many internal edges are solved exactly.
pub const EXACT_EDGE_LIMIT: usize = 10;

/// Simple-cycle enumeration work budget per greedy round.
const CYCLE_COUNT_BUDGET: usize = 200_000;

pub const FORWARD_DECLARATION_RATIONALE: &str = "replace include with forward declaration";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleBreak {
    pub from: CanonPath,
    pub to: CanonPath,
    pub rationale: String,
}

/// Suggests includes to remove from `scc` so that it becomes acyclic.
pub fn suggest_cycle_breaks(graph: &IncludeGraph, scc: &[CanonPath]) -> Result<Vec<CycleBreak>> {
    suggest_cycle_breaks_with_limit(graph, scc, EXACT_EDGE_LIMIT)
}

/// Same as [`suggest_cycle_breaks`] with a custom exact-search threshold.
pub fn suggest_cycle_breaks_with_limit(
    graph: &IncludeGraph,
    scc: &[CanonPath],
    exact_limit: usize,
) -> Result<Vec<CycleBreak>> {
    let mut members = scc.to_vec();
    members.sort();
    members.dedup();
    if members.len() < 2 {
        return Err(Error::ComponentTooSmall(members.len()));
    }
    let global: Vec<usize> = members
        .iter()
        .map(|m| graph.index_of(m).ok_or_else(|| Error::UnknownNode(m.clone())))
        .collect::<Result<_>>()?;

    // Members are sorted, so local index order is path order and sorting
    // edge pairs sorts them lexicographically by (from, to).
    let mut edges = Vec::new();
    for (local_from, &g_from) in global.iter().enumerate() {
        for &g_to in graph.digraph().successors(g_from) {
            if let Ok(local_to) = global.binary_search(&g_to) {
                edges.push((local_from, local_to));
            }
        }
    }
    edges.sort_unstable();

    let removed = if edges.len() <= exact_limit {
        exact_feedback_arcs(members.len(), &edges)
    } else {
        greedy_feedback_arcs(members.len(), &edges)
    };
    Ok(removed
        .into_iter()
        .map(|e| {
            let (from, to) = edges[e];
            CycleBreak {
                from: members[from].clone(),
                to: members[to].clone(),
                rationale: FORWARD_DECLARATION_RATIONALE.to_string(),
            }
        })
        .collect())
}

fn acyclic_without(n: usize, edges: &[(usize, usize)], removed: &[bool]) -> bool {
    let kept = edges
        .iter()
        .zip(removed)
        .filter(|(_, &r)| !r)
        .map(|(&e, _)| e);
    Digraph::from_edges(n, kept).is_acyclic()
}

/// Smallest removal set; among equals, the lexicographically first.
fn exact_feedback_arcs(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let m = edges.len();
    for k in 0..=m {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let mut removed = vec![false; m];
            for &e in &combo {
                removed[e] = true;
            }
            if acyclic_without(n, edges, &removed) {
                return combo;
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    (0..m).collect()
}

/// Advances to the next k-subset of `0..m` in lexicographic order.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn greedy_feedback_arcs(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let m = edges.len();
    let mut removed = vec![false; m];
    let mut order = Vec::new();
    while !acyclic_without(n, edges, &removed) {
        let counts = cycle_counts(n, edges, &removed, CYCLE_COUNT_BUDGET);
        // Highest count wins; ties go to the earliest (lexicographic) edge.
        let pick = (0..m)
            .filter(|&e| !removed[e])
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .filter(|&e| counts[e] > 0)
            .or_else(|| first_edge_on_cycle(n, edges, &removed));
        match pick {
            Some(e) => {
                removed[e] = true;
                order.push(e);
            }
            None => break,
        }
    }
    // Drop suggestions that later removals made redundant.
    for &e in order.iter().rev() {
        removed[e] = false;
        if !acyclic_without(n, edges, &removed) {
            removed[e] = true;
        }
    }
    (0..m).filter(|&e| removed[e]).collect()
}

fn first_edge_on_cycle(n: usize, edges: &[(usize, usize)], removed: &[bool]) -> Option<usize> {
    let kept = edges.iter().zip(removed).filter(|(_, &r)| !r).map(|(&e, _)| e);
    let graph = Digraph::from_edges(n, kept);
    let mut comp_of = vec![usize::MAX; n];
    for (c, comp) in graph.cyclic_components().iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    (0..edges.len()).find(|&e| {
        let (a, b) = edges[e];
        !removed[e] && comp_of[a] != usize::MAX && comp_of[a] == comp_of[b]
    })
}

/// Number of simple cycles through each edge, enumerating each cycle once
/// from its smallest node. Stops early when `budget` steps are spent, so
/// counts are lower bounds on large components.
fn cycle_counts(n: usize, edges: &[(usize, usize)], removed: &[bool], budget: usize) -> Vec<u64> {
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(a, _)) in edges.iter().enumerate() {
        if !removed[e] {
            out_edges[a].push(e);
        }
    }
    let mut counts = vec![0u64; edges.len()];
    let mut steps = 0usize;
    let mut on_path = vec![false; n];

    for start in 0..n {
        // (node, next out-edge position); path holds the edge ids taken.
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        let mut path: Vec<usize> = Vec::new();
        on_path[start] = true;
        while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
            steps += 1;
            if steps > budget {
                return counts;
            }
            let Some(&e) = out_edges[node].get(*pos) else {
                on_path[node] = false;
                stack.pop();
                path.pop();
                continue;
            };
            *pos += 1;
            let next = edges[e].1;
            if next == start {
                for &p in &path {
                    counts[p] += 1;
                }
                counts[e] += 1;
            } else if next > start && !on_path[next] {
                on_path[next] = true;
                path.push(e);
                stack.push((next, 0));
            }
        }
    }
    counts
}
