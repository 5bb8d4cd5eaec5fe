//! Index-based digraph algorithms shared by the include graph, the cycle
//! breaker and the module planner.

use std::collections::VecDeque;

/// Adjacency lists over nodes `0..len`. Successor lists are sorted and
/// deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(len: usize) -> Self {
        Digraph {
            succ: vec![Vec::new(); len],
        }
    }

    pub fn from_edges(len: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut graph = Digraph::new(len);
        for (from, to) in edges {
            graph.succ[from].push(to);
        }
        for list in &mut graph.succ {
            list.sort_unstable();
            list.dedup();
        }
        graph
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succ[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(from, list)| list.iter().map(move |&to| (from, to)))
    }

    pub fn has_self_loop(&self, node: usize) -> bool {
        self.succ[node].binary_search(&node).is_ok()
    }

    /// Nodes reachable from any of `starts` through at least one edge.
    pub fn reachable_from(&self, starts: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for s in starts {
            for &next in &self.succ[s] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        while let Some(node) = queue.pop_front() {
            for &next in &self.succ[node] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Strongly connected components (Tarjan, iterative). Components come out
    /// in reverse topological order of the condensation: every component is
    /// emitted after all components it can reach.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        const UNVISITED: usize = usize::MAX;
        let n = self.len();
        let mut index = vec![UNVISITED; n];
        let mut lowlink = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut components = Vec::new();
        let mut next_index = 0;
        // (node, position in its successor list)
        let mut call: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if index[root] != UNVISITED {
                continue;
            }
            call.push((root, 0));
            index[root] = next_index;
            lowlink[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (node, ref mut pos)) = call.last_mut() {
                if let Some(&next) = self.succ[node].get(*pos) {
                    *pos += 1;
                    if index[next] == UNVISITED {
                        index[next] = next_index;
                        lowlink[next] = next_index;
                        next_index += 1;
                        stack.push(next);
                        on_stack[next] = true;
                        call.push((next, 0));
                    } else if on_stack[next] {
                        lowlink[node] = lowlink[node].min(index[next]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[node]);
                }
                if lowlink[node] == index[node] {
                    let mut component = Vec::new();
                    while let Some(member) = stack.pop() {
                        on_stack[member] = false;
                        component.push(member);
                        if member == node {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
        components
    }

    /// Components that contain a cycle: size ≥ 2, or a single node with a
    /// self-loop.
    pub fn cyclic_components(&self) -> Vec<Vec<usize>> {
        self.strongly_connected_components()
            .into_iter()
            .filter(|c| c.len() > 1 || self.has_self_loop(c[0]))
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.cyclic_components().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reachability matrix by repeated relaxation until nothing changes.
    fn closure_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; n]; n];
        for &(a, b) in edges {
            reach[a][b] = true;
        }
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if !reach[a][b] {
                        continue;
                    }
                    let via = reach[b].clone();
                    for (c, r) in via.into_iter().enumerate() {
                        if r && !reach[a][c] {
                            reach[a][c] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return reach;
            }
        }
    }

    fn arb_graph(max: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1..=max).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..n * 3)))
    }

    proptest! {
        #[test]
        fn reachability_matches_closure((n, edges) in arb_graph(12)) {
            let graph = Digraph::from_edges(n, edges.iter().copied());
            let oracle = closure_oracle(n, &edges);
            for (start, expected) in oracle.iter().enumerate() {
                prop_assert_eq!(&graph.reachable_from([start]), expected);
            }
        }

        #[test]
        fn scc_matches_mutual_reachability((n, edges) in arb_graph(10)) {
            let graph = Digraph::from_edges(n, edges.iter().copied());
            let reach = closure_oracle(n, &edges);
            let mut oracle: Vec<Vec<usize>> = Vec::new();
            let mut placed = vec![false; n];
            for a in 0..n {
                if placed[a] || !reach[a][a] {
                    continue;
                }
                let group: Vec<usize> = (0..n).filter(|&b| a == b || (reach[a][b] && reach[b][a])).collect();
                for &b in &group {
                    placed[b] = true;
                }
                oracle.push(group);
            }
            let mut got = graph.cyclic_components();
            got.sort();
            prop_assert_eq!(got, oracle);
        }

        #[test]
        fn tarjan_emits_reverse_topological((n, edges) in arb_graph(10)) {
            let graph = Digraph::from_edges(n, edges.iter().copied());
            let comps = graph.strongly_connected_components();
            let mut position = vec![0; n];
            for (i, comp) in comps.iter().enumerate() {
                for &m in comp {
                    position[m] = i;
                }
            }
            for (a, b) in graph.edges() {
                prop_assert!(position[b] <= position[a]);
            }
        }
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let n = 200_000;
        let graph = Digraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)).chain([(n - 1, 0)]));
        let comps = graph.cyclic_components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), n);
    }
}
