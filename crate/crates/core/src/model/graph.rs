use std::collections::{BTreeMap, BTreeSet};

use super::{Edge, ModeId};
use crate::error::{Error, Result};

/// Directed graph of permitted switches.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModeGraph {
    vertices: Vec<ModeId>,
    edges: BTreeSet<Edge>,
}

impl ModeGraph {
    pub fn new(vertices: Vec<ModeId>, edges: impl IntoIterator<Item = Edge>) -> Self {
        ModeGraph {
            vertices,
            edges: edges.into_iter().collect(),
        }
    }

    /// Every ordered pair of distinct vertices.
    pub fn complete(vertices: Vec<ModeId>) -> Self {
        let edges: Vec<Edge> = vertices
            .iter()
            .flat_map(|p| {
                vertices
                    .iter()
                    .filter(move |q| *q != p)
                    .map(move |q| (p.clone(), q.clone()))
            })
            .collect();
        ModeGraph::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[ModeId] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, p: &ModeId, q: &ModeId) -> bool {
        self.edges.contains(&(p.clone(), q.clone()))
    }

    pub fn successors<'a>(&'a self, p: &'a ModeId) -> impl Iterator<Item = &'a ModeId> + 'a {
        self.edges.iter().filter(move |(a, _)| a == p).map(|(_, b)| b)
    }

    pub fn out_degree(&self, p: &ModeId) -> usize {
        self.successors(p).count()
    }

    /// Same vertices, edges restricted by `keep`.
    pub fn filter_edges(&self, keep: impl Fn(&Edge) -> bool) -> ModeGraph {
        ModeGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    fn adjacency(&self) -> BTreeMap<&ModeId, Vec<&ModeId>> {
        let mut adj: BTreeMap<&ModeId, Vec<&ModeId>> = self.vertices.iter().map(|v| (v, Vec::new())).collect();
        for (p, q) in &self.edges {
            adj.entry(p).or_default().push(q);
            adj.entry(q).or_default();
        }
        adj
    }
}

/// Kahn's algorithm with the smallest ready id taken first.
pub fn topological_order(graph: &ModeGraph) -> Result<Vec<ModeId>> {
    let adj = graph.adjacency();
    let mut indegree: BTreeMap<&ModeId, usize> = adj.keys().map(|v| (*v, 0)).collect();
    for targets in adj.values() {
        for q in targets {
            *indegree.get_mut(q).unwrap() += 1;
        }
    }
    let mut ready: BTreeSet<&ModeId> = indegree.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
    let mut order = Vec::with_capacity(adj.len());
    while let Some(v) = ready.pop_first() {
        order.push(v.clone());
        for q in &adj[v] {
            let d = indegree.get_mut(q).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(q);
            }
        }
    }
    if order.len() < adj.len() {
        return Err(Error::CyclicGraph(find_cycle(graph).unwrap_or_default()));
    }
    Ok(order)
}

/// One directed cycle, listed with its first vertex repeated at the end.
pub fn find_cycle(graph: &ModeGraph) -> Option<Vec<ModeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let adj = graph.adjacency();
    let mut mark: BTreeMap<&ModeId, Mark> = adj.keys().map(|v| (*v, Mark::New)).collect();
    for &root in adj.keys() {
        if mark[root] != Mark::New {
            continue;
        }
        // Iterative DFS; `stack` holds (vertex, next child index).
        let mut stack: Vec<(&ModeId, usize)> = vec![(root, 0)];
        mark.insert(root, Mark::Active);
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if let Some(&q) = adj[v].get(top.1) {
                top.1 += 1;
                match mark[q] {
                    Mark::New => {
                        mark.insert(q, Mark::Active);
                        stack.push((q, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|(w, _)| *w == q).unwrap();
                        let mut cycle: Vec<ModeId> = stack[start..].iter().map(|(w, _)| (*w).clone()).collect();
                        cycle.push(q.clone());
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark.insert(v, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}
