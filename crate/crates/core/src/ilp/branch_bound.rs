// SPDX-License-Identifier: Apache-2.0

//! Branch-and-bound for maximum independent sets on the conflict graph.
//!
//! Each search node reduces its vertex set (isolated and simplicial vertices
//! are always safe to take), splits the remainder into connected components
//! and solves those one after another. A component is branched on its first
//! vertex in row-major order, include branch first. The upper bound of a
//! component is the size of a greedy clique cover: an independent set takes
//! at most one vertex per clique.
//!
//! Vertex ids are row-major ranks of available sites, so every vertex list
//! kept in sorted order is also row-major.

use std::time::Instant;

use crate::design::Site;
use crate::grid::CandidateGrid;

use super::SolveBudget;

/// Result of a search.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub chosen: Vec<Site>,
    pub proven_optimal: bool,
    pub nodes: u64,
}

/// Conflict graph over the available sites of a grid.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    sites: Vec<Site>,
    adj: Vec<Vec<u32>>,
}

impl ConflictGraph {
    pub fn from_grid(grid: &CandidateGrid) -> Self {
        let sites: Vec<Site> = grid.available_sites().collect();
        let mut rank = vec![u32::MAX; grid.site_count()];
        for (v, &site) in sites.iter().enumerate() {
            rank[grid.index(site)] = v as u32;
        }
        let adj = sites
            .iter()
            .map(|&site| {
                let mut nb: Vec<u32> = grid
                    .neighbourhood(site)
                    .map(|s| rank[grid.index(s)])
                    .filter(|&r| r != u32::MAX)
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        Self { sites, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.sites.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn adjacent(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].binary_search(&b).is_ok()
    }
}

pub fn solve(grid: &CandidateGrid, budget: &SolveBudget) -> Outcome {
    let graph = ConflictGraph::from_grid(grid);
    let mut search = Search::new(&graph, budget);
    let all: Vec<u32> = (0..graph.vertex_count() as u32).collect();

    let greedy = search.greedy(&all);
    let improved = search.solve_set(&all, greedy.len() as isize);
    let mut chosen = improved.unwrap_or(greedy);
    chosen.sort_unstable();
    Outcome {
        chosen: chosen.into_iter().map(|v| graph.sites[v as usize]).collect(),
        proven_optimal: !search.exhausted,
        nodes: search.nodes,
    }
}

struct Search<'g> {
    graph: &'g ConflictGraph,
    // Set membership by epoch stamp; 0 is never a live epoch.
    member: Vec<u64>,
    covered: Vec<u64>,
    epoch: u64,
    nodes: u64,
    max_nodes: Option<u64>,
    deadline: Option<Instant>,
    exhausted: bool,
}

impl<'g> Search<'g> {
    fn new(graph: &'g ConflictGraph, budget: &SolveBudget) -> Self {
        Self {
            graph,
            member: vec![0; graph.vertex_count()],
            covered: vec![0; graph.vertex_count()],
            epoch: 0,
            nodes: 0,
            max_nodes: budget.max_nodes,
            deadline: budget.time_limit.map(|t| Instant::now() + t),
            exhausted: false,
        }
    }

    fn enter(&mut self, verts: &[u32]) -> u64 {
        self.epoch += 1;
        for &v in verts {
            self.member[v as usize] = self.epoch;
        }
        self.epoch
    }

    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.max_nodes.is_some_and(|max| self.nodes > max)
            || (self.nodes.is_multiple_of(256) && self.deadline.is_some_and(|d| Instant::now() >= d))
        {
            self.exhausted = true;
        }
        !self.exhausted
    }

    /// Splits `verts` into vertices forced into some maximum independent set
    /// and the remaining vertices.
    fn reduce(&mut self, verts: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let epoch = self.enter(verts);
        let adj = &self.graph.adj;
        let mut forced = Vec::new();
        let mut nb = Vec::new();
        let mut changed = true;
        while changed {
            changed = false;
            for &v in verts {
                if self.member[v as usize] != epoch {
                    continue;
                }
                nb.clear();
                nb.extend(adj[v as usize].iter().copied().filter(|&u| self.member[u as usize] == epoch));
                let simplicial = nb
                    .iter()
                    .enumerate()
                    .all(|(i, &a)| nb[i + 1..].iter().all(|&b| self.graph.adjacent(a, b)));
                if simplicial {
                    forced.push(v);
                    self.member[v as usize] = 0;
                    for &u in &nb {
                        self.member[u as usize] = 0;
                    }
                    changed = true;
                }
            }
        }
        let rest = verts
            .iter()
            .copied()
            .filter(|&v| self.member[v as usize] == epoch)
            .collect();
        (forced, rest)
    }

    fn components(&mut self, verts: &[u32]) -> Vec<Vec<u32>> {
        let epoch = self.enter(verts);
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for &root in verts {
            if self.member[root as usize] != epoch {
                continue;
            }
            self.member[root as usize] = 0;
            stack.push(root);
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in &self.graph.adj[v as usize] {
                    if self.member[u as usize] == epoch {
                        self.member[u as usize] = 0;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by_key(|c| (c.len(), c[0]));
        comps
    }

    fn clique_cover_bound(&mut self, verts: &[u32]) -> usize {
        let epoch = self.enter(verts);
        let mut cliques = 0;
        let mut clique = Vec::new();
        for &v in verts {
            if self.covered[v as usize] == epoch {
                continue;
            }
            self.covered[v as usize] = epoch;
            clique.clear();
            clique.push(v);
            for &u in &self.graph.adj[v as usize] {
                if self.member[u as usize] == epoch
                    && self.covered[u as usize] != epoch
                    && clique.iter().all(|&c| self.graph.adjacent(c, u))
                {
                    self.covered[u as usize] = epoch;
                    clique.push(u);
                }
            }
            cliques += 1;
        }
        cliques
    }

    /// Reduce, then take the first remaining vertex, until nothing is left.
    fn greedy(&mut self, verts: &[u32]) -> Vec<u32> {
        let mut out = Vec::new();
        let mut current = verts.to_vec();
        loop {
            let (forced, rest) = self.reduce(&current);
            out.extend(forced);
            let Some(&v) = rest.first() else { break };
            out.push(v);
            current = self.without_closed_neighbourhood(&rest, v);
        }
        out.sort_unstable();
        out
    }

    fn without_closed_neighbourhood(&self, verts: &[u32], v: u32) -> Vec<u32> {
        verts
            .iter()
            .copied()
            .filter(|&u| u != v && !self.graph.adjacent(v, u))
            .collect()
    }

    /// An independent set of `verts` larger than `floor`, maximum among such,
    /// or `None` when none exists (or the budget ran out first).
    fn solve_set(&mut self, verts: &[u32], floor: isize) -> Option<Vec<u32>> {
        if verts.len() as isize <= floor || !self.tick() {
            return None;
        }
        let (mut result, rest) = self.reduce(verts);
        let comps = self.components(&rest);
        let bounds: Vec<usize> = comps.iter().map(|c| self.clique_cover_bound(c)).collect();
        let mut remaining: usize = bounds.iter().sum();
        if (result.len() + remaining) as isize <= floor {
            return None;
        }
        for (comp, bound) in comps.iter().zip(bounds) {
            remaining -= bound;
            let need = floor - (result.len() + remaining) as isize;
            let found = self.branch(comp, need, bound)?;
            result.extend(found);
        }
        Some(result)
    }

    /// Like [`Self::solve_set`] for a reduced, connected vertex set whose
    /// clique cover bound is `bound`.
    fn branch(&mut self, comp: &[u32], floor: isize, bound: usize) -> Option<Vec<u32>> {
        if bound as isize <= floor {
            return None;
        }
        let v = comp[0];
        let mut best: Option<Vec<u32>> = None;
        let mut best_size = floor;

        let include = self.without_closed_neighbourhood(comp, v);
        if let Some(mut found) = self.solve_set(&include, best_size - 1) {
            found.push(v);
            best_size = found.len() as isize;
            best = Some(found);
            if best_size as usize == bound {
                return best;
            }
        }
        if self.exhausted {
            return best;
        }
        if let Some(found) = self.solve_set(&comp[1..], best_size) {
            best = Some(found);
        }
        best
    }
}
