//! Single-threaded reference graph with the exact ADT contract, plus
//! brute-force BFS, Bellman-Ford and pair-dependency betweenness oracles.

use std::collections::{BTreeMap, VecDeque};

use crate::types::{EdgeResult, VertexKey};

/// Per-source BFS result: hop distances and shortest-path counts.
type PathCounts = (BTreeMap<VertexKey, u32>, BTreeMap<VertexKey, f64>);

/// Adjacency-map reference graph. No edges incident to absent vertices, no
/// self loops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeqGraph {
    adj: BTreeMap<VertexKey, BTreeMap<VertexKey, f64>>,
}

impl SeqGraph {
    pub fn new() -> SeqGraph {
        SeqGraph::default()
    }

    pub fn put_vertex(&mut self, v: VertexKey) -> bool {
        if let std::collections::btree_map::Entry::Vacant(e) = self.adj.entry(v) {
            e.insert(BTreeMap::new());
            true
        } else {
            false
        }
    }

    pub fn remove_vertex(&mut self, v: VertexKey) -> bool {
        if self.adj.remove(&v).is_none() {
            return false;
        }
        for edges in self.adj.values_mut() {
            edges.remove(&v);
        }
        true
    }

    pub fn get_vertex(&self, v: VertexKey) -> bool {
        self.adj.contains_key(&v)
    }

    /// The four-way put-edge contract.
    pub fn put_edge(&mut self, v1: VertexKey, v2: VertexKey, w: f64) -> EdgeResult {
        if v1 == v2 || !self.adj.contains_key(&v1) || !self.adj.contains_key(&v2) {
            return EdgeResult::absent();
        }
        let edges = self.adj.get_mut(&v1).unwrap();
        match edges.get(&v2) {
            None => {
                edges.insert(v2, w);
                EdgeResult::new(true, f64::INFINITY)
            }
            Some(&z) if z == w => EdgeResult::new(false, w),
            Some(&z) => {
                edges.insert(v2, w);
                EdgeResult::new(true, z)
            }
        }
    }

    pub fn remove_edge(&mut self, v1: VertexKey, v2: VertexKey) -> EdgeResult {
        match self.adj.get_mut(&v1).and_then(|e| e.remove(&v2)) {
            Some(w) => EdgeResult::new(true, w),
            None => EdgeResult::absent(),
        }
    }

    pub fn get_edge(&self, v1: VertexKey, v2: VertexKey) -> EdgeResult {
        match self.adj.get(&v1).and_then(|e| e.get(&v2)) {
            Some(&w) => EdgeResult::new(true, w),
            None => EdgeResult::absent(),
        }
    }

    pub fn vertices(&self) -> Vec<VertexKey> {
        self.adj.keys().copied().collect()
    }

    pub fn out_edges(&self, v: VertexKey) -> Vec<(VertexKey, f64)> {
        self.adj
            .get(&v)
            .map(|e| e.iter().map(|(k, w)| (*k, *w)).collect())
            .unwrap_or_default()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|e| e.len()).sum()
    }

    /// BFS levels from `v` with sorted-neighbor expansion order, matching the
    /// in-order edge scan of the concurrent structure. `None` when `v` is
    /// absent. The returned list is in visit order.
    pub fn bfs(&self, v: VertexKey) -> Option<Vec<(VertexKey, u32, Option<VertexKey>)>> {
        if !self.adj.contains_key(&v) {
            return None;
        }
        let mut order = vec![(v, 0u32, None)];
        let mut level = BTreeMap::from([(v, 0u32)]);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let du = level[&u];
            for &n in self.adj[&u].keys() {
                if let std::collections::btree_map::Entry::Vacant(e) = level.entry(n) {
                    e.insert(du + 1);
                    order.push((n, du + 1, Some(u)));
                    queue.push_back(n);
                }
            }
        }
        Some(order)
    }

    /// Bellman-Ford from `v`: per-vertex distances (reachable only) and the
    /// negative-cycle verdict. |V|-1 relaxation rounds plus a probe round;
    /// only cycles reachable from `v` count.
    pub fn bellman_ford(&self, v: VertexKey) -> Option<(BTreeMap<VertexKey, f64>, bool)> {
        if !self.adj.contains_key(&v) {
            return None;
        }
        let mut dist: BTreeMap<VertexKey, f64> =
            self.adj.keys().map(|&k| (k, f64::INFINITY)).collect();
        dist.insert(v, 0.0);
        let n = self.adj.len();
        for _ in 1..n.max(1) {
            let mut changed = false;
            for (&u, edges) in &self.adj {
                let du = dist[&u];
                if du.is_infinite() {
                    continue;
                }
                for (&t, &w) in edges {
                    if du + w < dist[&t] {
                        dist.insert(t, du + w);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut neg_cycle = false;
        for (&u, edges) in &self.adj {
            let du = dist[&u];
            if du.is_infinite() {
                continue;
            }
            for (&t, &w) in edges {
                if du + w < dist[&t] {
                    neg_cycle = true;
                }
            }
        }
        dist.retain(|_, d| d.is_finite());
        Some((dist, neg_cycle))
    }

    /// BFS distances and shortest-path counts from `s` (unweighted view).
    fn paths_from(&self, s: VertexKey) -> PathCounts {
        let mut dist = BTreeMap::from([(s, 0u32)]);
        let mut sigma = BTreeMap::from([(s, 1.0f64)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            let su = sigma[&u];
            for &n in self.adj[&u].keys() {
                match dist.get(&n) {
                    None => {
                        dist.insert(n, du + 1);
                        sigma.insert(n, su);
                        queue.push_back(n);
                    }
                    Some(&dn) if dn == du + 1 => {
                        *sigma.get_mut(&n).unwrap() += su;
                    }
                    _ => {}
                }
            }
        }
        (dist, sigma)
    }

    /// Brute-force betweenness of `v`: the sum over ordered pairs (s, t) of
    /// the fraction of shortest s-t paths passing through `v`, computed from
    /// the path-count identity sigma(s,t|v) = sigma(s,v) * sigma(v,t) when
    /// d(s,v) + d(v,t) = d(s,t). Unweighted view; all weights read as one.
    pub fn brute_bc(&self, v: VertexKey) -> Option<f64> {
        if !self.adj.contains_key(&v) {
            return None;
        }
        let all: BTreeMap<VertexKey, PathCounts> = self
            .adj
            .keys()
            .map(|&s| (s, self.paths_from(s)))
            .collect();
        let (dist_v, sigma_v) = &all[&v];
        let mut total = 0.0;
        for (&s, (dist_s, sigma_s)) in &all {
            if s == v {
                continue;
            }
            let (Some(&dsv), Some(&ssv)) = (dist_s.get(&v), sigma_s.get(&v)) else {
                continue;
            };
            for (&t, &dst) in dist_s.iter() {
                if t == v || t == s {
                    continue;
                }
                let (Some(&dvt), Some(&svt)) = (dist_v.get(&t), sigma_v.get(&t)) else {
                    continue;
                };
                if dsv + dvt == dst {
                    total += (ssv * svt) / sigma_s[&t];
                }
            }
        }
        Some(total)
    }

    /// Betweenness of every vertex, via `brute_bc`.
    pub fn brute_bc_all(&self) -> BTreeMap<VertexKey, f64> {
        self.adj
            .keys()
            .map(|&v| (v, self.brute_bc(v).unwrap()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> SeqGraph {
        // a -> b -> c as 1 -> 2 -> 3
        let mut g = SeqGraph::new();
        for v in [1, 2, 3] {
            g.put_vertex(v);
        }
        g.put_edge(1, 2, 1.0);
        g.put_edge(2, 3, 1.0);
        g
    }

    #[test]
    fn put_edge_four_way_contract() {
        let mut g = SeqGraph::new();
        g.put_vertex(1);
        g.put_vertex(2);
        assert_eq!(g.put_edge(1, 2, 3.0), EdgeResult::new(true, f64::INFINITY));
        assert_eq!(g.put_edge(1, 2, 3.0), EdgeResult::new(false, 3.0));
        assert_eq!(g.put_edge(1, 2, 4.0), EdgeResult::new(true, 3.0));
        assert_eq!(g.put_edge(1, 9, 1.0), EdgeResult::absent());
    }

    #[test]
    fn remove_vertex_drops_incident_edges() {
        let mut g = path_graph();
        assert!(g.remove_vertex(2));
        assert_eq!(g.get_edge(1, 2), EdgeResult::absent());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn bfs_levels_on_path() {
        let g = path_graph();
        let order = g.bfs(1).unwrap();
        assert_eq!(order, vec![(1, 0, None), (2, 1, Some(1)), (3, 2, Some(2))]);
    }

    #[test]
    fn bellman_ford_negative_cycle() {
        let mut g = SeqGraph::new();
        g.put_vertex(1);
        g.put_vertex(2);
        g.put_edge(1, 2, 1.0);
        g.put_edge(2, 1, -3.0);
        let (_, cycle) = g.bellman_ford(1).unwrap();
        assert!(cycle);
    }

    #[test]
    fn bellman_ford_zero_cycle_is_clean() {
        let mut g = SeqGraph::new();
        g.put_vertex(1);
        g.put_vertex(2);
        g.put_edge(1, 2, 2.0);
        g.put_edge(2, 1, -2.0);
        let (dist, cycle) = g.bellman_ford(1).unwrap();
        assert!(!cycle);
        assert_eq!(dist[&2], 2.0);
    }

    #[test]
    fn brute_bc_path_midpoint_is_one() {
        let g = path_graph();
        assert_eq!(g.brute_bc(2).unwrap(), 1.0);
        assert_eq!(g.brute_bc(1).unwrap(), 0.0);
    }

    #[test]
    fn brute_bc_complete_digraph_is_zero() {
        let mut g = SeqGraph::new();
        for v in [1, 2, 3] {
            g.put_vertex(v);
        }
        for a in [1, 2, 3] {
            for b in [1, 2, 3] {
                if a != b {
                    g.put_edge(a, b, 1.0);
                }
            }
        }
        for v in [1, 2, 3] {
            assert_eq!(g.brute_bc(v).unwrap(), 0.0);
        }
    }

    #[test]
    fn bfs_levels_equal_unit_weight_distances() {
        let mut g = SeqGraph::new();
        for v in 0..6 {
            g.put_vertex(v);
        }
        for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (0, 5)] {
            g.put_edge(a, b, 1.0);
        }
        let bfs: BTreeMap<_, _> = g.bfs(0).unwrap().into_iter().map(|(k, l, _)| (k, l)).collect();
        let (bf, _) = g.bellman_ford(0).unwrap();
        for (k, l) in bfs {
            assert_eq!(bf[&k], l as f64);
        }
    }
}
