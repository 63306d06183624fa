//! Breadth-first search over a validated partial snapshot.

use crossbeam_epoch as epoch;

use crate::graph::{Graph, ThreadToken};
use crate::snapshot::{self, ScanHooks, SnapChain};
use crate::types::{ConsistencyMode, QueryStats, VertexKey};

/// One vertex of a BFS tree, in visit order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfsNode {
    pub key: VertexKey,
    pub parent: Option<VertexKey>,
    pub level: u32,
}

/// BFS tree rooted at the query vertex. Vertices at distance d1 precede
/// vertices at distance d2 whenever d1 < d2.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BfsTree {
    pub nodes: Vec<BfsNode>,
}

impl BfsTree {
    pub fn keys(&self) -> Vec<VertexKey> {
        self.nodes.iter().map(|n| n.key).collect()
    }

    /// (key, level) pairs sorted by key, for oracle comparison.
    pub fn levels(&self) -> Vec<(VertexKey, u32)> {
        let mut v: Vec<_> = self.nodes.iter().map(|n| (n.key, n.level)).collect();
        v.sort_unstable();
        v
    }
}

fn extract(chain: &SnapChain) -> BfsTree {
    let mut levels = vec![0u32; chain.len()];
    let mut nodes = Vec::with_capacity(chain.len());
    for (i, sn) in chain.nodes.iter().enumerate() {
        let v = unsafe { &*sn.vertex };
        let (parent, level) = match sn.parent {
            None => (None, 0),
            Some(p) => {
                let pv = unsafe { &*chain.nodes[p].vertex };
                (Some(pv.key), levels[p] + 1)
            }
        };
        levels[i] = level;
        nodes.push(BfsNode {
            key: v.key,
            parent,
            level,
        });
    }
    BfsTree { nodes }
}

impl Graph {
    /// BFS from `v`. `None` when `v` is missing or logically removed at
    /// invocation.
    pub fn bfs(&self, t: &ThreadToken<'_>, v: VertexKey) -> Option<BfsTree> {
        self.bfs_with(t, v, ConsistencyMode::Linearizable, &mut ScanHooks::default())
            .0
    }

    /// BFS with explicit consistency mode and scan hooks; also returns the
    /// per-query statistics the harness reports.
    pub fn bfs_with(
        &self,
        t: &ThreadToken<'_>,
        v: VertexKey,
        mode: ConsistencyMode,
        hooks: &mut ScanHooks<'_>,
    ) -> (Option<BfsTree>, QueryStats) {
        let guard = epoch::pin();
        let source = match self.table.hash_contains(v, &guard) {
            Some(s) if !s.is_marked() => s.clone(),
            _ => return (None, QueryStats::default()),
        };
        let (chain, collects) = snapshot::scan_with(
            mode,
            hooks,
            || snapshot::tree_collect(&source, t, &guard),
            snapshot::cmp_tree,
        );
        let aborted = chain.is_none();
        let stats = QueryStats { collects, aborted };
        if source.is_marked() {
            // Removed during the scan; linearize after that removal.
            return (None, stats);
        }
        (chain.map(|c| extract(&c)), stats)
    }
}
