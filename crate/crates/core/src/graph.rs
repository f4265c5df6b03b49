//! Oriented multigraphs with stable edge ids under deletion and contraction.
//!
//! Edge ids are indices into the original edge list and never change: deleted
//! or contracted edges are tombstoned, not reindexed, so flow values and
//! generating sets can refer to the same edge across a whole contraction
//! sequence. Vertices are likewise tombstoned when contraction merges them.

use crate::error::Error;
use crate::Result;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    tail: VertexId,
    head: VertexId,
    alive: bool,
}

/// A multigraph with a fixed orientation on every edge. Loops and parallel
/// edges are allowed. Values are immutable: `contract` and `delete` return
/// new graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedMultigraph {
    vertex_alive: Vec<bool>,
    edges: Vec<Edge>,
    n_live_vertices: usize,
    n_live_edges: usize,
}

impl OrientedMultigraph {
    /// Build a graph on vertices `0..n` with edges oriented tail -> head in
    /// the given order.
    pub fn from_edge_list(n: usize, pairs: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(tail, head) in pairs {
            if tail >= n {
                return Err(Error::VertexOutOfRange { vertex: tail, n });
            }
            if head >= n {
                return Err(Error::VertexOutOfRange { vertex: head, n });
            }
            edges.push(Edge {
                tail,
                head,
                alive: true,
            });
        }
        Ok(OrientedMultigraph {
            vertex_alive: vec![true; n],
            n_live_vertices: n,
            n_live_edges: edges.len(),
            edges,
        })
    }

    /// Number of live vertices.
    pub fn n_vertices(&self) -> usize {
        self.n_live_vertices
    }

    /// Number of live edges.
    pub fn n_edges(&self) -> usize {
        self.n_live_edges
    }

    /// Size of the edge id space (live and dead); valid ids are `0..edge_universe()`.
    pub fn edge_universe(&self) -> usize {
        self.edges.len()
    }

    /// Size of the vertex id space (live and dead).
    pub fn vertex_universe(&self) -> usize {
        self.vertex_alive.len()
    }

    pub fn is_live_edge(&self, e: EdgeId) -> bool {
        e < self.edges.len() && self.edges[e].alive
    }

    pub fn is_live_vertex(&self, v: VertexId) -> bool {
        v < self.vertex_alive.len() && self.vertex_alive[v]
    }

    /// Endpoints `(tail, head)` of a live edge.
    pub fn endpoints(&self, e: EdgeId) -> Result<(VertexId, VertexId)> {
        let edge = self.edge_checked(e)?;
        Ok((edge.tail, edge.head))
    }

    pub fn is_loop(&self, e: EdgeId) -> Result<bool> {
        let edge = self.edge_checked(e)?;
        Ok(edge.tail == edge.head)
    }

    fn edge_checked(&self, e: EdgeId) -> Result<&Edge> {
        let edge = self.edges.get(e).ok_or(Error::EdgeOutOfRange(e))?;
        if !edge.alive {
            return Err(Error::DeadEdge(e));
        }
        Ok(edge)
    }

    pub fn live_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.alive)
            .map(|(i, _)| i)
    }

    pub fn live_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i)
    }

    /// Contract a live non-loop edge: its endpoints merge into the smaller of
    /// the two vertex ids, the edge itself is tombstoned, and every other
    /// edge id is preserved. Parallel edges between the endpoints turn into
    /// loops.
    pub fn contract(&self, e: EdgeId) -> Result<Self> {
        let edge = self.edge_checked(e)?;
        if edge.tail == edge.head {
            return Err(Error::LoopContraction(e));
        }
        let keep = edge.tail.min(edge.head);
        let gone = edge.tail.max(edge.head);
        let mut g = self.clone();
        g.edges[e].alive = false;
        g.n_live_edges -= 1;
        g.vertex_alive[gone] = false;
        g.n_live_vertices -= 1;
        for edge in g.edges.iter_mut() {
            if edge.tail == gone {
                edge.tail = keep;
            }
            if edge.head == gone {
                edge.head = keep;
            }
        }
        Ok(g)
    }

    /// Delete a live edge (tombstone it).
    pub fn delete(&self, e: EdgeId) -> Result<Self> {
        self.edge_checked(e)?;
        let mut g = self.clone();
        g.edges[e].alive = false;
        g.n_live_edges -= 1;
        Ok(g)
    }

    /// Number of connected components of the live graph. Isolated live
    /// vertices count as components.
    pub fn components(&self) -> usize {
        self.components_within(None)
    }

    /// Components of `(V, F)` for an edge subset `F` (all live vertices, only
    /// the edges of `F`). `None` means all live edges.
    pub fn components_within(&self, subset: Option<&EdgeSubset>) -> usize {
        let mut uf = UnionFind::new(self.vertex_alive.len());
        for (i, edge) in self.edges.iter().enumerate() {
            if !edge.alive {
                continue;
            }
            if let Some(f) = subset {
                if !f.contains(i) {
                    continue;
                }
            }
            uf.union(edge.tail, edge.head);
        }
        let mut roots = std::collections::HashSet::new();
        for v in self.live_vertices() {
            roots.insert(uf.find(v));
        }
        roots.len()
    }

    /// Per-vertex incidence lists `(edge id, sign)` in edge-id order, where
    /// sign is +1 at the head and -1 at the tail of the edge. Loops are
    /// omitted: they contribute zero to every conservation sum.
    pub fn incidence(&self) -> Vec<Vec<(EdgeId, i8)>> {
        let mut inc = vec![Vec::new(); self.vertex_alive.len()];
        for (i, edge) in self.edges.iter().enumerate() {
            if !edge.alive || edge.tail == edge.head {
                continue;
            }
            inc[edge.tail].push((i, -1));
            inc[edge.head].push((i, 1));
        }
        inc
    }

    /// Deterministic spanning forest of `(V, F)` by DFS in edge-id order.
    pub fn spanning_forest(&self, subset: Option<&EdgeSubset>) -> SpanningForest {
        let nv = self.vertex_alive.len();
        let mut adj: Vec<Vec<(EdgeId, VertexId)>> = vec![Vec::new(); nv];
        for (i, edge) in self.edges.iter().enumerate() {
            if !edge.alive || edge.tail == edge.head {
                continue;
            }
            if let Some(f) = subset {
                if !f.contains(i) {
                    continue;
                }
            }
            adj[edge.tail].push((i, edge.head));
            adj[edge.head].push((i, edge.tail));
        }

        let mut forest = SpanningForest {
            parent_edge: vec![None; nv],
            parent_vertex: vec![None; nv],
            in_forest: vec![false; self.edges.len()],
            completion_order: Vec::new(),
            roots: Vec::new(),
        };
        let mut visited = vec![false; nv];
        for root in self.live_vertices() {
            if visited[root] {
                continue;
            }
            forest.roots.push(root);
            visited[root] = true;
            // Iterative DFS recording finish order (children before parents).
            let mut stack: Vec<(VertexId, usize)> = vec![(root, 0)];
            let mut finish: Vec<VertexId> = Vec::new();
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < adj[v].len() {
                    let (e, u) = adj[v][*next];
                    *next += 1;
                    if !visited[u] {
                        visited[u] = true;
                        forest.parent_edge[u] = Some(e);
                        forest.parent_vertex[u] = Some(v);
                        forest.in_forest[e] = true;
                        stack.push((u, 0));
                    }
                } else {
                    stack.pop();
                    finish.push(v);
                }
            }
            // Every finished vertex except the root has a parent edge.
            forest
                .completion_order
                .extend(finish.into_iter().filter(|&v| v != root));
        }
        forest
    }

    /// Graph text format: first line `n m`, then `m` lines `tail head`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_alive.len(), self.edges.len());
        for edge in &self.edges {
            out.push_str(&format!("{} {}\n", edge.tail, edge.head));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(format!("expected integer, got {t:?}")))
        });
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::parse(format!("missing {what}")))?
        };
        let n = next("vertex count")?;
        let m = next("edge count")?;
        let mut pairs = Vec::with_capacity(m);
        for i in 0..m {
            let tail = next(&format!("tail of edge {i}"))?;
            let head = next(&format!("head of edge {i}"))?;
            pairs.push((tail, head));
        }
        Self::from_edge_list(n, &pairs)
    }
}

/// Spanning forest data produced by [`OrientedMultigraph::spanning_forest`].
///
/// `completion_order` lists the non-root vertices children-first, which is
/// exactly the order in which forest-edge flow values can be solved by leaf
/// elimination.
#[derive(Debug, Clone)]
pub struct SpanningForest {
    pub parent_edge: Vec<Option<EdgeId>>,
    pub parent_vertex: Vec<Option<VertexId>>,
    pub in_forest: Vec<bool>,
    pub completion_order: Vec<VertexId>,
    pub roots: Vec<VertexId>,
}

/// A subset of the live edges of a graph, `F ⊆ E`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeSubset {
    member: Vec<bool>,
    count: usize,
}

impl EdgeSubset {
    pub fn empty(g: &OrientedMultigraph) -> Self {
        EdgeSubset {
            member: vec![false; g.edge_universe()],
            count: 0,
        }
    }

    pub fn full(g: &OrientedMultigraph) -> Self {
        let mut s = Self::empty(g);
        for e in g.live_edges() {
            s.member[e] = true;
            s.count += 1;
        }
        s
    }

    pub fn from_edges(
        g: &OrientedMultigraph,
        edges: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self> {
        let mut s = Self::empty(g);
        for e in edges {
            if !g.is_live_edge(e) {
                return Err(Error::DeadEdge(e));
            }
            if !s.member[e] {
                s.member[e] = true;
                s.count += 1;
            }
        }
        Ok(s)
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        e < self.member.len() && self.member[e]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn insert(&mut self, e: EdgeId) {
        if !self.member[e] {
            self.member[e] = true;
            self.count += 1;
        }
    }

    pub fn remove(&mut self, e: EdgeId) {
        if self.member[e] {
            self.member[e] = false;
            self.count -= 1;
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Union-find over the live vertices of `g` restricted to the edges of `F`;
/// returns a map vertex -> component representative.
pub fn component_labels(g: &OrientedMultigraph, subset: &EdgeSubset) -> Vec<Option<VertexId>> {
    let mut uf = UnionFind::new(g.vertex_universe());
    for e in subset.edges() {
        let (t, h) = g.endpoints(e).expect("subset refers to live edges");
        uf.union(t, h);
    }
    (0..g.vertex_universe())
        .map(|v| {
            if g.is_live_vertex(v) {
                Some(uf.find(v))
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> OrientedMultigraph {
        OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn from_edge_list_examples() {
        let t = triangle();
        assert_eq!(t.n_vertices(), 3);
        assert_eq!(t.n_edges(), 3);

        let loop_graph = OrientedMultigraph::from_edge_list(1, &[(0, 0)]).unwrap();
        assert_eq!(loop_graph.n_vertices(), 1);
        assert!(loop_graph.is_loop(0).unwrap());

        let double = OrientedMultigraph::from_edge_list(2, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(double.n_edges(), 2);
    }

    #[test]
    fn from_edge_list_rejects_out_of_range() {
        let err = OrientedMultigraph::from_edge_list(2, &[(0, 2)]).unwrap_err();
        assert_eq!(err, Error::VertexOutOfRange { vertex: 2, n: 2 });
    }

    #[test]
    fn contract_triangle_makes_parallel_edges() {
        let g = triangle().contract(0).unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.n_edges(), 2);
        assert!(!g.is_live_edge(0));
        // Former edges 1 and 2 are now parallel between the merged vertex and 2.
        let (t1, h1) = g.endpoints(1).unwrap();
        let (t2, h2) = g.endpoints(2).unwrap();
        assert_eq!((t1, h1), (0, 2));
        assert_eq!((t2, h2), (2, 0));
        assert!(!g.is_loop(1).unwrap());
    }

    #[test]
    fn contract_double_edge_makes_loop() {
        let double = OrientedMultigraph::from_edge_list(2, &[(0, 1), (0, 1)]).unwrap();
        let g = double.contract(0).unwrap();
        assert_eq!(g.n_vertices(), 1);
        assert!(g.is_loop(1).unwrap());
    }

    #[test]
    fn contract_path_edge() {
        let path = OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        let g = path.contract(0).unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.n_edges(), 1);
        assert!(!g.is_loop(1).unwrap());
    }

    #[test]
    fn contract_rejects_loops_and_dead_edges() {
        let g = OrientedMultigraph::from_edge_list(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.contract(0).unwrap_err(), Error::LoopContraction(0));
        let g2 = g.delete(1).unwrap();
        assert_eq!(g2.contract(1).unwrap_err(), Error::DeadEdge(1));
        assert_eq!(g2.delete(1).unwrap_err(), Error::DeadEdge(1));
    }

    #[test]
    fn components_examples() {
        let t = triangle();
        assert_eq!(t.delete(0).unwrap().components(), 1);
        let isolated = OrientedMultigraph::from_edge_list(2, &[]).unwrap();
        assert_eq!(isolated.components(), 2);
    }

    #[test]
    fn components_invariant_under_contraction() {
        let g = OrientedMultigraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        assert_eq!(g.components(), 2);
        for e in 0..4 {
            let before = g.components();
            let contracted = g.contract(e).unwrap();
            assert_eq!(contracted.components(), before);
            assert_eq!(contracted.n_vertices(), g.n_vertices() - 1);
            assert_eq!(contracted.n_edges(), g.n_edges() - 1);
        }
    }

    #[test]
    fn deleting_a_bridge_splits_a_component() {
        let path = OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.delete(0).unwrap().components(), path.components() + 1);
    }

    #[test]
    fn text_round_trip() {
        let g = OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let parsed = OrientedMultigraph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, parsed);
        assert!(OrientedMultigraph::from_text("2 1\n0").is_err());
        assert!(OrientedMultigraph::from_text("2 1\n0 x").is_err());
    }

    #[test]
    fn spanning_forest_completion_order_is_children_first() {
        let g = OrientedMultigraph::from_edge_list(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let f = g.spanning_forest(None);
        assert_eq!(f.roots, vec![0]);
        assert_eq!(f.completion_order.len(), 3);
        // Each vertex appears after all of its children.
        for (i, &v) in f.completion_order.iter().enumerate() {
            for (j, &u) in f.completion_order.iter().enumerate() {
                if f.parent_vertex[u] == Some(v) {
                    assert!(j < i, "child {u} must precede parent {v}");
                }
            }
        }
    }

    #[test]
    fn edge_subset_basics() {
        let g = triangle();
        let full = EdgeSubset::full(&g);
        assert_eq!(full.len(), 3);
        let sub = EdgeSubset::from_edges(&g, [0, 2]).unwrap();
        assert!(sub.contains(0) && !sub.contains(1) && sub.contains(2));
        let dead = g.delete(1).unwrap();
        assert!(EdgeSubset::from_edges(&dead, [1]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_multigraph() -> impl Strategy<Value = OrientedMultigraph> {
            (1usize..6).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..10)
                    .prop_map(move |pairs| OrientedMultigraph::from_edge_list(n, &pairs).unwrap())
            })
        }

        proptest! {
            /// Contraction drops one vertex and one edge and keeps the
            /// component count; deletion splits a component exactly when no
            /// alternative path connects the endpoints (checked by BFS, an
            /// independent route from the union-find component counter).
            #[test]
            fn contraction_and_deletion_invariants(g in arbitrary_multigraph()) {
                for e in g.live_edges() {
                    let (u, v) = g.endpoints(e).unwrap();
                    if u != v {
                        let contracted = g.contract(e).unwrap();
                        prop_assert_eq!(contracted.n_vertices(), g.n_vertices() - 1);
                        prop_assert_eq!(contracted.n_edges(), g.n_edges() - 1);
                        prop_assert_eq!(contracted.components(), g.components());
                    }
                    let deleted = g.delete(e).unwrap();
                    let split = deleted.components() - g.components();
                    prop_assert!(split <= 1);
                    prop_assert_eq!(split == 0, connected_avoiding(&g, e, u, v));
                }
            }
        }

        /// BFS reachability from `u` to `v` over live edges other than `e`.
        fn connected_avoiding(g: &OrientedMultigraph, e: EdgeId, u: usize, v: usize) -> bool {
            let mut seen = vec![false; g.vertex_universe()];
            let mut queue = std::collections::VecDeque::from([u]);
            seen[u] = true;
            while let Some(w) = queue.pop_front() {
                if w == v {
                    return true;
                }
                for other in g.live_edges().filter(|&f| f != e) {
                    let (a, b) = g.endpoints(other).unwrap();
                    for (from, to) in [(a, b), (b, a)] {
                        if from == w && !seen[to] {
                            seen[to] = true;
                            queue.push_back(to);
                        }
                    }
                }
            }
            false
        }
    }
}
