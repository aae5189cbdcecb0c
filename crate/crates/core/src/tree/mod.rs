//! Arena representation of finite unrooted trees with an ordered list of leaves.

mod document;
mod metric;
mod shape;
mod span;

pub(crate) use document::parse_decimal;
pub use document::{Color, TreeDocument};
pub use metric::{
    covering_radius, distance_matrix, distortion, hausdorff_distance, DistanceMatrix,
};
pub use shape::{enumerate_labeled_shapes, LabeledShape};
pub use span::{attachment_point, contract_degree_two, span, Subtree};

use std::collections::VecDeque;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Dense handle into the vertex arena. Ids are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i as u32)
    }
}

/// Dense handle into the edge arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An edge together with the positions of each endpoint in the other's
/// adjacency list, so that subdividing it is O(1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    ends: [VertexId; 2],
    slots: [u32; 2],
}

/// What an edge subdivision created.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub middle: VertexId,
    pub leaf: VertexId,
    /// The new edge between the middle vertex and the old second endpoint.
    /// The subdivided edge keeps its id and now ends at the middle vertex.
    pub lower_edge: EdgeId,
    pub leaf_edge: EdgeId,
}

/// What a vertex attachment created.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attach {
    pub leaf: VertexId,
    pub leaf_edge: EdgeId,
}

/// A finite tree grown in an arena, with leaves listed in insertion order
/// `A_0, A_1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTree {
    alpha: f64,
    adjacency: Vec<SmallVec<[VertexId; 3]>>,
    edges: Vec<Edge>,
    leaf_order: Vec<VertexId>,
    step_count: usize,
}

impl GrowthTree {
    /// The one-edge tree with leaves `A_0 = 0` and `A_1 = 1`.
    pub fn single_edge(alpha: f64) -> Self {
        let mut tree = GrowthTree {
            alpha,
            adjacency: Vec::new(),
            edges: Vec::new(),
            leaf_order: Vec::new(),
            step_count: 1,
        };
        let a0 = tree.push_vertex();
        let a1 = tree.push_vertex();
        tree.push_edge(a0, a1);
        tree.leaf_order = vec![a0, a1];
        tree
    }

    /// Builds a tree from raw parts and checks that it is a tree.
    ///
    /// Only the structural invariants (connected, acyclic, simple, leaf list
    /// consistent with degrees) are enforced here; see
    /// [`GrowthTree::check_chain_invariants`] for the stricter growth-state checks.
    pub fn from_edges(
        alpha: f64,
        vertex_count: usize,
        edges: &[(usize, usize)],
        leaf_order: &[usize],
    ) -> Result<Self> {
        let mut tree = GrowthTree {
            alpha,
            adjacency: vec![SmallVec::new(); vertex_count],
            edges: Vec::with_capacity(edges.len()),
            leaf_order: Vec::with_capacity(leaf_order.len()),
            step_count: leaf_order.len().saturating_sub(1),
        };
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidVertex(u.max(v)));
            }
            if u == v {
                return Err(Error::input(format!("self-loop at vertex {u}")));
            }
            if tree.adjacency[u].contains(&VertexId::from(v)) {
                return Err(Error::input(format!("duplicate edge [{u}, {v}]")));
            }
            tree.push_edge(VertexId::from(u), VertexId::from(v));
        }
        for &l in leaf_order {
            if l >= vertex_count {
                return Err(Error::InvalidVertex(l));
            }
            tree.leaf_order.push(VertexId::from(l));
        }
        tree.check_structure()?;
        Ok(tree)
    }

    fn push_vertex(&mut self) -> VertexId {
        let id = VertexId::from(self.adjacency.len());
        self.adjacency.push(SmallVec::new());
        id
    }

    fn push_edge(&mut self, u: VertexId, v: VertexId) -> EdgeId {
        let id = EdgeId(self.edges.len() as u32);
        let su = self.adjacency[u.index()].len() as u32;
        let sv = self.adjacency[v.index()].len() as u32;
        self.adjacency[u.index()].push(v);
        self.adjacency[v.index()].push(u);
        self.edges.push(Edge {
            ends: [u, v],
            slots: [su, sv],
        });
        id
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of growth steps `n`; the tree has `n + 1` listed leaves.
    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn leaf_order(&self) -> &[VertexId] {
        &self.leaf_order
    }

    /// Leaf `A_i`.
    pub fn leaf(&self, i: usize) -> Option<VertexId> {
        self.leaf_order.get(i).copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.adjacency.len()).map(VertexId::from)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.adjacency.len()
    }

    pub(crate) fn check_id(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v.index()))
        }
    }

    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check_id(v)?;
        Ok(&self.adjacency[v.index()])
    }

    /// Neighbors without the bounds check, for hot loops over known-good ids.
    #[inline]
    pub(crate) fn adj(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> Result<usize> {
        Ok(self.neighbors(v)?.len())
    }

    #[inline]
    pub(crate) fn deg(&self, v: VertexId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn edge(&self, e: EdgeId) -> Option<(VertexId, VertexId)> {
        self.edges.get(e.index()).map(|e| (e.ends[0], e.ends[1]))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().map(|e| (e.ends[0], e.ends[1]))
    }

    /// Subdivides edge `e = {u, v}` with a new middle vertex `w` and hangs a new
    /// leaf off `w`. Edge `e` becomes `{u, w}`.
    pub fn split_edge(&mut self, e: EdgeId) -> Split {
        let Edge {
            ends: [u, v],
            slots: [su, sv],
        } = self.edges[e.index()];
        let w = self.push_vertex();
        let leaf = self.push_vertex();
        self.adjacency[u.index()][su as usize] = w;
        self.adjacency[v.index()][sv as usize] = w;
        self.adjacency[w.index()].extend_from_slice(&[u, v, leaf]);
        self.adjacency[leaf.index()].push(w);
        self.edges[e.index()] = Edge {
            ends: [u, w],
            slots: [su, 0],
        };
        let lower_edge = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            ends: [w, v],
            slots: [1, sv],
        });
        let leaf_edge = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            ends: [w, leaf],
            slots: [2, 0],
        });
        self.leaf_order.push(leaf);
        self.step_count += 1;
        Split {
            middle: w,
            leaf,
            lower_edge,
            leaf_edge,
        }
    }

    /// Hangs a new leaf directly off vertex `v`.
    pub fn attach_leaf(&mut self, v: VertexId) -> Attach {
        let leaf = self.push_vertex();
        let leaf_edge = self.push_edge(v, leaf);
        self.leaf_order.push(leaf);
        self.step_count += 1;
        Attach { leaf, leaf_edge }
    }

    /// BFS distances (in edges) from a set of sources. Unreached entries are `u32::MAX`.
    pub fn bfs_distances(&self, sources: &[VertexId]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::with_capacity(self.vertex_count());
        for &s in sources {
            if dist[s.index()] == u32::MAX {
                dist[s.index()] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v.index()] + 1;
            for &w in self.adj(v) {
                if dist[w.index()] == u32::MAX {
                    dist[w.index()] = d;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Parent pointers of the tree rooted at `root` (the root points to itself),
    /// together with the BFS visiting order.
    pub fn parents(&self, root: VertexId) -> (Vec<VertexId>, Vec<VertexId>) {
        let n = self.vertex_count();
        let mut parent = vec![VertexId(u32::MAX); n];
        let mut order = Vec::with_capacity(n);
        parent[root.index()] = root;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in self.adj(v) {
                if parent[w.index()].0 == u32::MAX {
                    parent[w.index()] = v;
                    order.push(w);
                }
            }
        }
        (parent, order)
    }

    /// Graph distance between two vertices.
    pub fn distance(&self, a: VertexId, b: VertexId) -> Result<u32> {
        self.check_id(a)?;
        self.check_id(b)?;
        Ok(self.bfs_distances(&[a])[b.index()])
    }

    /// Connected, acyclic, no repeated neighbors, leaf list made of distinct
    /// degree-one vertices (or the lone vertex of a one-vertex tree).
    pub fn check_structure(&self) -> Result<()> {
        let n = self.vertex_count();
        if n == 0 {
            return Err(Error::input("empty tree"));
        }
        if self.edges.len() + 1 != n {
            return Err(Error::invariant(format!(
                "{} edges for {} vertices",
                self.edges.len(),
                n
            )));
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            for (k, w) in adj.iter().enumerate() {
                if adj[..k].contains(w) {
                    return Err(Error::invariant(format!(
                        "vertex {i} lists neighbor {w} twice"
                    )));
                }
            }
        }
        let dist = self.bfs_distances(&[VertexId(0)]);
        if dist.contains(&u32::MAX) {
            return Err(Error::invariant("tree is disconnected"));
        }
        let mut seen = vec![false; n];
        for &l in &self.leaf_order {
            if std::mem::replace(&mut seen[l.index()], true) {
                return Err(Error::invariant(format!("leaf {l} listed twice")));
            }
            if n > 1 && self.deg(l) != 1 {
                return Err(Error::invariant(format!(
                    "listed leaf {l} has degree {}",
                    self.deg(l)
                )));
            }
        }
        Ok(())
    }

    /// Invariants of a state of the growth chain: a tree, no degree-two vertex,
    /// and the leaf list is exactly the degree-one vertices with length `n + 1`.
    pub fn check_chain_invariants(&self) -> Result<()> {
        self.check_structure()?;
        if self.leaf_order.len() != self.step_count + 1 {
            return Err(Error::invariant(format!(
                "{} leaves listed at step {}",
                self.leaf_order.len(),
                self.step_count
            )));
        }
        let mut leaves = 0;
        for v in self.vertices() {
            match self.deg(v) {
                1 => leaves += 1,
                2 => return Err(Error::invariant(format!("vertex {v} has degree 2"))),
                _ => {}
            }
        }
        if leaves != self.leaf_order.len() {
            return Err(Error::invariant(format!(
                "{leaves} degree-one vertices but {} listed leaves",
                self.leaf_order.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn y_tree(alpha: f64) -> GrowthTree {
        let mut t = GrowthTree::single_edge(alpha);
        t.split_edge(EdgeId(0));
        t
    }

    /// Star with four leaves: Y-tree plus a leaf on the center.
    pub fn star4(alpha: f64) -> GrowthTree {
        let mut t = y_tree(alpha);
        t.attach_leaf(VertexId(2));
        t
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_edge_degrees() {
        let t = GrowthTree::single_edge(1.5);
        assert_eq!(t.degree(VertexId(0)).unwrap(), 1);
        assert_eq!(t.degree(VertexId(1)).unwrap(), 1);
        t.check_chain_invariants().unwrap();
    }

    #[test]
    fn y_center_has_degree_three() {
        let t = y_tree(1.5);
        assert_eq!(t.leaf_order(), &[VertexId(0), VertexId(1), VertexId(3)]);
        assert_eq!(t.degree(VertexId(2)).unwrap(), 3);
        t.check_chain_invariants().unwrap();
    }

    #[test]
    fn star_center_has_degree_four() {
        let t = star4(1.5);
        assert_eq!(t.degree(VertexId(2)).unwrap(), 4);
        assert_eq!(t.step_count(), 3);
        t.check_chain_invariants().unwrap();
    }

    #[test]
    fn invalid_id_is_rejected() {
        let t = GrowthTree::single_edge(1.5);
        assert!(matches!(
            t.degree(VertexId(5)),
            Err(Error::InvalidVertex(5))
        ));
    }

    #[test]
    fn split_keeps_adjacency_consistent() {
        let mut t = star4(1.7);
        // Split every edge once; the slot bookkeeping must survive repeated splits.
        for e in 0..t.edge_count() {
            t.split_edge(EdgeId(e as u32));
        }
        t.check_chain_invariants().unwrap();
        for (u, v) in t.edges() {
            assert!(t.adj(u).contains(&v));
            assert!(t.adj(v).contains(&u));
        }
    }

    #[test]
    fn from_edges_rejects_cycle_and_duplicates() {
        assert!(GrowthTree::from_edges(1.5, 3, &[(0, 1), (1, 2), (2, 0)], &[]).is_err());
        assert!(GrowthTree::from_edges(1.5, 2, &[(0, 1), (1, 0)], &[]).is_err());
        assert!(GrowthTree::from_edges(1.5, 4, &[(0, 1), (2, 3), (1, 0)], &[]).is_err());
    }
}
