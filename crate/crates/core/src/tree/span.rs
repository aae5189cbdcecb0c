use std::collections::VecDeque;

use super::{GrowthTree, VertexId};
use crate::error::{Error, Result};

/// A subtree re-indexed into its own arena, with the map back to the host tree.
#[derive(Debug, Clone)]
pub struct Subtree {
    pub tree: GrowthTree,
    /// `to_original[i]` is the host id of subtree vertex `i`.
    pub to_original: Vec<VertexId>,
}

impl Subtree {
    pub fn original_vertices(&self) -> Vec<VertexId> {
        let mut v = self.to_original.clone();
        v.sort();
        v
    }
}

/// Builds the subtree induced by `keep` (which must be connected), numbering
/// vertices in host-id order. `leaves` become the ordered leaf list.
pub(crate) fn induced_subtree(
    host: &GrowthTree,
    keep: &[bool],
    leaves: &[VertexId],
) -> Result<Subtree> {
    let mut to_new = vec![u32::MAX; host.vertex_count()];
    let mut to_original = Vec::new();
    for v in host.vertices() {
        if keep[v.index()] {
            to_new[v.index()] = to_original.len() as u32;
            to_original.push(v);
        }
    }
    let mut edges = Vec::new();
    for (u, v) in host.edges() {
        if keep[u.index()] && keep[v.index()] {
            edges.push((to_new[u.index()] as usize, to_new[v.index()] as usize));
        }
    }
    let leaf_order: Vec<usize> = leaves.iter().map(|l| to_new[l.index()] as usize).collect();
    let tree = GrowthTree::from_edges(host.alpha(), to_original.len(), &edges, &leaf_order)?;
    Ok(Subtree { tree, to_original })
}

/// Union of the geodesics between the given leaves. Degree-two vertices are
/// kept, so attachment points in the middle of a host path stay visible.
pub fn span(tree: &GrowthTree, leaves: &[VertexId]) -> Result<Subtree> {
    let Some(&first) = leaves.first() else {
        return Err(Error::input("span of an empty leaf list"));
    };
    let mut seen = vec![false; tree.vertex_count()];
    for &l in leaves {
        tree.check_id(l)?;
        if tree.vertex_count() > 1 && tree.deg(l) != 1 {
            return Err(Error::input(format!("vertex {l} is not a leaf")));
        }
        if std::mem::replace(&mut seen[l.index()], true) {
            return Err(Error::input(format!("leaf {l} listed twice")));
        }
    }
    let (parent, _) = tree.parents(first);
    let mut keep = vec![false; tree.vertex_count()];
    keep[first.index()] = true;
    for &l in &leaves[1..] {
        let mut v = l;
        while !keep[v.index()] {
            keep[v.index()] = true;
            v = parent[v.index()];
        }
    }
    induced_subtree(tree, &keep, leaves)
}

/// Where the geodesic from `x` first meets the connected vertex set `subtree`,
/// and the degree of that vertex inside `subtree`.
pub fn attachment_point(
    tree: &GrowthTree,
    subtree: &[VertexId],
    x: VertexId,
) -> Result<(VertexId, usize)> {
    tree.check_id(x)?;
    let mut inside = vec![false; tree.vertex_count()];
    for &v in subtree {
        tree.check_id(v)?;
        inside[v.index()] = true;
    }
    let Some(&start) = subtree.first() else {
        return Err(Error::input("empty subtree"));
    };
    if inside[x.index()] {
        return Err(Error::input(format!(
            "vertex {x} already lies in the subtree"
        )));
    }
    // Connectivity of the subtree itself.
    let mut reached = vec![false; tree.vertex_count()];
    let mut stack = vec![start];
    reached[start.index()] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in tree.adj(v) {
            if inside[w.index()] && !reached[w.index()] {
                reached[w.index()] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    let distinct = inside.iter().filter(|&&b| b).count();
    if count != distinct {
        return Err(Error::input("subtree vertex set is disconnected"));
    }
    // BFS from x; in a tree the first subtree vertex found is the unique entry point.
    let mut visited = vec![false; tree.vertex_count()];
    let mut queue = VecDeque::from([x]);
    visited[x.index()] = true;
    while let Some(v) = queue.pop_front() {
        for &w in tree.adj(v) {
            if inside[w.index()] {
                let d = tree.adj(w).iter().filter(|u| inside[u.index()]).count();
                return Ok((w, d));
            }
            if !visited[w.index()] {
                visited[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    Err(Error::input("subtree is not reachable from x"))
}

/// Suppresses every degree-two vertex, merging its two edges into one.
/// The leaf list is carried over; vertex ids are renumbered.
pub fn contract_degree_two(tree: &GrowthTree) -> Result<GrowthTree> {
    let n = tree.vertex_count();
    if n <= 2 {
        return Ok(tree.clone());
    }
    let keep: Vec<bool> = tree.vertices().map(|v| tree.deg(v) != 2).collect();
    let mut to_new = vec![usize::MAX; n];
    let mut count = 0;
    for v in 0..n {
        if keep[v] {
            to_new[v] = count;
            count += 1;
        }
    }
    let mut edges = Vec::new();
    for v in tree.vertices().filter(|v| keep[v.index()]) {
        for &first in tree.adj(v) {
            // Walk through the chain of degree-two vertices.
            let mut prev = v;
            let mut cur = first;
            while !keep[cur.index()] {
                let next = tree.adj(cur).iter().copied().find(|&w| w != prev).unwrap();
                prev = cur;
                cur = next;
            }
            if v < cur {
                edges.push((to_new[v.index()], to_new[cur.index()]));
            }
        }
    }
    let leaf_order: Vec<usize> = tree
        .leaf_order()
        .iter()
        .map(|l| to_new[l.index()])
        .collect();
    let mut out = GrowthTree::from_edges(tree.alpha(), count, &edges, &leaf_order)?;
    out.step_count = tree.step_count();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::{star4, y_tree};
    use crate::tree::{EdgeId, LabeledShape};

    #[test]
    fn span_of_two_leaves_is_their_path() {
        let mut t = star4(1.5);
        t.split_edge(EdgeId(0));
        let a0 = t.leaf(0).unwrap();
        let a1 = t.leaf(1).unwrap();
        let s = span(&t, &[a0, a1]).unwrap();
        let path_len = t.distance(a0, a1).unwrap() as usize;
        assert_eq!(s.tree.vertex_count(), path_len + 1);
        assert_eq!(s.tree.edge_count(), path_len);
        // Interior path vertices keep degree two.
        let twos = s.tree.vertices().filter(|&v| s.tree.deg(v) == 2).count();
        assert_eq!(twos, path_len - 1);
    }

    #[test]
    fn span_of_all_leaves_is_whole_tree() {
        let t = star4(1.4);
        let s = span(&t, t.leaf_order()).unwrap();
        assert_eq!(s.tree.vertex_count(), t.vertex_count());
        assert_eq!(s.tree.edge_count(), t.edge_count());
    }

    #[test]
    fn star_span_of_three_leaves_is_y() {
        let t = star4(1.5);
        let s = span(&t, &t.leaf_order()[..3]).unwrap();
        assert_eq!(s.tree.vertex_count(), 4);
        let center = s
            .to_original
            .iter()
            .position(|&v| v == VertexId(2))
            .unwrap();
        assert_eq!(s.tree.deg(VertexId::from(center)), 3);
    }

    #[test]
    fn span_rejects_internal_vertex() {
        let t = y_tree(1.5);
        assert!(span(&t, &[VertexId(0), VertexId(2)]).is_err());
        assert!(span(&t, &[VertexId(0), VertexId(0)]).is_err());
    }

    #[test]
    fn attachment_examples() {
        let t = star4(1.5);
        // x adjacent to a subtree leaf: subtree A_0 - center, x = A_1.
        assert_eq!(
            attachment_point(&t, &[VertexId(0), VertexId(2)], VertexId(1)).unwrap(),
            (VertexId(2), 1)
        );
        // Path A_0 - center - A_1, x = A_2 -> (center, 2).
        let path = [VertexId(0), VertexId(2), VertexId(1)];
        assert_eq!(
            attachment_point(&t, &path, VertexId(3)).unwrap(),
            (VertexId(2), 2)
        );
        // Y through the center, x = the fourth leaf -> (center, 3).
        let y = [VertexId(0), VertexId(2), VertexId(1), VertexId(3)];
        assert_eq!(
            attachment_point(&t, &y, VertexId(4)).unwrap(),
            (VertexId(2), 3)
        );
        // Disconnected set.
        assert!(attachment_point(&t, &[VertexId(0), VertexId(1)], VertexId(3)).is_err());
    }

    #[test]
    fn contraction_commutes_with_span() {
        let mut t = star4(1.5);
        t.split_edge(EdgeId(1));
        t.split_edge(EdgeId(3));
        t.attach_leaf(VertexId(2));
        let leaves = &t.leaf_order()[..4];
        let spanned = span(&t, leaves).unwrap().tree;
        let a = LabeledShape::from_tree(&contract_degree_two(&spanned).unwrap()).unwrap();
        let contracted = contract_degree_two(&spanned).unwrap();
        let all: Vec<_> = contracted.leaf_order().to_vec();
        let b = LabeledShape::from_tree(&span(&contracted, &all).unwrap().tree).unwrap();
        assert_eq!(a, b);
        contracted.check_structure().unwrap();
        assert!(contracted.vertices().all(|v| contracted.deg(v) != 2));
    }
}
