use std::collections::VecDeque;

use crate::coupled::ColoredTree;
use crate::error::{Error, Result};
use crate::tree::{GrowthTree, VertexId};

/// Slack allowed on the total mass of a partition.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finite decreasing sequence of nonnegative masses with sum at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct MassPartition(Vec<f64>);

impl MassPartition {
    /// Sorts `masses` decreasingly and checks the constraints.
    pub fn new(mut masses: Vec<f64>) -> Result<Self> {
        if let Some(bad) = masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::input(format!(
                "mass {bad} is not a nonnegative real"
            )));
        }
        masses.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = masses.iter().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(Error::input(format!("masses sum to {total} > 1")));
        }
        Ok(MassPartition(masses))
    }

    pub fn masses(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|&&m| m > 0.0).count()
    }
}

/// A component above the threshold: its vertex closest to the root, the
/// measure it carries, and that measure as a fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub top: VertexId,
    pub count: usize,
    pub mass: f64,
}

/// Measure used to weigh components.
#[derive(Debug, Clone, Copy)]
pub enum FragMeasure<'a> {
    /// Leaves of the tree, root excluded, over the total leaf count.
    Leaves,
    /// Components of the blue subtree, each weighted by the ambient leaves
    /// projecting into it, over the total leaf count.
    Projected(&'a ColoredTree),
}

/// Component masses of `{v : height(v) > t}` for each threshold `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FragProfile {
    pub root: VertexId,
    pub scale: f64,
    /// Per threshold, fragments in decreasing mass order.
    pub rows: Vec<(f64, Vec<Fragment>)>,
}

impl FragProfile {
    pub const CSV_HEADER: &'static str = "t,fragment_rank,mass";

    pub fn partition(&self, row: usize) -> Result<MassPartition> {
        MassPartition::new(self.rows[row].1.iter().map(|f| f.mass).collect())
    }

    /// One line per fragment, ranks starting at 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (t, frags) in &self.rows {
            for (rank, f) in frags.iter().enumerate() {
                s.push_str(&format!("{t},{},{}\n", rank + 1, f.mass));
            }
        }
        s
    }

    /// Total mass is nonincreasing in `t`, and every fragment sits below a
    /// heavier fragment of the next smaller threshold (hence of all of them).
    pub fn check_refinement(&self, tree: &GrowthTree) -> Result<()> {
        let (parent, _) = tree.parents(self.root);
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| self.rows[a].0.total_cmp(&self.rows[b].0));
        let mut owner = vec![usize::MAX; tree.vertex_count()];
        for pair in order.windows(2) {
            let (t, coarse) = (self.rows[pair[0]].0, &self.rows[pair[0]].1);
            let fine = &self.rows[pair[1]].1;
            let total = |fs: &[Fragment]| fs.iter().map(|f| f.mass).sum::<f64>();
            if total(fine) > total(coarse) + MASS_TOLERANCE {
                return Err(Error::invariant(format!("mass grows after t = {t}")));
            }
            owner.iter_mut().for_each(|o| *o = usize::MAX);
            for (i, f) in coarse.iter().enumerate() {
                owner[f.top.index()] = i;
            }
            for f in fine {
                let mut v = f.top;
                while owner[v.index()] == usize::MAX && v != self.root {
                    v = parent[v.index()];
                }
                let o = owner[v.index()];
                if o == usize::MAX || coarse[o].mass + MASS_TOLERANCE < f.mass {
                    return Err(Error::invariant(format!(
                        "fragment at {} is not inside a heavier fragment at t = {t}",
                        f.top
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Nearest blue vertex of every vertex. Sources are seeded in id order and
/// neighbors visited in id order, so any tie goes to the blue vertex reached
/// first. Ties cannot actually occur because the blue set is connected.
pub fn projection(colored: &ColoredTree) -> Vec<VertexId> {
    let tree = colored.tree();
    let mut owner = vec![VertexId(u32::MAX); tree.vertex_count()];
    let mut queue = VecDeque::new();
    for v in tree.vertices().filter(|&v| colored.is_blue(v)) {
        owner[v.index()] = v;
        queue.push_back(v);
    }
    let mut nbrs: Vec<VertexId> = Vec::new();
    while let Some(v) = queue.pop_front() {
        nbrs.clear();
        nbrs.extend_from_slice(tree.adj(v));
        nbrs.sort_unstable();
        for &w in &nbrs {
            if owner[w.index()].0 == u32::MAX {
                owner[w.index()] = owner[v.index()];
                queue.push_back(w);
            }
        }
    }
    owner
}

/// Fraction of all leaves (`A_0` included) whose nearest blue vertex lies in
/// `component`, a connected set of blue vertices.
pub fn projected_mass(colored: &ColoredTree, component: &[VertexId]) -> Result<f64> {
    let tree = colored.tree();
    let mut inside = vec![false; tree.vertex_count()];
    for &v in component {
        tree.check_id(v)?;
        if !colored.is_blue(v) {
            return Err(Error::input(format!("vertex {v} is not blue")));
        }
        inside[v.index()] = true;
    }
    let Some(&start) = component.first() else {
        return Err(Error::input("empty component"));
    };
    // Connectivity inside the component.
    let mut seen = vec![false; tree.vertex_count()];
    let mut stack = vec![start];
    seen[start.index()] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for &w in tree.adj(v) {
            if inside[w.index()] && !seen[w.index()] {
                seen[w.index()] = true;
                reached += 1;
                stack.push(w);
            }
        }
    }
    if reached != inside.iter().filter(|&&b| b).count() {
        return Err(Error::input("component is not connected"));
    }
    let owner = projection(colored);
    let hits = tree
        .leaf_order()
        .iter()
        .filter(|l| inside[owner[l.index()].index()])
        .count();
    Ok(hits as f64 / tree.leaf_order().len() as f64)
}

/// Components of `{v : dist(root, v) / scale > t}` for each `t`, weighed by
/// `measure`. The root leaf never lies in a component; masses are divided by
/// the total number of leaves, so the whole tree at `t = 0` has mass `n/(n+1)`.
pub fn frag_profile(
    tree: &GrowthTree,
    root: VertexId,
    thresholds: &[f64],
    scale: f64,
    measure: FragMeasure<'_>,
) -> Result<FragProfile> {
    tree.check_id(root)?;
    if tree.vertex_count() > 1 && tree.deg(root) != 1 {
        return Err(Error::input(format!("root {root} is not a leaf")));
    }
    if !(scale > 0.0) {
        return Err(Error::param(format!("scale must be positive, got {scale}")));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::param(format!(
            "thresholds must be nonnegative, got {t}"
        )));
    }
    let (parent, bfs) = tree.parents(root);
    let depth = tree.bfs_distances(&[root]);
    let nv = tree.vertex_count();
    let (member, mut weight): (Vec<bool>, Vec<usize>) = match measure {
        FragMeasure::Leaves => {
            let w = tree
                .vertices()
                .map(|v| usize::from(v != root && tree.deg(v) == 1))
                .collect();
            (vec![true; nv], w)
        }
        FragMeasure::Projected(colored) => {
            if colored.tree().vertex_count() != nv || !colored.is_blue(root) {
                return Err(Error::input(
                    "projected measure needs the colored version of this tree, rooted blue",
                ));
            }
            let owner = projection(colored);
            let mut w = vec![0usize; nv];
            for &l in tree.leaf_order() {
                if l != root {
                    w[owner[l.index()].index()] += 1;
                }
            }
            (tree.vertices().map(|v| colored.is_blue(v)).collect(), w)
        }
    };
    // Subtree sums, children before parents.
    for &v in bfs.iter().rev() {
        if v != root && member[v.index()] {
            let p = parent[v.index()];
            weight[p.index()] += weight[v.index()];
        }
    }
    let total_leaves = tree.leaf_order().len() as f64;
    let max_depth = bfs.iter().map(|v| depth[v.index()]).max().unwrap_or(0);
    let mut by_depth: Vec<Vec<VertexId>> = vec![Vec::new(); max_depth as usize + 1];
    for &v in &bfs {
        if member[v.index()] {
            by_depth[depth[v.index()] as usize].push(v);
        }
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        // Smallest integer depth D with D / scale > t.
        let d = (t * scale).floor() as u64 + 1;
        let mut frags: Vec<Fragment> = by_depth
            .get(d as usize)
            .map(|layer| {
                layer
                    .iter()
                    .filter(|v| weight[v.index()] > 0)
                    .map(|&v| Fragment {
                        top: v,
                        count: weight[v.index()],
                        mass: weight[v.index()] as f64 / total_leaves,
                    })
                    .collect()
            })
            .unwrap_or_default();
        frags.sort_by(|a, b| b.count.cmp(&a.count).then(a.top.cmp(&b.top)));
        rows.push((t, frags));
    }
    Ok(FragProfile { root, scale, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::grow;
    use crate::coupled::{AcceptanceTable, CoupledChain};
    use crate::rng::{RngStream, SELECTION};
    use crate::tree::EdgeId;

    fn y() -> GrowthTree {
        let mut t = GrowthTree::single_edge(1.5);
        t.split_edge(EdgeId(0));
        t
    }

    #[test]
    fn partition_sorts_and_validates() {
        let p = MassPartition::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(p.masses(), &[0.5, 0.3, 0.2]);
        assert!(MassPartition::new(vec![0.6, 0.5]).is_err());
        assert!(MassPartition::new(vec![-0.1]).is_err());
    }

    #[test]
    fn y_tree_profile() {
        // Root A_0 at depth 0, center at 1, A_1 and A_2 at 2.
        let t = y();
        let p = frag_profile(
            &t,
            VertexId(0),
            &[0.0, 0.5, 1.0, 1.5, 2.0],
            1.0,
            FragMeasure::Leaves,
        )
        .unwrap();
        let masses: Vec<Vec<f64>> = p
            .rows
            .iter()
            .map(|r| r.1.iter().map(|f| f.mass).collect())
            .collect();
        let third = 1.0 / 3.0;
        assert_eq!(masses[0], vec![2.0 * third]);
        assert_eq!(masses[1], vec![2.0 * third]);
        assert_eq!(masses[2], vec![third, third]);
        assert_eq!(masses[3], vec![third, third]);
        assert!(masses[4].is_empty());
        p.check_refinement(&t).unwrap();
        assert_eq!(p.to_csv(), format!("t,fragment_rank,mass\n0,1,{0}\n0.5,1,{0}\n1,1,{1}\n1,2,{1}\n1.5,1,{1}\n1.5,2,{1}\n", 2.0 * third, third));
    }

    #[test]
    fn brute_force_components() {
        // Independent oracle: delete low vertices, flood-fill what is left.
        for seed in 0..10 {
            let t = grow(1.4, 80, &mut RngStream::new(seed, SELECTION)).unwrap();
            let root = t.leaf_order()[0];
            let depth = t.bfs_distances(&[root]);
            let scale = 2.5;
            let ts = [0.0, 0.7, 1.3, 2.0, 3.1];
            let p = frag_profile(&t, root, &ts, scale, FragMeasure::Leaves).unwrap();
            for (row, &thr) in ts.iter().enumerate() {
                let alive: Vec<bool> = t
                    .vertices()
                    .map(|v| f64::from(depth[v.index()]) / scale > thr)
                    .collect();
                let mut seen = vec![false; t.vertex_count()];
                let mut masses = Vec::new();
                for s in t.vertices().filter(|v| alive[v.index()]) {
                    if seen[s.index()] {
                        continue;
                    }
                    seen[s.index()] = true;
                    let mut stack = vec![s];
                    let mut leaves = 0;
                    while let Some(v) = stack.pop() {
                        if t.deg(v) == 1 {
                            leaves += 1;
                        }
                        for &w in t.adj(v) {
                            if alive[w.index()] && !seen[w.index()] {
                                seen[w.index()] = true;
                                stack.push(w);
                            }
                        }
                    }
                    masses.push(leaves as f64 / 81.0);
                }
                let expect = MassPartition::new(masses).unwrap();
                assert_eq!(p.partition(row).unwrap(), expect);
            }
            assert_eq!(p.partition(0).unwrap().total(), 80.0 / 81.0);
            p.check_refinement(&t).unwrap();
        }
    }

    #[test]
    fn all_blue_projection_is_identity() {
        let mut c = CoupledChain::new(1.5, 1.8, 0).unwrap();
        c.advance_to(2).unwrap();
        let s = c.state();
        assert!(s.vertex_blue().iter().all(|&b| b));
        let all = s.blue_vertices();
        assert_eq!(projected_mass(s, &all).unwrap(), 1.0);
        let leaves =
            frag_profile(s.tree(), VertexId(0), &[0.0, 1.0], 1.0, FragMeasure::Leaves).unwrap();
        let proj = frag_profile(
            s.tree(),
            VertexId(0),
            &[0.0, 1.0],
            1.0,
            FragMeasure::Projected(s),
        )
        .unwrap();
        assert_eq!(leaves, proj);
    }

    #[test]
    fn hand_counted_projection() {
        // Blue part: A_0 - c - k - A_1 plus A_6 on k (c = 2, k = 8). A red
        // branch at c carries m = 5 with leaves A_3, A_4, A_5; A_2 and A_7 are
        // red leaves on c and k.
        let table = AcceptanceTable::new(1.5, 1.8).unwrap();
        let mut t = GrowthTree::single_edge(1.5);
        t.split_edge(EdgeId(0)); // c = 2, A_2 = 3
        t.attach_leaf(VertexId(2)); // A_3 = 4
        t.split_edge(EdgeId(3)); // m = 5 on {2,4}, A_4 = 6
        t.attach_leaf(VertexId(5)); // A_5 = 7
        t.split_edge(EdgeId(1)); // k = 8 on {2,1}, A_6 = 9
        t.attach_leaf(VertexId(8)); // A_7 = 10
                                    // Blue: A_0, c, k, A_1, A_6 and their edges; everything else red.
        let edge_blue = (0..t.edge_count())
            .map(|e| {
                let (u, v) = t.edge(EdgeId(e as u32)).unwrap();
                let blue = |x: VertexId| [0, 1, 2, 8, 9].contains(&x.0);
                blue(u) && blue(v)
            })
            .collect();
        let vertex_blue = t
            .vertices()
            .map(|v| [0, 1, 2, 8, 9].contains(&v.0))
            .collect();
        let s = ColoredTree::from_parts(t, table, edge_blue, vertex_blue).unwrap();
        // Brute-force nearest blue vertex by distances.
        let blue = s.blue_vertices();
        let owner = projection(&s);
        for &l in s.tree().leaf_order() {
            let d = s.tree().bfs_distances(&[l]);
            let best = blue.iter().min_by_key(|b| d[b.index()]).unwrap();
            assert_eq!(owner[l.index()], *best);
        }
        // Leaves: A_0 -> 0, A_1 -> 1, A_2, A_3, A_4, A_5 -> c, A_6 -> 9, A_7 -> k.
        assert_eq!(projected_mass(&s, &[VertexId(2)]).unwrap(), 4.0 / 8.0);
        assert_eq!(
            projected_mass(&s, &[VertexId(8), VertexId(9)]).unwrap(),
            2.0 / 8.0
        );
        assert_eq!(projected_mass(&s, &blue).unwrap(), 1.0);
        assert!(projected_mass(&s, &[VertexId(0), VertexId(1)]).is_err());
        assert!(projected_mass(&s, &[VertexId(5)]).is_err());
        // Projected profile at t = 0 carries everything but A_0.
        let p = frag_profile(
            s.tree(),
            VertexId(0),
            &[0.0, 1.0],
            1.0,
            FragMeasure::Projected(&s),
        )
        .unwrap();
        assert_eq!(p.partition(0).unwrap().total(), 7.0 / 8.0);
        // Above depth 1 only k's side is left: A_1, A_6 and A_7.
        assert_eq!(p.partition(1).unwrap().masses(), &[3.0 / 8.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = y();
        assert!(frag_profile(&t, VertexId(2), &[0.0], 1.0, FragMeasure::Leaves).is_err());
        assert!(frag_profile(&t, VertexId(0), &[-1.0], 1.0, FragMeasure::Leaves).is_err());
        assert!(frag_profile(&t, VertexId(0), &[0.0], 0.0, FragMeasure::Leaves).is_err());
    }
}
