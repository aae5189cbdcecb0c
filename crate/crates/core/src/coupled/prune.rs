use super::{AcceptanceTable, CoupledChain};
use crate::error::{Error, Result};
use crate::rng::{RngStream, UNIFORMS};
use crate::tree::{covering_radius, hausdorff_distance, GrowthTree, VertexId};

/// The decision taken for one leaf `A_i`, `i >= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneDecision {
    pub leaf_index: usize,
    /// Where `A_i` meets the span of `A_0..A_{i-1}`.
    pub attach: VertexId,
    pub d: usize,
    pub d_prime: usize,
    pub u: f64,
    pub kept: bool,
}

/// Blue subtree produced by [`prune`].
#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub alpha_prime: f64,
    /// Blue membership per vertex of the input tree.
    pub blue: Vec<bool>,
    /// Degree of each vertex inside the blue subtree.
    pub blue_degree: Vec<u32>,
    /// Indices `i` of kept leaves `A_i`, increasing.
    pub kept_leaves: Vec<usize>,
    pub decisions: Vec<PruneDecision>,
}

impl PruneResult {
    pub fn blue_vertices(&self) -> Vec<VertexId> {
        self.blue
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(v, _)| VertexId::from(v))
            .collect()
    }

    /// Every blue vertex has blue degree at most three.
    pub fn is_binary(&self) -> bool {
        self.blue
            .iter()
            .zip(&self.blue_degree)
            .all(|(&b, &d)| !b || (1..=3).contains(&d))
    }

    /// `self` is contained in `other` as a vertex set.
    pub fn is_subset_of(&self, other: &PruneResult) -> bool {
        self.blue.len() == other.blue.len()
            && self.blue.iter().zip(&other.blue).all(|(&a, &b)| !a || b)
    }
}

/// Walks from `leaf` toward the root until `stop` holds; returns the visited
/// vertices before the stopping one, and the stopping vertex.
fn climb(
    parent: &[VertexId],
    leaf: VertexId,
    stop: impl Fn(VertexId) -> bool,
) -> (Vec<VertexId>, VertexId) {
    let mut path = Vec::new();
    let mut v = leaf;
    while !stop(v) {
        path.push(v);
        v = parent[v.index()];
    }
    (path, v)
}

/// Adds the path `path[0] - path[1] - ... - end` to a vertex set, updating degrees.
fn add_path(member: &mut [bool], degree: &mut [u32], path: &[VertexId], end: VertexId) {
    for (j, &v) in path.iter().enumerate() {
        member[v.index()] = true;
        degree[v.index()] += if j == 0 { 1 } else { 2 };
    }
    if !path.is_empty() {
        degree[end.index()] += 1;
    }
}

/// Rebuilds the blue subtree leaf by leaf from a finished tree.
///
/// Starts from the path between `A_0` and `A_1`. For `i = 2..=k`, `A_i` meets
/// the span of the earlier leaves at some vertex of degree `d` in that span
/// (degree-two vertices are kept, so a mid-edge attachment has `d = 2`), with
/// degree `d'` in the current blue subtree. The path to `A_i` is kept iff
/// `U_i <= p(d, d')`. One `U_i` is drawn per leaf, matching the coupled chain.
pub fn prune(
    tree: &GrowthTree,
    k: usize,
    table: &AcceptanceTable,
    u_stream: &mut RngStream,
) -> Result<PruneResult> {
    let n = tree.step_count();
    if k == 0 || k > n {
        return Err(Error::param(format!(
            "leaf prefix must lie in 1..={n}, got {k}"
        )));
    }
    if table.alpha() != tree.alpha() {
        return Err(Error::param(format!(
            "table alpha {} differs from tree alpha {}",
            table.alpha(),
            tree.alpha()
        )));
    }
    let leaves = tree.leaf_order();
    let root = leaves[0];
    let (parent, _) = tree.parents(root);
    let nv = tree.vertex_count();
    let mut in_span = vec![false; nv];
    let mut span_degree = vec![0u32; nv];
    let mut blue = vec![false; nv];
    let mut blue_degree = vec![0u32; nv];

    in_span[root.index()] = true;
    blue[root.index()] = true;
    let (path, end) = climb(&parent, leaves[1], |v| v == root);
    add_path(&mut in_span, &mut span_degree, &path, end);
    add_path(&mut blue, &mut blue_degree, &path, end);

    let mut kept_leaves = vec![0, 1];
    let mut decisions = Vec::with_capacity(k.saturating_sub(1));
    for (i, &leaf) in leaves.iter().enumerate().take(k + 1).skip(2) {
        let u = u_stream.acceptance_uniform();
        let (path, attach) = climb(&parent, leaf, |v| in_span[v.index()]);
        let d = span_degree[attach.index()] as usize;
        let d_prime = if blue[attach.index()] {
            blue_degree[attach.index()] as usize
        } else {
            0
        };
        let kept = u <= table.p(d, d_prime);
        add_path(&mut in_span, &mut span_degree, &path, attach);
        if kept {
            let (path, end) = climb(&parent, leaf, |v| blue[v.index()]);
            add_path(&mut blue, &mut blue_degree, &path, end);
            kept_leaves.push(i);
        }
        decisions.push(PruneDecision {
            leaf_index: i,
            attach,
            d,
            d_prime,
            u,
            kept,
        });
    }
    Ok(PruneResult {
        alpha_prime: table.alpha_prime(),
        blue,
        blue_degree,
        kept_leaves,
        decisions,
    })
}

/// Outcome of one coupling comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingComparison {
    pub seed: u64,
    pub vertices_equal: bool,
    pub leaves_equal: bool,
}

impl CouplingComparison {
    pub fn holds(&self) -> bool {
        self.vertices_equal && self.leaves_equal
    }
}

/// Runs the coupled chain to step `n`, then prunes the uncolored final tree
/// with a fresh copy of the same uniform stream and compares blue parts.
pub fn coupling_comparison(
    alpha: f64,
    alpha_prime: f64,
    n: usize,
    seed: u64,
) -> Result<CouplingComparison> {
    let mut chain = CoupledChain::new(alpha, alpha_prime, seed)?;
    chain.advance_to(n)?;
    let state = chain.into_state();
    let mut u = RngStream::new(seed, UNIFORMS);
    let pruned = prune(state.tree(), n, state.table(), &mut u)?;
    Ok(CouplingComparison {
        seed,
        vertices_equal: pruned.blue == state.vertex_blue(),
        leaves_equal: pruned.kept_leaves == state.blue_leaves(),
    })
}

pub fn coupling_equality_check(alpha: f64, alpha_prime: f64, n: usize, seed: u64) -> Result<bool> {
    Ok(coupling_comparison(alpha, alpha_prime, n, seed)?.holds())
}

/// Prunes with every `alpha'` in the increasing list, all reading the same
/// uniforms, and checks that larger `alpha'` gives a smaller blue subtree.
pub fn nested_prune(
    tree: &GrowthTree,
    k: usize,
    alpha_primes: &[f64],
    u_stream: &RngStream,
) -> Result<Vec<PruneResult>> {
    if alpha_primes.is_empty() {
        return Err(Error::param("nested prune needs at least one alpha'"));
    }
    if alpha_primes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("alpha' values must be strictly increasing"));
    }
    let mut out: Vec<PruneResult> = Vec::with_capacity(alpha_primes.len());
    for &ap in alpha_primes {
        let table = AcceptanceTable::new(tree.alpha(), ap)?;
        let result = prune(tree, k, &table, &mut u_stream.clone())?;
        if let Some(prev) = out.last() {
            if !result.is_subset_of(prev) {
                return Err(Error::invariant(format!(
                    "blue subtree for alpha' = {ap} is not inside the one for alpha' = {}",
                    prev.alpha_prime
                )));
            }
        }
        out.push(result);
    }
    Ok(out)
}

/// Both sides of the pruning Lipschitz bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub hausdorff: f64,
    pub radius: f64,
}

impl LipschitzReport {
    pub fn holds(&self) -> bool {
        self.hausdorff <= self.radius
    }
}

/// Hausdorff distance between the blue subtrees pruned at prefixes `k` and
/// `n` (the whole tree), against the covering radius of `A_0..A_k`.
pub fn lipschitz_bound_check(
    tree: &GrowthTree,
    k: usize,
    table: &AcceptanceTable,
    u_stream: &RngStream,
) -> Result<LipschitzReport> {
    let n = tree.step_count();
    let small = prune(tree, k, table, &mut u_stream.clone())?;
    let full = prune(tree, n, table, &mut u_stream.clone())?;
    let hausdorff = hausdorff_distance(tree, &small.blue_vertices(), &full.blue_vertices())?;
    let radius = covering_radius(tree, &tree.leaf_order()[..=k])?;
    Ok(LipschitzReport { hausdorff, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::grow;
    use crate::rng::SELECTION;
    use crate::tree::EdgeId;

    fn table(a: f64, b: f64) -> AcceptanceTable {
        AcceptanceTable::new(a, b).unwrap()
    }

    #[test]
    fn prefix_one_is_the_first_path() {
        let t = grow(1.5, 40, &mut RngStream::new(2, SELECTION)).unwrap();
        let r = prune(&t, 1, &table(1.5, 1.8), &mut RngStream::new(2, UNIFORMS)).unwrap();
        assert_eq!(r.kept_leaves, vec![0, 1]);
        let path = t.distance(t.leaf_order()[0], t.leaf_order()[1]).unwrap() as usize;
        assert_eq!(r.blue_vertices().len(), path + 1);
        assert!(r.decisions.is_empty());
    }

    #[test]
    fn mid_path_leaf_is_kept_at_alpha_prime_two() {
        // Y-tree: A_2 meets the path A_0 - A_1 at the middle vertex, d = d' = 2.
        let mut t = GrowthTree::single_edge(1.5);
        t.split_edge(EdgeId(0));
        let r = prune(&t, 2, &table(1.5, 2.0), &mut RngStream::new(0, UNIFORMS)).unwrap();
        assert_eq!(r.kept_leaves, vec![0, 1, 2]);
        assert_eq!((r.decisions[0].d, r.decisions[0].d_prime), (2, 2));
    }

    #[test]
    fn branch_point_leaf_is_rejected_at_alpha_prime_two() {
        // A_3 on the Y center: d = 3, d' = 3, p = 0.
        let mut t = GrowthTree::single_edge(1.5);
        t.split_edge(EdgeId(0));
        t.attach_leaf(VertexId(2));
        for seed in 0..20 {
            let r = prune(&t, 3, &table(1.5, 2.0), &mut RngStream::new(seed, UNIFORMS)).unwrap();
            assert_eq!(r.kept_leaves, vec![0, 1, 2]);
            assert_eq!((r.decisions[1].d, r.decisions[1].d_prime), (3, 3));
            assert!(r.is_binary());
        }
    }

    #[test]
    fn rejects_bad_prefix_and_alpha() {
        let t = GrowthTree::single_edge(1.5);
        let mut u = RngStream::new(0, UNIFORMS);
        assert!(prune(&t, 0, &table(1.5, 1.8), &mut u).is_err());
        assert!(prune(&t, 2, &table(1.5, 1.8), &mut u).is_err());
        assert!(prune(&t, 1, &table(1.4, 1.8), &mut u).is_err());
    }

    #[test]
    fn coupling_equality_small() {
        assert!(coupling_equality_check(1.5, 1.8, 2, 0).unwrap());
        for seed in 0..100 {
            assert!(
                coupling_equality_check(1.3, 1.6, 150, seed).unwrap(),
                "seed {seed}"
            );
            assert!(
                coupling_equality_check(1.5, 2.0, 150, seed).unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn prune_agrees_with_chain_decisions() {
        let mut chain = CoupledChain::new(1.4, 1.7, 9).unwrap();
        let mut records = Vec::new();
        for _ in 0..120 {
            records.push(chain.step().unwrap());
        }
        let s = chain.state();
        let r = prune(s.tree(), 121, s.table(), &mut RngStream::new(9, UNIFORMS)).unwrap();
        for (rec, dec) in records.iter().zip(&r.decisions) {
            assert_eq!(
                (rec.d, rec.d_prime, rec.blue),
                (dec.d, dec.d_prime, dec.kept)
            );
            assert_eq!(rec.u, dec.u);
        }
    }

    #[test]
    fn nesting_and_binary_innermost() {
        for seed in 0..40 {
            let t = grow(1.3, 300, &mut RngStream::new(seed, SELECTION)).unwrap();
            let u = RngStream::new(seed, UNIFORMS);
            let sets = nested_prune(&t, 300, &[1.5, 1.8, 2.0], &u).unwrap();
            assert_eq!(sets.len(), 3);
            assert!(sets[2].is_binary());
            let single = nested_prune(&t, 300, &[1.5], &u).unwrap();
            assert_eq!(single[0], sets[0]);
        }
        let t = GrowthTree::single_edge(1.3);
        assert!(nested_prune(&t, 1, &[1.8, 1.5], &RngStream::new(0, UNIFORMS)).is_err());
    }

    #[test]
    fn lipschitz_small() {
        let tb = table(1.5, 1.8);
        for seed in 0..30 {
            let t = grow(1.5, 120, &mut RngStream::new(seed, SELECTION)).unwrap();
            let u = RngStream::new(seed, UNIFORMS);
            let full = lipschitz_bound_check(&t, 120, &tb, &u).unwrap();
            assert_eq!(full.hausdorff, 0.0);
            for k in [1, 5, 30, 90] {
                assert!(lipschitz_bound_check(&t, k, &tb, &u).unwrap().holds());
            }
        }
    }
}
