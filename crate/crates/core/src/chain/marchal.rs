use std::collections::BTreeMap;

use rayon::prelude::*;

use super::WeightIndex;
use crate::error::{Error, Result};
use crate::rng::{replica_seed, RngStream, SELECTION};
use crate::tree::{enumerate_labeled_shapes, EdgeId, GrowthTree, LabeledShape, VertexId};

/// Steps between from-scratch recomputations of the total weight.
pub const DRIFT_CHECK_PERIOD: u32 = 1 << 16;
/// Relative tolerance of the total-weight identity `W = n*alpha - 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "alpha must lie in (1, 2], got {alpha}"
        )))
    }
}

/// A selectable item of the growth chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    Edge(EdgeId),
    Vertex(VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachKind {
    Edge,
    Vertex,
}

impl AttachKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttachKind::Edge => "edge",
            AttachKind::Vertex => "vertex",
        }
    }
}

/// One growth step: where leaf `A_step` went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachmentRecord {
    /// Step count after the attachment; the new leaf is `A_step`.
    pub step: usize,
    pub item: Item,
    pub kind: AttachKind,
    /// Degree of the attachment point before the step; 2 for a subdivided edge.
    pub degree_before: usize,
    pub new_leaf: VertexId,
    /// The subdivision vertex for edge steps.
    pub middle: Option<VertexId>,
}

impl AttachmentRecord {
    pub const CSV_HEADER: &'static str = "step,kind,degree_before,new_vertex_id";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.step,
            self.kind.as_str(),
            self.degree_before,
            self.new_leaf
        )
    }
}

/// Selection weights of a growth state: `alpha - 1` per edge and
/// `d - 1 - alpha` per vertex of degree `d >= 3`, kept in a prefix-sum index.
#[derive(Debug, Clone)]
pub struct SelectionIndex {
    alpha: f64,
    weights: WeightIndex,
    items: Vec<Item>,
    edge_slot: Vec<u32>,
    vertex_slot: Vec<u32>,
    steps_since_check: u32,
}

fn vertex_weight(alpha: f64, degree: usize) -> f64 {
    if degree >= 3 {
        degree as f64 - 1.0 - alpha
    } else {
        0.0
    }
}

impl SelectionIndex {
    pub fn for_tree(tree: &GrowthTree) -> Result<Self> {
        let alpha = tree.alpha();
        check_alpha(alpha)?;
        let cap = 2 * (tree.edge_count() + tree.vertex_count());
        let mut idx = SelectionIndex {
            alpha,
            weights: WeightIndex::with_capacity(cap),
            items: Vec::with_capacity(cap),
            edge_slot: Vec::with_capacity(cap),
            vertex_slot: Vec::with_capacity(cap),
            steps_since_check: 0,
        };
        for e in 0..tree.edge_count() {
            idx.push_edge(EdgeId(e as u32));
        }
        for v in tree.vertices() {
            idx.push_vertex(v, vertex_weight(alpha, tree.deg(v)));
        }
        Ok(idx)
    }

    fn push_edge(&mut self, e: EdgeId) {
        debug_assert_eq!(self.edge_slot.len(), e.index());
        let slot = self.weights.push(self.alpha - 1.0);
        self.items.push(Item::Edge(e));
        self.edge_slot.push(slot as u32);
    }

    fn push_vertex(&mut self, v: VertexId, w: f64) {
        debug_assert_eq!(self.vertex_slot.len(), v.index());
        let slot = self.weights.push(w);
        self.items.push(Item::Vertex(v));
        self.vertex_slot.push(slot as u32);
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn total(&self) -> f64 {
        self.weights.total()
    }

    pub fn weights(&self) -> &WeightIndex {
        &self.weights
    }

    pub fn item_weight(&self, item: Item) -> f64 {
        match item {
            Item::Edge(e) => self.weights.weight(self.edge_slot[e.index()] as usize),
            Item::Vertex(v) => self.weights.weight(self.vertex_slot[v.index()] as usize),
        }
    }

    /// Draws an item with probability proportional to its weight.
    pub fn select(&self, rng: &mut RngStream) -> Item {
        let u = rng.below(self.weights.total());
        self.items[self.weights.sample(u)]
    }

    /// Grows `tree` at `item` and updates the weights. Every
    /// [`DRIFT_CHECK_PERIOD`] steps the index is rebuilt and its total checked
    /// against `n*alpha - 1`.
    pub fn apply(&mut self, tree: &mut GrowthTree, item: Item) -> Result<AttachmentRecord> {
        let alpha = self.alpha;
        let record = match item {
            Item::Edge(e) => {
                let split = tree.split_edge(e);
                self.push_edge(split.lower_edge);
                self.push_edge(split.leaf_edge);
                self.push_vertex(split.middle, 2.0 - alpha);
                self.push_vertex(split.leaf, 0.0);
                AttachmentRecord {
                    step: tree.step_count(),
                    item,
                    kind: AttachKind::Edge,
                    degree_before: 2,
                    new_leaf: split.leaf,
                    middle: Some(split.middle),
                }
            }
            Item::Vertex(v) => {
                let degree_before = tree.deg(v);
                let attach = tree.attach_leaf(v);
                self.weights.add(self.vertex_slot[v.index()] as usize, 1.0);
                self.push_edge(attach.leaf_edge);
                self.push_vertex(attach.leaf, 0.0);
                AttachmentRecord {
                    step: tree.step_count(),
                    item,
                    kind: AttachKind::Vertex,
                    degree_before,
                    new_leaf: attach.leaf,
                    middle: None,
                }
            }
        };
        self.steps_since_check += 1;
        if self.steps_since_check >= DRIFT_CHECK_PERIOD {
            self.steps_since_check = 0;
            let total = self.weights.rebuild();
            check_total(total, tree.step_count(), alpha)?;
        }
        Ok(record)
    }
}

fn check_total(total: f64, n: usize, alpha: f64) -> Result<()> {
    let expect = n as f64 * alpha - 1.0;
    if ((total - expect) / expect).abs() > WEIGHT_TOLERANCE {
        return Err(Error::invariant(format!(
            "total weight {total} differs from n*alpha - 1 = {expect} at step {n}"
        )));
    }
    Ok(())
}

/// One step of Marchal's chain: pick an edge or branch vertex proportionally to
/// its weight and hang the next leaf there.
pub fn marchal_step(
    tree: &mut GrowthTree,
    index: &mut SelectionIndex,
    rng: &mut RngStream,
) -> Result<AttachmentRecord> {
    let item = index.select(rng);
    index.apply(tree, item)
}

/// A growth chain: the tree plus its selection index.
#[derive(Debug, Clone)]
pub struct MarchalChain {
    tree: GrowthTree,
    index: SelectionIndex,
}

impl MarchalChain {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let tree = GrowthTree::single_edge(alpha);
        let index = SelectionIndex::for_tree(&tree)?;
        Ok(MarchalChain { tree, index })
    }

    pub fn step(&mut self, rng: &mut RngStream) -> Result<AttachmentRecord> {
        marchal_step(&mut self.tree, &mut self.index, rng)
    }

    pub fn tree(&self) -> &GrowthTree {
        &self.tree
    }

    pub fn index(&self) -> &SelectionIndex {
        &self.index
    }

    pub fn into_tree(self) -> GrowthTree {
        self.tree
    }

    /// Runs until the step count reaches `n`.
    pub fn advance_to(&mut self, n: usize, rng: &mut RngStream) -> Result<()> {
        while self.tree.step_count() < n {
            self.step(rng)?;
        }
        Ok(())
    }
}

/// Marchal's tree after `n` steps (`n + 1` leaves).
pub fn grow(alpha: f64, n: usize, rng: &mut RngStream) -> Result<GrowthTree> {
    if n == 0 {
        return Err(Error::param("the chain starts at n = 1"));
    }
    let mut chain = MarchalChain::new(alpha)?;
    chain.advance_to(n, rng)?;
    Ok(chain.into_tree())
}

/// Total selection weight recomputed from the tree's degrees.
pub fn total_weight(tree: &GrowthTree) -> f64 {
    let alpha = tree.alpha();
    let edges = tree.edge_count() as f64 * (alpha - 1.0);
    let vertices: f64 = tree
        .vertices()
        .map(|v| vertex_weight(alpha, tree.deg(v)))
        .sum();
    edges + vertices
}

/// `ln p_k` with `p_1 = 1`, `p_2 = 0` and `p_k = |(alpha-1)...(alpha-k+2)|`.
pub fn log_degree_factor(alpha: f64, k: usize) -> f64 {
    match k {
        0 | 2 => f64::NEG_INFINITY,
        1 => 0.0,
        _ => (1..=k - 2).map(|j| (alpha - j as f64).abs().ln()).sum(),
    }
}

/// Exact probability that Marchal's chain produces `shape`.
pub fn tree_probability(shape: &LabeledShape, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let degrees = shape.degrees()?;
    if degrees.contains(&2) {
        return Err(Error::input(format!(
            "shape {shape} has a degree-two vertex"
        )));
    }
    let leaves = degrees.iter().filter(|&&d| d == 1).count();
    let n = leaves - 1;
    let mut log_p: f64 = degrees.iter().map(|&d| log_degree_factor(alpha, d)).sum();
    for i in 1..n {
        log_p -= (i as f64 * alpha - 1.0).ln();
    }
    Ok(log_p.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFrequency {
    pub shape: LabeledShape,
    pub exact: f64,
    pub count: u64,
    pub frequency: f64,
    /// Binomial z-score of the empirical frequency against `exact`.
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct DistributionReport {
    pub alpha: f64,
    pub num_leaves: usize,
    pub replicas: usize,
    pub rows: Vec<ShapeFrequency>,
    /// Sum of the exact probabilities over all enumerated shapes.
    pub normalization: f64,
}

impl DistributionReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn binomial_z(count: u64, replicas: usize, p: f64) -> f64 {
    let freq = count as f64 / replicas as f64;
    if p <= 0.0 || p >= 1.0 {
        return if (freq - p).abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (freq - p) / (p * (1.0 - p) / replicas as f64).sqrt()
}

/// Empirical shape frequencies of `grow(alpha, num_leaves - 1)` against the
/// exact law. Replica `r` uses the selection stream derived from `(seed, r)`.
pub fn distribution_check(
    alpha: f64,
    num_leaves: usize,
    replicas: usize,
    seed: u64,
) -> Result<DistributionReport> {
    check_alpha(alpha)?;
    if num_leaves > 5 {
        return Err(Error::param("distribution check supports at most 5 leaves"));
    }
    let shapes = enumerate_labeled_shapes(num_leaves)?;
    let mut counts: BTreeMap<LabeledShape, u64> = shapes.iter().map(|s| (s.clone(), 0)).collect();
    let drawn: Vec<LabeledShape> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(replica_seed(seed, r), SELECTION);
            let t = grow(alpha, num_leaves - 1, &mut rng)?;
            LabeledShape::from_tree(&t)
        })
        .collect::<Result<_>>()?;
    for s in drawn {
        *counts.get_mut(&s).ok_or_else(|| {
            Error::invariant(format!("grown shape {s} missing from enumeration"))
        })? += 1;
    }
    let mut rows = Vec::with_capacity(shapes.len());
    let mut normalization = 0.0;
    for (shape, count) in counts {
        let exact = tree_probability(&shape, alpha)?;
        normalization += exact;
        rows.push(ShapeFrequency {
            z: binomial_z(count, replicas, exact),
            frequency: count as f64 / replicas as f64,
            shape,
            exact,
            count,
        });
    }
    Ok(DistributionReport {
        alpha,
        num_leaves,
        replicas,
        rows,
        normalization,
    })
}
