use std::collections::BTreeMap;

use rayon::prelude::*;

use super::AcceptanceTable;
use crate::chain::{
    binomial_z, total_weight, tree_probability, AttachmentRecord, DistributionReport, Item,
    SelectionIndex, ShapeFrequency,
};
use crate::error::{Error, Result};
use crate::rng::{replica_seed, RngStream, SELECTION, UNIFORMS};
use crate::tree::{
    contract_degree_two, enumerate_labeled_shapes, span, Color, GrowthTree, LabeledShape,
    TreeDocument, VertexId,
};

/// Tolerance of the blue-weight identity and of the two-way blue step probability.
pub const BLUE_TOLERANCE: f64 = 1e-9;

/// A growth-chain state whose edges and vertices are colored blue or red.
/// The blue part is the embedded `alpha'`-tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredTree {
    tree: GrowthTree,
    table: AcceptanceTable,
    edge_blue: Vec<bool>,
    vertex_blue: Vec<bool>,
    blue_degree: Vec<u32>,
    /// Indices `i` of the blue leaves `A_i`, increasing.
    blue_leaves: Vec<usize>,
    blue_edges: usize,
}

impl ColoredTree {
    /// The all-blue single edge.
    pub fn new(table: AcceptanceTable) -> Self {
        ColoredTree {
            tree: GrowthTree::single_edge(table.alpha()),
            table,
            edge_blue: vec![true],
            vertex_blue: vec![true, true],
            blue_degree: vec![1, 1],
            blue_leaves: vec![0, 1],
            blue_edges: 1,
        }
    }

    /// Colors an existing tree; recomputes blue degrees and blue leaves and
    /// checks the coloring invariants.
    pub fn from_parts(
        tree: GrowthTree,
        table: AcceptanceTable,
        edge_blue: Vec<bool>,
        vertex_blue: Vec<bool>,
    ) -> Result<Self> {
        if edge_blue.len() != tree.edge_count() || vertex_blue.len() != tree.vertex_count() {
            return Err(Error::input("color vectors do not match the tree"));
        }
        let mut blue_degree = vec![0u32; tree.vertex_count()];
        let mut blue_edges = 0;
        for ((u, v), &b) in tree.edges().zip(&edge_blue) {
            if b {
                blue_degree[u.index()] += 1;
                blue_degree[v.index()] += 1;
                blue_edges += 1;
            }
        }
        let blue_leaves = tree
            .leaf_order()
            .iter()
            .enumerate()
            .filter(|(_, l)| vertex_blue[l.index()])
            .map(|(i, _)| i)
            .collect();
        let state = ColoredTree {
            tree,
            table,
            edge_blue,
            vertex_blue,
            blue_degree,
            blue_leaves,
            blue_edges,
        };
        state.check_coloring()?;
        Ok(state)
    }

    pub fn tree(&self) -> &GrowthTree {
        &self.tree
    }

    pub fn table(&self) -> &AcceptanceTable {
        &self.table
    }

    pub fn is_blue(&self, v: VertexId) -> bool {
        self.vertex_blue[v.index()]
    }

    pub fn vertex_blue(&self) -> &[bool] {
        &self.vertex_blue
    }

    pub fn edge_blue(&self) -> &[bool] {
        &self.edge_blue
    }

    pub fn blue_degree(&self, v: VertexId) -> usize {
        self.blue_degree[v.index()] as usize
    }

    pub fn blue_leaves(&self) -> &[usize] {
        &self.blue_leaves
    }

    pub fn blue_vertices(&self) -> Vec<VertexId> {
        self.tree.vertices().filter(|v| self.is_blue(*v)).collect()
    }

    pub fn blue_edge_count(&self) -> usize {
        self.blue_edges
    }

    /// `L`: number of blue leaves minus one.
    pub fn blue_leaf_count(&self) -> usize {
        self.blue_leaves.len() - 1
    }

    /// Blue edges form a connected subtree through `A_0` and `A_1`; blue edges
    /// have blue endpoints; blue vertices touch a blue edge.
    pub fn check_coloring(&self) -> Result<()> {
        let t = &self.tree;
        for &l in t.leaf_order().iter().take(2) {
            if !self.vertex_blue[l.index()] || self.blue_degree[l.index()] != 1 {
                return Err(Error::invariant("A_0 and A_1 must be blue leaves"));
            }
        }
        for ((u, v), &b) in t.edges().zip(&self.edge_blue) {
            if b && !(self.vertex_blue[u.index()] && self.vertex_blue[v.index()]) {
                return Err(Error::invariant(format!(
                    "blue edge [{u}, {v}] has a red endpoint"
                )));
            }
        }
        let blue_count = self.vertex_blue.iter().filter(|&&b| b).count();
        for v in t.vertices() {
            if self.vertex_blue[v.index()] && self.blue_degree[v.index()] == 0 {
                return Err(Error::invariant(format!(
                    "blue vertex {v} has no blue edge"
                )));
            }
        }
        if blue_count != self.blue_edges + 1 {
            return Err(Error::invariant("blue edges do not form a tree"));
        }
        // Connectivity along blue edges from A_0.
        let start = t.leaf_order()[0];
        let mut seen = vec![false; t.vertex_count()];
        let mut stack = vec![start];
        seen[start.index()] = true;
        let mut reached = 1;
        let mut blue_adj: Vec<Vec<VertexId>> = vec![Vec::new(); t.vertex_count()];
        for ((u, v), &b) in t.edges().zip(&self.edge_blue) {
            if b {
                blue_adj[u.index()].push(v);
                blue_adj[v.index()].push(u);
            }
        }
        while let Some(v) = stack.pop() {
            for &w in &blue_adj[v.index()] {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        if reached != blue_count {
            return Err(Error::invariant("blue subtree is disconnected"));
        }
        Ok(())
    }

    /// Both sides of the blue-weight identity
    /// `(alpha'-1) #blue edges + sum over blue d' >= 3 of (d'-1-alpha') = L alpha' - 1`,
    /// recomputed from the colors.
    pub fn blue_weight_identity(&self) -> (f64, f64) {
        let b = self.table.alpha_prime();
        let edges = self.edge_blue.iter().filter(|&&x| x).count() as f64;
        let mut lhs = (b - 1.0) * edges;
        for (v, &blue) in self.vertex_blue.iter().enumerate() {
            let dp = self.blue_degree[v];
            if blue && dp >= 3 {
                lhs += dp as f64 - 1.0 - b;
            }
        }
        let rhs = self.blue_leaf_count() as f64 * b - 1.0;
        (lhs, rhs)
    }

    pub fn check_blue_weight_identity(&self) -> Result<()> {
        let (lhs, rhs) = self.blue_weight_identity();
        if (lhs - rhs).abs() > BLUE_TOLERANCE * rhs.abs().max(1.0) {
            return Err(Error::invariant(format!(
                "blue weight {lhs} differs from L*alpha' - 1 = {rhs} at step {}",
                self.tree.step_count()
            )));
        }
        Ok(())
    }

    pub fn to_document(&self) -> TreeDocument {
        let mut doc = TreeDocument::from_tree(&self.tree);
        doc.alpha_prime = Some(format!("{}", self.table.alpha_prime()));
        let color = |b: bool| if b { Color::Blue } else { Color::Red };
        doc.edge_colors = Some(
            self.edge_blue
                .iter()
                .enumerate()
                .map(|(i, &b)| (i, color(b)))
                .collect(),
        );
        doc.vertex_colors = Some(
            self.vertex_blue
                .iter()
                .enumerate()
                .map(|(i, &b)| (i, color(b)))
                .collect(),
        );
        doc
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let tree = doc.to_tree()?;
        let alpha_prime = doc
            .alpha_prime
            .as_deref()
            .ok_or_else(|| Error::input("colored tree document needs `alpha_prime`"))
            .and_then(|s| crate::tree::parse_decimal("alpha_prime", s))?;
        let table = AcceptanceTable::new(tree.alpha(), alpha_prime)?;
        let read =
            |map: &Option<BTreeMap<usize, Color>>, len: usize, what: &str| -> Result<Vec<bool>> {
                let map = map
                    .as_ref()
                    .ok_or_else(|| Error::input(format!("colored tree document needs `{what}`")))?;
                let mut out = vec![false; len];
                for (&id, &c) in map {
                    if id >= len {
                        return Err(Error::input(format!("{what}: id {id} out of range")));
                    }
                    out[id] = c == Color::Blue;
                }
                if map.len() != len {
                    return Err(Error::input(format!("{what}: every id needs a color")));
                }
                Ok(out)
            };
        let edge_blue = read(&doc.edge_colors, tree.edge_count(), "edge_colors")?;
        let vertex_blue = read(&doc.vertex_colors, tree.vertex_count(), "vertex_colors")?;
        ColoredTree::from_parts(tree, table, edge_blue, vertex_blue)
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&TreeDocument::from_json(text)?)
    }
}

/// One coupled step: where the leaf went, the uniform consumed, and its color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledRecord {
    pub attachment: AttachmentRecord,
    pub u: f64,
    /// Full degree of a selected vertex (2 for an edge).
    pub d: usize,
    /// Blue degree of a selected vertex, 0 when red (2 or 0 for a blue or red edge).
    pub d_prime: usize,
    pub blue: bool,
}

/// One step of the two-color chain. `U_i` is drawn from `u_stream` for every
/// leaf index, whether or not a decision is needed.
pub fn coupled_step(
    state: &mut ColoredTree,
    index: &mut SelectionIndex,
    u_stream: &mut RngStream,
    selection: &mut RngStream,
) -> Result<CoupledRecord> {
    let u = u_stream.acceptance_uniform();
    let item = index.select(selection);
    let (d, d_prime, blue) = match item {
        Item::Edge(e) => {
            let b = state.edge_blue[e.index()];
            (2, if b { 2 } else { 0 }, b)
        }
        Item::Vertex(v) => {
            let d = state.tree.deg(v);
            let dp = if state.vertex_blue[v.index()] {
                state.blue_degree[v.index()] as usize
            } else {
                0
            };
            (d, dp, u <= state.table.p(d, dp))
        }
    };
    let attachment = index.apply(&mut state.tree, item)?;
    let leaf = attachment.new_leaf;
    match item {
        Item::Edge(_) => {
            let middle = attachment
                .middle
                .expect("edge steps create a middle vertex");
            state.edge_blue.extend_from_slice(&[blue, blue]);
            state.vertex_blue.extend_from_slice(&[blue, blue]);
            debug_assert_eq!(state.vertex_blue.len(), leaf.index() + 1);
            debug_assert_eq!(middle.index() + 1, leaf.index());
            if blue {
                state.blue_degree.extend_from_slice(&[3, 1]);
                state.blue_edges += 2;
            } else {
                state.blue_degree.extend_from_slice(&[0, 0]);
            }
        }
        Item::Vertex(v) => {
            state.edge_blue.push(blue);
            state.vertex_blue.push(blue);
            if blue {
                state.blue_degree[v.index()] += 1;
                state.blue_degree.push(1);
                state.blue_edges += 1;
            } else {
                state.blue_degree.push(0);
            }
        }
    }
    if blue {
        state.blue_leaves.push(attachment.step);
    }
    Ok(CoupledRecord {
        attachment,
        u,
        d,
        d_prime,
        blue,
    })
}

/// Probability that the next leaf is blue, computed from the leaf-count
/// transition and, independently, by summing blue item weights times their
/// acceptance probabilities. Errors if the two disagree.
pub fn blue_step_probability(state: &ColoredTree) -> Result<f64> {
    let a = state.table.alpha();
    let b = state.table.alpha_prime();
    let n = state.tree.step_count() as f64;
    let l = state.blue_leaf_count() as f64;
    let formula = (l * b - 1.0) * (a - 1.0) / ((b - 1.0) * (n * a - 1.0));

    let t = &state.tree;
    let mut blue_weight = state.edge_blue.iter().filter(|&&x| x).count() as f64 * (a - 1.0);
    for v in t.vertices() {
        let d = t.deg(v);
        if state.vertex_blue[v.index()] && d >= 3 {
            let dp = state.blue_degree[v.index()] as usize;
            blue_weight += (d as f64 - 1.0 - a) * state.table.probability(d, dp)?;
        }
    }
    let direct = blue_weight / total_weight(t);
    if (formula - direct).abs() > BLUE_TOLERANCE * formula.abs().max(1e-300) {
        return Err(Error::invariant(format!(
            "blue step probability {formula} (transition) vs {direct} (direct) at step {}",
            t.step_count()
        )));
    }
    Ok(formula)
}

/// The coupled chain: colored state, selection index and both random streams.
#[derive(Debug, Clone)]
pub struct CoupledChain {
    state: ColoredTree,
    index: SelectionIndex,
    uniforms: RngStream,
    selection: RngStream,
}

impl CoupledChain {
    /// Streams are keyed by `seed` with the uniform and selection labels.
    pub fn new(alpha: f64, alpha_prime: f64, seed: u64) -> Result<Self> {
        let table = AcceptanceTable::new(alpha, alpha_prime)?;
        let state = ColoredTree::new(table);
        let index = SelectionIndex::for_tree(&state.tree)?;
        Ok(CoupledChain {
            state,
            index,
            uniforms: RngStream::new(seed, UNIFORMS),
            selection: RngStream::new(seed, SELECTION),
        })
    }

    pub fn step(&mut self) -> Result<CoupledRecord> {
        coupled_step(
            &mut self.state,
            &mut self.index,
            &mut self.uniforms,
            &mut self.selection,
        )
    }

    pub fn advance_to(&mut self, n: usize) -> Result<()> {
        while self.state.tree.step_count() < n {
            self.step()?;
        }
        Ok(())
    }

    pub fn state(&self) -> &ColoredTree {
        &self.state
    }

    pub fn into_state(self) -> ColoredTree {
        self.state
    }

    pub fn step_count(&self) -> usize {
        self.state.tree.step_count()
    }
}

/// The sequence `(m, L(m))` of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafCountTrace {
    pub points: Vec<(usize, usize)>,
}

impl LeafCountTrace {
    pub const CSV_HEADER: &'static str = "n,L";

    pub fn at(&self, n: usize) -> Option<usize> {
        self.points.get(n.checked_sub(1)?).map(|p| p.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (n, l) in &self.points {
            s.push_str(&format!("{n},{l}\n"));
        }
        s
    }
}

/// Records `L(m)` for `m = 1..=n`.
pub fn leaf_count_trace(
    alpha: f64,
    alpha_prime: f64,
    n: usize,
    seed: u64,
) -> Result<LeafCountTrace> {
    let mut chain = CoupledChain::new(alpha, alpha_prime, seed)?;
    let mut points = Vec::with_capacity(n);
    points.push((1, chain.state.blue_leaf_count()));
    for m in 2..=n {
        chain.step()?;
        points.push((m, chain.state.blue_leaf_count()));
    }
    Ok(LeafCountTrace { points })
}

/// `L` at each of the (increasing) checkpoints of one coupled run; cheaper
/// than a full trace for long runs.
pub fn leaf_counts_at(
    alpha: f64,
    alpha_prime: f64,
    checkpoints: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    let mut chain = CoupledChain::new(alpha, alpha_prime, seed)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        chain.advance_to(c)?;
        out.push(chain.state.blue_leaf_count());
    }
    Ok(out)
}

/// Shape of the blue subtree at the first time it has `num_blue_leaves`
/// leaves, contracted and labeled by the order of its leaves.
pub fn blue_shape_at(
    alpha: f64,
    alpha_prime: f64,
    num_blue_leaves: usize,
    seed: u64,
) -> Result<LabeledShape> {
    let mut chain = CoupledChain::new(alpha, alpha_prime, seed)?;
    while chain.state.blue_leaves.len() < num_blue_leaves {
        chain.step()?;
    }
    let t = &chain.state.tree;
    let leaves: Vec<VertexId> = chain
        .state
        .blue_leaves
        .iter()
        .map(|&i| t.leaf_order()[i])
        .collect();
    let sub = span(t, &leaves)?;
    LabeledShape::from_tree(&contract_degree_two(&sub.tree)?)
}

/// Compares blue-subtree shapes at `num_blue_leaves` leaves with the exact
/// law of Marchal's chain at index `alpha'`.
pub fn blue_shape_check(
    alpha: f64,
    alpha_prime: f64,
    num_blue_leaves: usize,
    replicas: usize,
    seed: u64,
) -> Result<DistributionReport> {
    let shapes = enumerate_labeled_shapes(num_blue_leaves)?;
    let mut counts: BTreeMap<LabeledShape, u64> = shapes.into_iter().map(|s| (s, 0)).collect();
    let drawn: Vec<LabeledShape> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| blue_shape_at(alpha, alpha_prime, num_blue_leaves, replica_seed(seed, r)))
        .collect::<Result<_>>()?;
    for s in drawn {
        *counts.get_mut(&s).ok_or_else(|| {
            Error::invariant(format!("blue shape {s} missing from enumeration"))
        })? += 1;
    }
    let mut rows = Vec::new();
    let mut normalization = 0.0;
    for (shape, count) in counts {
        let exact = tree_probability(&shape, alpha_prime)?;
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
        alpha: alpha_prime,
        num_leaves: num_blue_leaves,
        replicas,
        rows,
        normalization,
    })
}
