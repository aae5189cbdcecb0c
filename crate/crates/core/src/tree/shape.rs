use std::collections::BTreeSet;
use std::fmt;

use super::{EdgeId, GrowthTree, VertexId};
use crate::error::{Error, Result};

/// Canonical, id-independent encoding of a tree whose leaves carry labels
/// `0..k` (leaf `A_i` has label `i`).
///
/// The tree is rooted at leaf 0; a labeled leaf is written as its label and
/// any other vertex as the parenthesized list of its children, ordered by the
/// smallest label below each child. Label-preserving isomorphic trees get the
/// same string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledShape(String);

impl fmt::Display for LabeledShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl LabeledShape {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn from_tree(tree: &GrowthTree) -> Result<Self> {
        let mut label = vec![usize::MAX; tree.vertex_count()];
        for (i, l) in tree.leaf_order().iter().enumerate() {
            label[l.index()] = i;
        }
        let root = tree
            .leaf(0)
            .ok_or_else(|| Error::input("shape of a tree without leaves"))?;
        if tree.vertex_count() == 1 {
            return Ok(LabeledShape("0".into()));
        }
        if tree.deg(root) != 1 {
            return Err(Error::input("leaf 0 is not a leaf"));
        }
        let (_, code) = encode(tree, &label, tree.adj(root)[0], root)?;
        Ok(LabeledShape(format!("0-{code}")))
    }

    pub fn parse(code: &str) -> Result<Self> {
        let shape = LabeledShape(code.to_string());
        shape.to_tree(2.0)?;
        Ok(shape)
    }

    pub fn leaf_count(&self) -> usize {
        // Labels are the only numbers in the code.
        self.0
            .split(|c: char| !c.is_ascii_digit())
            .filter(|s| !s.is_empty())
            .count()
    }

    /// Rebuilds a tree realizing this shape. Leaf `i` of the result has label `i`.
    pub fn to_tree(&self, alpha: f64) -> Result<GrowthTree> {
        let mut parser = Parser {
            bytes: self.0.as_bytes(),
            pos: 0,
            edges: Vec::new(),
            labels: Vec::new(),
            next: 0,
        };
        let root_label = parser.label()?;
        if root_label != 0 {
            return Err(parser.error("root must carry label 0"));
        }
        let root = parser.fresh();
        parser.labels.push((0, root));
        if parser.pos < parser.bytes.len() {
            parser.expect(b'-')?;
            let child = parser.node()?;
            parser.edges.push((root, child));
        }
        if parser.pos != parser.bytes.len() {
            return Err(parser.error("trailing characters"));
        }
        let mut labels = parser.labels;
        labels.sort();
        for (i, &(l, _)) in labels.iter().enumerate() {
            if l != i {
                return Err(Error::input(format!("labels are not 0..k: missing {i}")));
            }
        }
        let order: Vec<usize> = labels.iter().map(|&(_, v)| v).collect();
        GrowthTree::from_edges(alpha, parser.next, &parser.edges, &order)
    }

    /// Degrees of all vertices of the realized tree.
    pub fn degrees(&self) -> Result<Vec<usize>> {
        let t = self.to_tree(2.0)?;
        Ok(t.vertices().map(|v| t.deg(v)).collect())
    }
}

fn encode(
    tree: &GrowthTree,
    label: &[usize],
    v: VertexId,
    parent: VertexId,
) -> Result<(usize, String)> {
    if tree.deg(v) == 1 {
        let l = label[v.index()];
        if l == usize::MAX {
            return Err(Error::input(format!("leaf {v} has no label")));
        }
        return Ok((l, l.to_string()));
    }
    let mut children = Vec::with_capacity(tree.deg(v) - 1);
    for &w in tree.adj(v) {
        if w != parent {
            children.push(encode(tree, label, w, v)?);
        }
    }
    children.sort_by_key(|c| c.0);
    let min = children[0].0;
    let body: Vec<String> = children.into_iter().map(|c| c.1).collect();
    Ok((min, format!("({})", body.join(","))))
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    edges: Vec<(usize, usize)>,
    labels: Vec<(usize, usize)>,
    next: usize,
}

impl Parser<'_> {
    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            line: 1,
            column: self.pos + 1,
            message: msg.to_string(),
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.bytes.get(self.pos) == Some(&b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", b as char)))
        }
    }

    fn label(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a leaf label"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("label overflow"))
    }

    fn node(&mut self) -> Result<usize> {
        if self.bytes.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            let v = self.fresh();
            loop {
                let c = self.node()?;
                self.edges.push((v, c));
                match self.bytes.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        return Ok(v);
                    }
                    _ => return Err(self.error("expected `,` or `)`")),
                }
            }
        }
        let l = self.label()?;
        let v = self.fresh();
        self.labels.push((l, v));
        Ok(v)
    }
}

/// Every labeled tree with `num_leaves` leaves and no degree-two vertex, each
/// exactly once, sorted by encoding.
///
/// Generated by inserting leaf `k` into every edge and every branch vertex of
/// each tree on leaves `0..k`; removing the highest label inverts the insertion,
/// so no shape is produced twice.
pub fn enumerate_labeled_shapes(num_leaves: usize) -> Result<Vec<LabeledShape>> {
    if !(2..=6).contains(&num_leaves) {
        return Err(Error::param(format!(
            "shape enumeration supports 2..=6 leaves, got {num_leaves}"
        )));
    }
    let mut layer = vec![GrowthTree::single_edge(2.0)];
    for _ in 2..num_leaves {
        let mut next = Vec::new();
        for t in &layer {
            for e in 0..t.edge_count() {
                let mut c = t.clone();
                c.split_edge(EdgeId(e as u32));
                next.push(c);
            }
            for v in t.vertices().filter(|&v| t.deg(v) >= 3) {
                let mut c = t.clone();
                c.attach_leaf(v);
                next.push(c);
            }
        }
        layer = next;
    }
    let mut shapes = BTreeSet::new();
    for t in &layer {
        if !shapes.insert(LabeledShape::from_tree(t)?) {
            return Err(Error::invariant(
                "leaf insertion produced a duplicate shape",
            ));
        }
    }
    Ok(shapes.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::{star4, y_tree};
    use std::collections::HashSet;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_labeled_shapes(2).unwrap().len(), 1);
        assert_eq!(enumerate_labeled_shapes(3).unwrap().len(), 1);
        let four = enumerate_labeled_shapes(4).unwrap();
        assert_eq!(four.len(), 4);
        let stars = four
            .iter()
            .filter(|s| s.degrees().unwrap().contains(&4))
            .count();
        assert_eq!(stars, 1);
        assert!(enumerate_labeled_shapes(1).is_err());
        assert!(enumerate_labeled_shapes(7).is_err());
    }

    #[test]
    fn encodings() {
        assert_eq!(
            LabeledShape::from_tree(&GrowthTree::single_edge(1.5))
                .unwrap()
                .as_str(),
            "0-1"
        );
        assert_eq!(
            LabeledShape::from_tree(&y_tree(1.5)).unwrap().as_str(),
            "0-(1,2)"
        );
        assert_eq!(
            LabeledShape::from_tree(&star4(1.5)).unwrap().as_str(),
            "0-(1,2,3)"
        );
    }

    #[test]
    fn parse_round_trip() {
        for k in 2..=5 {
            for s in enumerate_labeled_shapes(k).unwrap() {
                let t = s.to_tree(1.5).unwrap();
                assert_eq!(LabeledShape::from_tree(&t).unwrap(), s);
                assert_eq!(s.leaf_count(), k);
            }
        }
        assert!(LabeledShape::parse("0-(1,").is_err());
        assert!(LabeledShape::parse("1-(0,2)").is_err());
        assert!(LabeledShape::parse("0-(1,3)").is_err());
    }

    #[test]
    fn isomorphic_relabelings_agree() {
        // Same labeled tree built with different arena ids.
        let a = GrowthTree::from_edges(
            1.5,
            6,
            &[(0, 4), (4, 1), (4, 5), (5, 2), (5, 3)],
            &[0, 1, 2, 3],
        )
        .unwrap();
        let b = GrowthTree::from_edges(
            1.5,
            6,
            &[(5, 1), (1, 2), (1, 0), (0, 3), (0, 4)],
            &[5, 2, 4, 3],
        )
        .unwrap();
        assert_eq!(
            LabeledShape::from_tree(&a).unwrap(),
            LabeledShape::from_tree(&b).unwrap()
        );
    }

    /// Independent oracle: all trees on `k` labeled leaves plus `m` unlabeled
    /// internal vertices via Prüfer sequences, filtered and deduplicated.
    fn brute_force_shapes(k: usize) -> HashSet<LabeledShape> {
        let mut out = HashSet::new();
        if k == 2 {
            out.insert(LabeledShape("0-1".into()));
            return out;
        }
        for m in 1..=k - 2 {
            let n = k + m;
            let len = n - 2;
            let total = n.pow(len as u32);
            for code in 0..total {
                let mut seq = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    seq.push(c % n);
                    c /= n;
                }
                // Degree of vertex = 1 + occurrences; leaves are 0..k, internals k..n.
                let mut deg = vec![1usize; n];
                for &s in &seq {
                    deg[s] += 1;
                }
                if (0..k).any(|v| deg[v] != 1) || (k..n).any(|v| deg[v] < 3) {
                    continue;
                }
                let mut edges = Vec::new();
                let mut d = deg.clone();
                for &s in &seq {
                    let leaf = (0..n).find(|&v| d[v] == 1).unwrap();
                    edges.push((leaf, s));
                    d[leaf] -= 1;
                    d[s] -= 1;
                }
                let rest: Vec<usize> = (0..n).filter(|&v| d[v] == 1).collect();
                edges.push((rest[0], rest[1]));
                let order: Vec<usize> = (0..k).collect();
                let t = GrowthTree::from_edges(2.0, n, &edges, &order).unwrap();
                out.insert(LabeledShape::from_tree(&t).unwrap());
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_prufer_brute_force() {
        for k in 2..=5 {
            let fast: HashSet<_> = enumerate_labeled_shapes(k).unwrap().into_iter().collect();
            let slow = brute_force_shapes(k);
            assert_eq!(fast, slow, "k = {k}");
        }
        assert_eq!(enumerate_labeled_shapes(5).unwrap().len(), 26);
        assert_eq!(enumerate_labeled_shapes(6).unwrap().len(), 236);
    }
}
